#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "vsphere/core.hpp"
#include "vsphere/error.hpp"
#include "vsphere/perspective_map.hpp"
#include "vsphere/projections.hpp"

using namespace vsphere;

TEST(AovSpec, RejectsOutOfRangeAngles) {
    EXPECT_THROW(AovSpec(0.0, AovMode::horizontal), DomainError);
    EXPECT_THROW(AovSpec(-1.0, AovMode::horizontal), DomainError);
    EXPECT_THROW(AovSpec(7.0, AovMode::horizontal), DomainError);
    EXPECT_THROW(AovSpec(std::nan(""), AovMode::horizontal), DomainError);
    EXPECT_NO_THROW(AovSpec(2.0 * oracle::kPi, AovMode::diagonal));
}

TEST(AovSpec, ModeNamesRoundTrip) {
    for (AovMode m : {AovMode::horizontal, AovMode::vertical, AovMode::diagonal, AovMode::horizontal4x3})
        EXPECT_EQ(parse_aov_mode(to_string(m)), m);
    EXPECT_THROW(parse_aov_mode("sideways"), DomainError);
}

TEST(UnitVector, NormalizesAndChecks) {
    const UnitVector3 u = UnitVector3::normalized({3, 0, 4});
    EXPECT_DOUBLE_EQ(u.x(), 0.6);
    EXPECT_DOUBLE_EQ(u.z(), 0.8);
    EXPECT_THROW(UnitVector3::normalized({0, 0, 0}), DomainError);
    EXPECT_THROW(UnitVector3::checked({1, 1, 0}), DomainError);
    EXPECT_NO_THROW(UnitVector3::checked({0, 1, 0}));
}

TEST(TextureToView, CenterIsOrigin) {
    const ViewCoord v = texture_to_view({0.5, 0.5}, 16.0 / 9.0, AovMode::horizontal);
    EXPECT_EQ(v.x, 0.0);
    EXPECT_EQ(v.y, 0.0);
}

TEST(TextureToView, HorizontalCorner) {
    const double a = 16.0 / 9.0;
    const ViewCoord v = texture_to_view({1, 1}, a, AovMode::horizontal);
    EXPECT_NEAR(v.x, 1.0, 1e-15);
    EXPECT_NEAR(v.y, (2.0 * 1.0 - 1.0) / a, 1e-15);
    EXPECT_NEAR(v.y, 0.5625, 1e-15);
}

TEST(TextureToView, DiagonalCornerAtUnitAspect) {
    const ViewCoord v = texture_to_view({1, 1}, 1.0, AovMode::diagonal);
    EXPECT_NEAR(v.x, 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(v.y, 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(ViewToTexture, InverseExamples) {
    const TextureCoord c = view_to_texture({0, 0}, 2.0, AovMode::vertical);
    EXPECT_DOUBLE_EQ(c.s, 0.5);
    EXPECT_DOUBLE_EQ(c.t, 0.5);
    const TextureCoord e = view_to_texture({1, 0.5625}, 16.0 / 9.0, AovMode::horizontal);
    EXPECT_NEAR(e.s, 1.0, 1e-12);
    EXPECT_NEAR(e.t, 1.0, 1e-12);
}

TEST(ViewToTexture, RoundTripAllModes) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0), a(0.3, 3.0);
    for (AovMode m : {AovMode::horizontal, AovMode::vertical, AovMode::diagonal, AovMode::horizontal4x3})
        for (int n = 0; n < 2000; ++n) {
            const TextureCoord f{u(rng), u(rng)};
            const double aspect = a(rng);
            const TextureCoord g = view_to_texture(texture_to_view(f, aspect, m), aspect, m);
            ASSERT_NEAR(g.s, f.s, 1e-12);
            ASSERT_NEAR(g.t, f.t, 1e-12);
        }
}

TEST(TextureToView, RejectsBadAspect) {
    EXPECT_THROW(texture_to_view({0.5, 0.5}, 0.0, AovMode::horizontal), DomainError);
    EXPECT_THROW(texture_to_view({0.5, 0.5}, -1.0, AovMode::vertical), DomainError);
}

TEST(Bstep, StrictInequality) {
    EXPECT_EQ(bstep(0.3), 1.0);
    EXPECT_EQ(bstep(-0.3), 0.0);
    EXPECT_EQ(bstep(0.0), 0.0);
}

TEST(Pstep, Examples) {
    EXPECT_EQ(pstep(0.0, PixelDelta(0.1)), 0.5);
    EXPECT_EQ(pstep(0.05, PixelDelta(0.1)), 1.0);
    EXPECT_NEAR(pstep(-0.025, PixelDelta(0.1)), 0.25, 1e-15);
}

TEST(Pstep, RangeSymmetryAndMonotonicity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> width(1e-4, 1.0), frac(-0.5, 0.5), wide(-10.0, 10.0);
    for (int n = 0; n < 5000; ++n) {
        const PixelDelta d(width(rng));
        // Symmetric pairs inside the ramp use dyadic fractions so g / delta is exact.
        const double g = std::ldexp(std::round(std::ldexp(frac(rng), 20)), -20) * d.value();
        ASSERT_EQ(pstep(g, d) + pstep(-g, d), 1.0) << g;
        const double x = wide(rng), y = wide(rng);
        const double lo = pstep(std::min(x, y), d), hi = pstep(std::max(x, y), d);
        ASSERT_LE(lo, hi);
        ASSERT_GE(lo, 0.0);
        ASSERT_LE(hi, 1.0);
        ASSERT_EQ(pstep(std::abs(x) + d.value(), d) + pstep(-std::abs(x) - d.value(), d), 1.0);
    }
}

TEST(Pstep, ApproachesBstep) {
    for (double g : {-0.3, -1e-3, 1e-3, 0.7})
        EXPECT_EQ(pstep(g, PixelDelta(1e-9)), bstep(g));
}

TEST(Pstep, GlobalDeltaFormMatches) {
    for (double g : {-0.2, -0.01, 0.0, 0.013, 0.4}) {
        const double d = 0.05;
        EXPECT_NEAR(gpstep(g, 1.0 / d), pstep(g, PixelDelta(d)), 1e-15);
    }
}

TEST(PixelDelta, RejectsNonPositive) {
    EXPECT_THROW(PixelDelta(0.0), DomainError);
    EXPECT_THROW(PixelDelta(-1.0), DomainError);
    EXPECT_THROW(PixelDelta(std::numeric_limits<double>::infinity()), DomainError);
}

TEST(DiscreteFwidth, ConstantFieldHitsFloor) {
    const ScalarGrid f(4, 4, 3.0);
    EXPECT_EQ(discrete_fwidth(f, 1, 1).value(), kDeltaFloor);
}

TEST(DiscreteFwidth, LinearFields) {
    ScalarGrid a(4, 4), b(4, 4);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
            a(i, j) = i;
            b(i, j) = i + 2.0 * j;
        }
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
            EXPECT_EQ(discrete_fwidth(a, i, j).value(), 1.0);
            EXPECT_EQ(discrete_fwidth(b, i, j).value(), 3.0);
        }
}

TEST(DiscreteFwidth, RejectsTinyGrids) {
    EXPECT_THROW(discrete_fwidth(ScalarGrid(1, 4), 0, 0), DomainError);
    EXPECT_THROW(discrete_fwidth(ScalarGrid(4, 4), 4, 0), DomainError);
}

namespace {

PerspectiveMap rectilinear(int w, int h, double aov) {
    PerspectiveMap m = bake_map(RectilinearProjection{}, w, h, AovSpec(aov, AovMode::horizontal),
                                static_cast<double>(w) / h);
    m.finalize();
    return m;
}

}  // namespace

TEST(GlobalDelta, CenterOfRectilinearMap) {
    const PerspectiveMap m = rectilinear(512, 512, oracle::kPi / 2);
    // Oracle: forward differences of each component, widest component wins.
    const int i = 256, j = 256;
    double widest = 0.0;
    for (int c = 0; c < 3; ++c) {
        auto comp = [&](int x, int y) {
            const Vec3 v = m.vector(x, y);
            return c == 0 ? v.x : (c == 1 ? v.y : v.z);
        };
        widest = std::max(widest, std::abs(comp(i + 1, j) - comp(i, j)) + std::abs(comp(i, j + 1) - comp(i, j)));
    }
    EXPECT_NEAR(m.delta_at(i, j), 1.0 / widest, 1e-3 / widest);
    // Near the axis one pixel step is about tan(45 deg) * 2 / 512 radians.
    EXPECT_NEAR(1.0 / m.delta_at(i, j), 2.0 / 512.0, 2e-4);
}

TEST(GlobalDelta, PositiveEverywhere) {
    const PerspectiveMap m = rectilinear(64, 48, 1.2);
    for (float d : m.delta()) ASSERT_GT(d, 0.0f);
}

TEST(GlobalDelta, DegenerateMapSaturates) {
    PerspectiveMap m(2, 2, AovSpec(1.0, AovMode::horizontal), 1.0);
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) m.set(i, j, {0, 0, 1});
    const DeltaMap d = global_delta_map(m);
    EXPECT_EQ(d.saturated_pixels, 4u);
    for (float v : d.delta.data()) EXPECT_GT(v, 0.0f);
}

TEST(GlobalDelta, MaskedNeighboursFallBack) {
    PerspectiveMap m(3, 1 + 1, AovSpec(1.0, AovMode::horizontal), 1.0);
    m.set(0, 0, UnitVector3::normalized({-0.1, 0, 1}));
    m.set(1, 0, UnitVector3::normalized({0, 0, 1}));
    m.set_masked(2, 0);
    for (int i = 0; i < 3; ++i) m.set_masked(i, 1);
    const DeltaMap d = global_delta_map(m);
    // Pixel 1 has no valid forward neighbour and uses the backward one.
    const Vec3 a = m.vector(0, 0), b = m.vector(1, 0);
    const double widest = std::max(std::abs(b.x - a.x), std::abs(b.z - a.z));
    EXPECT_NEAR(d.delta(1, 0), 1.0 / widest, 1e-3 / widest);
}

TEST(PerspectiveMap, StoresMaskedAsZero) {
    PerspectiveMap m(2, 2, AovSpec(1.0, AovMode::horizontal), 1.0);
    m.set(0, 0, {0, 0, 1});
    m.set_masked(1, 0);
    EXPECT_FALSE(m.valid(1, 0));
    EXPECT_EQ(m.vector(1, 0), Vec3{});
}

TEST(PerspectiveMap, FinalizeBuildsTiles) {
    const PerspectiveMap m = rectilinear(20, 12, 1.0);
    EXPECT_TRUE(m.finalized());
    EXPECT_EQ(m.tiles_x(), 3);
    EXPECT_EQ(m.tiles_y(), 2);
    for (int ty = 0; ty < m.tiles_y(); ++ty)
        for (int tx = 0; tx < m.tiles_x(); ++tx) {
            const TileBounds& t = m.tile(tx, ty);
            ASSERT_FALSE(t.empty());
            // Every pixel of the tile lies inside its cap.
            for (int j = ty * 8; j < std::min(12, ty * 8 + 8); ++j)
                for (int i = tx * 8; i < std::min(20, tx * 8 + 8); ++i)
                    ASSERT_LE(oracle::angle(m.vector(i, j), t.center), t.radius + 1e-9);
        }
}
