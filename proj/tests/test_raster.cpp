#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "raster_fixtures.hpp"
#include "vsphere/error.hpp"
#include "vsphere/raster.hpp"

using namespace vsphere;
using oracle::kPi;

namespace {

const PerspectiveMap& map512() {
    static const PerspectiveMap m = fixture::rectilinear_90(512);
    return m;
}

const PerspectiveMap& map128() {
    static const PerspectiveMap m = fixture::rectilinear_90(128);
    return m;
}

/// Minimal enclosing circle of three points by trying every candidate.
Vec3 brute_force_circle_center(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 u = b - a, v = c - a, w = cross(u, v);
    const Vec3 circum = a + cross(dot(u, u) * v - dot(v, v) * u, w) / (2.0 * dot(w, w));
    const Vec3 candidates[] = {0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a), circum};
    Vec3 best;
    double best_r = INFINITY;
    for (const Vec3& s : candidates) {
        const double r = std::max({length(a - s), length(b - s), length(c - s)});
        if (r < best_r - 1e-12) {
            best_r = r;
            best = s;
        }
    }
    return best;
}

double sum(const ScalarGrid& g) {
    double s = 0.0;
    for (double v : g.data()) s += v;
    return s;
}

CameraTriangle camera_triangle(const fixture::Tri& t) {
    return {{CameraVertex{t.a, {0, 0}, {0, 0, -1}}, CameraVertex{t.b, {1, 0}, {0, 0, -1}},
             CameraVertex{t.c, {0, 1}, {0, 0, -1}}}};
}

Mesh single_triangle_mesh(const Vec3& a, const Vec3& b, const Vec3& c) {
    Mesh m;
    m.vertices = {{a, {0, 0}, {0, 0, -1}}, {b, {1, 0}, {0, 0, -1}}, {c, {0, 1}, {0, 0, -1}}};
    m.triangles = {{0, 1, 2}};
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Edge functions

TEST(SmallestCircle, EquilateralAroundAxis) {
    const double r = 0.3;
    Vec3 v[3];
    for (int n = 0; n < 3; ++n) v[n] = normalize({r * std::cos(2 * kPi * n / 3), r * std::sin(2 * kPi * n / 3), 1});
    const SmallestCircle sc = smallest_circle(v[0], v[1], v[2]);
    ASSERT_FALSE(sc.degenerate);
    EXPECT_NEAR(sc.center.x, 0.0, 1e-15);
    EXPECT_NEAR(sc.center.y, 0.0, 1e-15);
    EXPECT_NEAR(sc.threshold, v[0].z, 1e-15);
}

TEST(SmallestCircle, MatchesBruteForce) {
    std::mt19937_64 rng(8);
    int obtuse = 0;
    for (int n = 0; n < 500; ++n) {
        const Vec3 a = oracle::random_dir_near_axis(rng, 1.0), b = oracle::random_dir_near_axis(rng, 1.0),
                   c = oracle::random_dir_near_axis(rng, 1.0);
        const SmallestCircle sc = smallest_circle(3.0 * a, b, 0.5 * c);
        ASSERT_FALSE(sc.degenerate);
        const Vec3 want = brute_force_circle_center(a, b, c);
        ASSERT_NEAR(sc.center.x, want.x, 1e-9);
        ASSERT_NEAR(sc.center.y, want.y, 1e-9);
        ASSERT_NEAR(sc.center.z, want.z, 1e-9);
        ASSERT_NEAR(sc.threshold, length(want), 1e-9);
        if (dot(b - a, c - a) < 0 || dot(a - b, c - b) < 0 || dot(a - c, b - c) < 0) ++obtuse;
    }
    EXPECT_GT(obtuse, 50);
}

TEST(SmallestCircle, DuplicateDirectionIsDegenerate) {
    EXPECT_TRUE(smallest_circle({0, 0, 1}, {0, 0, 2}, {1, 0, 1}).degenerate);
}

TEST(SmallestCircle, TinySliverKeepsItsMiter) {
    const Vec3 a{0.41091509117332475, -1.9801323529917667, 4.0781694136621978};
    const Vec3 b{0.34217552617980768, -1.6572829398590299, 3.4221467685480258};
    const Vec3 c{0.18582091671493967, -0.94949990746434532, 2.008348387275638};
    EXPECT_FALSE(smallest_circle(a, b, c).degenerate);
    EXPECT_TRUE(edge_matrix(a, b, c, true).has_miter);
    // Without the miter the three nearly coincident edge rows leave a faint
    // stripe along the sliver's great circle.
    const ScalarGrid cov = rasterize_triangle(map512(), a, b, c);
    const Vec3 center = normalize(normalize(a) + normalize(b) + normalize(c));
    for (int j = 0; j < 512; ++j)
        for (int i = 0; i < 512; ++i)
            if (oracle::angle(map512().vector(i, j), center) > 0.05) {
                ASSERT_EQ(cov(i, j), 0.0) << i << ',' << j;
            }
}

TEST(EdgeMatrix, Examples) {
    const Vec3 a{1, 0, 1}, b{-1, 0, 1}, c{0, 1, 1};
    const EdgeMatrix em = edge_matrix(a, b, c, true);
    ASSERT_EQ(em.rows.size(), 4u);
    EXPECT_TRUE(em.has_miter);
    EXPECT_NEAR(em.rows[0].nx, 0.0, 1e-15);
    EXPECT_NEAR(em.rows[0].ny, -1.0, 1e-15);
    EXPECT_NEAR(em.rows[0].nz, 0.0, 1e-15);
    const EdgeMatrix swapped = edge_matrix(b, a, c, false);
    EXPECT_EQ(swapped.rows.size(), 3u);
    EXPECT_EQ(swapped.rows[0].ny, -em.rows[0].ny);
    for (const auto& r : em.rows) EXPECT_EQ(r.bias, 0.0);
    EXPECT_EQ(edge_matrix(a, b, c, true, 1.0).rows[3].bias, 1.0);
}

TEST(EdgeMatrix, MiterRowHasUnitGradientOnItsCircle) {
    // g = G . n - offset must change by one unit per radian when crossing the
    // circle, whatever its radius.
    for (double r : {0.01, 0.2, 0.9}) {
        Vec3 v[3];
        for (int n = 0; n < 3; ++n) v[n] = normalize({std::tan(r) * std::cos(2 * kPi * n / 3),
                                                      std::tan(r) * std::sin(2 * kPi * n / 3), 1});
        const simd::EdgeRow m = edge_matrix(v[0], v[1], v[2], true).rows.at(3);
        auto g = [&](double theta) { return m.nz * std::cos(theta) + m.nx * std::sin(theta) - m.offset; };
        const double h = 1e-6;
        EXPECT_NEAR(g(r), 0.0, 1e-9);
        EXPECT_NEAR((g(r + h) - g(r - h)) / (2 * h), -1.0, 1e-6) << r;
    }
}

TEST(EdgeMatrix, DegenerateEdgesThrow) {
    EXPECT_THROW(edge_matrix({0, 0, 1}, {0, 0, 3}, {1, 0, 1}, true), DegenerateGeometry);
    EXPECT_THROW(edge_matrix({0, 0, 1}, {0, 0, -1}, {1, 0, 1}, false), DegenerateGeometry);
}

TEST(FrontFacing, CounterClockwiseFromTheEye) {
    // Seen from the origin looking down +z with y up, (-1,-1) -> (1,-1) -> (0,1)
    // runs counter-clockwise.
    EXPECT_TRUE(front_facing({-1, -1, 2}, {1, -1, 2}, {0, 1, 2}));
    EXPECT_FALSE(front_facing({-1, -1, 2}, {0, 1, 2}, {1, -1, 2}));
}

// ---------------------------------------------------------------------------
// Coverage

TEST(RasterizeTriangle, BinaryMatchesSignOracleExactly) {
    const PerspectiveMap& m = map512();
    std::mt19937_64 rng(100);
    RasterOptions binary;
    binary.mode = StepMode::binary;
    for (int n = 0; n < 60; ++n) {
        const fixture::Tri t = fixture::random_triangle(rng, 0.7, 0.02 + 0.2 * (n % 6) / 6.0);
        const ScalarGrid cov = rasterize_triangle(m, t.a, t.b, t.c, binary);
        for (int j = 0; j < 512; ++j)
            for (int i = 0; i < 512; ++i) {
                const double want = oracle::inside_by_signs(m.vector(i, j), t.a, t.b, t.c) ? 1.0 : 0.0;
                ASSERT_EQ(cov(i, j), want) << "triangle " << n << " pixel " << i << ',' << j;
            }
    }
}

TEST(RasterizeTriangle, ReversedWindingIsEmptyInside) {
    const PerspectiveMap& m = map128();
    std::mt19937_64 rng(101);
    RasterOptions binary;
    binary.mode = StepMode::binary;
    for (int n = 0; n < 20; ++n) {
        const fixture::Tri t = fixture::random_triangle(rng, 0.6, 0.2);
        const ScalarGrid front = rasterize_triangle(m, t.a, t.b, t.c, binary);
        const ScalarGrid back = rasterize_triangle(m, t.a, t.c, t.b, binary);
        for (std::size_t k = 0; k < front.size(); ++k)
            if (front.data()[k] == 1.0) {
                ASSERT_EQ(back.data()[k], 0.0);
            }
    }
}

TEST(RasterizeTriangle, PixelOnEdgeGetsHalf) {
    // A tiny map looking straight down an edge great circle: the center column
    // of a 3x3 rectilinear map lies on the plane x = 0.
    PerspectiveMap m = bake_map(RectilinearProjection{}, 3, 3, AovSpec(0.1, AovMode::horizontal), 1.0);
    m.finalize();
    const EdgeMatrix em{{simd::EdgeRow{1, 0, 0, 0, 0}}, false};
    const ScalarGrid cov = rasterize_edges(m, em, {});
    for (int j = 0; j < 3; ++j) {
        EXPECT_EQ(cov(1, j), 0.5);
        EXPECT_GT(cov(2, j), 0.5);
        EXPECT_LT(cov(0, j), 0.5);
    }
}

TEST(RasterizeTriangle, PixelModeTracksSupersampling) {
    const PerspectiveMap& m = map512();
    std::mt19937_64 rng(102);
    double worst_plain = 0.0, total = 0.0;
    std::size_t corner_pixels = 0, touched = 0;
    for (int n = 0; n < 40; ++n) {
        const fixture::Tri t = fixture::random_triangle(rng, 0.6, 0.01 + 0.05 * (n % 8) / 8.0);
        const ScalarGrid cov = rasterize_triangle(m, t.a, t.b, t.c);
        const Vec3 rows[3] = {normalize(cross(t.a, t.b)), normalize(cross(t.b, t.c)), normalize(cross(t.c, t.a))};
        for (int j = 0; j < 512; ++j)
            for (int i = 0; i < 512; ++i) {
                const Vec3 g = m.vector(i, j);
                const double px = 1.0 / m.delta_at(i, j);
                // Pixels farther than two pixels from every edge are decided
                // exactly by the binary oracle test above.
                int near_edges = 0;
                for (const Vec3& r : rows) near_edges += std::abs(dot(g, r)) < 2.0 * px ? 1 : 0;
                if (near_edges == 0 && cov(i, j) == 0.0) continue;
                const double want = fixture::supersampled(t, i, j, 512);
                const double d = std::abs(cov(i, j) - want);
                total += d;
                ++touched;
                int close = 0;
                for (const Vec3& r : rows) close += std::abs(dot(g, r)) < px ? 1 : 0;
                const double to_vertex =
                    std::min({oracle::angle(g, t.a), oracle::angle(g, t.b), oracle::angle(g, t.c)}) / px;
                if (close >= 2 || to_vertex <= 1.0) {
                    ++corner_pixels;
                    continue;
                }
                worst_plain = std::max(worst_plain, d);
            }
    }
    RecordProperty("corner_pixels", static_cast<int>(corner_pixels));
    EXPECT_LE(worst_plain, 0.25);
    EXPECT_LE(total / touched, 0.05);
}

TEST(RasterizeTriangle, MiterKeepsInteriorCoverage) {
    const PerspectiveMap& m = map512();
    std::mt19937_64 rng(103);
    for (int n = 0; n < 40; ++n) {
        const fixture::Tri t = fixture::random_triangle(rng, 0.6, 0.01 + 0.3 * (n % 8) / 8.0);
        RasterOptions off;
        off.miter = false;
        RasterOptions bin;
        bin.mode = StepMode::binary;
        const ScalarGrid with = rasterize_triangle(m, t.a, t.b, t.c);
        const ScalarGrid without = rasterize_triangle(m, t.a, t.b, t.c, off);
        const ScalarGrid binary = rasterize_triangle(m, t.a, t.b, t.c, bin);
        const Vec3 rows[3] = {normalize(cross(t.a, t.b)), normalize(cross(t.b, t.c)), normalize(cross(t.c, t.a))};
        for (int j = 0; j < 512; ++j)
            for (int i = 0; i < 512; ++i) {
                EXPECT_LE(with(i, j), without(i, j));
                if (binary(i, j) != 1.0) continue;
                const Vec3 g = m.vector(i, j);
                const double px = 1.0 / m.delta_at(i, j);
                bool deep = true;
                for (const Vec3& r : rows) deep = deep && dot(g, r) >= px;
                if (deep) {
                    ASSERT_EQ(with(i, j), without(i, j)) << n << ' ' << i << ',' << j;
                }
            }
    }
}

TEST(RasterizeTriangle, GuardedMiterNeverTrimsNearTheTriangle) {
    const PerspectiveMap& m = map512();
    std::mt19937_64 rng(104);
    for (int n = 0; n < 30; ++n) {
        const fixture::Tri t = fixture::random_triangle(rng, 0.6, 0.05);
        const EdgeMatrix guarded = edge_matrix(t.a, t.b, t.c, true, 1.0);
        const EdgeMatrix plain = edge_matrix(t.a, t.b, t.c, false);
        const ScalarGrid g = rasterize_edges(m, guarded, {});
        const ScalarGrid p = rasterize_edges(m, plain, {});
        for (int j = 0; j < 512; ++j)
            for (int i = 0; i < 512; ++i) {
                ASSERT_LE(g(i, j), p(i, j));
                if (oracle::inside_by_signs(m.vector(i, j), t.a, t.b, t.c)) {
                    ASSERT_EQ(g(i, j), p(i, j));
                }
            }
    }
}

TEST(RasterizeTriangle, FragmentDeltaIsAScaleFreeReference) {
    const PerspectiveMap& m = map128();
    const Vec3 a{-0.2, -0.2, 1}, b{0.3, -0.1, 1}, c{0, 0.3, 1};
    RasterOptions frag;
    frag.delta = DeltaSource::fragment;
    const ScalarGrid ref = rasterize_triangle(m, a, b, c, frag);
    const ScalarGrid fast = rasterize_triangle(m, a, b, c);
    double worst = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(ref.data()[k] - fast.data()[k]));
    // Both ramps span about a pixel; they differ only in how the width is estimated.
    EXPECT_LT(worst, 0.35);
    EXPECT_NEAR(sum(ref), sum(fast), 0.02 * sum(ref));
}

TEST(RasterizeTriangle, TileCullingChangesNothing) {
    const PerspectiveMap& m = map512();
    std::mt19937_64 rng(105);
    RasterOptions all;
    all.cull_tiles = false;
    for (int n = 0; n < 10; ++n) {
        const fixture::Tri t = fixture::random_triangle(rng, 0.6, 0.1);
        EXPECT_EQ(rasterize_triangle(m, t.a, t.b, t.c), rasterize_triangle(m, t.a, t.b, t.c, all));
        const EdgeMatrix guarded = edge_matrix(t.a, t.b, t.c, true, 1.0);
        EXPECT_EQ(rasterize_edges(m, guarded, {}), rasterize_edges(m, guarded, all));
    }
}

TEST(RasterizeTriangle, ScalarAndVectorKernelsAgree) {
    if (!simd::cpu_supports(simd::Isa::avx2)) GTEST_SKIP() << "AVX2 unavailable";
    const PerspectiveMap& m = map512();
    RasterOptions s, v;
    s.kernels = &simd::kernels(simd::Isa::scalar);
    v.kernels = &simd::kernels(simd::Isa::avx2);
    const Vec3 a{-0.2, -0.2, 1}, b{0.3, -0.1, 1}, c{0, 0.3, 1};
    EXPECT_EQ(rasterize_triangle(m, a, b, c, s), rasterize_triangle(m, a, b, c, v));
    EXPECT_EQ(rasterize_line(m, a, c, s), rasterize_line(m, a, c, v));
    EXPECT_EQ(rasterize_particle(m, {{0.1, 0, 2}, 0.3}, s).mask, rasterize_particle(m, {{0.1, 0, 2}, 0.3}, v).mask);
}

TEST(RasterizeTriangle, RequiresFinalizedMap) {
    const PerspectiveMap raw(4, 4, AovSpec(1.0, AovMode::horizontal), 1.0);
    EXPECT_THROW(rasterize_triangle(raw, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}), DomainError);
}

TEST(RasterizePolygon, TriangleMatchesMiterlessTriangle) {
    const PerspectiveMap& m = map128();
    const Vec3 v[] = {{-0.3, -0.2, 1}, {0.4, -0.1, 1}, {0.1, 0.5, 1}};
    RasterOptions off;
    off.miter = false;
    EXPECT_EQ(rasterize_polygon(m, v), rasterize_triangle(m, v[0], v[1], v[2], off));
}

TEST(RasterizePolygon, QuadIsIntersectionOfHalfSpaces) {
    const PerspectiveMap& m = map128();
    const Vec3 v[] = {{-0.4, -0.3, 1}, {0.5, -0.3, 1}, {0.4, 0.4, 1}, {-0.3, 0.3, 1}};
    const ScalarGrid quad = rasterize_polygon(m, v);
    ScalarGrid expect(128, 128, 1.0);
    for (int e = 0; e < 4; ++e) {
        const Vec3 n = normalize(cross(v[e], v[(e + 1) % 4]));
        const EdgeMatrix half{{simd::EdgeRow{n.x, n.y, n.z, 0, 0}}, false};
        const ScalarGrid h = rasterize_edges(m, half, {});
        for (std::size_t k = 0; k < h.size(); ++k) expect.data()[k] = std::min(expect.data()[k], h.data()[k]);
    }
    EXPECT_EQ(quad, expect);
}

TEST(RasterizePolygon, HexagonIsRotationSymmetric) {
    const PerspectiveMap& m = map128();
    auto hexagon = [](double phase) {
        std::vector<Vec3> v;
        for (int n = 0; n < 6; ++n) {
            const double a = phase + n * kPi / 3;
            v.push_back({0.5 * std::cos(a), 0.5 * std::sin(a), 1.0});
        }
        return v;
    };
    const ScalarGrid a = rasterize_polygon(m, hexagon(0.1));
    const ScalarGrid b = rasterize_polygon(m, hexagon(0.1 + kPi / 3));
    for (std::size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(a.data()[k], b.data()[k], 1e-9);
    EXPECT_GT(sum(a), 1000.0);
}

TEST(RasterizePolygon, RejectsBadInput) {
    const Vec3 two[] = {{0, 0, 1}, {1, 0, 1}};
    EXPECT_THROW(polygon_edge_matrix(two), DegenerateGeometry);
    const Vec3 bent[] = {{-1, -1, 2}, {1, -1, 2}, {1, 1, 3}, {-1, 1, 2}};
    EXPECT_THROW(polygon_edge_matrix(bent), DegenerateGeometry);
}

// ---------------------------------------------------------------------------
// Lines and particles

TEST(RasterizeLine, OnCircleAndEndpoint) {
    const Vec3 a{1, 0, 1}, b{-1, 0, 1};
    const simd::LineFrame f = line_frame(a, b);
    const float x[] = {0, static_cast<float>(1 / std::sqrt(2.0))}, y[] = {0, 0},
                z[] = {1, static_cast<float>(1 / std::sqrt(2.0))}, d[] = {100, 100};
    const std::uint8_t ok[] = {1, 1};
    const simd::PixelSpan px{x, y, z, d, ok, 2};
    double pixel[2], binary[2];
    simd::kernels(simd::Isa::scalar).line_coverage(px, f, StepMode::pixel, pixel);
    simd::kernels(simd::Isa::scalar).line_coverage(px, f, StepMode::binary, binary);
    EXPECT_EQ(pixel[0], 1.0);
    EXPECT_EQ(binary[0], 1.0);
    // The endpoint sits exactly on the radial boundary.
    EXPECT_NEAR(pixel[1], 0.5, 1e-5);
    EXPECT_NEAR(f.radial.offset, 1.0, 1e-15);
    EXPECT_THROW(line_frame({0, 0, 1}, {0, 0, 2}), DegenerateGeometry);
}

TEST(RasterizeLine, StrokeIsAboutOnePixelWide) {
    const PerspectiveMap& m = map512();
    // Center and off-axis strokes in both orientations; a horizontal stroke is
    // measured on the transposed image.
    struct Stroke {
        double x0, slope;
    };
    for (const Stroke& s : {Stroke{0.13, 0.04 / 1.2}, Stroke{0.71, -0.05 / 1.2}, Stroke{-0.45, 0.03 / 1.2}}) {
        const Vec3 a{s.x0, -0.6, 1}, b{s.x0 + 1.2 * s.slope, 0.6, 1};
        const ScalarGrid vert = rasterize_line(m, a, b);
        const ScalarGrid horiz = fixture::transposed(rasterize_line(m, {a.y, a.x, 1}, {b.y, b.x, 1}));
        for (const ScalarGrid* g : {&vert, &horiz})
            for (double w : fixture::stroke_widths(*g, 512, s.x0, -0.6, s.slope, 110, 400, 40)) {
                EXPECT_GE(w, 0.75) << s.x0;
                EXPECT_LE(w, 1.25) << s.x0;
            }
    }
}

TEST(RasterizeParticle, CenterHitAndBoundary) {
    const simd::ParticleFrame f = particle_frame({{0, 0, 2}, 1});
    const double root = std::sqrt(1.0 - 1.0 / 4.0);
    EXPECT_NEAR(f.disc.offset, root / 0.5, 1e-15);
    const double edge = std::asin(0.5);
    const float x[] = {0, static_cast<float>(std::sin(edge))}, y[] = {0, 0},
                z[] = {1, static_cast<float>(std::cos(edge))}, d[] = {50, 50};
    const std::uint8_t ok[] = {1, 1};
    const simd::PixelSpan px{x, y, z, d, ok, 2};
    double mask[2], u[2], v[2];
    simd::kernels(simd::Isa::scalar).particle_coverage(px, f, StepMode::pixel, mask, u, v);
    EXPECT_EQ(mask[0], 1.0);
    EXPECT_DOUBLE_EQ(u[0], 0.5);
    EXPECT_DOUBLE_EQ(v[0], 0.5);
    EXPECT_NEAR(mask[1], 0.5, 1e-5);
}

TEST(RasterizeParticle, AxisOnYUsesFallbackFrame) {
    const simd::ParticleFrame f = particle_frame({{0, 3, 0}, 1});
    EXPECT_EQ(f.x_axis, (Vec3{1, 0, 0}));
    EXPECT_THROW(particle_frame({{0, 0, 1}, 2}), DomainError);
    EXPECT_THROW(particle_frame({{0, 0, 1}, 0}), DomainError);
}

TEST(RasterizeParticle, RingAndTextureRange) {
    const PerspectiveMap& m = map512();
    const Particle p{{0.3, -0.2, 3.0}, 0.4};
    const ParticleCoverage c = rasterize_particle(m, p);
    const Vec3 ph = normalize(p.position);
    const double rim = std::asin(p.radius / length(p.position));
    int partial = 0;
    double worst = 0.0;
    for (int j = 0; j < 512; ++j)
        for (int i = 0; i < 512; ++i) {
            const double v = c.mask(i, j);
            if (v <= 0.0) continue;
            if (oracle::angle(m.vector(i, j), ph) <= rim) {
                EXPECT_GE(c.u(i, j), 0.0);
                EXPECT_LE(c.u(i, j), 1.0);
                EXPECT_GE(c.v(i, j), 0.0);
                EXPECT_LE(c.v(i, j), 1.0);
            }
            if (v >= 1.0) continue;
            ++partial;
            const double off = std::abs(oracle::angle(m.vector(i, j), ph) - rim) * m.delta_at(i, j);
            worst = std::max(worst, off);
        }
    EXPECT_GT(partial, 100);
    // Partial pixels lie within one pixel of the rim: a ring at most two wide.
    EXPECT_LE(worst, 1.0);
}

// ---------------------------------------------------------------------------
// Fragment data

TEST(Barycentric, VertexAndCentroid) {
    const Vec3 a{-1, -1, 3}, b{2, -1, 4}, c{0, 2, 5};
    const Barycentric at_a = barycentric(normalize(a), a, b, c);
    EXPECT_NEAR(at_a.weights.x, 1.0, 1e-12);
    EXPECT_NEAR(at_a.weights.y, 0.0, 1e-12);
    EXPECT_NEAR(at_a.weights.z, 0.0, 1e-12);
    EXPECT_NEAR(at_a.depth, length(a), 1e-12);
    const Vec3 centroid = (a + b + c) / 3.0;
    const Barycentric mid = barycentric(normalize(centroid), a, b, c);
    EXPECT_NEAR(mid.weights.x, 1.0 / 3, 1e-6);
    EXPECT_NEAR(mid.weights.y, 1.0 / 3, 1e-6);
    EXPECT_NEAR(mid.weights.z, 1.0 / 3, 1e-6);
    EXPECT_NEAR(mid.depth, length(centroid), 1e-12);
}

TEST(Barycentric, MatchesLinearSolve) {
    std::mt19937_64 rng(200);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 10000; ++n) {
        const fixture::Tri t = fixture::random_triangle(rng, 1.0, 0.5);
        double w0 = u(rng), w1 = u(rng);
        if (w0 + w1 > 1) {
            w0 = 1 - w0;
            w1 = 1 - w1;
        }
        const Vec3 g = normalize(w0 * t.a + w1 * t.b + (1 - w0 - w1) * t.c);
        const Barycentric b = barycentric(g, t.a, t.b, t.c);
        const auto want = oracle::ray_triangle(g, t.a, t.b, t.c);
        ASSERT_TRUE(want.has_value());
        ASSERT_NEAR(b.weights.x + b.weights.y + b.weights.z, 1.0, 1e-5);
        ASSERT_NEAR(b.weights.x, want->weights.x, 1e-6);
        ASSERT_NEAR(b.weights.y, want->weights.y, 1e-6);
        ASSERT_NEAR(b.weights.z, want->weights.z, 1e-6);
        ASSERT_NEAR(b.depth, want->depth, 1e-6 * want->depth);
        ASSERT_GT(b.depth, 0.0);
        ASSERT_GE(std::min({b.weights.x, b.weights.y, b.weights.z}), -1e-5);
    }
}

TEST(Barycentric, GrazingRayThrows) {
    EXPECT_THROW(barycentric({1, 0, 0}, {0, -1, 1}, {1, -1, 1}, {0, 1, 1}), DegenerateGeometry);
}

TEST(InterpolateFragment, ConstantAndVertexValues) {
    CameraTriangle t{{CameraVertex{{-1, -1, 3}, {0.2, 0.7}, normalize({0, 0, -1})},
                      CameraVertex{{2, -1, 4}, {0.9, 0.1}, normalize({1, 0, -1})},
                      CameraVertex{{0, 2, 5}, {0.4, 0.4}, normalize({0, 1, -1})}}};
    const Fragment at_b = interpolate_fragment(barycentric(normalize(t.v[1].position), t.v[0].position,
                                                           t.v[1].position, t.v[2].position),
                                               t);
    EXPECT_NEAR(at_b.uv.x, 0.9, 1e-12);
    EXPECT_NEAR(at_b.uv.y, 0.1, 1e-12);
    EXPECT_NEAR(at_b.normal.x, t.v[1].normal.x, 1e-12);
    for (auto& v : t.v) v.uv = {0.3, 0.6};
    const Fragment mid = interpolate_fragment(barycentric(normalize({0.2, 0.1, 1}), t.v[0].position,
                                                          t.v[1].position, t.v[2].position),
                                              t);
    EXPECT_NEAR(mid.uv.x, 0.3, 1e-12);
    EXPECT_NEAR(mid.uv.y, 0.6, 1e-12);
}

TEST(InterpolateFragment, EdgeMidpointMatchesLinearSolve) {
    const CameraTriangle t{{CameraVertex{{-1, 0, 2}, {0, 0}, {0, 0, -1}}, CameraVertex{{1, 0, 6}, {1, 0}, {0, 0, -1}},
                            CameraVertex{{0, 1, 3}, {0, 1}, {0, 0, -1}}}};
    // Angular midpoint of edge AB: the chord weight is not one half.
    const Vec3 g = normalize(normalize(t.v[0].position) + normalize(t.v[1].position));
    const Fragment f = interpolate_fragment(barycentric(g, t.v[0].position, t.v[1].position, t.v[2].position), t);
    const auto want = oracle::ray_triangle(g, t.v[0].position, t.v[1].position, t.v[2].position);
    EXPECT_NEAR(f.uv.x, want->weights.y, 1e-12);
    EXPECT_NEAR(f.uv.y, 0.0, 1e-12);
    EXPECT_NEAR(f.depth, want->depth, 1e-12);
    EXPECT_GT(std::abs(f.uv.x - 0.5), 0.1);
}

TEST(InterpolateFragment, OpposedNormalsFallBackToFace) {
    const CameraTriangle t{{CameraVertex{{-1, -1, 2}, {}, {0, 0, -1}}, CameraVertex{{1, -1, 2}, {}, {0, 0, 1}},
                            CameraVertex{{0, 1, 2}, {}, {0, 0, 0}}}};
    const Barycentric b{{0.5, 0.5, 0.0}, 2.0};
    const Fragment f = interpolate_fragment(b, t);
    EXPECT_NEAR(std::abs(f.normal.z), 1.0, 1e-12);
}

TEST(SubdivideWide, SmallTriangleUnchanged) {
    const CameraTriangle t = camera_triangle({{-0.1, 0, 1}, {0.1, 0, 1}, {0, 0.1, 1}});
    const auto pieces = subdivide_wide(t);
    ASSERT_EQ(pieces.size(), 1u);
    EXPECT_EQ(pieces[0].v[0].position, t.v[0].position);
}

TEST(SubdivideWide, JustAboveRightAngleSplitsInFour) {
    const double h = 0.5 * (kPi / 2 + 0.05);
    const fixture::Tri big{{-std::sin(h), -0.2, std::cos(h)}, {std::sin(h), -0.2, std::cos(h)}, {0, 0.6, 1}};
    const CameraTriangle t = camera_triangle(big);
    ASSERT_GT(angular_span(t), kPi / 2);
    const auto pieces = subdivide_wide(t);
    ASSERT_EQ(pieces.size(), 4u);
    const Vec3 normal = cross(big.b - big.a, big.c - big.a);
    for (const auto& p : pieces) {
        EXPECT_LE(angular_span(p), kPi / 2);
        for (const auto& v : p.v) EXPECT_NEAR(dot(v.position - big.a, normal), 0.0, 1e-12);
    }
    // Shared midpoint of AB carries the same attributes in both pieces.
    EXPECT_EQ(pieces[0].v[1].uv, pieces[1].v[0].uv);
    EXPECT_EQ(pieces[0].v[1].position, pieces[1].v[0].position);

    // Union of the piece masks equals the point-in-triangle test of the original.
    const PerspectiveMap m = fixture::rectilinear_90(256);
    RasterOptions binary;
    binary.mode = StepMode::binary;
    binary.miter = false;
    ScalarGrid all(256, 256);
    for (const auto& p : pieces) {
        const ScalarGrid c = rasterize_triangle(m, p.v[0].position, p.v[1].position, p.v[2].position, binary);
        for (std::size_t k = 0; k < c.size(); ++k) all.data()[k] = std::max(all.data()[k], c.data()[k]);
    }
    int mismatched = 0, inside = 0;
    for (int j = 0; j < 256; ++j)
        for (int i = 0; i < 256; ++i) {
            const bool in = oracle::inside_by_signs(m.vector(i, j), big.a, big.b, big.c);
            inside += in;
            mismatched += (all(i, j) == 1.0) != in;
        }
    EXPECT_GT(inside, 1000);
    EXPECT_EQ(mismatched, 0);
}

TEST(SubdivideWide, ThroughTheEyeIsRejected) {
    const CameraTriangle through{{CameraVertex{{-1, 0, 0}, {}, {}}, CameraVertex{{1, 0, 0}, {}, {}},
                                  CameraVertex{{0, 1, 1}, {}, {}}}};
    EXPECT_THROW(subdivide_wide(through), DegenerateGeometry);
}

// ---------------------------------------------------------------------------
// Parallax

TEST(Parallax, Examples) {
    const ParallaxProfile none;
    EXPECT_EQ(apply_parallax({1, 2, 3}, none), (Vec3{1, 2, 3}));
    const ParallaxProfile flat{{{0.0, 0.25}, {kPi, 0.25}}};
    for (const Vec3& p : {Vec3{1, 2, 3}, Vec3{-1, 0, -2}, Vec3{0, 0, 5}})
        EXPECT_NEAR(apply_parallax(p, flat).z, p.z - 0.25, 1e-15);
    const ParallaxProfile ramp{{{0.0, 0.0}, {kPi, 0.1}}};
    EXPECT_NEAR(ramp.offset_at(kPi / 2), 0.05, 1e-15);
    EXPECT_NEAR(apply_parallax({2, 0, 0}, ramp).z, -0.05, 1e-15);
    EXPECT_EQ(ramp.offset_at(-1.0), 0.0);
    EXPECT_EQ(ramp.offset_at(4.0), 0.1);
}

TEST(Parallax, ValidationRejectsBadTables) {
    EXPECT_THROW((ParallaxProfile{{{1.0, 0.0}, {0.5, 0.0}}}.validate()), DomainError);
    EXPECT_THROW((ParallaxProfile{{{0.0, 0.0}, {4.0, 0.0}}}.validate()), DomainError);
    EXPECT_THROW((ParallaxProfile{{{0.0, NAN}}}.validate()), DomainError);
    EXPECT_NO_THROW((ParallaxProfile{{{0.0, 0.0}, {0.0, 0.1}, {kPi, 0.2}}}.validate()));
}

// ---------------------------------------------------------------------------
// Compositing

TEST(Composite, Examples) {
    FragmentBuffers buf(2, 1);
    EXPECT_EQ(composite_fragment(buf, 0, 0, 0.7, 2.0, {0.5, 0.25}, {0, 0, -1}), 0.7);
    EXPECT_EQ(buf.mask(0, 0), 0.7);
    EXPECT_DOUBLE_EQ(buf.depth(0, 0), 1.4);
    EXPECT_DOUBLE_EQ(buf.resolved_depth(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(buf.resolved_uv(0, 0).x, 0.5);

    buf.mask(1, 0) = 0.4;
    EXPECT_NEAR(composite_fragment(buf, 1, 0, 0.9, 1.0, {}, {0, 0, 1}), 0.6, 1e-15);
    EXPECT_NEAR(buf.mask(1, 0), 1.0, 1e-15);
    EXPECT_EQ(composite_fragment(buf, 1, 0, 0.9, 1.0, {}, {0, 0, 1}), 0.0);
    EXPECT_NEAR(buf.mask(1, 0), 1.0, 1e-15);
}

TEST(Composite, MaskStaysBounded) {
    std::mt19937_64 rng(300);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FragmentBuffers buf(1, 1);
    for (int n = 0; n < 1000; ++n) {
        composite_fragment(buf, 0, 0, u(rng), u(rng), {}, {0, 0, 1});
        ASSERT_LE(buf.mask(0, 0), 1.0 + 1e-6);
        ASSERT_GE(buf.mask(0, 0), 0.0);
    }
}

TEST(Composite, NormalsResolveAtReadOut) {
    FragmentBuffers buf(1, 1);
    composite_fragment(buf, 0, 0, 0.5, 1.0, {}, {1, 0, 0});
    composite_fragment(buf, 0, 0, 0.5, 1.0, {}, {0, 1, 0});
    const Vec3 n = buf.resolved_normal(0, 0);
    EXPECT_NEAR(n.x, 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(n.y, 1 / std::sqrt(2.0), 1e-15);
}

// ---------------------------------------------------------------------------
// Scenes

TEST(RenderScene, EmptySceneIsZero) {
    const RenderResult r = render_scene({}, map128());
    EXPECT_EQ(r.buffers, FragmentBuffers(128, 128));
    EXPECT_EQ(r.stats.triangles, 0u);
}

TEST(RenderScene, DisjointTrianglesCommute) {
    const Mesh left = single_triangle_mesh({-0.6, -0.2, 2}, {-0.1, -0.2, 2}, {-0.3, 0.4, 2});
    const Mesh right = single_triangle_mesh({0.1, -0.3, 3}, {0.7, -0.3, 3}, {0.4, 0.5, 3});
    SceneGeometry ab, ba;
    ab.meshes = {left, right};
    ba.meshes = {right, left};
    // Equal depths would tie the sort; push them apart so the order really differs.
    const RenderResult x = render_scene(ab, map128()), y = render_scene(ba, map128());
    EXPECT_EQ(x.buffers, y.buffers);
    EXPECT_EQ(x.stats.triangles, 2u);
}

TEST(RenderScene, BackFacesAreCulled) {
    SceneGeometry s;
    s.meshes = {single_triangle_mesh({-0.5, -0.5, 2}, {0, 0.5, 2}, {0.5, -0.5, 2})};
    const RenderResult r = render_scene(s, map128());
    EXPECT_EQ(r.stats.back_faces, 1u);
    EXPECT_EQ(sum(r.buffers.mask), 0.0);
}

TEST(RenderScene, ThreadCountDoesNotMatter) {
    SceneGeometry s;
    Mesh m;
    std::mt19937_64 rng(400);
    for (int n = 0; n < 40; ++n) {
        const fixture::Tri t = fixture::random_triangle(rng, 0.7, 0.15);
        const auto base = static_cast<std::uint32_t>(m.vertices.size());
        m.vertices.push_back({t.a, {0, 0}, {0, 0, -1}});
        m.vertices.push_back({t.b, {1, 0}, {0, 0, -1}});
        m.vertices.push_back({t.c, {0, 1}, {0, 0, -1}});
        m.triangles.push_back({base, base + 1, base + 2});
    }
    s.meshes = {m};
    s.lines = {{{-1, 0, 2}, {1, 0.5, 2}}};
    s.particles = {{{0.2, 0.2, 2}, 0.1}};
    const RenderResult one = render_scene(s, map128(), {1, nullptr});
    for (int threads : {2, 3, 7, 16}) EXPECT_EQ(render_scene(s, map128(), {threads, nullptr}).buffers, one.buffers);
}

TEST(RenderScene, OccluderMatchesDepthTest) {
    const PerspectiveMap& m = map128();
    const fixture::Tri back{{-0.6, -0.6, 3}, {0.6, -0.6, 3}, {0, 0.6, 3}};
    const fixture::Tri front{{-0.2, -0.3, 1.5}, {0.3, -0.2, 1.5}, {0, 0.3, 1.5}};
    SceneGeometry s;
    s.meshes = {single_triangle_mesh(back.a, back.b, back.c), single_triangle_mesh(front.a, front.b, front.c)};
    const RenderResult r = render_scene(s, m);
    const Vec3 edges[6] = {normalize(cross(back.a, back.b)),   normalize(cross(back.b, back.c)),
                           normalize(cross(back.c, back.a)),   normalize(cross(front.a, front.b)),
                           normalize(cross(front.b, front.c)), normalize(cross(front.c, front.a))};
    int compared = 0;
    for (int j = 0; j < 128; ++j)
        for (int i = 0; i < 128; ++i) {
            const Vec3 g = m.vector(i, j);
            const double px = 1.0 / m.delta_at(i, j);
            bool near_edge = false;
            for (const Vec3& e : edges) near_edge = near_edge || std::abs(dot(g, e)) < px;
            if (near_edge) continue;
            ++compared;
            // Depth-test oracle: nearest positive hit among covering triangles.
            double depth = 0.0;
            for (const auto* t : {&front, &back})
                if (oracle::inside_by_signs(g, t->a, t->b, t->c)) {
                    depth = oracle::ray_triangle(g, t->a, t->b, t->c)->depth;
                    break;
                }
            ASSERT_EQ(r.buffers.mask(i, j), depth > 0.0 ? 1.0 : 0.0) << i << ',' << j;
            if (depth > 0.0) {
                ASSERT_NEAR(r.buffers.resolved_depth(i, j), depth, 1e-9);
            }
        }
    EXPECT_GT(compared, 10000);
}

TEST(RenderScene, IntersectingFallbackPicksNearest) {
    const PerspectiveMap& m = map128();
    // Two triangles crossing each other along x = 0.
    SceneGeometry s;
    s.intersecting = true;
    s.meshes = {single_triangle_mesh({-0.6, -0.5, 1}, {0.6, -0.5, 3}, {0, 0.6, 2}),
                single_triangle_mesh({-0.6, -0.5, 3}, {0.6, -0.5, 1}, {0, 0.6, 2})};
    const RenderResult r = render_scene(s, m);
    const Vec3 left = normalize({-0.2, 0, 1.5}), right = normalize({0.2, 0, 1.5});
    auto nearest = [](const Vec3& g, const Vec3& a, const Vec3& b, const Vec3& c) {
        return oracle::ray_triangle(g, a, b, c)->depth;
    };
    for (const Vec3& g : {left, right}) {
        const int i = static_cast<int>((g.x / g.z + 1) * 64), j = static_cast<int>((g.y / g.z + 1) * 64);
        const Vec3 p = m.vector(i, j);
        const double d = std::min(nearest(p, {-0.6, -0.5, 1}, {0.6, -0.5, 3}, {0, 0.6, 2}),
                                  nearest(p, {-0.6, -0.5, 3}, {0.6, -0.5, 1}, {0, 0.6, 2}));
        EXPECT_EQ(r.buffers.mask(i, j), 1.0);
        EXPECT_NEAR(r.buffers.depth(i, j), d, 1e-9);
    }
}

TEST(RenderScene, CameraAndParallaxApply) {
    const PerspectiveMap& m = map128();
    SceneGeometry s;
    s.meshes = {single_triangle_mesh({-0.3, -0.3, 2}, {0.3, -0.3, 2}, {0, 0.3, 2})};
    const double base = sum(render_scene(s, m).buffers.mask);
    s.camera.position = {0, 0, -2};
    const double farther = sum(render_scene(s, m).buffers.mask);
    EXPECT_LT(farther, 0.5 * base);
    s.camera.position = {};
    s.parallax.samples = {{0.0, -2.0}, {kPi, -2.0}};
    EXPECT_NEAR(sum(render_scene(s, m).buffers.mask), farther, 1e-9 * base);
    s.parallax.samples = {{1.0, 0.0}, {0.5, 0.0}};
    EXPECT_THROW(render_scene(s, m), DomainError);
}

TEST(RenderScene, WideTrianglesAreSubdivided) {
    SceneGeometry s;
    s.meshes = {single_triangle_mesh({-3, -1, 1}, {3, -1, 1}, {0, 2, 1})};
    const RenderResult r = render_scene(s, map128());
    EXPECT_GT(r.stats.triangles, 1u);
    EXPECT_GT(sum(r.buffers.mask), 0.0);
}

TEST(RenderScene, MeshSeamsAreHoleFree) {
    // A quad as two triangles sharing a diagonal: interior pixels are fully covered.
    const PerspectiveMap& m = map128();
    Mesh quad;
    quad.vertices = {{{-0.5, -0.5, 2}, {0, 0}, {0, 0, -1}},
                     {{0.5, -0.5, 2}, {1, 0}, {0, 0, -1}},
                     {{0.5, 0.5, 2}, {1, 1}, {0, 0, -1}},
                     {{-0.5, 0.5, 2}, {0, 1}, {0, 0, -1}}};
    quad.triangles = {{0, 1, 2}, {0, 2, 3}};
    SceneGeometry s;
    s.meshes = {quad};
    const RenderResult r = render_scene(s, m);
    for (int j = 0; j < 128; ++j)
        for (int i = 0; i < 128; ++i) {
            const Vec3 g = m.vector(i, j);
            const double x = g.x / g.z * 2, y = g.y / g.z * 2;
            if (std::abs(x) < 0.5 - 0.02 && std::abs(y) < 0.5 - 0.02) {
                ASSERT_NEAR(r.buffers.mask(i, j), 1.0, 1e-12);
            }
            if (std::abs(x) > 0.5 + 0.02 || std::abs(y) > 0.5 + 0.02) {
                ASSERT_EQ(r.buffers.mask(i, j), 0.0);
            }
        }
}
