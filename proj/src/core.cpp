#include "vsphere/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vsphere/error.hpp"
#include "vsphere/perspective_map.hpp"

namespace vsphere {

std::string_view to_string(AovMode mode) {
    switch (mode) {
        case AovMode::horizontal: return "horizontal";
        case AovMode::vertical: return "vertical";
        case AovMode::diagonal: return "diagonal";
        case AovMode::horizontal4x3: return "horizontal4x3";
    }
    return "horizontal";
}

AovMode parse_aov_mode(std::string_view text) {
    if (text == "horizontal" || text == "h") return AovMode::horizontal;
    if (text == "vertical" || text == "v") return AovMode::vertical;
    if (text == "diagonal" || text == "d") return AovMode::diagonal;
    if (text == "horizontal4x3" || text == "4x3") return AovMode::horizontal4x3;
    throw DomainError("unknown AOV mode '" + std::string(text) + "'");
}

AovSpec::AovSpec(double angle, AovMode mode) : angle_(angle), mode_(mode) {
    if (!std::isfinite(angle) || angle <= 0.0 || angle > 2.0 * std::numbers::pi + 1e-12)
        throw DomainError("angle of view must be in (0, 2pi]");
}

UnitVector3 UnitVector3::normalized(const Vec3& v) {
    const double len = length(v);
    if (!std::isfinite(len) || len == 0.0) throw DomainError("cannot normalize a zero or non-finite vector");
    return UnitVector3(v / len);
}

UnitVector3 UnitVector3::checked(const Vec3& v) {
    const double n2 = dot(v, v);
    if (!std::isfinite(n2) || std::abs(n2 - 1.0) > kUnitTolerance)
        throw DomainError("vector is not unit length");
    return UnitVector3(v);
}

PixelDelta::PixelDelta(double value) : value_(value) {
    if (!std::isfinite(value) || value <= 0.0) throw DomainError("pixel delta must be positive and finite");
}

namespace {

Vec2 axis_scale(double aspect, AovMode mode) {
    if (!(aspect > 0.0) || !std::isfinite(aspect)) throw DomainError("aspect ratio must be positive");
    switch (mode) {
        case AovMode::horizontal: return {1.0, 1.0 / aspect};
        case AovMode::vertical: return {aspect, 1.0};
        case AovMode::diagonal: {
            const double d = std::sqrt(1.0 + aspect * aspect);
            return {aspect / d, 1.0 / d};
        }
        case AovMode::horizontal4x3: return {aspect * 0.75, 0.75};
    }
    return {1.0, 1.0};
}

}  // namespace

ViewCoord texture_to_view(TextureCoord f, double aspect, AovMode mode) {
    const Vec2 k = axis_scale(aspect, mode);
    return {(2.0 * f.s - 1.0) * k.x, (2.0 * f.t - 1.0) * k.y};
}

ViewCoord texture_to_view(TextureCoord f, double aspect, const AovSpec& aov) {
    return texture_to_view(f, aspect, aov.mode());
}

TextureCoord view_to_texture(ViewCoord f, double aspect, AovMode mode) {
    const Vec2 k = axis_scale(aspect, mode);
    return {0.5 + 0.5 * (f.x / k.x), 0.5 + 0.5 * (f.y / k.y)};
}

TextureCoord view_to_texture(ViewCoord f, double aspect, const AovSpec& aov) {
    return view_to_texture(f, aspect, aov.mode());
}

double pstep(double g, PixelDelta width) {
    return std::clamp(g / width.value() + 0.5, 0.0, 1.0);
}

PixelDelta discrete_fwidth(const ScalarGrid& field, int i, int j) {
    const int w = field.width(), h = field.height();
    if (w < 2 || h < 2) throw DomainError("fwidth needs a grid of at least 2x2");
    if (i < 0 || j < 0 || i >= w || j >= h) throw DomainError("fwidth index out of range");
    const int i0 = i + 1 < w ? i : i - 1;
    const int j0 = j + 1 < h ? j : j - 1;
    const double dx = std::abs(field(i0 + 1, j) - field(i0, j));
    const double dy = std::abs(field(i, j0 + 1) - field(i, j0));
    return PixelDelta(std::max(dx + dy, kDeltaFloor));
}

namespace {

// Absolute difference of one map component along one axis, honouring the
// validity mask: forward if possible, else backward, else nothing.
double masked_diff(std::span<const float> c, std::span<const std::uint8_t> valid, std::size_t here,
                   std::size_t fwd, bool has_fwd, std::size_t back, bool has_back) {
    if (has_fwd && valid[fwd]) return std::abs(static_cast<double>(c[fwd]) - static_cast<double>(c[here]));
    if (has_back && valid[back]) return std::abs(static_cast<double>(c[here]) - static_cast<double>(c[back]));
    return 0.0;
}

}  // namespace

DeltaMap global_delta_map(const PerspectiveMap& map) {
    const int w = map.width(), h = map.height();
    if (w < 2 || h < 2) throw DomainError("delta map needs at least 2x2 pixels");
    DeltaMap out{Grid<float>(w, h, 1.0f), 0};
    const auto valid = map.validity();
    const std::span<const float> comps[3] = {map.xs(), map.ys(), map.zs()};
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const std::size_t k = map.index(i, j);
            if (!valid[k]) continue;
            double widest = 0.0;
            for (const auto& c : comps) {
                const double dx = masked_diff(c, valid, k, k + 1, i + 1 < w, k - 1, i > 0);
                const double dy = masked_diff(c, valid, k, k + static_cast<std::size_t>(w), j + 1 < h,
                                              k - static_cast<std::size_t>(w), j > 0);
                widest = std::max(widest, dx + dy);
            }
            if (widest <= kDeltaFloor) {
                widest = kDeltaFloor;
                ++out.saturated_pixels;
            }
            out.delta(i, j) = static_cast<float>(1.0 / widest);
        }
    }
    return out;
}

}  // namespace vsphere
