#pragma once

#include <cstddef>
#include <string_view>

#include "vsphere/grid.hpp"
#include "vsphere/vec.hpp"

namespace vsphere {

class PerspectiveMap;

/// Normalized picture coordinate; (0,0) and (1,1) are opposite corners.
struct TextureCoord {
    double s = 0.0;
    double t = 0.0;
};

/// Centered picture coordinate; the AOV-major axis spans [-1, 1].
struct ViewCoord {
    double x = 0.0;
    double y = 0.0;
};

enum class AovMode { horizontal, vertical, diagonal, horizontal4x3 };

std::string_view to_string(AovMode mode);
/// Accepts "horizontal", "vertical", "diagonal" and "horizontal4x3".
AovMode parse_aov_mode(std::string_view text);

/// Angle of view together with the axis it is measured along.
class AovSpec {
public:
    /// Throws DomainError unless angle is finite and in (0, 2pi].
    AovSpec(double angle, AovMode mode);

    double angle() const noexcept { return angle_; }
    AovMode mode() const noexcept { return mode_; }

private:
    double angle_;
    AovMode mode_;
};

/// A direction on the visual sphere. Construction enforces |v| = 1 +- 1e-6.
class UnitVector3 {
public:
    /// Normalizes v; throws DomainError for the zero vector or non-finite input.
    static UnitVector3 normalized(const Vec3& v);
    /// Accepts v as-is when it is already unit length, throws otherwise.
    static UnitVector3 checked(const Vec3& v);

    const Vec3& vec() const noexcept { return v_; }
    double x() const noexcept { return v_.x; }
    double y() const noexcept { return v_.y; }
    double z() const noexcept { return v_.z; }

    operator const Vec3&() const noexcept { return v_; }

private:
    explicit UnitVector3(const Vec3& v) : v_(v) {}
    Vec3 v_;
};

inline constexpr double kUnitTolerance = 1e-6;
inline constexpr double kDeltaFloor = 1e-12;

/// Width of the pixel-step ramp in edge-function units. Always > 0.
class PixelDelta {
public:
    explicit PixelDelta(double value);
    double value() const noexcept { return value_; }

private:
    double value_;
};

enum class StepMode { pixel, binary };

ViewCoord texture_to_view(TextureCoord f, double aspect, AovMode mode);
ViewCoord texture_to_view(TextureCoord f, double aspect, const AovSpec& aov);
TextureCoord view_to_texture(ViewCoord f, double aspect, AovMode mode);
TextureCoord view_to_texture(ViewCoord f, double aspect, const AovSpec& aov);

/// 1 when g > 0, else 0 (g == 0 is outside).
constexpr double bstep(double g) { return g > 0.0 ? 1.0 : 0.0; }

/// Anti-aliased step: clamp(g / width + 1/2, 0, 1).
double pstep(double g, PixelDelta width);

/// Anti-aliased step against a stored reciprocal width: clamp(delta * g + 1/2, 0, 1).
inline double gpstep(double g, double delta) {
    const double v = g * delta + 0.5;
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

/// Sum of absolute forward differences along both axes at (i, j). The last
/// column/row uses the backward difference. Floored at kDeltaFloor.
PixelDelta discrete_fwidth(const ScalarGrid& field, int i, int j);

struct DeltaMap {
    Grid<float> delta;              ///< 1 / max component fwidth per pixel
    std::size_t saturated_pixels = 0;  ///< pixels that hit the fwidth floor
};

/// Per-pixel reciprocal of the largest component fwidth of the map vectors.
/// Differences against masked neighbours fall back to the opposite side, or
/// are dropped when both sides are masked.
DeltaMap global_delta_map(const PerspectiveMap& map);

}  // namespace vsphere
