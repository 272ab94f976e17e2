#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vsphere/core.hpp"
#include "vsphere/perspective_map.hpp"

namespace vsphere {

// ---------------------------------------------------------------------------
// Universal perspective: angle of view omega, azimuthal type k, cylindricity l,
// anamorphic correction s.

inline constexpr double kOmegaFloor = 1e-6;
inline constexpr double kOpenBoundMargin = 1e-4;

struct PerspectiveParams {
    double omega = 0.0;
    double k = 0.0;
    double l = 1.0;
    double s = 1.0;

    bool operator==(const PerspectiveParams&) const = default;
};

/// Largest admissible omega for a given k (already reduced by the open-bound
/// margin when k > 0).
double omega_max(double k);

struct ClampReport {
    PerspectiveParams params;
    std::vector<std::string> adjusted;  ///< names of parameters that moved
    bool changed() const noexcept { return !adjusted.empty(); }
};

/// Clamps each parameter into its admissible range. Idempotent.
/// Throws DomainError on NaN/inf input.
ClampReport clamp_params_report(double omega, double k, double l, double s);
PerspectiveParams clamp_params(double omega, double k, double l, double s);
/// Strict variant: throws DomainError naming the clamped value when any
/// parameter is out of range.
PerspectiveParams validate_params(double omega, double k, double l, double s);

/// Normalized picture radius for a ray at angle theta from the optical axis
/// (spherical case l = s = 1). Returns nullopt past the tangent pole (k > 0).
std::optional<double> radial_from_angle(double theta, double k, double omega);
/// Inverse of radial_from_angle. Returns nullopt outside the arcsine domain (k < 0).
std::optional<double> angle_from_radial(double radius, double k, double omega);

/// Radius (in the l-weighted metric) up to which 2D->3D->2D is single valued.
/// May be +inf.
double in_domain_radius(const PerspectiveParams& p);

std::optional<UnitVector3> universal_2d_to_3d(ViewCoord f, const PerspectiveParams& p);

/// Principal picture position of a direction. nullopt past the tangent pole;
/// throws DomainError when the azimuth is undefined (direction on the -z side
/// of the cylinder axis).
std::optional<ViewCoord> universal_3d_to_2d(const Vec3& v, const PerspectiveParams& p);

/// Maps a picture position between two universal projections.
std::optional<ViewCoord> remap_2d_to_2d(ViewCoord f, const PerspectiveParams& in, const PerspectiveParams& out);

// ---------------------------------------------------------------------------
// Brown-Conrady lens distortion on view coordinates.

struct LensDistortionCoeffs {
    std::vector<double> radial;  ///< k1, k2, ... (may be empty)
    Vec2 thin_prism;             ///< p1, p2
    Vec2 decentering;            ///< q1, q2

    bool is_identity() const;
};

ViewCoord brown_conrady(ViewCoord f, const LensDistortionCoeffs& c);

// ---------------------------------------------------------------------------
// Per-pixel generators.

/// Size of one pixel in texture units, used by generators with analytic masks.
struct PixelFootprint {
    double ds = 0.0;
    double dt = 0.0;
};

/// A generated direction with a mask; `mask == 0` marks a pixel outside the
/// projected frame.
struct MaskedVector {
    Vec3 v;
    double mask = 1.0;
};

/// Throws DomainError when the angle of view is pi or more.
UnitVector3 rectilinear_map(TextureCoord f, const AovSpec& aov, double aspect);

struct PanoramaSample {
    UnitVector3 v;
    double aspect;
};
/// Curved panorama; `height` is the display height in units of the arc radius.
PanoramaSample panorama_map(TextureCoord f, double omega_h, double height);

struct DomeSpec {
    double compression = 0.0;  ///< radians of coverage beyond the hemisphere
    double tilt = 0.0;         ///< radians
    double offset = 0.0;       ///< view offset in dome radii
};
MaskedVector dome_map(TextureCoord f, const DomeSpec& spec, PixelFootprint px);

UnitVector3 equirect_map(TextureCoord f);

/// 6:1 horizontal strip, faces +X, -X, -Z, +Z, +Y, -Y.
UnitVector3 cubemap_map(TextureCoord f);
/// Face-local evaluation; u and t in [-1/2, 1/2].
UnitVector3 cubemap_face_vector(int face, double u, double t);
const Mat3& cubemap_face_matrix(int face);

struct ScreenArraySpec {
    int screens = 1;
    double omega_h = 0.0;  ///< horizontal AOV of one screen
    double aspect = 1.0;   ///< aspect ratio of one screen
};
UnitVector3 screen_array_map(TextureCoord f, const ScreenArraySpec& spec);

struct VrSpec {
    double ipd = 0.5;      ///< interpupillary distance in screen widths, [0, 0.5]
    double omega_v = 0.0;  ///< vertical AOV
    double aspect = 2.0;   ///< aspect ratio of the whole (two-eye) screen
    std::vector<double> radial;
};
UnitVector3 vr_map(TextureCoord f, const VrSpec& spec);

struct MirrorDomeSpec {
    Vec3 projector;
    Vec3 dome_origin;
    double dome_radius = 1.0;
};

struct MirrorRay {
    UnitVector3 v;
    double path;  ///< projector -> mirror -> dome distance
};

/// Reflection of a projector ray off the unit mirror at normal `n` onto the
/// dome. nullopt when the reflected ray misses the dome.
std::optional<MirrorRay> mirror_dome_ray(const Vec3& n, const MirrorDomeSpec& spec);

/// Builds a map from a mirror normal pass (zero vector = no mirror at that
/// pixel). The dimming plane holds the inverse-square falloff normalized to
/// the longest path in the frame.
PerspectiveMap mirror_dome_map(const Grid<Vec3>& normals, const MirrorDomeSpec& spec, const AovSpec& aov,
                               double aspect);

/// Normal pass of the unit sphere at the origin as seen through a projector
/// map placed at `position` with orientation `orientation`.
Grid<Vec3> sphere_normal_pass(const PerspectiveMap& projector, const Vec3& position, const Mat3& orientation);

struct ProjectionMappingSpec {
    Vec3 observer;
    Mat3 rotation = Mat3::identity();
    Vec3 projector;
};

/// Builds a map from a world-position pass seen from the projector
/// (non-finite entries = no surface). Dimming is (|S - I| / max)^2.
PerspectiveMap projection_mapping_map(const Grid<Vec3>& surface, const ProjectionMappingSpec& spec,
                                      const AovSpec& aov, double aspect);

// ---------------------------------------------------------------------------
// Map baking.

struct UniversalProjection {
    PerspectiveParams params;
    LensDistortionCoeffs lens;
};
struct RectilinearProjection {
    LensDistortionCoeffs lens;
};
struct PanoramaProjection {
    double omega_h = 0.0;
    double height = 1.0;
};
struct DomeProjection {
    DomeSpec spec;
};
struct EquirectProjection {};
struct CubemapProjection {};
struct ScreenArrayProjection {
    ScreenArraySpec spec;
};
struct VrProjection {
    VrSpec spec;
};

using ProjectionSpec = std::variant<UniversalProjection, RectilinearProjection, PanoramaProjection, DomeProjection,
                                    EquirectProjection, CubemapProjection, ScreenArrayProjection, VrProjection>;

std::string projection_name(const ProjectionSpec& spec);
/// {"name": ..., <parameters>} as written into map sidecars.
nlohmann::json projection_to_json(const ProjectionSpec& spec);

struct MapSample {
    Vec3 v;
    bool valid = true;
    double dim = 1.0;
};

/// Evaluates one generator at a texture coordinate. Domain failures become
/// masked samples.
MapSample sample_projection(const ProjectionSpec& spec, TextureCoord f, const AovSpec& aov, double aspect,
                            PixelFootprint px);

/// Bakes a map at pixel centres ((i+0.5)/W, (j+0.5)/H). For universal
/// projections the AOV angle is taken from the parameters; panorama and
/// cube-map bakes record their intrinsic aspect.
PerspectiveMap bake_map(const ProjectionSpec& spec, int width, int height, const AovSpec& aov, double aspect);

}  // namespace vsphere
