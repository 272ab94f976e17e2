#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "vsphere/core.hpp"
#include "vsphere/perspective_map.hpp"
#include "vsphere/simd/kernels.hpp"

namespace vsphere {

// ---------------------------------------------------------------------------
// Edge functions

/// Smallest circle around the projected directions of a triangle. |center| is
/// the cosine of its angular radius.
struct SmallestCircle {
    Vec3 center;
    double threshold = 0.0;
    bool degenerate = false;
};

SmallestCircle smallest_circle(const Vec3& a, const Vec3& b, const Vec3& c);

/// Half-space rows g = G . n - offset; a direction is inside when every g > 0.
struct EdgeMatrix {
    std::vector<simd::EdgeRow> rows;
    bool has_miter = false;
};

/// Rows ||A x B||, ||B x C||, ||C x A||, plus the miter row (S^, |S|) divided
/// by the sine of the circle radius when requested and the smallest circle is
/// well defined. A positive
/// `miter_bias` pushes the miter step outward by that many ramp widths, so it
/// leaves every pixel within half a ramp of the triangle untouched. Throws
/// DegenerateGeometry for coincident or antipodal vertices.
EdgeMatrix edge_matrix(const Vec3& a, const Vec3& b, const Vec3& c, bool miter, double miter_bias = 0.0);

/// Rows from consecutive cross products of a convex planar polygon. Throws
/// DegenerateGeometry when fewer than 3 vertices are given or the polygon is
/// not planar within 1e-6.
EdgeMatrix polygon_edge_matrix(std::span<const Vec3> vertices);

/// det[A, B, C] > 0: counter-clockwise as seen from the eye (y up).
bool front_facing(const Vec3& a, const Vec3& b, const Vec3& c);

// ---------------------------------------------------------------------------
// Coverage

enum class DeltaSource {
    map,       ///< the map's precomputed delta plane
    fragment,  ///< per-fragment fwidth of each row (reference path, scalar only)
};

struct RasterOptions {
    StepMode mode = StepMode::pixel;
    bool miter = true;
    DeltaSource delta = DeltaSource::map;
    bool cull_tiles = true;
    const simd::KernelTable* kernels = nullptr;  ///< null = active table
};

/// Requires a finalized map.
ScalarGrid rasterize_edges(const PerspectiveMap& map, const EdgeMatrix& em, const RasterOptions& opts = {});
ScalarGrid rasterize_triangle(const PerspectiveMap& map, const Vec3& a, const Vec3& b, const Vec3& c,
                              const RasterOptions& opts = {});
ScalarGrid rasterize_polygon(const PerspectiveMap& map, std::span<const Vec3> vertices,
                             const RasterOptions& opts = {});

simd::LineFrame line_frame(const Vec3& a, const Vec3& b);
ScalarGrid rasterize_line(const PerspectiveMap& map, const Vec3& a, const Vec3& b, const RasterOptions& opts = {});

struct Particle {
    Vec3 position;
    double radius = 0.0;
};

simd::ParticleFrame particle_frame(const Particle& p);

struct ParticleCoverage {
    ScalarGrid mask;
    ScalarGrid u;
    ScalarGrid v;
};
ParticleCoverage rasterize_particle(const PerspectiveMap& map, const Particle& p, const RasterOptions& opts = {});

// ---------------------------------------------------------------------------
// Fragment data

struct Barycentric {
    Vec3 weights;  ///< (b_s, b_t, b_p) for A, B, C
    double depth;  ///< distance along the unit ray
};

/// Throws DegenerateGeometry when the ray grazes the triangle plane.
Barycentric barycentric(const Vec3& g, const Vec3& a, const Vec3& b, const Vec3& c);

struct CameraVertex {
    Vec3 position;
    Vec2 uv;
    Vec3 normal;
};

struct CameraTriangle {
    std::array<CameraVertex, 3> v;
};

struct Fragment {
    double depth = 0.0;
    Vec2 uv;
    Vec3 normal;
};

/// Face normal (toward the eye for front-facing triangles) replaces an
/// interpolated normal that vanishes.
Fragment interpolate_fragment(const Barycentric& b, const CameraTriangle& t);

/// Splits triangles whose vertex directions span more than pi/2 at edge
/// midpoints. Throws DegenerateGeometry past 16 levels.
std::vector<CameraTriangle> subdivide_wide(const CameraTriangle& t);

/// Largest pairwise angle between the vertex directions.
double angular_span(const CameraTriangle& t);

// ---------------------------------------------------------------------------
// No-parallax point offsets

struct ParallaxProfile {
    std::vector<std::pair<double, double>> samples;  ///< (theta, z-offset), theta ascending in [0, pi]

    /// Throws DomainError when unsorted, out of range or non-finite.
    void validate() const;
    /// Piecewise-linear, clamped at the ends; 0 when empty.
    double offset_at(double theta) const;
};

Vec3 apply_parallax(const Vec3& position, const ParallaxProfile& profile);

// ---------------------------------------------------------------------------
// Compositing

/// Front-to-back accumulation planes. uv, depth and normal are premultiplied
/// by coverage; resolve them with the accessors below.
struct FragmentBuffers {
    FragmentBuffers() = default;
    FragmentBuffers(int width, int height);

    int width() const noexcept { return mask.width(); }
    int height() const noexcept { return mask.height(); }

    ScalarGrid mask;
    ScalarGrid depth;
    Grid<Vec2> uv;
    Grid<Vec3> normal;
    ScalarGrid wire;

    double resolved_depth(int i, int j) const;
    Vec2 resolved_uv(int i, int j) const;
    Vec3 resolved_normal(int i, int j) const;

    bool operator==(const FragmentBuffers&) const = default;
};

/// Returns the clipped fragment mask that was added.
double composite_fragment(FragmentBuffers& buf, int i, int j, double m_f, double depth_f, Vec2 uv_f,
                          const Vec3& normal_f);

// ---------------------------------------------------------------------------
// Scenes

struct MeshVertex {
    Vec3 position;
    Vec2 uv;
    Vec3 normal;
};

struct Mesh {
    std::vector<MeshVertex> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
};

struct Camera {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
    Vec3 position;

    Mat3 rotation() const { return orientation(yaw, pitch, roll); }
    Vec3 to_camera(const Vec3& world) const { return rotation().transposed() * (world - position); }
};

struct Segment {
    Vec3 a;
    Vec3 b;
};

/// World-space geometry ready to render.
struct SceneGeometry {
    Camera camera;
    std::vector<Mesh> meshes;
    std::vector<Segment> lines;
    std::vector<Particle> particles;
    ParallaxProfile parallax;
    bool intersecting = false;
};

struct RenderOptions {
    int threads = 0;  ///< 0 = hardware concurrency
    const simd::KernelTable* kernels = nullptr;
};

struct RenderStats {
    std::size_t triangles = 0;  ///< rasterized after culling and subdivision
    std::size_t back_faces = 0;
    std::size_t skipped = 0;  ///< degenerate primitives
    std::size_t particles = 0;
    std::size_t lines = 0;
    std::size_t grazing_fragments = 0;  ///< pixels dropped for rays parallel to the plane
};

struct RenderResult {
    FragmentBuffers buffers;
    RenderStats stats;
};

RenderResult render_scene(const SceneGeometry& scene, const PerspectiveMap& map, const RenderOptions& opts = {});

}  // namespace vsphere
