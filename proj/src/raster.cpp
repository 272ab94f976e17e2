#include "vsphere/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <thread>

#include "vsphere/error.hpp"

namespace vsphere {

namespace {

constexpr double kPi = std::numbers::pi;
// Float map vectors are unit only to ~6e-8; tile tests keep a wider margin.
constexpr double kCullEpsilon = 1e-6;
constexpr double kGuardedMiterBias = 1.0;

simd::EdgeRow make_row(const Vec3& n, double offset) { return {n.x, n.y, n.z, offset}; }

Vec3 row_normal(const simd::EdgeRow& r) { return {r.nx, r.ny, r.nz}; }

Vec3 unit_cross(const Vec3& a, const Vec3& b, const char* what) {
    const Vec3 n = cross(a, b);
    const double len = length(n);
    if (!(len > 1e-12 * length(a) * length(b))) throw DegenerateGeometry(what);
    return n / len;
}

}  // namespace

SmallestCircle smallest_circle(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ha = normalize(a), hb = normalize(b), hc = normalize(c);
    const double a2 = dot(hb - hc, hb - hc);
    const double b2 = dot(hc - ha, hc - ha);
    const double c2 = dot(ha - hb, ha - hb);
    const double os = a2 * (b2 + c2 - a2);
    const double ot = b2 * (c2 + a2 - b2);
    const double op = c2 * (a2 + b2 - c2);
    SmallestCircle out;
    const double sum = os + ot + op;
    // Coincident directions, judged against the triangle's own size.
    if (!(std::min({a2, b2, c2}) > 1e-24 * std::max({a2, b2, c2}))) {
        out.degenerate = true;
        return out;
    }
    if (os <= 0.0) out.center = 0.5 * (hb + hc);
    else if (ot <= 0.0) out.center = 0.5 * (hc + ha);
    else if (op <= 0.0) out.center = 0.5 * (ha + hb);
    else out.center = (os * ha + ot * hb + op * hc) / sum;
    out.threshold = length(out.center);
    return out;
}

bool front_facing(const Vec3& a, const Vec3& b, const Vec3& c) { return dot(a, cross(b, c)) > 0.0; }

EdgeMatrix edge_matrix(const Vec3& a, const Vec3& b, const Vec3& c, bool miter, double miter_bias) {
    EdgeMatrix em;
    em.rows.reserve(4);
    em.rows.push_back(make_row(unit_cross(a, b, "degenerate edge AB"), 0.0));
    em.rows.push_back(make_row(unit_cross(b, c, "degenerate edge BC"), 0.0));
    em.rows.push_back(make_row(unit_cross(c, a, "degenerate edge CA"), 0.0));
    if (miter) {
        const SmallestCircle sc = smallest_circle(a, b, c);
        // Dividing by sin(radius) gives the row a unit angular gradient on
        // the circle, like the edge rows, so one delta plane serves both.
        const double sin_r = std::sqrt(std::max(0.0, 1.0 - sc.threshold * sc.threshold));
        if (!sc.degenerate && sc.threshold > 1e-12 && sin_r > 1e-12) {
            em.rows.push_back(make_row(sc.center / (sc.threshold * sin_r), sc.threshold / sin_r));
            em.rows.back().bias = miter_bias;
            em.has_miter = true;
        }
    }
    return em;
}

EdgeMatrix polygon_edge_matrix(std::span<const Vec3> v) {
    const std::size_t n = v.size();
    if (n < 3) throw DegenerateGeometry("polygon needs at least 3 vertices");
    Vec3 normal;
    double extent = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& p = v[i];
        const Vec3& q = v[(i + 1) % n];
        normal += Vec3{(p.y - q.y) * (p.z + q.z), (p.z - q.z) * (p.x + q.x), (p.x - q.x) * (p.y + q.y)};
        extent = std::max(extent, length(q - p));
    }
    const Vec3 nn = normalize(normal);
    if (nn == Vec3{}) throw DegenerateGeometry("polygon has zero area");
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(dot(v[i] - v[0], nn)) > 1e-6 * std::max(1.0, extent))
            throw DegenerateGeometry("polygon is not planar");
    EdgeMatrix em;
    em.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        em.rows.push_back(make_row(unit_cross(v[i], v[(i + 1) % n], "degenerate polygon edge"), 0.0));
    return em;
}

// ---------------------------------------------------------------------------
// Tile traversal

namespace {

double cap_max(const TileBounds& t, const Vec3& n) {
    const double a = angle_between(t.center, n);
    return a <= t.radius ? 1.0 : std::cos(a - t.radius);
}

double cap_min(const TileBounds& t, const Vec3& n) {
    const double a = angle_between(t.center, n);
    return a + t.radius >= kPi ? -1.0 : std::cos(a + t.radius);
}

// True when step(G . n - offset) is provably zero over the tile.
bool row_excludes(const TileBounds& t, const simd::EdgeRow& r, StepMode mode) {
    const Vec3 n = row_normal(r);
    const double margin = mode == StepMode::pixel ? (0.5 + r.bias) * t.ramp : 0.0;
    return length(n) * cap_max(t, n) - r.offset <= -margin - kCullEpsilon * std::max(1.0, length(n));
}

bool edges_may_cover(const TileBounds& t, std::span<const simd::EdgeRow> rows, StepMode mode) {
    if (t.empty()) return false;
    for (const auto& r : rows)
        if (row_excludes(t, r, mode)) return false;
    return true;
}

bool line_may_cover(const TileBounds& t, const simd::LineFrame& f, StepMode mode) {
    if (t.empty()) return false;
    const Vec3 n = row_normal(f.plane);
    if (cap_max(t, n) <= -t.ramp - kCullEpsilon || cap_min(t, n) >= t.ramp + kCullEpsilon) return false;
    return !row_excludes(t, f.radial, mode);
}

simd::PixelSpan pixel_span(const PerspectiveMap& map, int j, int i0, int count) {
    const std::size_t k = map.index(i0, j);
    simd::PixelSpan s;
    s.x = map.xs().data() + k;
    s.y = map.ys().data() + k;
    s.z = map.zs().data() + k;
    s.delta = map.delta().data() + k;
    s.valid = map.validity().data() + k;
    s.count = static_cast<std::size_t>(count);
    return s;
}

// Calls run(j, i0, count) for each pixel run of tiles in rows [ty0, ty1) that
// pass `live`, merging horizontally adjacent tiles.
template <class Live, class Run>
void for_each_run(const PerspectiveMap& map, int ty0, int ty1, bool cull, Live&& live, Run&& run) {
    const int T = PerspectiveMap::kTileSize;
    for (int ty = ty0; ty < ty1; ++ty) {
        const int j0 = ty * T, j1 = std::min(j0 + T, map.height());
        int tx = 0;
        while (tx < map.tiles_x()) {
            if (cull && !live(map.tile(tx, ty))) {
                ++tx;
                continue;
            }
            int end = tx + 1;
            while (end < map.tiles_x() && (!cull || live(map.tile(end, ty)))) ++end;
            const int i0 = tx * T, i1 = std::min(end * T, map.width());
            for (int j = j0; j < j1; ++j) run(j, i0, i1 - i0);
            tx = end;
        }
    }
}

void require_finalized(const PerspectiveMap& map) {
    if (!map.finalized()) throw DomainError("perspective map must be finalized before rasterization");
}

const simd::KernelTable& table_for(const simd::KernelTable* k) { return k ? *k : simd::active_kernels(); }

ScalarGrid rasterize_fragment_delta(const PerspectiveMap& map, const EdgeMatrix& em, StepMode mode) {
    const int w = map.width(), h = map.height();
    ScalarGrid out(w, h, 1.0);
    ScalarGrid g(w, h);
    for (const auto& r : em.rows) {
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) {
                const Vec3 v = map.vector(i, j);
                g(i, j) = ((v.x * r.nx + v.y * r.ny) + v.z * r.nz) - r.offset;
            }
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) {
                double s = bstep(g(i, j));
                if (mode == StepMode::pixel) {
                    const PixelDelta fw = discrete_fwidth(g, i, j);
                    s = pstep(g(i, j) + r.bias * fw.value(), fw);
                }
                out(i, j) = std::min(out(i, j), s);
            }
    }
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i)
            if (!map.valid(i, j)) out(i, j) = 0.0;
    return out;
}

}  // namespace

ScalarGrid rasterize_edges(const PerspectiveMap& map, const EdgeMatrix& em, const RasterOptions& opts) {
    require_finalized(map);
    if (opts.delta == DeltaSource::fragment) return rasterize_fragment_delta(map, em, opts.mode);
    const auto& k = table_for(opts.kernels);
    ScalarGrid out(map.width(), map.height());
    const std::span<const simd::EdgeRow> rows(em.rows);
    for_each_run(
        map, 0, map.tiles_y(), opts.cull_tiles, [&](const TileBounds& t) { return edges_may_cover(t, rows, opts.mode); },
        [&](int j, int i0, int n) {
            k.edge_coverage(pixel_span(map, j, i0, n), rows.data(), static_cast<int>(rows.size()), opts.mode,
                            &out(i0, j));
        });
    return out;
}

ScalarGrid rasterize_triangle(const PerspectiveMap& map, const Vec3& a, const Vec3& b, const Vec3& c,
                              const RasterOptions& opts) {
    return rasterize_edges(map, edge_matrix(a, b, c, opts.miter), opts);
}

ScalarGrid rasterize_polygon(const PerspectiveMap& map, std::span<const Vec3> vertices, const RasterOptions& opts) {
    return rasterize_edges(map, polygon_edge_matrix(vertices), opts);
}

simd::LineFrame line_frame(const Vec3& a, const Vec3& b) {
    const Vec3 n = unit_cross(a, b, "degenerate line segment");
    const Vec3 mid = 0.5 * (normalize(a) + normalize(b));
    const double len = length(mid);
    if (!(len > 1e-12)) throw DegenerateGeometry("line segment endpoints are antipodal");
    // Scaled to a unit angular gradient at the endpoints, as for the miter row.
    const double sin_half = std::sqrt(std::max(0.0, 1.0 - len * len));
    if (!(sin_half > 1e-12)) throw DegenerateGeometry("degenerate line segment");
    return {make_row(n, 0.0), make_row(mid / (len * sin_half), len / sin_half)};
}

ScalarGrid rasterize_line(const PerspectiveMap& map, const Vec3& a, const Vec3& b, const RasterOptions& opts) {
    require_finalized(map);
    const simd::LineFrame frame = line_frame(a, b);
    const auto& k = table_for(opts.kernels);
    ScalarGrid out(map.width(), map.height());
    for_each_run(
        map, 0, map.tiles_y(), opts.cull_tiles, [&](const TileBounds& t) { return line_may_cover(t, frame, opts.mode); },
        [&](int j, int i0, int n) { k.line_coverage(pixel_span(map, j, i0, n), frame, opts.mode, &out(i0, j)); });
    return out;
}

simd::ParticleFrame particle_frame(const Particle& p) {
    const double d2 = dot(p.position, p.position);
    if (!(p.radius > 0.0) || !(p.radius * p.radius < d2)) throw DomainError("particle must not contain the eye");
    const Vec3 ph = p.position / std::sqrt(d2);
    Vec3 x = normalize(Vec3{p.position.z, 0.0, -p.position.x});
    if (x == Vec3{}) x = Vec3{1, 0, 0};
    simd::ParticleFrame f;
    const double sin_r = p.radius / std::sqrt(d2);
    f.disc = make_row(ph / sin_r, std::sqrt(1.0 - sin_r * sin_r) / sin_r);
    f.x_axis = x;
    f.y_axis = cross(x, ph);
    f.uv_scale = std::sqrt(d2) / (2.0 * p.radius);
    return f;
}

ParticleCoverage rasterize_particle(const PerspectiveMap& map, const Particle& p, const RasterOptions& opts) {
    require_finalized(map);
    const simd::ParticleFrame frame = particle_frame(p);
    const auto& k = table_for(opts.kernels);
    ParticleCoverage out{ScalarGrid(map.width(), map.height()), ScalarGrid(map.width(), map.height()),
                         ScalarGrid(map.width(), map.height())};
    const simd::EdgeRow disc[1] = {frame.disc};
    for_each_run(
        map, 0, map.tiles_y(), opts.cull_tiles,
        [&](const TileBounds& t) { return edges_may_cover(t, disc, opts.mode); },
        [&](int j, int i0, int n) {
            k.particle_coverage(pixel_span(map, j, i0, n), frame, opts.mode, &out.mask(i0, j), &out.u(i0, j),
                                &out.v(i0, j));
        });
    return out;
}

// ---------------------------------------------------------------------------
// Fragment data

Barycentric barycentric(const Vec3& g, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 n = cross(a - b, c - b);
    const double nn = dot(n, n);
    const double gn = dot(g, n);
    if (!(nn > 0.0) || !(std::abs(gn) >= 1e-12 * length(g) * std::sqrt(nn)))
        throw DegenerateGeometry("ray grazes the triangle plane");
    const double r = dot(a, n) / gn;
    const Vec3 p = r * g;
    const Vec3 pa = a - p, pb = b - p, pc = c - p;
    return {{dot(cross(pc, pb), n) / nn, dot(cross(pa, pc), n) / nn, dot(cross(pb, pa), n) / nn}, r};
}

Fragment interpolate_fragment(const Barycentric& b, const CameraTriangle& t) {
    const auto& [A, B, C] = t.v;
    const Vec3& w = b.weights;
    Fragment f;
    f.depth = b.depth;
    f.uv = w.x * A.uv + w.y * B.uv + w.z * C.uv;
    const Vec3 n = w.x * A.normal + w.y * B.normal + w.z * C.normal;
    if (length(n) > 1e-12) f.normal = normalize(n);
    else f.normal = normalize(cross(A.position - B.position, C.position - B.position));
    return f;
}

double angular_span(const CameraTriangle& t) {
    const Vec3 &a = t.v[0].position, &b = t.v[1].position, &c = t.v[2].position;
    return std::max({angle_between(a, b), angle_between(b, c), angle_between(c, a)});
}

namespace {

CameraVertex midpoint(const CameraVertex& p, const CameraVertex& q) {
    CameraVertex m{0.5 * (p.position + q.position), 0.5 * (p.uv + q.uv), 0.5 * (p.normal + q.normal)};
    if (length(m.position) < 1e-12) throw DegenerateGeometry("triangle edge passes through the eye");
    return m;
}

void subdivide(const CameraTriangle& t, int depth, std::vector<CameraTriangle>& out) {
    if (angular_span(t) <= 0.5 * kPi) {
        out.push_back(t);
        return;
    }
    if (depth >= 16) throw DegenerateGeometry("triangle subdivision did not converge");
    const auto& [a, b, c] = t.v;
    const CameraVertex ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    subdivide({{a, ab, ca}}, depth + 1, out);
    subdivide({{ab, b, bc}}, depth + 1, out);
    subdivide({{ca, bc, c}}, depth + 1, out);
    subdivide({{ab, bc, ca}}, depth + 1, out);
}

}  // namespace

std::vector<CameraTriangle> subdivide_wide(const CameraTriangle& t) {
    std::vector<CameraTriangle> out;
    subdivide(t, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// Parallax

void ParallaxProfile::validate() const {
    double prev = -1.0;
    for (const auto& [theta, off] : samples) {
        if (!std::isfinite(theta) || !std::isfinite(off)) throw DomainError("parallax profile must be finite");
        if (theta < 0.0 || theta > kPi) throw DomainError("parallax angles must lie in [0, pi]");
        if (theta < prev) throw DomainError("parallax profile must be sorted by angle");
        prev = theta;
    }
}

double ParallaxProfile::offset_at(double theta) const {
    if (samples.empty()) return 0.0;
    if (theta <= samples.front().first) return samples.front().second;
    if (theta >= samples.back().first) return samples.back().second;
    const auto hi = std::upper_bound(samples.begin(), samples.end(), theta,
                                     [](double t, const auto& s) { return t < s.first; });
    const auto lo = hi - 1;
    const double span = hi->first - lo->first;
    if (span <= 0.0) return hi->second;
    const double u = (theta - lo->first) / span;
    return lo->second + u * (hi->second - lo->second);
}

Vec3 apply_parallax(const Vec3& position, const ParallaxProfile& profile) {
    if (profile.samples.empty()) return position;
    const double theta = position == Vec3{} ? 0.0 : angle_between(position, Vec3{0, 0, 1});
    Vec3 p = position;
    p.z -= profile.offset_at(theta);
    return p;
}

// ---------------------------------------------------------------------------
// Compositing

FragmentBuffers::FragmentBuffers(int width, int height)
    : mask(width, height), depth(width, height), uv(width, height), normal(width, height), wire(width, height) {}

double FragmentBuffers::resolved_depth(int i, int j) const {
    const double m = mask(i, j);
    return m > 0.0 ? depth(i, j) / m : 0.0;
}

Vec2 FragmentBuffers::resolved_uv(int i, int j) const {
    const double m = mask(i, j);
    return m > 0.0 ? uv(i, j) * (1.0 / m) : Vec2{};
}

Vec3 FragmentBuffers::resolved_normal(int i, int j) const { return normalize(normal(i, j)); }

double composite_fragment(FragmentBuffers& buf, int i, int j, double m_f, double depth_f, Vec2 uv_f,
                          const Vec3& normal_f) {
    double& m = buf.mask(i, j);
    const double m_fc = std::min(m_f, 1.0 - m);
    if (!(m_fc > 0.0)) return 0.0;
    m += m_fc;
    buf.depth(i, j) += m_fc * depth_f;
    buf.uv(i, j) += m_fc * uv_f;
    buf.normal(i, j) += m_fc * normal_f;
    return m_fc;
}

// ---------------------------------------------------------------------------
// Scene rendering

namespace {

struct TrianglePrim {
    CameraTriangle tri;
    EdgeMatrix em;
};

struct ParticlePrim {
    Particle p;
    simd::ParticleFrame frame;
};

struct Primitive {
    double distance;
    bool is_particle;
    std::size_t index;
};

struct BandCounters {
    std::size_t grazing = 0;
};

// Edge keys by vertex position so seams split by attributes still count as shared.
std::vector<bool> internal_flags(const Mesh& mesh) {
    std::map<std::array<double, 3>, std::uint32_t> ids;
    std::vector<std::uint32_t> pos_id(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& p = mesh.vertices[i].position;
        pos_id[i] = ids.try_emplace({p.x, p.y, p.z}, static_cast<std::uint32_t>(ids.size())).first->second;
    }
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_count;
    auto key = [&](std::uint32_t a, std::uint32_t b) {
        const std::uint32_t x = pos_id[a], y = pos_id[b];
        return std::make_pair(std::min(x, y), std::max(x, y));
    };
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e) ++edge_count[key(t[e], t[(e + 1) % 3])];
    std::vector<bool> out;
    out.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        bool internal = false;
        for (int e = 0; e < 3; ++e) internal = internal || edge_count[key(t[e], t[(e + 1) % 3])] > 1;
        out.push_back(internal);
    }
    return out;
}

bool usable(const Vec3& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z) && length(p) > 1e-12;
}

Vec3 map_vector(const PerspectiveMap& map, int i, int j) { return map.vector(i, j); }

// Nearest hit of the ray t*g with the particle sphere, or closest approach.
Fragment particle_fragment(const Particle& p, const Vec3& g, double u, double v) {
    const double gp = dot(g, p.position);
    const double disc = gp * gp - (dot(p.position, p.position) - p.radius * p.radius);
    const double t = disc > 0.0 ? gp - std::sqrt(disc) : gp;
    Fragment f;
    f.depth = t;
    f.uv = {u, v};
    f.normal = normalize(t * g - p.position);
    if (f.normal == Vec3{}) f.normal = -normalize(p.position);
    return f;
}

class SceneRenderer {
public:
    SceneRenderer(const PerspectiveMap& map, const simd::KernelTable& k, bool intersecting,
                  const std::vector<TrianglePrim>& tris, const std::vector<ParticlePrim>& parts,
                  const std::vector<Primitive>& order, const std::vector<simd::LineFrame>& lines,
                  FragmentBuffers& buf, Grid<double>& zbuf)
        : map_(map), k_(k), intersecting_(intersecting), tris_(tris), parts_(parts), order_(order), lines_(lines),
          buf_(buf), zbuf_(zbuf) {}

    BandCounters band(int ty0, int ty1) const {
        BandCounters c;
        const int w = map_.width();
        std::vector<double> cov(static_cast<std::size_t>(w)), u(cov.size()), v(cov.size());
        const StepMode mode = intersecting_ ? StepMode::binary : StepMode::pixel;
        for (const Primitive& prim : order_) {
            if (!prim.is_particle) {
                const TrianglePrim& t = tris_[prim.index];
                const std::span<const simd::EdgeRow> rows(t.em.rows);
                for_each_run(
                    map_, ty0, ty1, true, [&](const TileBounds& b) { return edges_may_cover(b, rows, mode); },
                    [&](int j, int i0, int n) {
                        k_.edge_coverage(pixel_span(map_, j, i0, n), rows.data(), static_cast<int>(rows.size()), mode,
                                         cov.data());
                        for (int q = 0; q < n; ++q)
                            if (cov[q] > 0.0) triangle_pixel(t.tri, i0 + q, j, cov[q], c);
                    });
            } else {
                const ParticlePrim& p = parts_[prim.index];
                const simd::EdgeRow disc[1] = {p.frame.disc};
                for_each_run(
                    map_, ty0, ty1, true, [&](const TileBounds& b) { return edges_may_cover(b, disc, mode); },
                    [&](int j, int i0, int n) {
                        k_.particle_coverage(pixel_span(map_, j, i0, n), p.frame, mode, cov.data(), u.data(),
                                             v.data());
                        for (int q = 0; q < n; ++q)
                            if (cov[q] > 0.0) {
                                const Vec3 g = map_vector(map_, i0 + q, j);
                                emit(i0 + q, j, cov[q], particle_fragment(p.p, g, u[q], v[q]));
                            }
                    });
            }
        }
        for (const auto& f : lines_) {
            for_each_run(
                map_, ty0, ty1, true, [&](const TileBounds& b) { return line_may_cover(b, f, StepMode::pixel); },
                [&](int j, int i0, int n) {
                    k_.line_coverage(pixel_span(map_, j, i0, n), f, StepMode::pixel, cov.data());
                    for (int q = 0; q < n; ++q) buf_.wire(i0 + q, j) = std::max(buf_.wire(i0 + q, j), cov[q]);
                });
        }
        return c;
    }

private:
    void triangle_pixel(const CameraTriangle& t, int i, int j, double m, BandCounters& c) const {
        if (!intersecting_ && buf_.mask(i, j) >= 1.0) return;
        const Vec3 g = map_vector(map_, i, j);
        try {
            const Barycentric b = barycentric(g, t.v[0].position, t.v[1].position, t.v[2].position);
            emit(i, j, m, interpolate_fragment(b, t));
        } catch (const DegenerateGeometry&) {
            ++c.grazing;
        }
    }

    void emit(int i, int j, double m, const Fragment& f) const {
        if (!intersecting_) {
            composite_fragment(buf_, i, j, m, f.depth, f.uv, f.normal);
            return;
        }
        double& z = zbuf_(i, j);
        if (!(f.depth > 0.0) || !(f.depth < z)) return;
        z = f.depth;
        buf_.mask(i, j) = 1.0;
        buf_.depth(i, j) = f.depth;
        buf_.uv(i, j) = f.uv;
        buf_.normal(i, j) = f.normal;
    }

    const PerspectiveMap& map_;
    const simd::KernelTable& k_;
    bool intersecting_;
    const std::vector<TrianglePrim>& tris_;
    const std::vector<ParticlePrim>& parts_;
    const std::vector<Primitive>& order_;
    const std::vector<simd::LineFrame>& lines_;
    FragmentBuffers& buf_;
    Grid<double>& zbuf_;
};

}  // namespace

RenderResult render_scene(const SceneGeometry& scene, const PerspectiveMap& map, const RenderOptions& opts) {
    require_finalized(map);
    scene.parallax.validate();
    RenderResult result{FragmentBuffers(map.width(), map.height()), {}};
    RenderStats& stats = result.stats;
    const Camera& cam = scene.camera;
    const Mat3 to_cam = cam.rotation().transposed();
    auto transform = [&](const Vec3& world) { return apply_parallax(cam.to_camera(world), scene.parallax); };

    std::vector<TrianglePrim> tris;
    std::vector<ParticlePrim> parts;
    std::vector<Primitive> order;

    for (const Mesh& mesh : scene.meshes) {
        const std::vector<bool> internal = internal_flags(mesh);
        std::vector<CameraVertex> verts;
        verts.reserve(mesh.vertices.size());
        for (const MeshVertex& v : mesh.vertices) verts.push_back({transform(v.position), v.uv, to_cam * v.normal});
        for (std::size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
            const auto& idx = mesh.triangles[ti];
            if (idx[0] >= verts.size() || idx[1] >= verts.size() || idx[2] >= verts.size()) {
                ++stats.skipped;
                continue;
            }
            const CameraTriangle t{{verts[idx[0]], verts[idx[1]], verts[idx[2]]}};
            if (!usable(t.v[0].position) || !usable(t.v[1].position) || !usable(t.v[2].position)) {
                ++stats.skipped;
                continue;
            }
            if (!front_facing(t.v[0].position, t.v[1].position, t.v[2].position)) {
                ++stats.back_faces;
                continue;
            }
            try {
                const std::vector<CameraTriangle> pieces = subdivide_wide(t);
                // Shared edges keep their full pixel-step footprint; the
                // guarded miter only trims slivers that reach past it.
                const bool shared = internal[ti] || pieces.size() > 1;
                const double bias = shared ? kGuardedMiterBias : 0.0;
                for (const CameraTriangle& piece : pieces) {
                    const auto& [a, b, c] = piece.v;
                    EdgeMatrix em = edge_matrix(a.position, b.position, c.position, !scene.intersecting, bias);
                    const double dist = length((a.position + b.position + c.position) / 3.0);
                    order.push_back({dist, false, tris.size()});
                    tris.push_back({piece, std::move(em)});
                }
            } catch (const DegenerateGeometry&) {
                ++stats.skipped;
            }
        }
    }
    stats.triangles = tris.size();

    for (const Particle& p : scene.particles) {
        Particle cp{transform(p.position), p.radius};
        try {
            const simd::ParticleFrame f = particle_frame(cp);
            order.push_back({length(cp.position), true, parts.size()});
            parts.push_back({cp, f});
        } catch (const DomainError&) {
            ++stats.skipped;
        }
    }
    stats.particles = parts.size();

    std::vector<simd::LineFrame> lines;
    for (const Segment& s : scene.lines) {
        try {
            lines.push_back(line_frame(transform(s.a), transform(s.b)));
        } catch (const DegenerateGeometry&) {
            ++stats.skipped;
        }
    }
    stats.lines = lines.size();

    std::stable_sort(order.begin(), order.end(),
                     [](const Primitive& a, const Primitive& b) { return a.distance < b.distance; });

    Grid<double> zbuf;
    if (scene.intersecting) zbuf = Grid<double>(map.width(), map.height(), std::numeric_limits<double>::infinity());
    const SceneRenderer renderer(map, table_for(opts.kernels), scene.intersecting, tris, parts, order, lines,
                                 result.buffers, zbuf);

    const int tiles = map.tiles_y();
    int threads = opts.threads > 0 ? opts.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, tiles);
    std::vector<BandCounters> counters(static_cast<std::size_t>(threads));
    auto band_range = [&](int b) { return std::make_pair(tiles * b / threads, tiles * (b + 1) / threads); };
    if (threads == 1) {
        counters[0] = renderer.band(0, tiles);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int b = 0; b < threads; ++b)
            pool.emplace_back([&, b] {
                const auto [t0, t1] = band_range(b);
                counters[static_cast<std::size_t>(b)] = renderer.band(t0, t1);
            });
        for (auto& t : pool) t.join();
    }
    for (const auto& c : counters) stats.grazing_fragments += c.grazing;
    return result;
}

}  // namespace vsphere
