#include "vsphere/projections.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "vsphere/error.hpp"

namespace vsphere {

namespace {

constexpr double kPi = std::numbers::pi;

bool finite(double v) { return std::isfinite(v); }

double anamorphic_factor(const PerspectiveParams& p) { return p.l * (1.0 - p.s) + p.s; }

}  // namespace

double omega_max(double k) {
    return kPi / std::max(0.5, std::abs(k)) - (k > 0.0 ? kOpenBoundMargin : 0.0);
}

ClampReport clamp_params_report(double omega, double k, double l, double s) {
    if (!finite(omega) || !finite(k) || !finite(l) || !finite(s))
        throw DomainError("projection parameters must be finite");
    ClampReport r;
    auto fit = [&r](double v, double lo, double hi, const char* name) {
        const double c = std::clamp(v, lo, hi);
        if (c != v) r.adjusted.emplace_back(name);
        return c;
    };
    r.params.k = fit(k, -1.0, 1.0, "k");
    r.params.l = fit(l, 0.0, 1.0, "l");
    r.params.s = fit(s, 0.8, 1.0, "s");
    // The lower bound is open: omega must stay strictly above zero.
    const double hi = omega_max(r.params.k);
    double o = std::min(omega, hi);
    if (o <= kOmegaFloor) o = std::min(2.0 * kOmegaFloor, hi);
    if (o != omega) r.adjusted.emplace_back("omega");
    r.params.omega = o;
    return r;
}

PerspectiveParams clamp_params(double omega, double k, double l, double s) {
    return clamp_params_report(omega, k, l, s).params;
}

PerspectiveParams validate_params(double omega, double k, double l, double s) {
    ClampReport r = clamp_params_report(omega, k, l, s);
    if (r.changed()) {
        std::string names;
        for (const auto& n : r.adjusted) names += (names.empty() ? "" : ", ") + n;
        throw DomainError("parameter out of range: " + names);
    }
    return r.params;
}

std::optional<double> radial_from_angle(double theta, double k, double omega) {
    const double half = 0.5 * omega;
    if (k > 0.0) {
        if (k * theta >= 0.5 * kPi) return std::nullopt;
        return std::tan(k * theta) / std::tan(k * half);
    }
    if (k == 0.0) return theta / half;
    return std::sin(k * theta) / std::sin(k * half);
}

std::optional<double> angle_from_radial(double radius, double k, double omega) {
    const double half = 0.5 * omega;
    if (k > 0.0) return std::atan(std::tan(k * half) * radius) / k;
    if (k == 0.0) return half * radius;
    const double arg = std::sin(k * half) * radius;
    if (std::abs(arg) > 1.0) return std::nullopt;
    return std::asin(arg) / k;
}

double in_domain_radius(const PerspectiveParams& p) {
    const double half = 0.5 * p.omega;
    const double ak = std::abs(p.k);
    if (p.k > 0.0) {
        if (p.k >= 0.5) return std::numeric_limits<double>::infinity();
        return std::tan(p.k * kPi) / std::tan(p.k * half);
    }
    if (p.k == 0.0) return kPi / half;
    if (ak >= 0.5) return 1.0 / std::abs(std::sin(p.k * half));
    return std::sin(ak * kPi) / std::sin(ak * half);
}

namespace {

// d(theta)/dR at R = 0, i.e. the limit of sin(theta)/R.
double axial_slope(double k, double omega) {
    const double half = 0.5 * omega;
    if (k > 0.0) return std::tan(k * half) / k;
    if (k == 0.0) return half;
    return std::sin(k * half) / k;
}

}  // namespace

std::optional<UnitVector3> universal_2d_to_3d(ViewCoord f, const PerspectiveParams& p) {
    const double radius = std::sqrt(f.x * f.x + p.l * f.y * f.y);
    double q;
    double cos_theta;
    if (radius < 1e-8) {
        q = axial_slope(p.k, p.omega);
        cos_theta = 1.0;
    } else {
        const auto theta = angle_from_radial(radius, p.k, p.omega);
        if (!theta) return std::nullopt;
        q = std::sin(*theta) / radius;
        cos_theta = std::cos(*theta);
    }
    const Vec3 v{f.x * q, f.y * q / anamorphic_factor(p), cos_theta};
    if (length(v) == 0.0) return std::nullopt;
    return UnitVector3::normalized(v);
}

std::optional<ViewCoord> universal_3d_to_2d(const Vec3& v, const PerspectiveParams& p) {
    const double c = anamorphic_factor(p);
    const double x = v.x, y = c * v.y, z = v.z;
    const double rho = std::sqrt(x * x + p.l * y * y);
    if (rho < 1e-8) {
        if (!(z > 0.0)) throw DomainError("direction has no defined azimuth under this projection");
        // R(theta) / rho -> 1 / (z * dtheta/dR) near the axis.
        const double scale = 1.0 / (z * axial_slope(p.k, p.omega));
        return ViewCoord{x * scale, y * scale};
    }
    const double theta = std::atan2(rho, z);
    const auto radius = radial_from_angle(theta, p.k, p.omega);
    if (!radius) return std::nullopt;
    const double scale = *radius / rho;
    return ViewCoord{x * scale, y * scale};
}

std::optional<ViewCoord> remap_2d_to_2d(ViewCoord f, const PerspectiveParams& in, const PerspectiveParams& out) {
    const auto v = universal_2d_to_3d(f, in);
    if (!v) return std::nullopt;
    try {
        return universal_3d_to_2d(*v, out);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

bool LensDistortionCoeffs::is_identity() const {
    for (double k : radial)
        if (k != 0.0) return false;
    return thin_prism == Vec2{} && decentering == Vec2{};
}

ViewCoord brown_conrady(ViewCoord f, const LensDistortionCoeffs& c) {
    const double r2 = f.x * f.x + f.y * f.y;
    double radial = 0.0;
    double rp = r2;
    for (double k : c.radial) {
        radial += k * rp;
        rp *= r2;
    }
    const double prism = c.thin_prism.x * f.x + c.thin_prism.y * f.y;
    const double g = 1.0 + radial + prism;
    return {f.x * g + c.decentering.x * r2, f.y * g + c.decentering.y * r2};
}

UnitVector3 rectilinear_map(TextureCoord f, const AovSpec& aov, double aspect) {
    if (aov.angle() >= kPi) throw DomainError("rectilinear projection needs an angle of view below pi");
    const ViewCoord v = texture_to_view(f, aspect, aov);
    return UnitVector3::normalized({v.x, v.y, 1.0 / std::tan(0.5 * aov.angle())});
}

PanoramaSample panorama_map(TextureCoord f, double omega_h, double height) {
    if (!(omega_h > 0.0) || !(height > 0.0)) throw DomainError("panorama needs a positive angle and height");
    const double a = omega_h / height;
    const double x = omega_h * (f.s - 0.5);
    const double y = height * (f.t - 0.5);
    return {UnitVector3::normalized({std::sin(x), y, std::cos(x)}), a};
}

MaskedVector dome_map(TextureCoord f, const DomeSpec& spec, PixelFootprint px) {
    const double fx = 2.0 * f.s - 1.0;
    const double fy = 1.0 - 2.0 * f.t;
    const double r = std::sqrt(fx * fx + fy * fy);
    const double theta = r * (spec.compression + 0.5 * kPi);
    const double q = r > 1e-12 ? std::sin(theta) / r : (spec.compression + 0.5 * kPi);
    const Vec3 raw{fx * q, std::cos(theta), fy * q + spec.offset};
    const double c = std::cos(spec.tilt), s = std::sin(spec.tilt);
    const Mat3 tilt = Mat3::from_rows({1, 0, 0}, {0, c, -s}, {0, s, c});
    const Vec3 v = normalize(tilt * raw);

    // Edge of the dome disc: 1 - |f'| against its analytic screen-space width.
    double fw = 0.0;
    if (r > 1e-12) fw = 2.0 * (std::abs(fx) * px.ds + std::abs(fy) * px.dt) / r;
    else fw = 2.0 * std::max(px.ds, px.dt);
    const double edge = 1.0 - r;
    double mask = fw > 0.0 ? std::clamp(edge / fw, 0.0, 1.0) : (edge > 0.0 ? 1.0 : 0.0);
    if (v == Vec3{}) mask = 0.0;
    return {v, mask};
}

UnitVector3 equirect_map(TextureCoord f) {
    const double x = kPi * (2.0 * f.s - 1.0);
    const double y = kPi * f.t;
    return UnitVector3::normalized({std::sin(x) * std::sin(y), -std::cos(y), std::cos(x) * std::sin(y)});
}

namespace {

constexpr Vec3 kX{1, 0, 0}, kY{0, 1, 0}, kZ{0, 0, 1};

const std::array<Mat3, 6> kCubeFaces = {
    Mat3::from_rows(kZ, -kX, -kY),   // +X
    Mat3::from_rows(-kZ, kX, -kY),   // -X
    Mat3::from_rows(kX, -kY, -kZ),   // -Z
    Mat3::from_rows(kX, kY, kZ),     // +Z
    Mat3::from_rows(kX, kZ, -kY),    // +Y
    Mat3::from_rows(-kX, -kZ, -kY),  // -Y
};

}  // namespace

const Mat3& cubemap_face_matrix(int face) {
    if (face < 0 || face > 5) throw DomainError("cube face index must be in [0, 5]");
    return kCubeFaces[static_cast<std::size_t>(face)];
}

UnitVector3 cubemap_face_vector(int face, double u, double t) {
    return UnitVector3::normalized(cubemap_face_matrix(face) * Vec3{u, t, 0.5});
}

UnitVector3 cubemap_map(TextureCoord f) {
    const double x = 6.0 * f.s;
    const int face = std::clamp(static_cast<int>(std::floor(x)), 0, 5);
    return cubemap_face_vector(face, (x - face) - 0.5, f.t - 0.5);
}

UnitVector3 screen_array_map(TextureCoord f, const ScreenArraySpec& spec) {
    if (spec.screens < 1) throw DomainError("screen array needs at least one screen");
    if (!(spec.omega_h > 0.0) || spec.omega_h >= kPi) throw DomainError("screen AOV must be in (0, pi)");
    if (!(spec.aspect > 0.0)) throw DomainError("screen aspect must be positive");
    const double n = spec.screens;
    const double ns = n * f.s;
    const double cell = std::clamp(std::floor(ns), 0.0, n - 1.0);
    const double index = cell + 0.5 * (1.0 - n);
    // The full strip has aspect n * a, so the vertical scale is n / (n * a).
    const Vec3 local{2.0 * (ns - cell) - 1.0, (2.0 * f.t - 1.0) / spec.aspect, 1.0 / std::tan(0.5 * spec.omega_h)};
    return UnitVector3::normalized(rotation_y(index * spec.omega_h) * normalize(local));
}

UnitVector3 vr_map(TextureCoord f, const VrSpec& spec) {
    if (!(spec.omega_v > 0.0) || spec.omega_v >= kPi) throw DomainError("VR vertical AOV must be in (0, pi)");
    if (!(spec.aspect > 0.0)) throw DomainError("VR aspect must be positive");
    const double eye = f.s < 0.5 ? -1.0 : 1.0;
    const double local = 2.0 * f.s - std::floor(2.0 * f.s);
    const double fx = ((2.0 * local - 1.0) + eye * (1.0 - 2.0 * spec.ipd)) * 0.5 * spec.aspect;
    const double fy = 2.0 * f.t - 1.0;
    double den = 1.0, num = 1.0;
    const double r2 = fx * fx + fy * fy;
    double rp = r2;
    for (double k : spec.radial) {
        den += k;
        num += k * rp;
        rp *= r2;
    }
    if (den == 0.0) throw DomainError("VR distortion coefficients sum to -1");
    const double g = num / den;
    return UnitVector3::normalized({fx * g, fy * g, 1.0 / std::tan(0.5 * spec.omega_v)});
}

std::optional<MirrorRay> mirror_dome_ray(const Vec3& n, const MirrorDomeSpec& spec) {
    const Vec3 incident = n - spec.projector;
    const Vec3 refl = normalize(incident - 2.0 * dot(incident, n) * n);
    if (refl == Vec3{}) return std::nullopt;
    const Vec3 rel = n - spec.dome_origin;
    const double r = -dot(refl, rel);
    const Vec3 closest = r * refl + rel;
    const double disc = spec.dome_radius * spec.dome_radius - dot(closest, closest);
    if (disc < 0.0) return std::nullopt;
    const double rp = r + std::sqrt(disc);
    const Vec3 hit = rp * refl + rel;
    if (length(hit) == 0.0) return std::nullopt;
    return MirrorRay{UnitVector3::normalized(hit / spec.dome_radius), rp + length(incident)};
}

PerspectiveMap mirror_dome_map(const Grid<Vec3>& normals, const MirrorDomeSpec& spec, const AovSpec& aov,
                               double aspect) {
    if (!(spec.dome_radius > 0.0)) throw DomainError("dome radius must be positive");
    PerspectiveMap map(normals.width(), normals.height(), aov, aspect);
    Grid<double> path(normals.width(), normals.height(), 0.0);
    double longest = 0.0;
    for (int j = 0; j < normals.height(); ++j)
        for (int i = 0; i < normals.width(); ++i) {
            const Vec3& n = normals(i, j);
            std::optional<MirrorRay> ray;
            if (n != Vec3{}) ray = mirror_dome_ray(n, spec);
            if (!ray) {
                map.set_masked(i, j);
                continue;
            }
            map.set(i, j, ray->v);
            path(i, j) = ray->path;
            longest = std::max(longest, ray->path);
        }
    std::vector<float> dim(map.pixel_count(), 0.0f);
    if (longest > 0.0)
        for (std::size_t k = 0; k < dim.size(); ++k) {
            const double q = path.data()[k] / longest;
            dim[k] = static_cast<float>(q * q);
        }
    map.set_dimming(std::move(dim));
    map.set_generator({{"name", "mirror_dome"},
                       {"projector", {spec.projector.x, spec.projector.y, spec.projector.z}},
                       {"dome_origin", {spec.dome_origin.x, spec.dome_origin.y, spec.dome_origin.z}},
                       {"dome_radius", spec.dome_radius}});
    return map;
}

Grid<Vec3> sphere_normal_pass(const PerspectiveMap& projector, const Vec3& position, const Mat3& orientation) {
    Grid<Vec3> out(projector.width(), projector.height());
    for (int j = 0; j < projector.height(); ++j)
        for (int i = 0; i < projector.width(); ++i) {
            if (!projector.valid(i, j)) continue;
            const Vec3 d = normalize(orientation * projector.vector(i, j));
            // |p + t d|^2 = 1, nearest positive root.
            const double b = dot(position, d);
            const double c = dot(position, position) - 1.0;
            const double disc = b * b - c;
            if (disc < 0.0) continue;
            const double root = std::sqrt(disc);
            double t = -b - root;
            if (t <= 0.0) t = -b + root;
            if (t <= 0.0) continue;
            out(i, j) = normalize(position + t * d);
        }
    return out;
}

PerspectiveMap projection_mapping_map(const Grid<Vec3>& surface, const ProjectionMappingSpec& spec,
                                      const AovSpec& aov, double aspect) {
    PerspectiveMap map(surface.width(), surface.height(), aov, aspect);
    Grid<double> dist(surface.width(), surface.height(), 0.0);
    double longest = 0.0;
    for (int j = 0; j < surface.height(); ++j)
        for (int i = 0; i < surface.width(); ++i) {
            const Vec3& s = surface(i, j);
            const Vec3 view = s - spec.observer;
            if (!finite(s.x) || !finite(s.y) || !finite(s.z) || length(view) == 0.0) {
                map.set_masked(i, j);
                continue;
            }
            map.set(i, j, normalize(spec.rotation * normalize(view)));
            const double d = length(s - spec.projector);
            dist(i, j) = d;
            longest = std::max(longest, d);
        }
    std::vector<float> dim(map.pixel_count(), 0.0f);
    if (longest > 0.0)
        for (std::size_t k = 0; k < dim.size(); ++k) {
            const double q = dist.data()[k] / longest;
            dim[k] = static_cast<float>(q * q);
        }
    map.set_dimming(std::move(dim));
    map.set_generator({{"name", "projection_mapping"},
                       {"observer", {spec.observer.x, spec.observer.y, spec.observer.z}},
                       {"projector", {spec.projector.x, spec.projector.y, spec.projector.z}}});
    return map;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

nlohmann::json lens_json(const LensDistortionCoeffs& c) {
    return {{"radial", c.radial},
            {"thin_prism", {c.thin_prism.x, c.thin_prism.y}},
            {"decentering", {c.decentering.x, c.decentering.y}}};
}

}  // namespace

std::string projection_name(const ProjectionSpec& spec) {
    return std::visit(overloaded{
                          [](const UniversalProjection&) { return std::string("universal"); },
                          [](const RectilinearProjection&) { return std::string("rectilinear"); },
                          [](const PanoramaProjection&) { return std::string("panorama"); },
                          [](const DomeProjection&) { return std::string("dome"); },
                          [](const EquirectProjection&) { return std::string("equirect"); },
                          [](const CubemapProjection&) { return std::string("cubemap"); },
                          [](const ScreenArrayProjection&) { return std::string("screen_array"); },
                          [](const VrProjection&) { return std::string("vr"); },
                      },
                      spec);
}

nlohmann::json projection_to_json(const ProjectionSpec& spec) {
    nlohmann::json j = std::visit(
        overloaded{
            [](const UniversalProjection& u) {
                nlohmann::json o{{"omega", u.params.omega}, {"k", u.params.k}, {"l", u.params.l}, {"s", u.params.s}};
                if (!u.lens.is_identity()) o["lens"] = lens_json(u.lens);
                return o;
            },
            [](const RectilinearProjection& r) {
                nlohmann::json o = nlohmann::json::object();
                if (!r.lens.is_identity()) o["lens"] = lens_json(r.lens);
                return o;
            },
            [](const PanoramaProjection& p) { return nlohmann::json{{"omega_h", p.omega_h}, {"height", p.height}}; },
            [](const DomeProjection& d) {
                return nlohmann::json{
                    {"compression", d.spec.compression}, {"tilt", d.spec.tilt}, {"offset", d.spec.offset}};
            },
            [](const EquirectProjection&) { return nlohmann::json::object(); },
            [](const CubemapProjection&) { return nlohmann::json::object(); },
            [](const ScreenArrayProjection& s) {
                return nlohmann::json{
                    {"screens", s.spec.screens}, {"omega_h", s.spec.omega_h}, {"aspect", s.spec.aspect}};
            },
            [](const VrProjection& v) {
                return nlohmann::json{{"ipd", v.spec.ipd},
                                      {"omega_v", v.spec.omega_v},
                                      {"aspect", v.spec.aspect},
                                      {"radial", v.spec.radial}};
            },
        },
        spec);
    j["name"] = projection_name(spec);
    return j;
}

MapSample sample_projection(const ProjectionSpec& spec, TextureCoord f, const AovSpec& aov, double aspect,
                            PixelFootprint px) {
    auto from_unit = [](const std::optional<UnitVector3>& v) {
        return v ? MapSample{v->vec(), true, 1.0} : MapSample{{}, false, 0.0};
    };
    try {
        return std::visit(
            overloaded{
                [&](const UniversalProjection& u) {
                    ViewCoord v = texture_to_view(f, aspect, aov.mode());
                    if (!u.lens.is_identity()) v = brown_conrady(v, u.lens);
                    return from_unit(universal_2d_to_3d(v, u.params));
                },
                [&](const RectilinearProjection& r) {
                    if (r.lens.is_identity()) return from_unit(rectilinear_map(f, aov, aspect));
                    if (aov.angle() >= kPi) throw DomainError("rectilinear projection needs an angle of view below pi");
                    const ViewCoord v = brown_conrady(texture_to_view(f, aspect, aov), r.lens);
                    return from_unit(UnitVector3::normalized({v.x, v.y, 1.0 / std::tan(0.5 * aov.angle())}));
                },
                [&](const PanoramaProjection& p) {
                    return from_unit(panorama_map(f, p.omega_h, p.height).v);
                },
                [&](const DomeProjection& d) {
                    const MaskedVector m = dome_map(f, d.spec, px);
                    return m.mask > 0.0 ? MapSample{m.v, true, m.mask} : MapSample{{}, false, 0.0};
                },
                [&](const EquirectProjection&) { return from_unit(equirect_map(f)); },
                [&](const CubemapProjection&) { return from_unit(cubemap_map(f)); },
                [&](const ScreenArrayProjection& s) { return from_unit(screen_array_map(f, s.spec)); },
                [&](const VrProjection& v) { return from_unit(vr_map(f, v.spec)); },
            },
            spec);
    } catch (const DomainError&) {
        return MapSample{{}, false, 0.0};
    }
}

PerspectiveMap bake_map(const ProjectionSpec& spec, int width, int height, const AovSpec& aov, double aspect) {
    if (width < 2 || height < 2) throw DomainError("map must be at least 2x2");
    AovSpec map_aov = aov;
    double map_aspect = aspect;
    bool dims = false;
    if (const auto* u = std::get_if<UniversalProjection>(&spec)) {
        const PerspectiveParams& p = u->params;
        validate_params(p.omega, p.k, p.l, p.s);
        map_aov = AovSpec(p.omega, aov.mode());
    } else if (std::holds_alternative<RectilinearProjection>(spec)) {
        if (aov.angle() >= kPi) throw DomainError("rectilinear projection needs an angle of view below pi");
    } else if (const auto* p = std::get_if<PanoramaProjection>(&spec)) {
        map_aspect = panorama_map({0.5, 0.5}, p->omega_h, p->height).aspect;
    } else if (std::holds_alternative<CubemapProjection>(spec)) {
        map_aspect = 6.0;
    } else if (std::holds_alternative<EquirectProjection>(spec)) {
        map_aspect = 2.0;
    } else if (const auto* s = std::get_if<ScreenArrayProjection>(&spec)) {
        screen_array_map({0.5, 0.5}, s->spec);
    } else if (const auto* v = std::get_if<VrProjection>(&spec)) {
        vr_map({0.5, 0.5}, v->spec);
    } else if (std::holds_alternative<DomeProjection>(spec)) {
        dims = true;
    }

    PerspectiveMap map(width, height, map_aov, map_aspect);
    const PixelFootprint px{1.0 / width, 1.0 / height};
    std::vector<float> dim;
    if (dims) dim.assign(map.pixel_count(), 0.0f);
    for (int j = 0; j < height; ++j)
        for (int i = 0; i < width; ++i) {
            const TextureCoord f{(i + 0.5) / width, (j + 0.5) / height};
            const MapSample m = sample_projection(spec, f, map_aov, map_aspect, px);
            if (m.valid) map.set(i, j, m.v);
            else map.set_masked(i, j);
            if (dims) dim[map.index(i, j)] = static_cast<float>(m.dim);
        }
    if (dims) map.set_dimming(std::move(dim));
    map.set_generator(projection_to_json(spec));
    return map;
}

}  // namespace vsphere
