#include "vsphere/scene.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "vsphere/error.hpp"
#include "vsphere/map_io.hpp"

namespace vsphere {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// ---------------------------------------------------------------------------
// OBJ

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

double parse_double(std::string_view tok, const std::string& where) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw ParseError(where, "invalid number '" + std::string(tok) + "'");
    return v;
}

long parse_index(std::string_view tok, std::size_t count, const std::string& where) {
    long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v == 0)
        throw ParseError(where, "invalid index '" + std::string(tok) + "'");
    const long resolved = v > 0 ? v - 1 : static_cast<long>(count) + v;
    if (resolved < 0 || resolved >= static_cast<long>(count))
        throw ParseError(where, "index " + std::string(tok) + " out of range");
    return resolved;
}

}  // namespace

ObjResult parse_obj(std::string_view text) {
    std::vector<Vec3> positions, normals;
    std::vector<Vec2> uvs;
    ObjResult result;
    std::map<std::tuple<long, long, long>, std::uint32_t> dedup;
    bool warned_uv = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        if (tok[0] == "v") {
            if (tok.size() < 4) throw ParseError(where, "vertex needs 3 coordinates");
            positions.push_back({parse_double(tok[1], where), parse_double(tok[2], where), -parse_double(tok[3], where)});
        } else if (tok[0] == "vt") {
            if (tok.size() < 3) throw ParseError(where, "texture coordinate needs 2 values");
            uvs.push_back({parse_double(tok[1], where), parse_double(tok[2], where)});
        } else if (tok[0] == "vn") {
            if (tok.size() < 4) throw ParseError(where, "normal needs 3 components");
            normals.push_back({parse_double(tok[1], where), parse_double(tok[2], where), -parse_double(tok[3], where)});
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw ParseError(where, "face needs at least 3 vertices");
            std::vector<std::uint32_t> face;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::string_view ref = tok[k];
                const auto s1 = ref.find('/');
                const std::string_view vs = ref.substr(0, s1);
                std::string_view ts, ns;
                if (s1 != std::string_view::npos) {
                    const auto s2 = ref.find('/', s1 + 1);
                    ts = ref.substr(s1 + 1, s2 == std::string_view::npos ? std::string_view::npos : s2 - s1 - 1);
                    if (s2 != std::string_view::npos) ns = ref.substr(s2 + 1);
                }
                const long vi = parse_index(vs, positions.size(), where);
                const long ti = ts.empty() ? -1 : parse_index(ts, uvs.size(), where);
                const long ni = ns.empty() ? -1 : parse_index(ns, normals.size(), where);
                if (ti < 0 && !warned_uv) {
                    result.warnings.push_back(where + ": face without texture coordinates, using (0, 0)");
                    warned_uv = true;
                }
                const auto [it, inserted] =
                    dedup.try_emplace({vi, ti, ni}, static_cast<std::uint32_t>(result.mesh.vertices.size()));
                if (inserted)
                    result.mesh.vertices.push_back({positions[static_cast<std::size_t>(vi)],
                                                    ti < 0 ? Vec2{} : uvs[static_cast<std::size_t>(ti)],
                                                    ni < 0 ? Vec3{} : normals[static_cast<std::size_t>(ni)]});
                face.push_back(it->second);
            }
            for (std::size_t k = 1; k + 1 < face.size(); ++k)
                result.mesh.triangles.push_back({face[0], face[k], face[k + 1]});
        }
        if (end == text.size()) break;
    }
    if (result.mesh.triangles.empty()) result.warnings.push_back("mesh has no faces");
    return result;
}

ObjResult load_obj_subset(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mesh '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_obj(ss.str());
}

// ---------------------------------------------------------------------------
// Built-in meshes

namespace {

// Orders each triangle so that its front face points along `outward`.
void add_triangle(Mesh& m, std::uint32_t a, std::uint32_t b, std::uint32_t c, const Vec3& outward) {
    const Vec3 &pa = m.vertices[a].position, &pb = m.vertices[b].position, &pc = m.vertices[c].position;
    // Front faces have (A - B) x (C - B) pointing at the viewer.
    if (dot(cross(pa - pb, pc - pb), outward) < 0.0) std::swap(b, c);
    m.triangles.push_back({a, b, c});
}

}  // namespace

Mesh builtin_quad() {
    Mesh m;
    m.vertices = {{{-1, -1, 0}, {0, 0}, {0, 0, -1}},
                  {{1, -1, 0}, {1, 0}, {0, 0, -1}},
                  {{1, 1, 0}, {1, 1}, {0, 0, -1}},
                  {{-1, 1, 0}, {0, 1}, {0, 0, -1}}};
    add_triangle(m, 0, 1, 2, {0, 0, -1});
    add_triangle(m, 0, 2, 3, {0, 0, -1});
    return m;
}

Mesh builtin_cube() {
    Mesh m;
    const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int a = 0; a < 3; ++a)
        for (double sign : {-1.0, 1.0}) {
            const Vec3 n = sign * axes[a];
            const Vec3 u = axes[(a + 1) % 3], v = axes[(a + 2) % 3];
            const auto base = static_cast<std::uint32_t>(m.vertices.size());
            const double corners[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
            for (const auto& c : corners)
                m.vertices.push_back({n + c[0] * u + c[1] * v, {0.5 * (c[0] + 1), 0.5 * (c[1] + 1)}, n});
            add_triangle(m, base, base + 1, base + 2, n);
            add_triangle(m, base, base + 2, base + 3, n);
        }
    return m;
}

Mesh builtin_sphere(int segments, int rings) {
    if (segments < 3 || rings < 2) throw DomainError("sphere needs at least 3 segments and 2 rings");
    Mesh m;
    const double pi = std::numbers::pi;
    for (int r = 0; r <= rings; ++r) {
        const double phi = pi * r / rings;
        for (int s = 0; s <= segments; ++s) {
            const double theta = 2.0 * pi * s / segments;
            const Vec3 p{std::sin(phi) * std::sin(theta), -std::cos(phi), std::sin(phi) * std::cos(theta)};
            m.vertices.push_back({p, {static_cast<double>(s) / segments, static_cast<double>(r) / rings}, p});
        }
    }
    const auto idx = [&](int r, int s) { return static_cast<std::uint32_t>(r * (segments + 1) + s); };
    for (int r = 0; r < rings; ++r)
        for (int s = 0; s < segments; ++s) {
            const std::uint32_t a = idx(r, s), b = idx(r, s + 1), c = idx(r + 1, s + 1), d = idx(r + 1, s);
            const Vec3 out = normalize(m.vertices[a].position + m.vertices[b].position + m.vertices[c].position +
                                       m.vertices[d].position);
            if (r > 0) add_triangle(m, a, b, c, out);
            if (r + 1 < rings) add_triangle(m, a, c, d, out);
        }
    return m;
}

// ---------------------------------------------------------------------------
// Scene JSON

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(where, "expected a finite number");
    return v;
}

double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
    return obj.contains(key) ? number(obj.at(key), join(path, key)) : fallback;
}

// Reads `<key>_deg` (degrees) or `<key>` (radians).
std::optional<double> angle_field(const json& obj, const std::string& key, const std::string& path) {
    if (obj.contains(key + "_deg")) return number(obj.at(key + "_deg"), join(path, key + "_deg")) * kDeg;
    if (obj.contains(key)) return number(obj.at(key), join(path, key));
    return std::nullopt;
}

double required_angle(const json& obj, const std::string& key, const std::string& path) {
    const auto v = angle_field(obj, key, path);
    if (!v) throw ParseError(join(path, key), "missing (give '" + key + "' in radians or '" + key + "_deg')");
    return *v;
}

Vec3 vec3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw ParseError(where, "expected an array of 3 numbers");
    return {number(j[0], where + "[0]"), number(j[1], where + "[1]"), number(j[2], where + "[2]")};
}

Vec2 vec2(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw ParseError(where, "expected an array of 2 numbers");
    return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

std::vector<double> number_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

const json& object_at(const json& parent, const std::string& key, const std::string& where) {
    const json& j = parent.at(key);
    if (!j.is_object()) throw ParseError(where, "expected an object");
    return j;
}

LensDistortionCoeffs parse_lens(const json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path, "expected an object");
    LensDistortionCoeffs c;
    if (j.contains("radial")) c.radial = number_list(j["radial"], join(path, "radial"));
    if (j.contains("thin_prism")) c.thin_prism = vec2(j["thin_prism"], join(path, "thin_prism"));
    if (j.contains("decentering")) c.decentering = vec2(j["decentering"], join(path, "decentering"));
    return c;
}

std::string string_at(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) throw ParseError(join(path, key), "missing");
    if (!obj.at(key).is_string()) throw ParseError(join(path, key), "expected a string");
    return obj.at(key).get<std::string>();
}

std::string clamp_suggestion(const PerspectiveParams& p) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "omega_deg=%.10g k=%.10g l=%.10g s=%.10g", p.omega / kDeg, p.k, p.l, p.s);
    return buf;
}

}  // namespace

AovSpec ProjectionConfig::aov_spec() const {
    if (const auto* u = std::get_if<UniversalProjection>(&spec)) return AovSpec(u->params.omega, mode);
    return AovSpec(aov, mode);
}

ProjectionConfig parse_projection(const json& j, Strictness strictness, std::vector<std::string>* warnings,
                                  const fs::path& base_dir) {
    const std::string path = "projection";
    if (!j.is_object()) throw ParseError(path, "expected an object");
    ProjectionConfig cfg;
    const std::string type = string_at(j, "type", path);
    if (j.contains("aov_mode")) {
        if (!j["aov_mode"].is_string()) throw ParseError(join(path, "aov_mode"), "expected a string");
        try {
            cfg.mode = parse_aov_mode(j["aov_mode"].get<std::string>());
        } catch (const DomainError& e) {
            throw ParseError(join(path, "aov_mode"), e.what());
        }
    }
    cfg.aspect = number_or(j, "aspect", path, 0.0);
    if (j.contains("aspect") && !(cfg.aspect > 0.0)) throw ParseError(join(path, "aspect"), "must be positive");

    if (type == "universal") {
        const double omega = required_angle(j, "omega", path);
        const double k = number_or(j, "k", path, 0.0);
        const double l = number_or(j, "l", path, 1.0);
        const double s = number_or(j, "s", path, 1.0);
        const ClampReport r = clamp_params_report(omega, k, l, s);
        if (r.changed()) {
            std::string names;
            for (const auto& n : r.adjusted) names += (names.empty() ? "" : ", ") + n;
            if (strictness == Strictness::strict)
                throw ParseError(path, "parameter out of range: " + names + " (clamped values would be " +
                                           clamp_suggestion(r.params) + ")");
            if (warnings) warnings->push_back("projection: clamped " + names);
        }
        UniversalProjection u{r.params, {}};
        if (j.contains("lens")) u.lens = parse_lens(j["lens"], join(path, "lens"));
        cfg.spec = u;
    } else if (type == "rectilinear") {
        cfg.aov = required_angle(j, "aov", path);
        if (!(cfg.aov > 0.0) || cfg.aov >= std::numbers::pi)
            throw ParseError(join(path, "aov"), "rectilinear angle of view must be in (0, 180) degrees");
        RectilinearProjection rp;
        if (j.contains("lens")) rp.lens = parse_lens(j["lens"], join(path, "lens"));
        cfg.spec = rp;
    } else if (type == "panorama") {
        PanoramaProjection p{required_angle(j, "omega_h", path), number_or(j, "height", path, 1.0)};
        if (!(p.omega_h > 0.0) || !(p.height > 0.0))
            throw ParseError(path, "panorama needs a positive angle and height");
        cfg.aov = std::min(p.omega_h, 2.0 * std::numbers::pi);
        cfg.spec = p;
    } else if (type == "dome") {
        DomeProjection d;
        d.spec.compression = angle_field(j, "compression", path).value_or(0.0);
        d.spec.tilt = angle_field(j, "tilt", path).value_or(0.0);
        d.spec.offset = number_or(j, "offset", path, 0.0);
        cfg.aov = std::min(std::numbers::pi + 2.0 * d.spec.compression, 2.0 * std::numbers::pi);
        if (!(cfg.aov > 0.0)) throw ParseError(join(path, "compression"), "dome coverage must be positive");
        cfg.spec = d;
    } else if (type == "equirect") {
        cfg.aov = 2.0 * std::numbers::pi;
        cfg.spec = EquirectProjection{};
    } else if (type == "cubemap") {
        cfg.aov = 2.0 * std::numbers::pi;
        cfg.spec = CubemapProjection{};
    } else if (type == "screen_array") {
        ScreenArrayProjection sa;
        const double n = number_or(j, "screens", path, 1.0);
        if (n < 1.0 || n != std::floor(n)) throw ParseError(join(path, "screens"), "must be a positive integer");
        sa.spec.screens = static_cast<int>(n);
        sa.spec.omega_h = required_angle(j, "omega_h", path);
        sa.spec.aspect = number_or(j, "screen_aspect", path, 1.0);
        if (!(sa.spec.omega_h > 0.0) || sa.spec.omega_h >= std::numbers::pi)
            throw ParseError(join(path, "omega_h"), "screen angle of view must be in (0, 180) degrees");
        cfg.aov = std::min(sa.spec.screens * sa.spec.omega_h, 2.0 * std::numbers::pi);
        cfg.spec = sa;
    } else if (type == "vr") {
        VrProjection v;
        v.spec.ipd = number_or(j, "ipd", path, 0.5);
        v.spec.omega_v = required_angle(j, "omega_v", path);
        v.spec.aspect = cfg.aspect;
        if (j.contains("radial")) v.spec.radial = number_list(j["radial"], join(path, "radial"));
        if (v.spec.ipd < 0.0 || v.spec.ipd > 0.5) throw ParseError(join(path, "ipd"), "must be in [0, 0.5]");
        if (!(v.spec.omega_v > 0.0) || v.spec.omega_v >= std::numbers::pi)
            throw ParseError(join(path, "omega_v"), "vertical angle of view must be in (0, 180) degrees");
        double sum = 1.0;
        for (double k : v.spec.radial) sum += k;
        if (sum == 0.0) throw ParseError(join(path, "radial"), "coefficients must not sum to -1");
        cfg.mode = AovMode::vertical;
        cfg.aov = v.spec.omega_v;
        cfg.spec = v;
    } else if (type == "map") {
        const fs::path p = string_at(j, "path", path);
        cfg.map_path = p.is_absolute() ? p : base_dir / p;
    } else {
        throw ParseError(join(path, "type"), "unknown projection type '" + type + "'");
    }
    return cfg;
}

namespace {

Mesh object_mesh(const json& o, const std::string& path, const fs::path& base_dir, std::vector<std::string>& warn) {
    if (o.contains("mesh")) {
        const fs::path p = string_at(o, "mesh", path);
        const fs::path full = p.is_absolute() ? p : base_dir / p;
        ObjResult r;
        try {
            r = load_obj_subset(full);
        } catch (const ParseError& e) {
            throw ParseError(join(path, "mesh"), full.string() + ": " + e.what());
        }
        for (auto& w : r.warnings) warn.push_back(full.string() + ": " + w);
        return std::move(r.mesh);
    }
    if (o.contains("builtin")) {
        const std::string b = string_at(o, "builtin", path);
        if (b == "quad") return builtin_quad();
        if (b == "cube") return builtin_cube();
        if (b == "sphere") {
            const double seg = number_or(o, "segments", path, 32.0), rings = number_or(o, "rings", path, 16.0);
            if (seg < 3 || rings < 2 || seg > 4096 || rings > 4096)
                throw ParseError(path, "sphere needs 3..4096 segments and 2..4096 rings");
            return builtin_sphere(static_cast<int>(seg), static_cast<int>(rings));
        }
        throw ParseError(join(path, "builtin"), "unknown builtin mesh '" + b + "'");
    }
    if (o.contains("vertices")) {
        const json& vs = o["vertices"];
        if (!vs.is_array()) throw ParseError(join(path, "vertices"), "expected an array");
        Mesh m;
        for (std::size_t i = 0; i < vs.size(); ++i)
            m.vertices.push_back({vec3(vs[i], join(path, "vertices") + "[" + std::to_string(i) + "]"), {}, {}});
        if (o.contains("uvs")) {
            const json& uv = o["uvs"];
            if (!uv.is_array() || uv.size() != vs.size())
                throw ParseError(join(path, "uvs"), "expected one uv per vertex");
            for (std::size_t i = 0; i < uv.size(); ++i)
                m.vertices[i].uv = vec2(uv[i], join(path, "uvs") + "[" + std::to_string(i) + "]");
        }
        if (o.contains("normals")) {
            const json& ns = o["normals"];
            if (!ns.is_array() || ns.size() != vs.size())
                throw ParseError(join(path, "normals"), "expected one normal per vertex");
            for (std::size_t i = 0; i < ns.size(); ++i)
                m.vertices[i].normal = vec3(ns[i], join(path, "normals") + "[" + std::to_string(i) + "]");
        }
        if (!o.contains("triangles") || !o["triangles"].is_array())
            throw ParseError(join(path, "triangles"), "expected an array of index triples");
        const json& ts = o["triangles"];
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const std::string w = join(path, "triangles") + "[" + std::to_string(i) + "]";
            if (!ts[i].is_array() || ts[i].size() != 3) throw ParseError(w, "expected 3 indices");
            std::array<std::uint32_t, 3> t{};
            for (int k = 0; k < 3; ++k) {
                if (!ts[i][k].is_number_integer()) throw ParseError(w, "indices must be integers");
                const auto v = ts[i][k].get<long long>();
                if (v < 0 || static_cast<std::size_t>(v) >= vs.size()) throw ParseError(w, "index out of range");
                t[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(v);
            }
            m.triangles.push_back(t);
        }
        return m;
    }
    throw ParseError(path, "object needs 'mesh', 'builtin' or 'vertices'");
}

void transform_mesh(Mesh& m, const json& o, const std::string& path) {
    Vec3 scale{1, 1, 1};
    if (o.contains("scale")) {
        if (o["scale"].is_number()) {
            const double s = number(o["scale"], join(path, "scale"));
            scale = {s, s, s};
        } else {
            scale = vec3(o["scale"], join(path, "scale"));
        }
        if (scale.x == 0.0 || scale.y == 0.0 || scale.z == 0.0) throw ParseError(join(path, "scale"), "must be nonzero");
    }
    Vec3 rot;
    if (o.contains("rotate_deg")) rot = vec3(o["rotate_deg"], join(path, "rotate_deg")) * kDeg;
    else if (o.contains("rotate")) rot = vec3(o["rotate"], join(path, "rotate"));
    const Vec3 translate = o.contains("translate") ? vec3(o["translate"], join(path, "translate")) : Vec3{};
    const Mat3 r = orientation(rot.x, rot.y, rot.z);
    for (MeshVertex& v : m.vertices) {
        v.position = translate + r * Vec3{v.position.x * scale.x, v.position.y * scale.y, v.position.z * scale.z};
        v.normal = normalize(r * Vec3{v.normal.x / scale.x, v.normal.y / scale.y, v.normal.z / scale.z});
    }
    if (scale.x * scale.y * scale.z < 0.0)
        for (auto& t : m.triangles) std::swap(t[1], t[2]);
}

}  // namespace

Scene parse_scene(std::string_view text, const SceneOptions& opts) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("", "scene must be a JSON object");
    Scene scene;
    SceneGeometry& g = scene.geometry;
    try {
        for (const auto& [key, value] : doc.items()) {
            static const char* known[] = {"projection", "camera", "objects", "lines", "particles", "parallax", "flags"};
            if (std::find(std::begin(known), std::end(known), key) == std::end(known))
                scene.warnings.push_back("ignored unknown key '" + key + "'");
        }
        if (doc.contains("projection"))
            scene.projection = parse_projection(doc["projection"], opts.strictness, &scene.warnings, opts.base_dir);

        if (doc.contains("camera")) {
            const json& c = object_at(doc, "camera", "camera");
            g.camera.yaw = angle_field(c, "yaw", "camera").value_or(0.0);
            g.camera.pitch = angle_field(c, "pitch", "camera").value_or(0.0);
            g.camera.roll = angle_field(c, "roll", "camera").value_or(0.0);
            if (c.contains("position")) g.camera.position = vec3(c["position"], "camera.position");
        }

        if (doc.contains("objects")) {
            const json& objs = doc["objects"];
            if (!objs.is_array()) throw ParseError("objects", "expected an array");
            for (std::size_t i = 0; i < objs.size(); ++i) {
                const std::string path = "objects[" + std::to_string(i) + "]";
                if (!objs[i].is_object()) throw ParseError(path, "expected an object");
                Mesh m = object_mesh(objs[i], path, opts.base_dir, scene.warnings);
                transform_mesh(m, objs[i], path);
                g.meshes.push_back(std::move(m));
            }
        }

        if (doc.contains("lines")) {
            const json& ls = doc["lines"];
            if (!ls.is_array()) throw ParseError("lines", "expected an array");
            for (std::size_t i = 0; i < ls.size(); ++i) {
                const std::string path = "lines[" + std::to_string(i) + "]";
                if (ls[i].is_object()) {
                    if (!ls[i].contains("a") || !ls[i].contains("b")) throw ParseError(path, "needs 'a' and 'b'");
                    g.lines.push_back({vec3(ls[i]["a"], path + ".a"), vec3(ls[i]["b"], path + ".b")});
                } else if (ls[i].is_array() && ls[i].size() == 2) {
                    g.lines.push_back({vec3(ls[i][0], path + "[0]"), vec3(ls[i][1], path + "[1]")});
                } else {
                    throw ParseError(path, "expected {\"a\":[..],\"b\":[..]} or a pair of points");
                }
            }
        }

        if (doc.contains("particles")) {
            const json& ps = doc["particles"];
            if (!ps.is_array()) throw ParseError("particles", "expected an array");
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const std::string path = "particles[" + std::to_string(i) + "]";
                if (!ps[i].is_object() || !ps[i].contains("position") || !ps[i].contains("radius"))
                    throw ParseError(path, "needs 'position' and 'radius'");
                const double r = number(ps[i]["radius"], path + ".radius");
                if (!(r > 0.0)) throw ParseError(path + ".radius", "must be positive");
                g.particles.push_back({vec3(ps[i]["position"], path + ".position"), r});
            }
        }

        if (doc.contains("parallax")) {
            const json& px = doc["parallax"];
            if (!px.is_array()) throw ParseError("parallax", "expected an array");
            for (std::size_t i = 0; i < px.size(); ++i) {
                const std::string path = "parallax[" + std::to_string(i) + "]";
                if (px[i].is_array()) {
                    const Vec2 s = vec2(px[i], path);
                    g.parallax.samples.emplace_back(s.x, s.y);
                } else if (px[i].is_object()) {
                    g.parallax.samples.emplace_back(required_angle(px[i], "theta", path),
                                                    number(px[i].value("offset", json()), path + ".offset"));
                } else {
                    throw ParseError(path, "expected [theta, offset] or {\"theta\":..,\"offset\":..}");
                }
            }
            try {
                g.parallax.validate();
            } catch (const DomainError& e) {
                throw ParseError("parallax", e.what());
            }
        }

        if (doc.contains("flags")) {
            const json& f = object_at(doc, "flags", "flags");
            if (f.contains("intersecting")) {
                if (!f["intersecting"].is_boolean()) throw ParseError("flags.intersecting", "expected a boolean");
                g.intersecting = f["intersecting"].get<bool>();
            }
        }
    } catch (const json::exception& e) {
        throw ParseError("", std::string("malformed scene: ") + e.what());
    } catch (const DomainError& e) {
        throw ParseError("", e.what());
    }
    return scene;
}

Scene load_scene(const fs::path& path, Strictness strictness) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scene '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str(), {strictness, path.parent_path()});
}

PerspectiveMap make_map(const ProjectionConfig& cfg, int width, int height) {
    if (cfg.from_file()) {
        if (!fs::exists(cfg.map_path)) throw IoError("map file '" + cfg.map_path.string() + "' not found");
        return load_map(cfg.map_path);
    }
    if (width <= 0 || height <= 0) throw DomainError("map size must be positive");
    const double aspect = cfg.aspect > 0.0 ? cfg.aspect : static_cast<double>(width) / height;
    ProjectionSpec spec = cfg.spec;
    if (auto* vr = std::get_if<VrProjection>(&spec); vr && !(vr->spec.aspect > 0.0)) vr->spec.aspect = aspect;
    PerspectiveMap map = bake_map(spec, width, height, cfg.aov_spec(), aspect);
    map.finalize();
    return map;
}

}  // namespace vsphere
