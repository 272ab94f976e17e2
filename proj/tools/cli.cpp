#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vsphere/error.hpp"
#include "vsphere/image_io.hpp"
#include "vsphere/map_io.hpp"
#include "vsphere/passes.hpp"
#include "vsphere/projections.hpp"
#include "vsphere/scene.hpp"

namespace vsphere::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

/// Projection flags shared by genmap and render. Each one maps to a key of
/// the scene projection block, so both paths go through the same validation.
struct ProjectionFlags {
    std::string type;
    std::optional<double> omega_deg, k, l, s;
    std::optional<double> aov_deg, omega_h_deg, omega_v_deg;
    std::optional<double> compression_deg, tilt_deg, offset;
    std::optional<double> pano_height, screens, screen_aspect, ipd;
    std::optional<double> aspect;
    std::string aov_mode;
    std::vector<double> radial, lens_radial, lens_prism, lens_decenter;

    void add_to(CLI::App* app) {
        app->add_option("--type", type,
                        "universal, rectilinear, panorama, dome, equirect, cubemap, screen_array or vr");
        app->add_option("--omega-deg", omega_deg, "universal angle of view");
        app->add_option("--k", k, "azimuthal type in [-1, 1]");
        app->add_option("--l", l, "cylindricity in [0, 1]");
        app->add_option("--s", s, "anamorphic correction in [0.8, 1]");
        app->add_option("--aov-deg", aov_deg, "rectilinear angle of view");
        app->add_option("--aov-mode", aov_mode, "horizontal, vertical, diagonal or horizontal4x3");
        app->add_option("--aspect", aspect, "picture aspect (defaults to width / height)");
        app->add_option("--omega-h-deg", omega_h_deg, "panorama or per-screen horizontal angle");
        app->add_option("--pano-height", pano_height, "panorama picture height");
        app->add_option("--compression-deg", compression_deg, "dome compression angle");
        app->add_option("--tilt-deg", tilt_deg, "dome tilt");
        app->add_option("--offset", offset, "dome lens offset");
        app->add_option("--screens", screens, "screen count");
        app->add_option("--screen-aspect", screen_aspect, "aspect of one screen");
        app->add_option("--ipd", ipd, "VR interpupillary distance in screen widths");
        app->add_option("--omega-v-deg", omega_v_deg, "VR vertical angle of view");
        app->add_option("--radial", radial, "VR radial distortion coefficients")->delimiter(',');
        app->add_option("--lens-radial", lens_radial, "Brown-Conrady radial coefficients")->delimiter(',');
        app->add_option("--lens-prism", lens_prism, "thin-prism coefficients p1,p2")->delimiter(',');
        app->add_option("--lens-decenter", lens_decenter, "decentering coefficients q1,q2")->delimiter(',');
    }

    bool given() const { return !type.empty(); }

    json to_json() const {
        json j{{"type", type}};
        const auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) j[key] = *v;
        };
        put("omega_deg", omega_deg);
        put("k", k);
        put("l", l);
        put("s", s);
        put("aov_deg", aov_deg);
        put("omega_h_deg", omega_h_deg);
        put("omega_v_deg", omega_v_deg);
        put("compression_deg", compression_deg);
        put("tilt_deg", tilt_deg);
        put("offset", offset);
        put("height", pano_height);
        put("screens", screens);
        put("screen_aspect", screen_aspect);
        put("ipd", ipd);
        put("aspect", aspect);
        if (!aov_mode.empty()) j["aov_mode"] = aov_mode;
        if (!radial.empty()) j["radial"] = radial;
        if (!lens_radial.empty() || !lens_prism.empty() || !lens_decenter.empty()) {
            json lens = json::object();
            if (!lens_radial.empty()) lens["radial"] = lens_radial;
            if (!lens_prism.empty()) lens["thin_prism"] = lens_prism;
            if (!lens_decenter.empty()) lens["decentering"] = lens_decenter;
            j["lens"] = lens;
        }
        return j;
    }
};

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "notice: " << w << '\n';
}

// ---------------------------------------------------------------------------
// genmap

struct GenmapArgs {
    ProjectionFlags proj;
    int width = 512, height = 512;
    std::string out, preview;
    bool strict = false;
};

int genmap(const GenmapArgs& a, std::ostream& out, std::ostream& err) {
    if (!a.proj.given()) throw ParseError("--type", "a projection type is required");
    std::vector<std::string> warnings;
    const ProjectionConfig cfg = parse_projection(a.proj.to_json(), a.strict ? Strictness::strict : Strictness::clamp,
                                                  &warnings, fs::current_path());
    print_warnings(warnings, err);
    const PerspectiveMap map = make_map(cfg, a.width, a.height);
    save_map(map, a.out);
    if (!a.preview.empty()) write_png(a.preview, map_preview(map), 8);
    out << "wrote " << a.out << " (" << map.width() << "x" << map.height() << ", "
        << map.masked_count() << " masked)\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// render

struct RenderArgs {
    ProjectionFlags proj;
    std::string scene, map, out_prefix = "render", format = "png";
    std::vector<std::string> passes{"mask", "depth", "uv", "normal"};
    int width = 512, height = 512, threads = 0;
    bool strict = false;
};

void add_wireframe_edges(SceneGeometry& g) {
    for (const Mesh& m : g.meshes) {
        std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
        for (const auto& t : m.triangles)
            for (int e = 0; e < 3; ++e) {
                std::uint32_t a = t[static_cast<std::size_t>(e)], b = t[static_cast<std::size_t>((e + 1) % 3)];
                if (a > b) std::swap(a, b);
                if (seen.insert({a, b}).second) g.lines.push_back({m.vertices[a].position, m.vertices[b].position});
            }
    }
}

int render(const RenderArgs& a, std::ostream& out, std::ostream& err) {
    const Strictness strictness = a.strict ? Strictness::strict : Strictness::clamp;
    std::vector<PassKind> passes;
    for (const auto& p : a.passes) {
        try {
            passes.push_back(parse_pass(p));
        } catch (const DomainError& e) {
            throw ParseError("--passes", e.what());
        }
    }
    if (a.format != "png" && a.format != "pfm") throw ParseError("--format", "expected png or pfm");

    Scene scene;
    if (!a.scene.empty()) scene = load_scene(a.scene, strictness);
    print_warnings(scene.warnings, err);

    std::optional<ProjectionConfig> cfg;
    if (!a.map.empty()) {
        cfg.emplace();
        cfg->map_path = a.map;
    } else if (a.proj.given()) {
        std::vector<std::string> warnings;
        cfg = parse_projection(a.proj.to_json(), strictness, &warnings, fs::current_path());
        print_warnings(warnings, err);
    } else {
        cfg = scene.projection;
    }
    if (!cfg) throw ParseError("projection", "give --map, --type or a projection block in the scene");
    const PerspectiveMap map = make_map(*cfg, a.width, a.height);

    SceneGeometry geometry = scene.geometry;
    for (PassKind p : passes)
        if (p == PassKind::wireframe) add_wireframe_edges(geometry);
    RenderOptions opts;
    opts.threads = a.threads;
    const RenderResult r = render_scene(geometry, map, opts);

    out << "triangles " << r.stats.triangles << ", back faces " << r.stats.back_faces << ", lines "
        << r.stats.lines << ", particles " << r.stats.particles << '\n';
    if (r.stats.skipped > 0) err << "skipped " << r.stats.skipped << " degenerate primitive(s)\n";
    if (r.stats.grazing_fragments > 0)
        err << "dropped " << r.stats.grazing_fragments << " fragment(s) at grazing incidence\n";

    for (PassKind p : passes) {
        const fs::path path = a.out_prefix + "." + std::string(to_string(p)) + "." + a.format;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        save_pass(r.buffers, p, path, &map);
        out << "wrote " << path.string() << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// remap

PerspectiveParams parse_param_set(const std::string& text, const std::string& flag, Strictness strictness,
                                  std::ostream& err) {
    std::optional<double> omega;
    double k = 0.0, l = 1.0, s = 1.0;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ParseError(flag, "expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw ParseError(flag, "invalid number '" + value + "'");
        }
        if (key == "omega") omega = v * kDeg;
        else if (key == "k") k = v;
        else if (key == "l") l = v;
        else if (key == "s") s = v;
        else throw ParseError(flag, "unknown parameter '" + key + "'");
    }
    if (!omega) throw ParseError(flag, "omega (degrees) is required");
    try {
        if (strictness == Strictness::strict) return validate_params(*omega, k, l, s);
        const ClampReport r = clamp_params_report(*omega, k, l, s);
        for (const auto& name : r.adjusted) err << "notice: " << flag << ": clamped " << name << '\n';
        return r.params;
    } catch (const DomainError& e) {
        throw ParseError(flag, e.what());
    }
}

float sample_nearest(const ImageBuffer& img, TextureCoord f, int c) {
    const int i = std::clamp(static_cast<int>(std::floor(f.s * img.width)), 0, img.width - 1);
    const int j = std::clamp(static_cast<int>(std::floor(f.t * img.height)), 0, img.height - 1);
    return img.at(i, j, c);
}

float sample_bilinear(const ImageBuffer& img, TextureCoord f, int c) {
    const double x = f.s * img.width - 0.5, y = f.t * img.height - 0.5;
    const double x0 = std::floor(x), y0 = std::floor(y);
    const double fx = x - x0, fy = y - y0;
    const auto at = [&](double xi, double yi) {
        const int i = std::clamp(static_cast<int>(xi), 0, img.width - 1);
        const int j = std::clamp(static_cast<int>(yi), 0, img.height - 1);
        return static_cast<double>(img.at(i, j, c));
    };
    const double top = at(x0, y0) * (1.0 - fx) + at(x0 + 1.0, y0) * fx;
    const double bottom = at(x0, y0 + 1.0) * (1.0 - fx) + at(x0 + 1.0, y0 + 1.0) * fx;
    return static_cast<float>(top * (1.0 - fy) + bottom * fy);
}

struct RemapArgs {
    std::string in_image, in_params, out_params, out_image, filter = "bilinear";
    int width = 0, height = 0;
    bool strict = false;
};

int remap(const RemapArgs& a, std::ostream& out, std::ostream& err) {
    const Strictness strictness = a.strict ? Strictness::strict : Strictness::clamp;
    const PerspectiveParams in_p = parse_param_set(a.in_params, "--in-params", strictness, err);
    const PerspectiveParams out_p = parse_param_set(a.out_params, "--out-params", strictness, err);
    if (a.filter != "nearest" && a.filter != "bilinear") throw ParseError("--filter", "expected nearest or bilinear");
    const ImageBuffer src = read_png(a.in_image);
    const int w = a.width > 0 ? a.width : src.width, h = a.height > 0 ? a.height : src.height;
    const double in_aspect = static_cast<double>(src.width) / src.height;
    const double out_aspect = static_cast<double>(w) / h;
    const bool has_alpha = src.channels == 2 || src.channels == 4;
    const int colour = has_alpha ? src.channels - 1 : src.channels;

    std::vector<std::optional<TextureCoord>> lookup(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    bool any_masked = false;
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            const TextureCoord f{(i + 0.5) / w, (j + 0.5) / h};
            const auto g = remap_2d_to_2d(texture_to_view(f, out_aspect, AovMode::horizontal), out_p, in_p);
            std::optional<TextureCoord> t;
            if (g) {
                const TextureCoord tc = view_to_texture(*g, in_aspect, AovMode::horizontal);
                if (tc.s >= 0.0 && tc.s <= 1.0 && tc.t >= 0.0 && tc.t <= 1.0) t = tc;
            }
            any_masked |= !t;
            lookup[static_cast<std::size_t>(j) * static_cast<std::size_t>(w) + static_cast<std::size_t>(i)] = t;
        }

    const bool alpha_out = has_alpha || any_masked;
    ImageBuffer dst(w, h, colour + (alpha_out ? 1 : 0));
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            const auto& t = lookup[static_cast<std::size_t>(j) * static_cast<std::size_t>(w) + static_cast<std::size_t>(i)];
            if (!t) continue;
            for (int c = 0; c < src.channels; ++c)
                dst.at(i, j, c) = a.filter == "nearest" ? sample_nearest(src, *t, c) : sample_bilinear(src, *t, c);
            if (alpha_out && !has_alpha) dst.at(i, j, colour) = 1.0f;
        }
    write_png(a.out_image, dst, 8);
    out << "wrote " << a.out_image << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// curves

struct CurvesArgs {
    double omega_deg = 170.0;
    std::vector<double> k_list{1.0, 0.5, 0.0, -0.5, -1.0};
    int samples = 64;
    std::string out_csv;
    bool strict = false;
};

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int curves(const CurvesArgs& a, std::ostream& out, std::ostream& err) {
    if (a.samples < 2) throw ParseError("--samples", "need at least 2 samples");
    if (a.k_list.empty()) throw ParseError("--k-list", "need at least one k");
    const double requested = a.omega_deg * kDeg;
    std::vector<double> omegas;
    for (double k : a.k_list) {
        try {
            if (a.strict) {
                omegas.push_back(validate_params(requested, k, 1.0, 1.0).omega);
            } else {
                const ClampReport r = clamp_params_report(requested, k, 1.0, 1.0);
                for (const auto& name : r.adjusted) err << "notice: k=" << format_double(k) << ": clamped " << name << '\n';
                omegas.push_back(r.params.omega);
            }
        } catch (const DomainError& e) {
            throw ParseError("--k-list", e.what());
        }
    }
    for (std::size_t c = 1; c < omegas.size(); ++c)
        if (omegas[c] != omegas[0]) err << "notice: curves use different angles of view after clamping\n";

    std::ofstream file;
    if (!a.out_csv.empty()) {
        file.open(a.out_csv);
        if (!file) throw IoError("cannot write '" + a.out_csv + "'");
    }
    std::ostream& csv = a.out_csv.empty() ? out : file;
    csv << "theta_rad";
    for (double k : a.k_list) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", k);
        csv << ",R_k" << buf;
    }
    csv << '\n';
    const double half = 0.5 * omegas[0];
    for (int n = 0; n < a.samples; ++n) {
        const double theta = half * n / (a.samples - 1);
        csv << format_double(theta);
        for (std::size_t c = 0; c < a.k_list.size(); ++c) {
            const auto r = radial_from_angle(std::min(theta, 0.5 * omegas[c]), a.k_list[c], omegas[c]);
            csv << ',' << (r ? format_double(*r) : std::string("nan"));
        }
        csv << '\n';
    }
    if (!a.out_csv.empty()) out << "wrote " << a.out_csv << '\n';
    return kExitOk;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kExitAssets;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kExitInvalid;
    return kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Visual-sphere perspective rendering"};
    app.require_subcommand(1);

    GenmapArgs gm;
    CLI::App* genmap_cmd = app.add_subcommand("genmap", "bake a perspective map");
    gm.proj.add_to(genmap_cmd);
    genmap_cmd->add_option("--width", gm.width)->check(CLI::Range(1, 16384));
    genmap_cmd->add_option("--height", gm.height)->check(CLI::Range(1, 16384));
    genmap_cmd->add_option("--out", gm.out, "map path (writes .pfm and .json)")->required();
    genmap_cmd->add_option("--preview", gm.preview, "optional 8-bit PNG preview");
    genmap_cmd->add_flag("--strict", gm.strict, "reject out-of-range parameters instead of clamping");

    RenderArgs ra;
    CLI::App* render_cmd = app.add_subcommand("render", "render a scene through a perspective map");
    ra.proj.add_to(render_cmd);
    render_cmd->add_option("--scene", ra.scene, "scene JSON");
    render_cmd->add_option("--map", ra.map, "baked map (.pfm with .json sidecar)");
    render_cmd->add_option("--out-prefix", ra.out_prefix);
    render_cmd->add_option("--passes", ra.passes, "mask, depth, uv, normal, shaded, wireframe")->delimiter(',');
    render_cmd->add_option("--format", ra.format, "png or pfm");
    render_cmd->add_option("--width", ra.width)->check(CLI::Range(1, 16384));
    render_cmd->add_option("--height", ra.height)->check(CLI::Range(1, 16384));
    render_cmd->add_option("--threads", ra.threads)->check(CLI::Range(0, 256));
    render_cmd->add_flag("--strict", ra.strict);

    RemapArgs rm;
    CLI::App* remap_cmd = app.add_subcommand("remap", "resample a picture between two universal projections");
    remap_cmd->add_option("--in-image", rm.in_image)->required();
    remap_cmd->add_option("--in-params", rm.in_params, "omega=<deg>,k=..,l=..,s=..")->required();
    remap_cmd->add_option("--out-params", rm.out_params, "omega=<deg>,k=..,l=..,s=..")->required();
    remap_cmd->add_option("--out-image", rm.out_image)->required();
    remap_cmd->add_option("--filter", rm.filter, "nearest or bilinear");
    remap_cmd->add_option("--width", rm.width)->check(CLI::Range(1, 16384));
    remap_cmd->add_option("--height", rm.height)->check(CLI::Range(1, 16384));
    remap_cmd->add_flag("--strict", rm.strict);

    CurvesArgs cv;
    CLI::App* curves_cmd = app.add_subcommand("curves", "tabulate normalized radial compression R(theta)");
    curves_cmd->add_option("--omega-deg", cv.omega_deg);
    curves_cmd->add_option("--k-list", cv.k_list)->delimiter(',');
    curves_cmd->add_option("--samples", cv.samples);
    curves_cmd->add_option("--out-csv", cv.out_csv, "defaults to standard output");
    curves_cmd->add_flag("--strict", cv.strict);

    std::string scene_dir, host = "127.0.0.1";
    int port = 8080;
    CLI::App* serve_cmd = app.add_subcommand("serve", "HTTP preview service");
    serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--scene-dir", scene_dir);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*genmap_cmd) return genmap(gm, out, err);
        if (*render_cmd) return render(ra, out, err);
        if (*remap_cmd) return remap(rm, out, err);
        if (*curves_cmd) return curves(cv, out, err);
        if (*serve_cmd) {
            if (!scene_dir.empty() && !fs::is_directory(scene_dir))
                throw IoError("scene directory '" + scene_dir + "' not found");
            return serve(PreviewService(scene_dir), host, port, err);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitFailure;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace vsphere::cli
