#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cli.hpp"
#include "vsphere/error.hpp"
#include "vsphere/image_io.hpp"
#include "vsphere/passes.hpp"
#include "vsphere/projections.hpp"
#include "vsphere/scene.hpp"

namespace vsphere::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kMinPreviewSize = 16;
constexpr int kDefaultPreviewSize = 256;

struct NamedProjection {
    const char* name;
    const char* label;
    double k;
};

constexpr NamedProjection kPresets[] = {
    {"gnomonic", "Gnomonic (rectilinear)", 1.0},
    {"stereographic", "Stereographic", 0.5},
    {"equidistant", "Equidistant", 0.0},
    {"equisolid", "Equisolid", -0.5},
    {"orthographic", "Orthographic", -1.0},
};

HttpReply error_reply(int status, const std::string& message) {
    return {status, "application/json", json{{"error", message}}.dump(), {}};
}

/// Shortest text that parses back to the same double.
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Strict decimal parse; nullopt when absent.
std::optional<double> query_number(const Query& q, const std::string& key) {
    const auto it = q.find(key);
    if (it == q.end()) return std::nullopt;
    const std::string& text = it->second;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (text.empty() || used != text.size() || !std::isfinite(v))
        throw ParseError(key, "invalid number '" + text + "'");
    return v;
}

ImageBuffer preview_image(const FragmentBuffers& buf, const PerspectiveMap& map) {
    const ImageBuffer shaded = pass_image(buf, PassKind::shaded, &map);
    ImageBuffer img(buf.width(), buf.height(), 3);
    constexpr float surface[3] = {0.85f, 0.9f, 1.0f};
    constexpr float ink[3] = {1.0f, 0.6f, 0.2f};
    for (int j = 0; j < img.height; ++j)
        for (int i = 0; i < img.width; ++i) {
            const float m = static_cast<float>(buf.mask(i, j));
            const float lit = m * 0.2f * map.dimming_at(i, j) + 0.8f * shaded.at(i, j, 0);
            const float w = static_cast<float>(std::min(1.0, buf.wire(i, j)));
            for (int c = 0; c < 3; ++c) img.at(i, j, c) = lit * surface[c] * (1.0f - w) + w * ink[c];
        }
    return img;
}

}  // namespace

std::string default_scene_json() {
    json objects = json::array();
    for (int n = 0; n < 8; ++n) {
        const double a = n * std::numbers::pi / 4.0;
        objects.push_back({{"builtin", "cube"},
                           {"translate", {5.0 * std::sin(a), 0.0, 5.0 * std::cos(a)}},
                           {"rotate_deg", {n * 45.0 + 20.0, 0.0, 0.0}},
                           {"scale", 0.8}});
    }
    objects.push_back({{"builtin", "sphere"}, {"segments", 24}, {"rings", 12}, {"translate", {0.0, 2.5, 4.0}}});
    json lines = json::array();
    for (int n = -6; n <= 6; ++n) {
        lines.push_back({{"a", {-6.0, -1.5, 1.0 * n}}, {"b", {6.0, -1.5, 1.0 * n}}});
        lines.push_back({{"a", {1.0 * n, -1.5, -6.0}}, {"b", {1.0 * n, -1.5, 6.0}}});
    }
    return json{{"objects", objects}, {"lines", lines}}.dump(2);
}

PreviewService::PreviewService(fs::path scene_dir) : scene_dir_(std::move(scene_dir)) {}

HttpReply PreviewService::limits() const {
    json max_at = json::object();
    for (const auto& p : kPresets) max_at[p.name] = omega_max(p.k) / kDeg;
    const json body{
        {"omega_deg",
         {{"min", 0.0},
          {"min_exclusive", true},
          {"max_rule", "180 / max(0.5, |k|), open bound when k > 0"},
          {"open_bound_margin_deg", kOpenBoundMargin / kDeg},
          {"max_at", max_at}}},
        {"k", {{"min", -1.0}, {"max", 1.0}}},
        {"l", {{"min", 0.0}, {"max", 1.0}}},
        {"s", {{"min", 0.8}, {"max", 1.0}}},
        {"size", {{"min", kMinPreviewSize}, {"max", kMaxPreviewSize}, {"default", kDefaultPreviewSize}}},
    };
    return {200, "application/json", body.dump(2), {}};
}

HttpReply PreviewService::presets() const {
    json list = json::array();
    for (const auto& p : kPresets) list.push_back({{"name", p.name}, {"label", p.label}, {"k", p.k}});
    return {200, "application/json", json{{"presets", list}}.dump(2), {}};
}

HttpReply PreviewService::render(const Query& query) const {
    static const char* known[] = {"omega", "k", "l", "s", "yaw", "pitch", "roll", "scene", "size"};
    for (const auto& [key, value] : query)
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            return error_reply(400, "unknown query parameter '" + key + "'");

    HttpReply reply{200, "image/png", {}, {}};
    PerspectiveParams params;
    double yaw = 0.0, pitch = 0.0, roll = 0.0;
    int size = kDefaultPreviewSize;
    try {
        const ClampReport r = clamp_params_report(query_number(query, "omega").value_or(180.0) * kDeg,
                                                  query_number(query, "k").value_or(0.0),
                                                  query_number(query, "l").value_or(1.0),
                                                  query_number(query, "s").value_or(1.0));
        params = r.params;
        reply.headers = {{"X-Clamped-Omega", format_double(params.omega / kDeg)},
                         {"X-Clamped-K", format_double(params.k)},
                         {"X-Clamped-L", format_double(params.l)},
                         {"X-Clamped-S", format_double(params.s)}};
        std::string adjusted;
        for (const auto& n : r.adjusted) adjusted += (adjusted.empty() ? "" : ",") + n;
        if (!adjusted.empty()) reply.headers.emplace_back("X-Clamped-Params", adjusted);

        yaw = query_number(query, "yaw").value_or(0.0) * kDeg;
        pitch = query_number(query, "pitch").value_or(0.0) * kDeg;
        roll = query_number(query, "roll").value_or(0.0) * kDeg;
        if (const auto s = query_number(query, "size")) {
            if (*s != std::floor(*s)) throw ParseError("size", "must be an integer");
            const double capped = std::clamp(*s, static_cast<double>(kMinPreviewSize),
                                             static_cast<double>(kMaxPreviewSize));
            size = static_cast<int>(capped);
            if (capped != *s) reply.headers.emplace_back("X-Clamped-Size", std::to_string(size));
        }
    } catch (const ParseError& e) {
        return error_reply(400, e.what());
    } catch (const DomainError& e) {
        return error_reply(400, e.what());
    }

    const auto it = query.find("scene");
    const std::string name = it == query.end() ? "default" : it->second;
    static const std::regex kName("[A-Za-z0-9_-]{1,64}");
    if (!std::regex_match(name, kName)) return error_reply(400, "invalid scene name '" + name + "'");

    Scene scene;
    try {
        const fs::path file = scene_dir_.empty() ? fs::path() : scene_dir_ / (name + ".json");
        if (!file.empty() && fs::exists(file)) scene = load_scene(file);
        else if (name == "default") scene = parse_scene(default_scene_json());
        else return error_reply(404, "unknown scene '" + name + "'");
    } catch (const std::exception& e) {
        return error_reply(500, std::string("scene '") + name + "': " + e.what());
    }

    scene.geometry.camera.yaw = yaw;
    scene.geometry.camera.pitch = pitch;
    scene.geometry.camera.roll = roll;
    ProjectionConfig cfg;
    cfg.spec = UniversalProjection{params, {}};
    cfg.aspect = 1.0;
    try {
        const PerspectiveMap map = make_map(cfg, size, size);
        const RenderResult result = render_scene(scene.geometry, map, {});
        const std::vector<unsigned char> png = encode_png(preview_image(result.buffers, map), 8);
        reply.body.assign(png.begin(), png.end());
    } catch (const std::exception& e) {
        return error_reply(500, e.what());
    }
    return reply;
}

struct PreviewServer::Impl {
    httplib::Server server;
    std::thread thread;
};

PreviewServer::PreviewServer(const PreviewService& service) : impl_(std::make_unique<Impl>()) {
    const auto send = [](httplib::Response& res, const HttpReply& r) {
        res.status = r.status;
        for (const auto& [k, v] : r.headers) res.set_header(k, v);
        res.set_content(r.body, r.content_type);
    };
    httplib::Server& server = impl_->server;
    server.Get("/limits", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.limits());
    });
    server.Get("/presets", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.presets());
    });
    server.Get("/render", [&service, send](const httplib::Request& req, httplib::Response& res) {
        Query q;
        for (const auto& [k, v] : req.params) {
            if (q.count(k)) {
                send(res, error_reply(400, "repeated query parameter '" + k + "'"));
                return;
            }
            q[k] = v;
        }
        send(res, service.render(q));
    });
}

PreviewServer::~PreviewServer() { stop(); }

int PreviewServer::start(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) return -1;
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void PreviewServer::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

void PreviewServer::stop() {
    impl_->server.stop();
    wait();
}

int serve(const PreviewService& service, const std::string& host, int port, std::ostream& err) {
    PreviewServer server(service);
    const int bound = server.start(host, port);
    if (bound < 0) {
        err << "error: cannot listen on " << host << ":" << port << '\n';
        return kExitFailure;
    }
    err << "listening on http://" << host << ":" << bound << '\n';
    server.wait();
    return kExitOk;
}

}  // namespace vsphere::cli
