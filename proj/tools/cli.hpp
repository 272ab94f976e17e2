#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace vsphere::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;  ///< bad flags or parameters
inline constexpr int kExitAssets = 3;   ///< missing or unreadable input files

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

// ---------------------------------------------------------------------------
// Preview service

struct HttpReply {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

using Query = std::map<std::string, std::string>;

inline constexpr int kMaxPreviewSize = 1024;

/// Request handlers behind `serve`. Const and reentrant; scenes are loaded
/// per request.
class PreviewService {
public:
    /// Scenes are looked up as `<scene_dir>/<name>.json`; "default" is built in
    /// unless the directory overrides it.
    explicit PreviewService(std::filesystem::path scene_dir = {});

    HttpReply limits() const;
    HttpReply presets() const;
    /// omega is in degrees; yaw/pitch/roll in degrees; size is the square
    /// preview edge in pixels.
    HttpReply render(const Query& query) const;

private:
    std::filesystem::path scene_dir_;
};

/// HTTP front end for a PreviewService, listening on a background thread.
class PreviewServer {
public:
    explicit PreviewServer(const PreviewService& service);
    ~PreviewServer();
    PreviewServer(const PreviewServer&) = delete;
    PreviewServer& operator=(const PreviewServer&) = delete;

    /// Binds and starts listening; port 0 picks a free port. Returns the bound
    /// port, or -1 when the address is unavailable.
    int start(const std::string& host, int port);
    /// Blocks until stop() is called from another thread.
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocks serving HTTP until the process is stopped.
int serve(const PreviewService& service, const std::string& host, int port, std::ostream& err);

/// JSON text of the built-in preview scene.
std::string default_scene_json();

}  // namespace vsphere::cli
