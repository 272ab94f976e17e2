#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vsphere/perspective_map.hpp"
#include "vsphere/projections.hpp"
#include "vsphere/raster.hpp"

#include <json.hpp>

namespace vsphere {

// ---------------------------------------------------------------------------
// OBJ subset

struct ObjResult {
    Mesh mesh;
    std::vector<std::string> warnings;
};

/// Reads v/vt/vn/f records (fans triangulated, negative indices allowed);
/// other records are ignored. OBJ is right-handed, so z is negated on import
/// to keep counter-clockwise faces front-facing in the left-handed camera
/// space. Throws ParseError("line N") on malformed records.
ObjResult parse_obj(std::string_view text);
ObjResult load_obj_subset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Built-in meshes (front faces point outward)

/// Square in the z = 0 plane spanning [-1, 1]^2, facing -z.
Mesh builtin_quad();
/// Axis-aligned cube spanning [-1, 1]^3.
Mesh builtin_cube();
/// Unit UV sphere.
Mesh builtin_sphere(int segments = 32, int rings = 16);

// ---------------------------------------------------------------------------
// Scene description

enum class Strictness { clamp, strict };

/// Projection block of a scene: either a generator or a baked map file.
struct ProjectionConfig {
    ProjectionSpec spec = UniversalProjection{};
    AovMode mode = AovMode::horizontal;
    double aov = 0.5 * 3.141592653589793;  ///< radians; universal projections use params.omega
    double aspect = 0.0;             ///< 0: use the output image aspect
    std::filesystem::path map_path;  ///< non-empty: load this map instead

    bool from_file() const { return !map_path.empty(); }
    AovSpec aov_spec() const;
};

struct Scene {
    std::optional<ProjectionConfig> projection;
    SceneGeometry geometry;
    std::vector<std::string> warnings;  ///< clamp notices and loader warnings
};

struct SceneOptions {
    Strictness strictness = Strictness::clamp;
    std::filesystem::path base_dir;  ///< resolves relative mesh and map paths
};

/// Parses the JSON scene schema. Throws ParseError naming the offending key,
/// IoError for unresolvable mesh files.
Scene parse_scene(std::string_view text, const SceneOptions& opts = {});
Scene load_scene(const std::filesystem::path& path, Strictness strictness = Strictness::clamp);

/// Parses only a projection block (shared by scenes and the CLI).
ProjectionConfig parse_projection(const nlohmann::json& j, Strictness strictness,
                                  std::vector<std::string>* warnings = nullptr,
                                  const std::filesystem::path& base_dir = {});

/// Bakes (or loads) the configured map at the requested size; loaded maps keep
/// their own size. The result is finalized.
PerspectiveMap make_map(const ProjectionConfig& cfg, int width, int height);

}  // namespace vsphere
