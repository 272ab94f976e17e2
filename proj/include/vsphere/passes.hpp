#pragma once

#include <filesystem>
#include <string_view>

#include "vsphere/image_io.hpp"
#include "vsphere/raster.hpp"

namespace vsphere {

enum class PassKind { mask, depth, uv, normal, shaded, wireframe };

std::string_view to_string(PassKind kind);
/// Throws DomainError for unknown names.
PassKind parse_pass(std::string_view name);

/// Float image for one pass:
///  - mask, wireframe: coverage;
///  - depth: distance along the ray (not z), resolved by coverage;
///  - uv: (u, v, 0) resolved by coverage;
///  - normal: renormalized accumulated normal, raw components;
///  - shaded: headlight Lambert times coverage times map dimming (needs `map`).
ImageBuffer pass_image(const FragmentBuffers& buf, PassKind kind, const PerspectiveMap* map = nullptr);

/// Writes a pass as PFM or PNG, chosen by the file extension. PNG mask and
/// depth are 16-bit grey (depth scaled by its maximum); normals use the
/// (v + 1) / 2 remap.
void save_pass(const FragmentBuffers& buf, PassKind kind, const std::filesystem::path& path,
               const PerspectiveMap* map = nullptr);

}  // namespace vsphere
