#pragma once

#include <filesystem>

#include "vsphere/image_io.hpp"
#include "vsphere/perspective_map.hpp"

namespace vsphere {

/// Writes `<stem>.pfm` (raw vectors, masked pixels zero), `<stem>.json`
/// (metadata sidecar) and, when present, `<stem>.delta.pfm` and
/// `<stem>.dim.pfm`. `path` may name the .pfm or the stem.
void save_map(const PerspectiveMap& map, const std::filesystem::path& path);

/// Inverse of save_map; the result is finalized. Throws FormatError when the
/// sidecar is missing or disagrees with the image planes.
PerspectiveMap load_map(const std::filesystem::path& path);

/// RGB preview with channels (v + 1) / 2; masked pixels black.
ImageBuffer map_preview(const PerspectiveMap& map);

}  // namespace vsphere
