#include "vsphere/map_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vsphere/error.hpp"

namespace vsphere {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "vsphere-map";
constexpr int kVersion = 1;

fs::path stem_of(const fs::path& path) {
    fs::path p = path;
    if (p.extension() == ".pfm" || p.extension() == ".json") p.replace_extension();
    return p;
}

fs::path with_suffix(const fs::path& stem, const std::string& suffix) {
    fs::path p = stem;
    p += suffix;
    return p;
}

ImageBuffer plane_image(int w, int h, std::span<const float> plane) {
    ImageBuffer img(w, h, 1);
    std::copy(plane.begin(), plane.end(), img.data.begin());
    return img;
}

std::vector<float> read_plane(const fs::path& path, int w, int h) {
    ImageBuffer img = read_pfm(path);
    if (img.width != w || img.height != h || img.channels != 1)
        throw FormatError("plane '" + path.string() + "' does not match the map dimensions");
    return std::move(img.data);
}

}  // namespace

void save_map(const PerspectiveMap& map, const fs::path& path) {
    const fs::path stem = stem_of(path);
    const int w = map.width(), h = map.height();
    ImageBuffer vec(w, h, 3);
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            const std::size_t k = map.index(i, j);
            vec.at(i, j, 0) = map.xs()[k];
            vec.at(i, j, 1) = map.ys()[k];
            vec.at(i, j, 2) = map.zs()[k];
        }
    write_pfm(with_suffix(stem, ".pfm"), vec);

    nlohmann::json meta{{"format", kFormat},
                        {"version", kVersion},
                        {"width", w},
                        {"height", h},
                        {"aov", {{"mode", std::string(to_string(map.aov().mode()))}, {"angle", map.aov().angle()}}},
                        {"aspect", map.aspect()},
                        {"generator", map.generator()},
                        {"masked_pixels", map.masked_count()}};
    if (map.has_delta()) {
        const fs::path p = with_suffix(stem, ".delta.pfm");
        write_pfm(p, plane_image(w, h, map.delta()));
        meta["delta"] = p.filename().string();
    }
    if (map.has_dimming()) {
        const fs::path p = with_suffix(stem, ".dim.pfm");
        write_pfm(p, plane_image(w, h, map.dimming()));
        meta["dimming"] = p.filename().string();
    }
    std::ofstream out(with_suffix(stem, ".json"));
    if (!out) throw IoError("cannot write map sidecar for '" + stem.string() + "'");
    out << meta.dump(2) << '\n';
}

PerspectiveMap load_map(const fs::path& path) {
    const fs::path stem = stem_of(path);
    const fs::path sidecar = with_suffix(stem, ".json");
    std::ifstream in(sidecar);
    if (!in) throw FormatError("map sidecar '" + sidecar.string() + "' is missing");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
        if (meta.at("format").get<std::string>() != kFormat) throw FormatError("unknown map format");
        const int w = meta.at("width").get<int>();
        const int h = meta.at("height").get<int>();
        ImageBuffer vec = read_pfm(with_suffix(stem, ".pfm"));
        if (vec.width != w || vec.height != h || vec.channels != 3)
            throw FormatError("map image does not match its sidecar dimensions");
        const AovSpec aov(meta.at("aov").at("angle").get<double>(),
                          parse_aov_mode(meta.at("aov").at("mode").get<std::string>()));
        PerspectiveMap map(w, h, aov, meta.at("aspect").get<double>());
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) {
                const Vec3 v{vec.at(i, j, 0), vec.at(i, j, 1), vec.at(i, j, 2)};
                if (v == Vec3{}) {
                    map.set_masked(i, j);
                    continue;
                }
                if (!(std::abs(length(v) - 1.0) <= kUnitTolerance))
                    throw FormatError("map vector at (" + std::to_string(i) + ", " + std::to_string(j) +
                                      ") is not unit length");
                map.set(i, j, v);
            }
        if (meta.contains("generator")) map.set_generator(meta["generator"]);
        const fs::path dir = stem.parent_path();
        if (meta.contains("delta")) map.set_delta(read_plane(dir / meta["delta"].get<std::string>(), w, h));
        if (meta.contains("dimming")) map.set_dimming(read_plane(dir / meta["dimming"].get<std::string>(), w, h));
        map.finalize();
        return map;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid map sidecar '" + sidecar.string() + "': " + e.what());
    } catch (const DomainError& e) {
        throw FormatError("invalid map sidecar '" + sidecar.string() + "': " + e.what());
    }
}

ImageBuffer map_preview(const PerspectiveMap& map) {
    ImageBuffer img(map.width(), map.height(), 3);
    for (int j = 0; j < map.height(); ++j)
        for (int i = 0; i < map.width(); ++i) {
            if (!map.valid(i, j)) continue;
            const Vec3 v = map.vector(i, j);
            img.at(i, j, 0) = static_cast<float>((v.x + 1.0) / 2.0);
            img.at(i, j, 1) = static_cast<float>((v.y + 1.0) / 2.0);
            img.at(i, j, 2) = static_cast<float>((v.z + 1.0) / 2.0);
        }
    return img;
}

}  // namespace vsphere
