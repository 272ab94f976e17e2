#include "vsphere/passes.hpp"

#include <algorithm>
#include <string>

#include "vsphere/error.hpp"

namespace vsphere {

std::string_view to_string(PassKind kind) {
    switch (kind) {
        case PassKind::mask: return "mask";
        case PassKind::depth: return "depth";
        case PassKind::uv: return "uv";
        case PassKind::normal: return "normal";
        case PassKind::shaded: return "shaded";
        case PassKind::wireframe: return "wireframe";
    }
    return "mask";
}

PassKind parse_pass(std::string_view name) {
    for (PassKind k : {PassKind::mask, PassKind::depth, PassKind::uv, PassKind::normal, PassKind::shaded,
                       PassKind::wireframe})
        if (name == to_string(k)) return k;
    throw DomainError("unknown pass '" + std::string(name) + "'");
}

ImageBuffer pass_image(const FragmentBuffers& buf, PassKind kind, const PerspectiveMap* map) {
    const int w = buf.width(), h = buf.height();
    const bool rgb = kind == PassKind::uv || kind == PassKind::normal;
    ImageBuffer img(w, h, rgb ? 3 : 1);
    if (kind == PassKind::shaded && (!map || map->width() != w || map->height() != h))
        throw DomainError("shaded pass needs the perspective map used for rendering");
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            switch (kind) {
                case PassKind::mask: img.at(i, j, 0) = static_cast<float>(buf.mask(i, j)); break;
                case PassKind::wireframe: img.at(i, j, 0) = static_cast<float>(buf.wire(i, j)); break;
                case PassKind::depth: img.at(i, j, 0) = static_cast<float>(buf.resolved_depth(i, j)); break;
                case PassKind::uv: {
                    const Vec2 uv = buf.resolved_uv(i, j);
                    img.at(i, j, 0) = static_cast<float>(uv.x);
                    img.at(i, j, 1) = static_cast<float>(uv.y);
                    break;
                }
                case PassKind::normal: {
                    const Vec3 n = buf.resolved_normal(i, j);
                    img.at(i, j, 0) = static_cast<float>(n.x);
                    img.at(i, j, 1) = static_cast<float>(n.y);
                    img.at(i, j, 2) = static_cast<float>(n.z);
                    break;
                }
                case PassKind::shaded: {
                    const Vec3 n = buf.resolved_normal(i, j);
                    const double lambert = std::max(0.0, -dot(n, normalize(map->vector(i, j))));
                    img.at(i, j, 0) = static_cast<float>(buf.mask(i, j) * lambert * map->dimming_at(i, j));
                    break;
                }
            }
        }
    return img;
}

void save_pass(const FragmentBuffers& buf, PassKind kind, const std::filesystem::path& path,
               const PerspectiveMap* map) {
    ImageBuffer img = pass_image(buf, kind, map);
    const std::string ext = path.extension().string();
    if (ext == ".pfm") {
        write_pfm(path, img);
        return;
    }
    if (ext != ".png") throw IoError("pass output must end in .pfm or .png: '" + path.string() + "'");
    switch (kind) {
        case PassKind::depth: {
            float top = 0.0f;
            for (float v : img.data) top = std::max(top, v);
            if (top > 0.0f)
                for (float& v : img.data) v /= top;
            write_png(path, img, 16);
            return;
        }
        case PassKind::mask: write_png(path, img, 16); return;
        case PassKind::normal:
            for (int j = 0; j < img.height; ++j)
                for (int i = 0; i < img.width; ++i) {
                    if (buf.mask(i, j) <= 0.0) continue;
                    for (int c = 0; c < 3; ++c) img.at(i, j, c) = (img.at(i, j, c) + 1.0f) / 2.0f;
                }
            write_png(path, img, 8);
            return;
        default: write_png(path, img, 8); return;
    }
}

}  // namespace vsphere
