#include "vsphere/perspective_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vsphere/error.hpp"

namespace vsphere {

PerspectiveMap::PerspectiveMap(int width, int height, AovSpec aov, double aspect)
    : width_(width), height_(height), aov_(aov), aspect_(aspect) {
    if (width < 2 || height < 2) throw DomainError("perspective map must be at least 2x2");
    if (!(aspect > 0.0) || !std::isfinite(aspect)) throw DomainError("aspect ratio must be positive");
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    x_.assign(n, 0.0f);
    y_.assign(n, 0.0f);
    z_.assign(n, 0.0f);
    valid_.assign(n, 0);
}

void PerspectiveMap::set(int i, int j, const Vec3& unit) {
    const std::size_t k = index(i, j);
    x_[k] = static_cast<float>(unit.x);
    y_[k] = static_cast<float>(unit.y);
    z_[k] = static_cast<float>(unit.z);
    valid_[k] = 1;
}

void PerspectiveMap::set_masked(int i, int j) {
    const std::size_t k = index(i, j);
    x_[k] = y_[k] = z_[k] = 0.0f;
    valid_[k] = 0;
}

std::size_t PerspectiveMap::masked_count() const {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{0}));
}

void PerspectiveMap::set_delta(std::vector<float> delta) {
    if (delta.size() != pixel_count()) throw FormatError("delta plane size does not match the map");
    for (float d : delta)
        if (!(d > 0.0f) || !std::isfinite(d)) throw FormatError("delta plane must be positive and finite");
    delta_ = std::move(delta);
}

void PerspectiveMap::set_dimming(std::vector<float> dim) {
    if (dim.size() != pixel_count()) throw FormatError("dimming plane size does not match the map");
    dim_ = std::move(dim);
}

std::size_t PerspectiveMap::finalize() {
    std::size_t saturated = 0;
    if (delta_.empty()) {
        DeltaMap d = global_delta_map(*this);
        saturated = d.saturated_pixels;
        delta_ = std::move(d.delta.data());
    }
    compute_tiles();
    finalized_ = true;
    return saturated;
}

void PerspectiveMap::compute_tiles() {
    tiles_.assign(static_cast<std::size_t>(tiles_x() * tiles_y()), TileBounds{});
    for (int ty = 0; ty < tiles_y(); ++ty) {
        for (int tx = 0; tx < tiles_x(); ++tx) {
            const int i0 = tx * kTileSize, j0 = ty * kTileSize;
            const int i1 = std::min(i0 + kTileSize, width_), j1 = std::min(j0 + kTileSize, height_);
            Vec3 sum;
            bool any = false;
            for (int j = j0; j < j1; ++j)
                for (int i = i0; i < i1; ++i)
                    if (valid(i, j)) {
                        sum += vector(i, j);
                        any = true;
                    }
            TileBounds& t = tiles_[static_cast<std::size_t>(ty * tiles_x() + tx)];
            if (!any) continue;
            double len = length(sum);
            if (len < 1e-9) {
                // Vectors cancel out: bound by the whole sphere.
                t.center = Vec3{0, 0, 1};
                t.radius = std::numbers::pi;
            } else {
                t.center = sum / len;
            }
            for (int j = j0; j < j1; ++j)
                for (int i = i0; i < i1; ++i) {
                    if (!valid(i, j)) continue;
                    if (len >= 1e-9) t.radius = std::max(t.radius, angle_between(t.center, vector(i, j)));
                    t.ramp = std::max(t.ramp, 1.0 / static_cast<double>(delta_at(i, j)));
                }
            t.radius += 1e-6;
        }
    }
}

}  // namespace vsphere
