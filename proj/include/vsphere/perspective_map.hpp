#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vsphere/core.hpp"

namespace vsphere {

/// Conservative angular bounds of an 8x8 block of map pixels, used to skip
/// blocks whose coverage is provably zero.
struct TileBounds {
    Vec3 center;          ///< unit direction, or zero when the tile has no valid pixel
    double radius = 0.0;  ///< max angle from center to any valid pixel vector
    double ramp = 0.0;    ///< max 1/delta over valid pixels
    bool empty() const noexcept { return center == Vec3{}; }
};

/// Grid of incident unit vectors, stored as float planes (structure of arrays)
/// so the coverage kernels can stream them.
///
/// Masked pixels hold the zero vector and a cleared validity byte. A map is
/// filled through set()/set_masked(), then finalize() computes the delta plane
/// (unless one was supplied) and tile bounds. Finalized maps are not modified.
class PerspectiveMap {
public:
    static constexpr int kTileSize = 8;

    PerspectiveMap(int width, int height, AovSpec aov, double aspect);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return x_.size(); }
    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(i);
    }

    const AovSpec& aov() const noexcept { return aov_; }
    double aspect() const noexcept { return aspect_; }

    /// Generator description written to the sidecar: {"name": ..., params...}.
    const nlohmann::json& generator() const noexcept { return generator_; }
    void set_generator(nlohmann::json g) { generator_ = std::move(g); }

    void set(int i, int j, const Vec3& unit);
    void set_masked(int i, int j);

    Vec3 vector(int i, int j) const {
        const std::size_t k = index(i, j);
        return {x_[k], y_[k], z_[k]};
    }
    bool valid(int i, int j) const { return valid_[index(i, j)] != 0; }

    std::span<const float> xs() const noexcept { return x_; }
    std::span<const float> ys() const noexcept { return y_; }
    std::span<const float> zs() const noexcept { return z_; }
    std::span<const std::uint8_t> validity() const noexcept { return valid_; }
    std::size_t masked_count() const;

    bool has_delta() const noexcept { return !delta_.empty(); }
    std::span<const float> delta() const noexcept { return delta_; }
    float delta_at(int i, int j) const { return delta_[index(i, j)]; }
    void set_delta(std::vector<float> delta);

    /// Light attenuation in [0,1], multiplied into final colour. Empty means 1.
    bool has_dimming() const noexcept { return !dim_.empty(); }
    std::span<const float> dimming() const noexcept { return dim_; }
    float dimming_at(int i, int j) const { return dim_.empty() ? 1.0f : dim_[index(i, j)]; }
    void set_dimming(std::vector<float> dim);

    /// Computes the delta plane (when absent) and tile bounds.
    /// Returns the number of pixels whose delta saturated at the floor.
    std::size_t finalize();
    bool finalized() const noexcept { return finalized_; }

    int tiles_x() const noexcept { return (width_ + kTileSize - 1) / kTileSize; }
    int tiles_y() const noexcept { return (height_ + kTileSize - 1) / kTileSize; }
    const TileBounds& tile(int tx, int ty) const { return tiles_[static_cast<std::size_t>(ty * tiles_x() + tx)]; }

private:
    void compute_tiles();

    int width_;
    int height_;
    AovSpec aov_;
    double aspect_;
    nlohmann::json generator_ = nlohmann::json::object();
    std::vector<float> x_, y_, z_;
    std::vector<std::uint8_t> valid_;
    std::vector<float> delta_;
    std::vector<float> dim_;
    std::vector<TileBounds> tiles_;
    bool finalized_ = false;
};

}  // namespace vsphere
