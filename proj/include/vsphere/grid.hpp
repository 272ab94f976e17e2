#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vsphere/error.hpp"

namespace vsphere {

/// Dense row-major 2D array. Index `(i, j)` is column i, row j; row 0 is the
/// bottom of the picture (texture t grows with j).
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(checked_size(width, height), fill) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int i, int j) { return data_[index(i, j)]; }
    const T& operator()(int i, int j) const { return data_[index(i, j)]; }

    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(i);
    }

    std::span<T> row(int j) { return {data_.data() + index(0, j), static_cast<std::size_t>(width_)}; }
    std::span<const T> row(int j) const {
        return {data_.data() + index(0, j), static_cast<std::size_t>(width_)};
    }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool operator==(const Grid&) const = default;

private:
    static std::size_t checked_size(int w, int h) {
        if (w < 0 || h < 0) throw DomainError("grid dimensions must be non-negative");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using ScalarGrid = Grid<double>;

}  // namespace vsphere
