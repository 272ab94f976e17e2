#pragma once

// Per-pixel bodies shared by the scalar kernels and the vector tails.

#include <algorithm>
#include <cmath>

#include "vsphere/simd/kernels.hpp"

namespace vsphere::simd::detail {

inline double row_value(double gx, double gy, double gz, const EdgeRow& r) {
    return ((gx * r.nx + gy * r.ny) + gz * r.nz) - r.offset;
}

inline double step_value(double g, double delta, StepMode mode, double bias = 0.0) {
    if (mode == StepMode::binary) return g > 0.0 ? 1.0 : 0.0;
    const double v = g * delta + (0.5 + bias);
    return std::min(std::max(v, 0.0), 1.0);
}

inline double edge_pixel(const PixelSpan& px, std::size_t i, const EdgeRow* rows, int n, StepMode mode) {
    if (!px.valid[i]) return 0.0;
    const double gx = px.x[i], gy = px.y[i], gz = px.z[i], d = px.delta[i];
    double m = 1.0;
    for (int r = 0; r < n; ++r) m = std::min(m, step_value(row_value(gx, gy, gz, rows[r]), d, mode, rows[r].bias));
    return m;
}

inline double line_pixel(const PixelSpan& px, std::size_t i, const LineFrame& f, StepMode mode) {
    if (!px.valid[i]) return 0.0;
    const double gx = px.x[i], gy = px.y[i], gz = px.z[i], d = px.delta[i];
    const double g = row_value(gx, gy, gz, f.plane);
    double h;
    if (mode == StepMode::binary) h = (1.0 / d - std::abs(2.0 * g)) > 0.0 ? 1.0 : 0.0;
    else h = 1.0 - std::min(std::abs(g) * d, 1.0);
    return std::min(h, step_value(row_value(gx, gy, gz, f.radial), d, mode));
}

inline void particle_pixel(const PixelSpan& px, std::size_t i, const ParticleFrame& f, StepMode mode, double* mask,
                           double* u, double* v) {
    if (!px.valid[i]) {
        mask[i] = u[i] = v[i] = 0.0;
        return;
    }
    const double gx = px.x[i], gy = px.y[i], gz = px.z[i], d = px.delta[i];
    mask[i] = step_value(row_value(gx, gy, gz, f.disc), d, mode);
    u[i] = ((gx * f.x_axis.x + gy * f.x_axis.y) + gz * f.x_axis.z) * f.uv_scale + 0.5;
    v[i] = ((gx * f.y_axis.x + gy * f.y_axis.y) + gz * f.y_axis.z) * f.uv_scale + 0.5;
}

}  // namespace vsphere::simd::detail
