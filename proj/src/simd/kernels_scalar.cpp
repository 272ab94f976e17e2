#include "kernels_common.hpp"
#include "kernels_internal.hpp"

namespace vsphere::simd::detail {

namespace {

void edge_scalar(const PixelSpan& px, const EdgeRow* rows, int n, StepMode mode, double* out) {
    for (std::size_t i = 0; i < px.count; ++i) out[i] = edge_pixel(px, i, rows, n, mode);
}

void line_scalar(const PixelSpan& px, const LineFrame& frame, StepMode mode, double* out) {
    for (std::size_t i = 0; i < px.count; ++i) out[i] = line_pixel(px, i, frame, mode);
}

void particle_scalar(const PixelSpan& px, const ParticleFrame& frame, StepMode mode, double* mask, double* u,
                     double* v) {
    for (std::size_t i = 0; i < px.count; ++i) particle_pixel(px, i, frame, mode, mask, u, v);
}

}  // namespace

const KernelTable kScalarTable{Isa::scalar, &edge_scalar, &line_scalar, &particle_scalar};

}  // namespace vsphere::simd::detail
