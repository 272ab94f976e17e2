#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "vsphere/core.hpp"

/// Per-pixel coverage kernels over a run of perspective-map pixels.
///
/// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
/// variant. Both evaluate in double precision with the same operation order,
/// so their outputs are bit-identical. The active variant is picked once at
/// startup from CPU support; setting VSPHERE_SIMD=scalar forces the reference.
namespace vsphere::simd {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);
bool cpu_supports(Isa isa);

/// Contiguous pixels of a map row (structure of arrays).
struct PixelSpan {
    const float* x = nullptr;
    const float* y = nullptr;
    const float* z = nullptr;
    const float* delta = nullptr;
    const std::uint8_t* valid = nullptr;
    std::size_t count = 0;
};

/// One half-space test: g = G . n - offset.
struct EdgeRow {
    double nx = 0.0;
    double ny = 0.0;
    double nz = 0.0;
    double offset = 0.0;
    double bias = 0.0;  ///< pixel mode: step shifted outward by this many ramp widths
};

struct LineFrame {
    EdgeRow plane;   ///< unit normal of the great circle, offset 0
    EdgeRow radial;  ///< line-middle vector and cos(theta/2), over sin(theta/2)
};

struct ParticleFrame {
    EdgeRow disc;  ///< particle direction and sqrt(1 - r^2 / P.P), over r / |P|
    Vec3 x_axis;
    Vec3 y_axis;
    double uv_scale = 1.0;  ///< |P| / (2r)
};

/// out[i] = min over rows of step(g); 0 for masked pixels.
using EdgeCoverageFn = void (*)(const PixelSpan& px, const EdgeRow* rows, int row_count, StepMode mode,
                                double* out);
/// out[i] = min(lstep(g_plane), step(g_radial)); 0 for masked pixels.
using LineCoverageFn = void (*)(const PixelSpan& px, const LineFrame& frame, StepMode mode, double* out);
/// Disc mask plus particle texture coordinates.
using ParticleCoverageFn = void (*)(const PixelSpan& px, const ParticleFrame& frame, StepMode mode, double* mask,
                                    double* u, double* v);

struct KernelTable {
    Isa isa;
    EdgeCoverageFn edge_coverage;
    LineCoverageFn line_coverage;
    ParticleCoverageFn particle_coverage;
};

/// Table for a specific variant. Throws DomainError when the CPU or the build
/// lacks it.
const KernelTable& kernels(Isa isa);

/// Table selected at first use (best supported, or the VSPHERE_SIMD override).
const KernelTable& active_kernels();

}  // namespace vsphere::simd
