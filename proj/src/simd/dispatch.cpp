#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "vsphere/error.hpp"

namespace vsphere::simd {

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "scalar";
}

bool cpu_supports(Isa isa) {
    if (isa == Isa::scalar) return true;
#if VSPHERE_HAVE_AVX2
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable& kernels(Isa isa) {
    if (!cpu_supports(isa)) throw DomainError("kernel variant '" + std::string(to_string(isa)) + "' is unavailable");
#if VSPHERE_HAVE_AVX2
    if (isa == Isa::avx2) return detail::kAvx2Table;
#endif
    return detail::kScalarTable;
}

namespace {

const KernelTable& select() {
    if (const char* env = std::getenv("VSPHERE_SIMD")) {
        const std::string want(env);
        if (want == "scalar") return kernels(Isa::scalar);
        if (want == "avx2" && cpu_supports(Isa::avx2)) return kernels(Isa::avx2);
    }
    return cpu_supports(Isa::avx2) ? kernels(Isa::avx2) : kernels(Isa::scalar);
}

}  // namespace

const KernelTable& active_kernels() {
    static const KernelTable& table = select();
    return table;
}

}  // namespace vsphere::simd
