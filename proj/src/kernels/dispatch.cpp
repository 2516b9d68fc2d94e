#include <cstdlib>
#include <string>

#include "l2c/errors.hpp"
#include "l2c/kernels.hpp"

namespace l2c::kernels {
namespace {

const KernelTable* select_default() {
    const char* env = std::getenv("L2C_KERNELS");
    if (env != nullptr && std::string(env) == "scalar") {
        return &scalar_table();
    }
    if (cpu_supports(Isa::avx2)) {
        return avx2_table();
    }
    return &scalar_table();
}

const KernelTable*& current() {
    static const KernelTable* table = select_default();
    return table;
}

} // namespace

bool cpu_supports(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
        return avx2_table() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& active() { return *current(); }

Isa active_isa() { return current()->isa; }

void set_active(Isa isa) {
    if (!cpu_supports(isa)) {
        throw ConfigError("kernel variant '" + std::string(isa_name(isa)) + "' is not supported on this CPU");
    }
    current() = isa == Isa::scalar ? &scalar_table() : avx2_table();
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return "scalar";
    case Isa::avx2:
        return "avx2";
    }
    return "unknown";
}

} // namespace l2c::kernels
