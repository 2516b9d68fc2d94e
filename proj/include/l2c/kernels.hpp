#pragma once

// Inner-loop arithmetic used by the tensor ops. Each kernel has a portable
// scalar reference and an AVX2/FMA variant; the variant is picked once at
// startup from the host CPU and can be overridden with L2C_KERNELS=scalar.
//
// Every output element of gemm is accumulated in ascending k order in both
// variants, so results do not depend on how rows are blocked or batched.

#include <cstddef>
#include <string_view>

namespace l2c::kernels {

enum class Isa { scalar, avx2 };

// C[m x n] = beta * C + op(A) * op(B), row-major, beta in {0, 1}.
// op(A) is m x k; when trans_a the buffer A holds k x m. Likewise for B.
struct GemmArgs {
    const double* a = nullptr;
    const double* b = nullptr;
    double* c = nullptr;
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t k = 0;
    bool trans_a = false;
    bool trans_b = false;
    bool accumulate = false;
};

struct KernelTable {
    Isa isa;
    double (*dot)(const double* x, const double* y, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    void (*gemm)(const GemmArgs& args);
};

const KernelTable& scalar_table();
// Null when the build has no AVX2 variant.
const KernelTable* avx2_table();

bool cpu_supports(Isa isa);

const KernelTable& active();
Isa active_isa();
// Throws ConfigError when the host cannot run the requested variant.
void set_active(Isa isa);

std::string_view isa_name(Isa isa);

inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void gemm(const GemmArgs& args) { active().gemm(args); }

} // namespace l2c::kernels
