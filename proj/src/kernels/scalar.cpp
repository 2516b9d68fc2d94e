#include <vector>

#include "l2c/kernels.hpp"

namespace l2c::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += x[i] * y[i];
    }
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void gemm_scalar(const GemmArgs& g) {
    // Reference kernel: one accumulator per output, k ascending.
    for (std::size_t i = 0; i < g.m; ++i) {
        for (std::size_t j = 0; j < g.n; ++j) {
            double acc = g.accumulate ? g.c[i * g.n + j] : 0.0;
            for (std::size_t p = 0; p < g.k; ++p) {
                const double av = g.trans_a ? g.a[p * g.m + i] : g.a[i * g.k + p];
                const double bv = g.trans_b ? g.b[j * g.k + p] : g.b[p * g.n + j];
                acc += av * bv;
            }
            g.c[i * g.n + j] = acc;
        }
    }
}

} // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Isa::scalar, &dot_scalar, &axpy_scalar, &gemm_scalar};
    return table;
}

} // namespace l2c::kernels
