#include "l2c/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define L2C_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#endif

#include <cmath>
#include <vector>

namespace l2c::kernels {

#if L2C_HAVE_AVX2_KERNELS

#define L2C_AVX2 __attribute__((target("avx2,fma")))

namespace {

L2C_AVX2 double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
    }
    for (; i + 4 <= n; i += 4) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(s0, s1));
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) {
        s = std::fma(x[i], y[i], s);
    }
    return s;
}

L2C_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        y[i] = std::fma(alpha, x[i], y[i]);
    }
}

// Row-major packing so the micro-kernel always sees A as m x k and B as k x n.
const double* pack(const double* src, std::size_t rows, std::size_t cols, bool transposed,
                   std::vector<double>& buf) {
    if (!transposed) {
        return src;
    }
    // src holds cols x rows.
    buf.resize(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            buf[r * cols + c] = src[c * rows + r];
        }
    }
    return buf.data();
}

template <int Rows>
L2C_AVX2 void block_rows(const double* a, const double* b, double* c, std::size_t i0, std::size_t n,
                         std::size_t k, bool accumulate) {
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256d acc0[Rows];
        __m256d acc1[Rows];
        for (int r = 0; r < Rows; ++r) {
            double* crow = c + (i0 + r) * n + j;
            acc0[r] = accumulate ? _mm256_loadu_pd(crow) : _mm256_setzero_pd();
            acc1[r] = accumulate ? _mm256_loadu_pd(crow + 4) : _mm256_setzero_pd();
        }
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
            const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
            for (int r = 0; r < Rows; ++r) {
                const __m256d av = _mm256_broadcast_sd(a + (i0 + r) * k + p);
                acc0[r] = _mm256_fmadd_pd(av, b0, acc0[r]);
                acc1[r] = _mm256_fmadd_pd(av, b1, acc1[r]);
            }
        }
        for (int r = 0; r < Rows; ++r) {
            double* crow = c + (i0 + r) * n + j;
            _mm256_storeu_pd(crow, acc0[r]);
            _mm256_storeu_pd(crow + 4, acc1[r]);
        }
    }
    for (; j + 4 <= n; j += 4) {
        __m256d acc[Rows];
        for (int r = 0; r < Rows; ++r) {
            acc[r] = accumulate ? _mm256_loadu_pd(c + (i0 + r) * n + j) : _mm256_setzero_pd();
        }
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
            for (int r = 0; r < Rows; ++r) {
                acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + (i0 + r) * k + p), b0, acc[r]);
            }
        }
        for (int r = 0; r < Rows; ++r) {
            _mm256_storeu_pd(c + (i0 + r) * n + j, acc[r]);
        }
    }
    for (; j < n; ++j) {
        for (int r = 0; r < Rows; ++r) {
            double acc = accumulate ? c[(i0 + r) * n + j] : 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc = std::fma(a[(i0 + r) * k + p], b[p * n + j], acc);
            }
            c[(i0 + r) * n + j] = acc;
        }
    }
}

L2C_AVX2 void gemm_avx2(const GemmArgs& g) {
    thread_local std::vector<double> abuf;
    thread_local std::vector<double> bbuf;
    const double* a = pack(g.a, g.m, g.k, g.trans_a, abuf);
    const double* b = pack(g.b, g.k, g.n, g.trans_b, bbuf);
    std::size_t i = 0;
    for (; i + 4 <= g.m; i += 4) {
        block_rows<4>(a, b, g.c, i, g.n, g.k, g.accumulate);
    }
    for (; i < g.m; ++i) {
        block_rows<1>(a, b, g.c, i, g.n, g.k, g.accumulate);
    }
}

} // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{Isa::avx2, &dot_avx2, &axpy_avx2, &gemm_avx2};
    return &table;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

} // namespace l2c::kernels
