#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "l2c/errors.hpp"
#include "l2c/kernels.hpp"
#include "l2c/rng.hpp"

namespace l2c::kernels {
namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.uniform(-2.0, 2.0);
    }
    return v;
}

bool close(double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)); }

class SimdEquivalence : public ::testing::Test {
protected:
    void SetUp() override {
        if (!cpu_supports(Isa::avx2)) {
            GTEST_SKIP() << "host has no AVX2/FMA";
        }
    }
};

TEST_F(SimdEquivalence, DotMatchesScalar) {
    Rng rng(1);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 31u, 64u, 257u}) {
        auto x = random_vec(rng, n);
        auto y = random_vec(rng, n);
        EXPECT_TRUE(close(scalar_table().dot(x.data(), y.data(), n), avx2_table()->dot(x.data(), y.data(), n)))
            << "n=" << n;
    }
}

TEST_F(SimdEquivalence, AxpyMatchesScalar) {
    Rng rng(2);
    for (std::size_t n : {1u, 5u, 16u, 33u}) {
        auto x = random_vec(rng, n);
        auto y1 = random_vec(rng, n);
        auto y2 = y1;
        scalar_table().axpy(0.75, x.data(), y1.data(), n);
        avx2_table()->axpy(0.75, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_TRUE(close(y1[i], y2[i]));
        }
    }
}

TEST_F(SimdEquivalence, GemmMatchesScalarAcrossShapesAndTransposes) {
    Rng rng(3);
    const std::size_t dims[] = {1, 2, 3, 4, 5, 7, 8, 9, 13, 17};
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = dims[rng.below(10)], n = dims[rng.below(10)], k = dims[rng.below(10)];
        const bool ta = rng.below(2), tb = rng.below(2), acc = rng.below(2);
        auto a = random_vec(rng, m * k);
        auto b = random_vec(rng, k * n);
        auto c1 = random_vec(rng, m * n);
        auto c2 = c1;
        scalar_table().gemm({a.data(), b.data(), c1.data(), m, n, k, ta, tb, acc});
        avx2_table()->gemm({a.data(), b.data(), c2.data(), m, n, k, ta, tb, acc});
        for (std::size_t i = 0; i < m * n; ++i) {
            ASSERT_TRUE(close(c1[i], c2[i])) << m << "x" << n << "x" << k << " ta=" << ta << " tb=" << tb;
        }
    }
}

// Rows are computed identically whether they sit in a 4-row block or the tail.
TEST_F(SimdEquivalence, GemmRowsIndependentOfBatching) {
    Rng rng(4);
    const std::size_t m = 7, n = 11, k = 6;
    auto a = random_vec(rng, m * k);
    auto b = random_vec(rng, k * n);
    std::vector<double> full(m * n);
    avx2_table()->gemm({a.data(), b.data(), full.data(), m, n, k, false, false, false});
    for (std::size_t r = 0; r < m; ++r) {
        std::vector<double> row(n);
        avx2_table()->gemm({a.data() + r * k, b.data(), row.data(), 1, n, k, false, false, false});
        for (std::size_t j = 0; j < n; ++j) {
            EXPECT_EQ(row[j], full[r * n + j]);
        }
    }
}

TEST(KernelDispatch, ScalarAlwaysSelectable) {
    const Isa before = active_isa();
    set_active(Isa::scalar);
    EXPECT_EQ(active_isa(), Isa::scalar);
    double x[3] = {1, 2, 3};
    EXPECT_DOUBLE_EQ(dot(x, x, 3), 14.0);
    set_active(before);
}

TEST(KernelDispatch, UnsupportedVariantRejected) {
    if (cpu_supports(Isa::avx2)) {
        GTEST_SKIP();
    }
    EXPECT_THROW(set_active(Isa::avx2), ConfigError);
}

} // namespace
} // namespace l2c::kernels
