#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "l2c/adam.hpp"
#include "l2c/errors.hpp"
#include "l2c/gradcheck.hpp"
#include "l2c/ops.hpp"
#include "l2c/rng.hpp"
#include "l2c/tensor_io.hpp"

namespace l2c {
namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

Tensor leaf(Tensor t) {
    t.set_requires_grad(true);
    return t;
}

// Weighted sum so every output component carries a distinct sensitivity.
Tensor probe(const Tensor& y, std::uint64_t seed) {
    Rng rng(seed);
    Tensor w = random_tensor(rng, y.shape());
    return ops::sum(ops::mul(y, w));
}

constexpr double kTol = 1e-4;

// ---------------------------------------------------------------- forward

TEST(ForwardOps, MatmulIdentity) {
    Tensor eye = Tensor::matrix({{1, 0}, {0, 1}});
    Tensor x = Tensor::matrix({{1.5, -2}, {3, 4}});
    Tensor y = ops::matmul(eye, x);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(y[i], x[i]);
    }
}

TEST(ForwardOps, SoftmaxOfZeroAndLn2) {
    Tensor y = ops::softmax(Tensor::vector({0.0, std::numbers::ln2}), 0);
    EXPECT_NEAR(y[0], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(y[1], 2.0 / 3.0, 1e-15);
}

TEST(ForwardOps, ConvAveragingKernelOnConstantInput) {
    const double c = 2.75;
    Tensor x(Shape{1, 1, 3, 3}, c);
    Tensor w(Shape{1, 1, 3, 3}, 1.0 / 9.0);
    Tensor y = ops::conv2d(x, w, Tensor::zeros({1}), 1, 0);
    ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
    EXPECT_NEAR(y[0], c, 1e-14);
}

TEST(ForwardOps, ConvOutputExtents) {
    Tensor x(Shape{2, 3, 32, 32}, 0.5);
    Tensor w(Shape{4, 3, 3, 3}, 0.1);
    EXPECT_EQ(ops::conv2d(x, w, Tensor::zeros({4}), 2, 1).shape(), (Shape{2, 4, 16, 16}));
    EXPECT_EQ(ops::conv2d(x, w, Tensor::zeros({4}), 1, 0).shape(), (Shape{2, 4, 30, 30}));
    Tensor w1(Shape{5, 3, 1, 1}, 0.1);
    EXPECT_EQ(ops::conv2d(x, w1, Tensor::zeros({5}), 1, 0).shape(), (Shape{2, 5, 32, 32}));
}

TEST(ForwardOps, BatchNormConstantChannelGivesBeta) {
    Tensor x(Shape{2, 2, 3, 3});
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t i = 0; i < 9; ++i) {
            x[(b * 2 + 0) * 9 + i] = 4.0;
            x[(b * 2 + 1) * 9 + i] = -1.5;
        }
    }
    Tensor gamma = Tensor::vector({1.3, 0.7});
    Tensor beta = Tensor::vector({0.25, -0.5});
    ops::BatchNormStats stats{Tensor::zeros({2}), Tensor(Shape{2}, 1.0)};
    Tensor y = ops::batch_norm2d(x, gamma, beta, stats, true);
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t i = 0; i < 9; ++i) {
            EXPECT_EQ(y[(b * 2 + 0) * 9 + i], 0.25);
            EXPECT_EQ(y[(b * 2 + 1) * 9 + i], -0.5);
        }
    }
    EXPECT_NEAR(stats.running_mean[0], 0.4, 1e-15);
    EXPECT_NEAR(stats.running_var[1], 0.9, 1e-15);
}

TEST(ForwardOps, BatchNormSingleSampleTraining) {
    Tensor x(Shape{1, 1, 1, 1}, 3.0);
    ops::BatchNormStats stats{Tensor::zeros({1}), Tensor(Shape{1}, 1.0)};
    Tensor y = ops::batch_norm2d(x, Tensor::vector({1.0}), Tensor::vector({0.5}), stats, true);
    EXPECT_EQ(y[0], 0.5);
}

TEST(ForwardOps, BatchNormEvalUsesRunningStats) {
    Tensor x(Shape{1, 1, 1, 2}, std::vector<double>{1.0, 3.0});
    ops::BatchNormStats stats{Tensor::vector({1.0}), Tensor::vector({4.0})};
    Tensor y = ops::batch_norm2d(x, Tensor::vector({2.0}), Tensor::vector({0.0}), stats, false, 0.1, 0.0);
    EXPECT_DOUBLE_EQ(y[0], 0.0);
    EXPECT_DOUBLE_EQ(y[1], 2.0);
    EXPECT_EQ(stats.running_mean[0], 1.0);
}

TEST(ForwardOps, ShapeErrorsNameOpAndExtents) {
    try {
        ops::matmul(Tensor(Shape{2, 3}), Tensor(Shape{2, 3}));
        FAIL();
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos);
    }
    EXPECT_THROW(ops::add(Tensor(Shape{2}), Tensor(Shape{3})), ShapeError);
    EXPECT_THROW(ops::conv2d(Tensor(Shape{1, 2, 4, 4}), Tensor(Shape{1, 3, 3, 3}), Tensor::zeros({1}), 1, 0),
                 ShapeError);
    EXPECT_THROW(ops::embedding(Tensor(Shape{4, 2}), {4}), ShapeError);
}

TEST(ForwardOps, NonFiniteFailsFast) {
    Tensor x = Tensor::vector({1e308});
    EXPECT_THROW(ops::scale(x, 10.0), NumericError);
}

TEST(ForwardOps, SoftmaxRowsAreDistributions) {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor x = random_tensor(rng, {3, 5, 4}, -30.0, 30.0);
        const std::size_t axis = rng.below(3);
        Tensor y = ops::softmax(x, axis);
        const Shape& s = y.shape();
        std::size_t inner = 1;
        for (std::size_t d = axis + 1; d < 3; ++d) {
            inner *= s[d];
        }
        const std::size_t outer = y.size() / (s[axis] * inner);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                double total = 0.0;
                for (std::size_t e = 0; e < s[axis]; ++e) {
                    const double p = y[(o * s[axis] + e) * inner + i];
                    EXPECT_GE(p, 0.0);
                    total += p;
                }
                EXPECT_NEAR(total, 1.0, 1e-9);
            }
        }
    }
}

// ---------------------------------------------------------------- backward

TEST(Backward, SquareAtThree) {
    Tensor x = leaf(Tensor::vector({3.0}));
    Tensor loss = ops::sum(ops::mul(x, x));
    backward(loss);
    EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Backward, ReluGate) {
    Tensor x = leaf(Tensor::vector({-1.0, 2.0}));
    backward(ops::sum(ops::relu(x)));
    EXPECT_EQ(x.grad(), (std::vector<double>{0.0, 1.0}));
}

TEST(Backward, CrossEntropyUniformLogits) {
    const std::size_t v = 5;
    Tensor logits = leaf(Tensor(Shape{1, v}, 0.3));
    backward(ops::cross_entropy_sum(logits, {2}));
    const auto g = logits.grad();
    for (std::size_t j = 0; j < v; ++j) {
        EXPECT_NEAR(g[j], 1.0 / v - (j == 2 ? 1.0 : 0.0), 1e-15);
    }
}

TEST(Backward, CrossEntropyIgnoresPadRows) {
    Tensor logits = leaf(Tensor::matrix({{0.1, 0.2, 0.3}, {1.0, -1.0, 0.0}}));
    Tensor loss = ops::cross_entropy_sum(logits, {1, 0}, 0);
    const double expected = -(0.2 - std::log(std::exp(0.1) + std::exp(0.2) + std::exp(0.3)));
    EXPECT_NEAR(loss.item(), expected, 1e-14);
    backward(loss);
    const auto g = logits.grad();
    for (std::size_t j = 3; j < 6; ++j) {
        EXPECT_EQ(g[j], 0.0);
    }
}

TEST(Backward, NonScalarLossRejected) {
    Tensor x = leaf(Tensor::vector({1.0, 2.0}));
    EXPECT_THROW(backward(ops::scale(x, 2.0)), TapeError);
}

TEST(Backward, SecondBackwardOnSameTapeRejected) {
    Tensor x = leaf(Tensor::vector({1.0, 2.0}));
    Tensor loss = ops::sum(ops::mul(x, x));
    backward(loss);
    EXPECT_THROW(backward(loss), TapeError);
}

TEST(Backward, UntrackedLossRejected) {
    EXPECT_THROW(backward(ops::sum(Tensor::vector({1.0}))), TapeError);
}

TEST(Backward, NoGradGuardSkipsRecording) {
    Tensor x = leaf(Tensor::vector({1.0}));
    NoGradGuard guard;
    Tensor y = ops::mul(x, x);
    EXPECT_FALSE(y.tracked());
}

TEST(Backward, ReplayIsBitIdentical) {
    auto run = [] {
        Rng rng(5);
        Tensor a = leaf(random_tensor(rng, {4, 3}));
        Tensor b = leaf(random_tensor(rng, {3, 6}));
        Tensor loss = ops::sum(ops::tanh(ops::matmul(a, b)));
        backward(loss);
        auto g = a.grad();
        auto gb = b.grad();
        g.insert(g.end(), gb.begin(), gb.end());
        g.push_back(loss.item());
        return g;
    };
    EXPECT_EQ(run(), run());
}

// ---------------------------------------------------------------- gradient checks

TEST(GradientCheck, QuadraticIsExact) {
    Rng rng(21);
    Tensor x = leaf(random_tensor(rng, {7}, -3.0, 3.0));
    EXPECT_LT(gradient_check([&] { return ops::sum(ops::mul(x, x)); }, x), 1e-6);
}

TEST(GradientCheck, RejectsEpsOutOfRange) {
    Tensor x = leaf(Tensor::vector({1.0}));
    auto f = [&] { return ops::sum(x); };
    EXPECT_THROW(gradient_check(f, x, 1e-2), std::invalid_argument);
    EXPECT_THROW(gradient_check(f, x, 1e-9), std::invalid_argument);
}

TEST(GradientCheck, RejectsNondeterministicFunction) {
    Tensor x = leaf(Tensor::vector({1.0}));
    int calls = 0;
    auto f = [&] { return ops::add_scalar(ops::sum(x), 1e-3 * ++calls); };
    EXPECT_THROW(gradient_check(f, x), std::runtime_error);
}

class OpGradients : public ::testing::TestWithParam<int> {};

TEST_P(OpGradients, MatchFiniteDifferences) {
    Rng rng(1000 + GetParam());
    const std::uint64_t ps = 77 + GetParam();
    // Values kept away from the relu/abs kinks.
    auto away = [&](Shape s) {
        Tensor t = random_tensor(rng, std::move(s), 0.1, 1.0);
        for (double& v : t.data()) {
            v *= rng.below(2) ? 1.0 : -1.0;
        }
        return leaf(t);
    };
    Tensor a = leaf(random_tensor(rng, {3, 4}));
    Tensor b = leaf(random_tensor(rng, {3, 4}));
    Tensor m = leaf(random_tensor(rng, {4, 5}));
    Tensor k = away({3, 4});

    auto check = [&](const char* name, const std::function<Tensor()>& f, Tensor& x) {
        EXPECT_LT(gradient_check(f, x), kTol) << name;
    };
    check("add", [&] { return probe(ops::add(a, b), ps); }, a);
    check("sub.rhs", [&] { return probe(ops::sub(a, b), ps); }, b);
    check("mul", [&] { return probe(ops::mul(a, b), ps); }, a);
    check("scale", [&] { return probe(ops::scale(a, -1.7), ps); }, a);
    check("add_scalar", [&] { return probe(ops::add_scalar(a, 0.3), ps); }, a);
    Tensor bias = leaf(random_tensor(rng, {4}));
    check("add_bias.x", [&] { return probe(ops::add_bias(a, bias), ps); }, a);
    check("add_bias.b", [&] { return probe(ops::add_bias(a, bias), ps); }, bias);
    check("relu", [&] { return probe(ops::relu(k), ps); }, k);
    check("abs", [&] { return probe(ops::abs(k), ps); }, k);
    check("sigmoid", [&] { return probe(ops::sigmoid(a), ps); }, a);
    check("tanh", [&] { return probe(ops::tanh(a), ps); }, a);
    check("matmul.lhs", [&] { return probe(ops::matmul(a, m), ps); }, a);
    check("matmul.rhs", [&] { return probe(ops::matmul(a, m), ps); }, m);
    check("transpose", [&] { return probe(ops::transpose(a), ps); }, a);
    check("reshape", [&] { return probe(ops::reshape(a, {2, 6}), ps); }, a);
    check("sum", [&] { return ops::scale(ops::sum(a), 0.5); }, a);
    check("mean", [&] { return ops::mean(ops::mul(a, a)); }, a);
    check("sum_axis", [&] { return probe(ops::sum_axis(a, 1), ps); }, a);
    check("mean_axis", [&] { return probe(ops::mean_axis(a, 0), ps); }, a);
    check("softmax.0", [&] { return probe(ops::softmax(a, 0), ps); }, a);
    check("softmax.1", [&] { return probe(ops::softmax(a, 1), ps); }, a);
    check("concat", [&] { return probe(ops::concat({a, b, a}, 1), ps); }, a);
    check("slice", [&] { return probe(ops::slice(a, 1, 1, 3), ps); }, a);
    check("stack", [&] { return probe(ops::stack({a, b}), ps); }, b);

    Tensor ba = leaf(random_tensor(rng, {2, 3, 4}));
    Tensor bb = leaf(random_tensor(rng, {2, 4, 2}));
    check("bmm.lhs", [&] { return probe(ops::bmm(ba, bb), ps); }, ba);
    check("bmm.rhs", [&] { return probe(ops::bmm(ba, bb), ps); }, bb);
    check("transpose3", [&] { return probe(ops::transpose(ba), ps); }, ba);

    Tensor x = leaf(random_tensor(rng, {2, 3, 6, 5}));
    Tensor w = leaf(random_tensor(rng, {4, 3, 3, 3}));
    Tensor cb = leaf(random_tensor(rng, {4}));
    const std::size_t stride = 1 + rng.below(2), pad = rng.below(2);
    check("conv2d.x", [&] { return probe(ops::conv2d(x, w, cb, stride, pad), ps); }, x);
    check("conv2d.w", [&] { return probe(ops::conv2d(x, w, cb, stride, pad), ps); }, w);
    check("conv2d.b", [&] { return probe(ops::conv2d(x, w, cb, stride, pad), ps); }, cb);

    Tensor gamma = leaf(random_tensor(rng, {3}, 0.5, 1.5));
    Tensor beta = leaf(random_tensor(rng, {3}));
    ops::BatchNormStats stats{Tensor::zeros({3}), Tensor(Shape{3}, 1.0)};
    for (bool training : {true, false}) {
        auto bn = [&] { return probe(ops::batch_norm2d(x, gamma, beta, stats, training), ps); };
        check(training ? "batchnorm.train.x" : "batchnorm.eval.x", bn, x);
        check("batchnorm.gamma", bn, gamma);
        check("batchnorm.beta", bn, beta);
    }

    Tensor table = leaf(random_tensor(rng, {6, 3}));
    check("embedding", [&] { return probe(ops::embedding(table, {1, 4, 1, 0}), ps); }, table);
    Tensor logits = leaf(random_tensor(rng, {4, 6}, -2.0, 2.0));
    check("cross_entropy", [&] { return ops::cross_entropy_sum(logits, {5, 0, 2, 3}, 0); }, logits);
}

INSTANTIATE_TEST_SUITE_P(Randomized, OpGradients, ::testing::Range(0, 5));

// ---------------------------------------------------------------- Adam

TEST(Adam, FirstStepMovesByLearningRate) {
    ParameterStore ps;
    Tensor& p = ps.add_parameter("p", Tensor(Shape{3}, 0.5));
    p.impl()->grad_buffer().assign(3, 1.0);
    AdamState st;
    adam_step(ps, st, 1e-4);
    for (double v : p.data()) {
        EXPECT_NEAR(v - 0.5, -1e-4 / (1.0 + 1e-8), 1e-16);
    }
    EXPECT_EQ(st.step, 1);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    ParameterStore ps;
    Tensor& p = ps.add_parameter("p", Tensor::vector({1.0, -2.0}));
    p.impl()->grad_buffer();
    AdamState st;
    adam_step(ps, st, 1e-3);
    EXPECT_EQ(p[0], 1.0);
    EXPECT_EQ(p[1], -2.0);
}

TEST(Adam, BiasCorrectionEvolvesAcrossIdenticalSteps) {
    ParameterStore ps;
    Tensor& p = ps.add_parameter("p", Tensor::vector({0.0}));
    AdamState st;
    p.impl()->grad_buffer().assign(1, 0.3);
    adam_step(ps, st, 1e-2);
    const double d1 = p[0];
    const double m_after1 = st.m.at("p")[0], v_after1 = st.v.at("p")[0];
    p.impl()->grad_buffer().assign(1, 0.3);
    adam_step(ps, st, 1e-2);
    const double d2 = p[0] - d1;
    EXPECT_NE(st.m.at("p")[0], m_after1);
    EXPECT_NE(st.v.at("p")[0], v_after1);
    // Closed-form moments at t=1 and t=2.
    const double g = 0.3;
    const double m1 = 0.1 * g, v1 = 0.001 * g * g;
    const double step1 = -1e-2 * (m1 / 0.1) / (std::sqrt(v1 / 0.001) + 1e-8);
    const double m2 = 0.9 * m1 + 0.1 * g, v2 = 0.999 * v1 + 0.001 * g * g;
    const double c1 = 1.0 - 0.81, c2 = 1.0 - 0.999 * 0.999;
    const double step2 = -1e-2 * (m2 / c1) / (std::sqrt(v2 / c2) + 1e-8);
    EXPECT_NEAR(d1, step1, 1e-15);
    EXPECT_NEAR(d2, step2, 1e-15);
    EXPECT_EQ(st.step, 2);
}

TEST(Adam, MissingGradientRejected) {
    ParameterStore ps;
    ps.add_parameter("p", Tensor::vector({1.0}));
    AdamState st;
    EXPECT_THROW(adam_step(ps, st, 1e-3), TapeError);
}

TEST(Adam, ClipGradNorm) {
    ParameterStore ps;
    Tensor& p = ps.add_parameter("p", Tensor::vector({0.0, 0.0}));
    p.impl()->grad_buffer() = {3.0, 4.0};
    EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 1.0), 5.0);
    EXPECT_NEAR(grad_norm(ps), 1.0, 1e-15);
}

// ---------------------------------------------------------------- serialization

TEST(TensorIo, HeaderLayout) {
    Tensor t(Shape{2, 1}, std::vector<double>{1.0, -0.5});
    const auto bytes = encode_tensor(t);
    ASSERT_EQ(bytes.size(), 4u + 8u + 16u);
    EXPECT_EQ(bytes[0], 2);
    EXPECT_EQ(bytes[4], 2);
    EXPECT_EQ(bytes[8], 1);
    EXPECT_EQ(bytes[27], 0xbf);  // sign/exponent byte of -0.5
}

TEST(TensorIo, RandomRoundTripIsBitExact) {
    Rng rng(8);
    const auto dir = std::filesystem::temp_directory_path() / "l2c_tensor_io";
    std::filesystem::create_directories(dir);
    for (int trial = 0; trial < 20; ++trial) {
        Shape s;
        for (std::size_t r = 0, rank = rng.below(4); r < rank; ++r) {
            s.push_back(1 + rng.below(5));
        }
        Tensor t = random_tensor(rng, s, -1e6, 1e6);
        write_tensor(dir / "t.bin", t);
        Tensor u = read_tensor(dir / "t.bin");
        ASSERT_EQ(u.shape(), t.shape());
        for (std::size_t i = 0; i < t.size(); ++i) {
            ASSERT_EQ(std::bit_cast<std::uint64_t>(u[i]), std::bit_cast<std::uint64_t>(t[i]));
        }
    }
}

TEST(TensorIo, TruncatedRejected) {
    auto bytes = encode_tensor(Tensor(Shape{3}, 1.0));
    bytes.pop_back();
    EXPECT_THROW(decode_tensor(bytes), FormatError);
    EXPECT_THROW(decode_tensor({1, 0}), FormatError);
}

} // namespace
} // namespace l2c
