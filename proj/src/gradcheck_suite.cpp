#include "l2c/gradcheck_suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "l2c/data.hpp"
#include "l2c/decoder.hpp"
#include "l2c/encoder.hpp"
#include "l2c/gradcheck.hpp"
#include "l2c/graph.hpp"
#include "l2c/ops.hpp"
#include "l2c/training.hpp"

namespace l2c {
namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

// Values bounded away from zero so relu/abs kinks stay outside +-eps.
Tensor kink_free(Rng& rng, Shape shape) {
    Tensor t = random_tensor(rng, std::move(shape), 0.1, 1.0);
    for (double& v : t.data()) {
        v = rng.uniform() < 0.5 ? -v : v;
    }
    return t;
}

Tensor confidence(Rng& rng, Shape shape) {
    NoGradGuard guard;
    return ops::softmax(random_tensor(rng, shape, -2.0, 2.0), shape.size() == 4 ? 1 : 0);
}

Tensor mask(Rng& rng, Shape shape) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        v = rng.uniform() < 0.6 ? 1.0 : 0.0;
    }
    t[0] = 1.0;
    return t;
}

// Weighted sum with fixed random weights: every output component gets a
// distinct sensitivity.
Tensor probe(const Tensor& y, std::uint64_t seed) {
    Rng rng(seed);
    Tensor w = random_tensor(rng, y.shape());
    return ops::sum(ops::mul(y, w));
}

class Suite {
public:
    explicit Suite(const GradcheckOptions& options) : opt_(options), rng_(mix_seed(options.seed, 0x6c32)) {}

    Rng& rng() { return rng_; }

    // `leaves` are made differentiable; `f` must read them.
    void check(const std::string& group, const std::string& name, std::vector<Tensor> leaves,
               const std::function<Tensor()>& f, std::size_t max_components = 0, double eps = 0.0) {
        const auto start = std::chrono::steady_clock::now();
        GradcheckRow row{group, name, leaves.size(), 0, 0.0, 0.0, true};
        for (Tensor& x : leaves) {
            x.set_requires_grad(true);
        }
        for (Tensor& x : leaves) {
            row.max_rel_error = std::max(row.max_rel_error, gradient_check(f, x, eps > 0.0 ? eps : opt_.eps, max_components));
            row.components += max_components == 0 ? x.size() : std::min(x.size(), max_components);
        }
        row.passed = std::isfinite(row.max_rel_error) && row.max_rel_error < opt_.tolerance;
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows_.push_back(row);
    }

    void params(const std::string& group, const std::string& name, ParameterStore& store,
                const std::function<Tensor()>& f, std::size_t max_components = 0, double eps = 0.0) {
        std::vector<Tensor> leaves;
        for (auto& [key, p] : store.parameters()) {
            leaves.push_back(p);
        }
        check(group, name, leaves, f, max_components, eps);
    }

    std::vector<GradcheckRow> take() { return std::move(rows_); }

private:
    GradcheckOptions opt_;
    Rng rng_;
    std::vector<GradcheckRow> rows_;
};

void op_checks(Suite& s) {
    Rng& r = s.rng();
    {
        Tensor a = random_tensor(r, {3, 4}), b = random_tensor(r, {3, 4});
        s.check("op", "add", {a, b}, [=] { return probe(ops::add(a, b), 1); });
        s.check("op", "sub", {a, b}, [=] { return probe(ops::sub(a, b), 2); });
        s.check("op", "mul", {a, b}, [=] { return probe(ops::mul(a, b), 3); });
        s.check("op", "scale", {a}, [=] { return probe(ops::scale(a, -1.7), 4); });
        s.check("op", "add_scalar", {a}, [=] { return probe(ops::add_scalar(a, 0.3), 5); });
        s.check("op", "sigmoid", {a}, [=] { return probe(ops::sigmoid(a), 6); });
        s.check("op", "tanh", {a}, [=] { return probe(ops::tanh(a), 7); });
        s.check("op", "transpose", {a}, [=] { return probe(ops::transpose(a), 8); });
        s.check("op", "reshape", {a}, [=] { return probe(ops::reshape(a, {2, 6}), 9); });
        s.check("op", "sum", {a}, [=] { return ops::scale(ops::sum(ops::mul(a, a)), 0.5); });
        s.check("op", "mean", {a}, [=] { return ops::mean(ops::mul(a, b)); });
        s.check("op", "sum_axis", {a}, [=] { return probe(ops::sum_axis(a, 0), 10); });
        s.check("op", "mean_axis", {a}, [=] { return probe(ops::mean_axis(a, 1), 11); });
        s.check("op", "softmax", {a}, [=] { return probe(ops::softmax(a, 1), 12); });
        s.check("op", "slice", {a}, [=] { return probe(ops::slice(a, 1, 1, 3), 13); });
        s.check("op", "concat", {a, b}, [=] { return probe(ops::concat({a, b}, 1), 14); });
        s.check("op", "stack", {a, b}, [=] { return probe(ops::stack({a, b}), 15); });
    }
    {
        Tensor a = kink_free(r, {3, 4});
        s.check("op", "relu", {a}, [=] { return probe(ops::relu(a), 16); });
        s.check("op", "abs", {a}, [=] { return probe(ops::abs(a), 17); });
    }
    {
        Tensor x = random_tensor(r, {2, 3, 4}), bias = random_tensor(r, {4});
        s.check("op", "add_bias", {x, bias}, [=] { return probe(ops::add_bias(x, bias), 18); });
        Tensor a = random_tensor(r, {3, 5}), b = random_tensor(r, {5, 2});
        s.check("op", "matmul", {a, b}, [=] { return probe(ops::matmul(a, b), 19); });
        Tensor p = random_tensor(r, {2, 3, 4}), q = random_tensor(r, {2, 4, 3});
        s.check("op", "bmm", {p, q}, [=] { return probe(ops::bmm(p, q), 20); });
        s.check("op", "transpose_batched", {p}, [=] { return probe(ops::transpose(p), 21); });
    }
    {
        Tensor x = random_tensor(r, {2, 3, 5, 5}), w = random_tensor(r, {4, 3, 3, 3}), b = random_tensor(r, {4});
        s.check("op", "conv2d_stride1", {x, w, b}, [=] { return probe(ops::conv2d(x, w, b, 1, 1), 22); });
        s.check("op", "conv2d_stride2", {x, w, b}, [=] { return probe(ops::conv2d(x, w, b, 2, 1), 23); });
    }
    {
        Tensor x = random_tensor(r, {3, 2, 3, 3}), gamma = random_tensor(r, {2}, 0.5, 1.5), beta = random_tensor(r, {2});
        auto stats = std::make_shared<ops::BatchNormStats>(
            ops::BatchNormStats{Tensor::zeros({2}), Tensor(Shape{2}, 1.0)});
        s.check("op", "batch_norm2d_train", {x, gamma, beta},
                [=] { return probe(ops::batch_norm2d(x, gamma, beta, *stats, true), 24); });
        s.check("op", "batch_norm2d_eval", {x, gamma, beta},
                [=] { return probe(ops::batch_norm2d(x, gamma, beta, *stats, false), 25); });
    }
    {
        Tensor table = random_tensor(r, {6, 3});
        s.check("op", "embedding", {table}, [=] { return probe(ops::embedding(table, {4, 0, 4, 2}), 26); });
        Tensor logits = random_tensor(r, {4, 6}, -2.0, 2.0);
        s.check("op", "cross_entropy_sum", {logits},
                [=] { return ops::cross_entropy_sum(logits, {1, 5, 0, 3}, 0); });
    }
}

void encoder_checks(Suite& s, std::uint64_t seed) {
    Rng& r = s.rng();
    {
        Tensor f = random_tensor(r, {4, 3, 3}), c = confidence(r, {2, 3, 3});
        const Tensor b = mask(r, {3, 3});
        s.check("encoder", "semantic_pool", {f, c}, [=] { return probe(semantic_pool(f, b, c), 30); });
        Tensor fb = random_tensor(r, {2, 4, 3, 3}), cb = confidence(r, {2, 2, 3, 3});
        const Tensor bb = mask(r, {2, 3, 3});
        s.check("encoder", "semantic_pool_batched", {fb, cb}, [=] { return probe(semantic_pool(fb, bb, cb), 31); });
        s.check("encoder", "masked_average_pool", {fb}, [=] { return probe(masked_average_pool(fb, bb, 3), 32); });
        // Random logits keep the confidence away from ties so |.| stays smooth.
        Tensor logits = random_tensor(r, {2, 3, 4, 4}, -3.0, 3.0);
        s.check("encoder", "tv_loss", {logits}, [=] { return tv_loss(ops::softmax(logits, 1)); });
    }
    {
        ParameterStore store;
        Rng init(mix_seed(seed, 0x656e63));
        EncoderConfig cfg{3, 8, 4, 3, 2, 2, 1.0};
        Encoder enc(cfg, store, init);
        const Tensor images = random_tensor(r, {2, 3, 8, 8}, 0.0, 1.0);
        const Tensor masks = mask(r, {2, 2, 2});
        s.params("encoder", "backbone_head_pool_tv", store, [&enc, images, masks] {
            FeatureBundle fb = enc.encode(images, masks, true);
            return ops::add(probe(semantic_pool(fb.features, fb.mask, fb.confidence), 33), tv_loss(fb.confidence));
        });
    }
}

void graph_checks(Suite& s, std::uint64_t seed) {
    Rng& r = s.rng();
    ParameterStore store;
    Rng init(mix_seed(seed, 0x677261));
    GraphReasoner graph({5, 2, true}, store, init);
    Tensor v = random_tensor(r, {4, 5});
    Tensor vb = random_tensor(r, {2, 4, 5});
    auto* g = &graph;
    s.check("graph", "affinity_nodes", {v}, [=] { return probe(g->affinity({v, NodeKind::raw}), 40); });
    s.params("graph", "affinity_weights", store, [=] { return probe(g->affinity({vb, NodeKind::raw}), 41); });
    Tensor a = random_tensor(r, {2, 4, 4}, -2.0, 2.0);
    s.check("graph", "normalize_adjacency", {a}, [=] { return probe(normalize_adjacency(a), 42); });
    Tensor adj = confidence(r, {4, 4});
    s.check("graph", "gcn_forward", {v, adj}, [=] { return probe(g->gcn_forward({v, NodeKind::raw}, adj).nodes, 43); });
    s.params("graph", "graph_end_to_end", store, [=] { return probe(g->forward({vb, NodeKind::raw}).nodes, 44); });
    Tensor u = random_tensor(r, {4, 5});
    s.check("graph", "node_difference", {v, u}, [=] {
        return probe(node_difference({v, NodeKind::enhanced}, {u, NodeKind::enhanced}).nodes, 45);
    });
}

void decoder_checks(Suite& s, std::uint64_t seed) {
    Rng& r = s.rng();
    ParameterStore store;
    Rng init(mix_seed(seed, 0x646563));
    Decoder dec({9, 4, 5, 3}, store, init);
    Tensor nodes = random_tensor(r, {2, 3, 3});
    const std::vector<std::vector<int>> seqs{{1, 4, 7, 5, 2}, {1, 8, 2, 0, 0}};
    auto* d = &dec;
    s.check("decoder", "context_mean", {nodes}, [=] { return probe(d->context({nodes, NodeKind::difference}), 50); });
    s.params("decoder", "lstm_teacher_forced_nll", store,
             [=] { return d->teacher_forced_nll({nodes, NodeKind::difference}, seqs).mean; });
    s.check("decoder", "nll_wrt_nodes", {nodes},
            [=] { return d->teacher_forced_nll({nodes, NodeKind::difference}, seqs).mean; });
}

void loss_checks(Suite& s, const GradcheckOptions& opt) {
    // Jitter lifts relu inputs and TV differences off the kinks of a flat background.
    TrainingData data = prepare_data(generate_dataset(opt.seed, 6, 4, {0.7, 0.3, 0.0}));
    Rng jitter(mix_seed(opt.seed, 0x6a6974));
    auto perturb = [&jitter](Tensor& image) {
        image = image.detach();
        for (double& v : image.data()) {
            v += jitter.uniform(0.0, 0.05);
        }
    };
    for (PairExample& p : data.train) {
        perturb(p.image_a);
        perturb(p.image_b);
    }
    for (SingleExample& e : data.singles) {
        perturb(e.image);
    }
    Config cfg = Config::desk();
    cfg.feature_dim = 6;
    cfg.num_nodes = 3;
    cfg.embed_dim = 4;
    cfg.hidden = 6;
    cfg.gcn_layers = 2;
    cfg.seed = opt.seed;
    Trainer trainer(cfg, data);
    const std::vector<std::size_t> pairs{0, 1}, singles{0, 1};
    Trainer* t = &trainer;
    ParameterStore& store = trainer.model().store();
    s.params("loss", "l_diff", store, [=] { return t->losses(pairs, singles, 0).l_diff; }, opt.loss_components, opt.loss_eps);
    s.params("loss", "l_single", store, [=] { return t->losses(pairs, singles, 0).l_single; }, opt.loss_components, opt.loss_eps);
    s.params("loss", "l_tv", store, [=] { return t->losses(pairs, singles, 0).l_tv; }, opt.loss_components, opt.loss_eps);
    s.params("loss", "total", store, [=] { return t->losses(pairs, singles, 0).total; }, opt.loss_components, opt.loss_eps);
}

} // namespace

std::vector<GradcheckRow> run_gradcheck_suite(const GradcheckOptions& options) {
    Suite s(options);
    op_checks(s);
    encoder_checks(s, options.seed);
    graph_checks(s, options.seed);
    decoder_checks(s, options.seed);
    loss_checks(s, options);
    return s.take();
}

bool all_passed(const std::vector<GradcheckRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const GradcheckRow& r) { return r.passed; });
}

std::string format_gradcheck_table(const std::vector<GradcheckRow>& rows, double tolerance) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %-26s %7s %10s %12s %8s  %s\n", "group", "check", "leaves", "components",
                  "max_rel_err", "seconds", "result");
    out << line;
    std::size_t failed = 0;
    double total = 0.0;
    for (const GradcheckRow& r : rows) {
        std::snprintf(line, sizeof line, "%-8s %-26s %7zu %10zu %12.3e %8.3f  %s\n", r.group.c_str(), r.name.c_str(),
                      r.tensors, r.components, r.max_rel_error, r.seconds, r.passed ? "PASS" : "FAIL");
        out << line;
        failed += r.passed ? 0 : 1;
        total += r.seconds;
    }
    std::snprintf(line, sizeof line, "%zu checks, %zu failed, tolerance %.0e, %.2f s\n", rows.size(), failed,
                  tolerance, total);
    out << line;
    return out.str();
}

} // namespace l2c
