#include "l2c/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "l2c/errors.hpp"
#include "l2c/kernels.hpp"

namespace l2c::ops {
namespace {

[[noreturn]] void shape_fail(const char* op, const std::string& what) {
    throw ShapeError(std::string(op) + ": " + what);
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        shape_fail(op, "operand shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
    }
}

void require_rank(const char* op, const Tensor& a, std::size_t rank, const char* name) {
    if (a.rank() != rank) {
        shape_fail(op, std::string(name) + " must have rank " + std::to_string(rank) + ", got " +
                           shape_str(a.shape()));
    }
}

// (outer, extent, inner) decomposition around one axis.
struct AxisSplit {
    std::size_t outer = 1;
    std::size_t extent = 1;
    std::size_t inner = 1;
};

AxisSplit split_at(const char* op, const Shape& shape, std::size_t axis) {
    if (axis >= shape.size()) {
        shape_fail(op, "axis " + std::to_string(axis) + " out of range for " + shape_str(shape));
    }
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) {
        s.outer *= shape[i];
    }
    s.extent = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) {
        s.inner *= shape[i];
    }
    return s;
}

template <class F>
Tensor unary(const char* op, const Tensor& a, F&& f, BackwardFn bw) {
    std::vector<double> out(a.size());
    auto x = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = f(x[i]);
    }
    return make_result(op, a.shape(), std::move(out), {a}, std::move(bw));
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same("add", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] + b[i];
    }
    return make_result("add", a.shape(), std::move(out), {a, b}, [](const TensorImpl& o, std::span<const ImplPtr> in) {
        for (const auto& t : in) {
            if (t->tracked()) {
                auto& g = t->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += o.grad[i];
                }
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same("sub", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return make_result("sub", a.shape(), std::move(out), {a, b}, [](const TensorImpl& o, std::span<const ImplPtr> in) {
        if (in[0]->tracked()) {
            auto& g = in[0]->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += o.grad[i];
            }
        }
        if (in[1]->tracked()) {
            auto& g = in[1]->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] -= o.grad[i];
            }
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same("mul", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] * b[i];
    }
    return make_result("mul", a.shape(), std::move(out), {a, b}, [](const TensorImpl& o, std::span<const ImplPtr> in) {
        if (in[0]->tracked()) {
            auto& g = in[0]->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += o.grad[i] * in[1]->data[i];
            }
        }
        if (in[1]->tracked()) {
            auto& g = in[1]->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += o.grad[i] * in[0]->data[i];
            }
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    return unary("scale", a, [s](double x) { return x * s; }, [s](const TensorImpl& o, std::span<const ImplPtr> in) {
        auto& g = in[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += o.grad[i] * s;
        }
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary("add_scalar", a, [s](double x) { return x + s; }, [](const TensorImpl& o, std::span<const ImplPtr> in) {
        auto& g = in[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += o.grad[i];
        }
    });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    if (bias.rank() != 1 || x.rank() < 1 || x.shape().back() != bias.dim(0)) {
        shape_fail("add_bias", "bias " + shape_str(bias.shape()) + " does not match trailing extent of " +
                                   shape_str(x.shape()));
    }
    const std::size_t n = bias.dim(0);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] + bias[i % n];
    }
    return make_result("add_bias", x.shape(), std::move(out), {x, bias},
                       [n](const TensorImpl& o, std::span<const ImplPtr> in) {
                           if (in[0]->tracked()) {
                               auto& g = in[0]->grad_buffer();
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   g[i] += o.grad[i];
                               }
                           }
                           if (in[1]->tracked()) {
                               auto& g = in[1]->grad_buffer();
                               for (std::size_t i = 0; i < o.grad.size(); ++i) {
                                   g[i % n] += o.grad[i];
                               }
                           }
                       });
}

Tensor relu(const Tensor& a) {
    return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](const TensorImpl& o, std::span<const ImplPtr> in) {
                     auto& g = in[0]->grad_buffer();
                     for (std::size_t i = 0; i < g.size(); ++i) {
                         if (in[0]->data[i] > 0.0) {
                             g[i] += o.grad[i];
                         }
                     }
                 });
}

Tensor sigmoid(const Tensor& a) {
    return unary("sigmoid", a,
                 [](double x) {
                     if (x >= 0.0) {
                         return 1.0 / (1.0 + std::exp(-x));
                     }
                     const double e = std::exp(x);
                     return e / (1.0 + e);
                 },
                 [](const TensorImpl& o, std::span<const ImplPtr> in) {
                     auto& g = in[0]->grad_buffer();
                     for (std::size_t i = 0; i < g.size(); ++i) {
                         const double y = o.data[i];
                         g[i] += o.grad[i] * y * (1.0 - y);
                     }
                 });
}

Tensor tanh(const Tensor& a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); },
                 [](const TensorImpl& o, std::span<const ImplPtr> in) {
                     auto& g = in[0]->grad_buffer();
                     for (std::size_t i = 0; i < g.size(); ++i) {
                         const double y = o.data[i];
                         g[i] += o.grad[i] * (1.0 - y * y);
                     }
                 });
}

Tensor abs(const Tensor& a) {
    return unary("abs", a, [](double x) { return std::fabs(x); },
                 [](const TensorImpl& o, std::span<const ImplPtr> in) {
                     auto& g = in[0]->grad_buffer();
                     for (std::size_t i = 0; i < g.size(); ++i) {
                         const double x = in[0]->data[i];
                         g[i] += x > 0.0 ? o.grad[i] : (x < 0.0 ? -o.grad[i] : 0.0);
                     }
                 });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank("matmul", a, 2, "lhs");
    require_rank("matmul", b, 2, "rhs");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        shape_fail("matmul", "inner extents differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    std::vector<double> out(m * n);
    kernels::gemm({a.data().data(), b.data().data(), out.data(), m, n, k, false, false, false});
    return make_result("matmul", Shape{m, n}, std::move(out), {a, b},
                       [m, k, n](const TensorImpl& o, std::span<const ImplPtr> in) {
                           const TensorImpl& A = *in[0];
                           const TensorImpl& B = *in[1];
                           if (A.tracked()) {
                               // dA = dC * B^T
                               kernels::gemm({o.grad.data(), B.data.data(), in[0]->grad_buffer().data(), m, k, n,
                                              false, true, true});
                           }
                           if (B.tracked()) {
                               // dB = A^T * dC
                               kernels::gemm({A.data.data(), o.grad.data(), in[1]->grad_buffer().data(), k, n, m,
                                              true, false, true});
                           }
                       });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
    require_rank("bmm", a, 3, "lhs");
    require_rank("bmm", b, 3, "rhs");
    const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    if (b.dim(0) != batch || b.dim(1) != k) {
        shape_fail("bmm", "operands do not conform: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    std::vector<double> out(batch * m * n);
    for (std::size_t s = 0; s < batch; ++s) {
        kernels::gemm({a.data().data() + s * m * k, b.data().data() + s * k * n, out.data() + s * m * n, m, n, k,
                       false, false, false});
    }
    return make_result("bmm", Shape{batch, m, n}, std::move(out), {a, b},
                       [batch, m, k, n](const TensorImpl& o, std::span<const ImplPtr> in) {
                           const TensorImpl& A = *in[0];
                           const TensorImpl& B = *in[1];
                           for (std::size_t s = 0; s < batch; ++s) {
                               const double* dc = o.grad.data() + s * m * n;
                               if (A.tracked()) {
                                   kernels::gemm({dc, B.data.data() + s * k * n,
                                                  in[0]->grad_buffer().data() + s * m * k, m, k, n, false, true, true});
                               }
                               if (B.tracked()) {
                                   kernels::gemm({A.data.data() + s * m * k, dc,
                                                  in[1]->grad_buffer().data() + s * k * n, k, n, m, true, false, true});
                               }
                           }
                       });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2 && a.rank() != 3) {
        shape_fail("transpose", "expects rank 2 or 3, got " + shape_str(a.shape()));
    }
    const std::size_t batch = a.rank() == 3 ? a.dim(0) : 1;
    const std::size_t r = a.dim(a.rank() - 2), c = a.dim(a.rank() - 1);
    Shape shape = a.shape();
    std::swap(shape[shape.size() - 1], shape[shape.size() - 2]);
    std::vector<double> out(a.size());
    for (std::size_t s = 0; s < batch; ++s) {
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                out[s * r * c + j * r + i] = a[s * r * c + i * c + j];
            }
        }
    }
    return make_result("transpose", std::move(shape), std::move(out), {a},
                       [batch, r, c](const TensorImpl& o, std::span<const ImplPtr> in) {
                           auto& g = in[0]->grad_buffer();
                           for (std::size_t s = 0; s < batch; ++s) {
                               for (std::size_t i = 0; i < r; ++i) {
                                   for (std::size_t j = 0; j < c; ++j) {
                                       g[s * r * c + i * c + j] += o.grad[s * r * c + j * r + i];
                                   }
                               }
                           }
                       });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size()) {
        shape_fail("reshape", "cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    }
    std::vector<double> out(a.data().begin(), a.data().end());
    return make_result("reshape", std::move(shape), std::move(out), {a},
                       [](const TensorImpl& o, std::span<const ImplPtr> in) {
                           auto& g = in[0]->grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               g[i] += o.grad[i];
                           }
                       });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) {
        s += v;
    }
    return make_result("sum", Shape{}, {s}, {a}, [](const TensorImpl& o, std::span<const ImplPtr> in) {
        auto& g = in[0]->grad_buffer();
        for (double& v : g) {
            v += o.grad[0];
        }
    });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor sum_axis(const Tensor& a, std::size_t axis) {
    const AxisSplit s = split_at("sum_axis", a.shape(), axis);
    Shape shape = a.shape();
    shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
    std::vector<double> out(s.outer * s.inner, 0.0);
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t e = 0; e < s.extent; ++e) {
            for (std::size_t i = 0; i < s.inner; ++i) {
                out[o * s.inner + i] += a[(o * s.extent + e) * s.inner + i];
            }
        }
    }
    return make_result("sum_axis", std::move(shape), std::move(out), {a},
                       [s](const TensorImpl& out_t, std::span<const ImplPtr> in) {
                           auto& g = in[0]->grad_buffer();
                           for (std::size_t o = 0; o < s.outer; ++o) {
                               for (std::size_t e = 0; e < s.extent; ++e) {
                                   for (std::size_t i = 0; i < s.inner; ++i) {
                                       g[(o * s.extent + e) * s.inner + i] += out_t.grad[o * s.inner + i];
                                   }
                               }
                           }
                       });
}

Tensor mean_axis(const Tensor& a, std::size_t axis) {
    const std::size_t n = split_at("mean_axis", a.shape(), axis).extent;
    return scale(sum_axis(a, axis), 1.0 / static_cast<double>(n));
}

Tensor softmax(const Tensor& a, std::size_t axis) {
    const AxisSplit s = split_at("softmax", a.shape(), axis);
    std::vector<double> out(a.size());
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.extent * s.inner + i;
            double mx = a[base];
            for (std::size_t e = 1; e < s.extent; ++e) {
                mx = std::max(mx, a[base + e * s.inner]);
            }
            double z = 0.0;
            for (std::size_t e = 0; e < s.extent; ++e) {
                const double v = std::exp(a[base + e * s.inner] - mx);
                out[base + e * s.inner] = v;
                z += v;
            }
            for (std::size_t e = 0; e < s.extent; ++e) {
                out[base + e * s.inner] /= z;
            }
        }
    }
    return make_result("softmax", a.shape(), std::move(out), {a}, [s](const TensorImpl& o, std::span<const ImplPtr> in) {
        auto& g = in[0]->grad_buffer();
        for (std::size_t ot = 0; ot < s.outer; ++ot) {
            for (std::size_t i = 0; i < s.inner; ++i) {
                const std::size_t base = ot * s.extent * s.inner + i;
                double dot = 0.0;
                for (std::size_t e = 0; e < s.extent; ++e) {
                    dot += o.grad[base + e * s.inner] * o.data[base + e * s.inner];
                }
                for (std::size_t e = 0; e < s.extent; ++e) {
                    const std::size_t idx = base + e * s.inner;
                    g[idx] += o.data[idx] * (o.grad[idx] - dot);
                }
            }
        }
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) {
        shape_fail("concat", "no operands");
    }
    const Shape& ref = parts.front().shape();
    split_at("concat", ref, axis);
    std::vector<std::size_t> extents;
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        const Shape& sh = p.shape();
        bool ok = sh.size() == ref.size();
        for (std::size_t d = 0; ok && d < sh.size(); ++d) {
            ok = d == axis || sh[d] == ref[d];
        }
        if (!ok) {
            shape_fail("concat", "operand " + shape_str(sh) + " does not match " + shape_str(ref) + " off axis " +
                                     std::to_string(axis));
        }
        extents.push_back(sh[axis]);
        total += sh[axis];
    }
    Shape shape = ref;
    shape[axis] = total;
    const AxisSplit s = split_at("concat", shape, axis);
    std::vector<double> out(numel(shape));
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const std::size_t ext = extents[p];
        for (std::size_t o = 0; o < s.outer; ++o) {
            std::copy_n(parts[p].data().data() + o * ext * s.inner, ext * s.inner,
                        out.data() + (o * total + offset) * s.inner);
        }
        offset += ext;
    }
    return make_result("concat", std::move(shape), std::move(out), parts,
                       [s, extents, total](const TensorImpl& o, std::span<const ImplPtr> in) {
                           std::size_t off = 0;
                           for (std::size_t p = 0; p < in.size(); ++p) {
                               const std::size_t ext = extents[p];
                               if (in[p]->tracked()) {
                                   auto& g = in[p]->grad_buffer();
                                   for (std::size_t ot = 0; ot < s.outer; ++ot) {
                                       const double* src = o.grad.data() + (ot * total + off) * s.inner;
                                       double* dst = g.data() + ot * ext * s.inner;
                                       for (std::size_t i = 0; i < ext * s.inner; ++i) {
                                           dst[i] += src[i];
                                       }
                                   }
                               }
                               off += ext;
                           }
                       });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
    const AxisSplit s = split_at("slice", a.shape(), axis);
    if (begin >= end || end > s.extent) {
        shape_fail("slice", "range [" + std::to_string(begin) + ", " + std::to_string(end) + ") invalid for extent " +
                                std::to_string(s.extent) + " of " + shape_str(a.shape()));
    }
    const std::size_t len = end - begin;
    Shape shape = a.shape();
    shape[axis] = len;
    std::vector<double> out(s.outer * len * s.inner);
    for (std::size_t o = 0; o < s.outer; ++o) {
        std::copy_n(a.data().data() + (o * s.extent + begin) * s.inner, len * s.inner, out.data() + o * len * s.inner);
    }
    return make_result("slice", std::move(shape), std::move(out), {a},
                       [s, begin, len](const TensorImpl& o, std::span<const ImplPtr> in) {
                           auto& g = in[0]->grad_buffer();
                           for (std::size_t ot = 0; ot < s.outer; ++ot) {
                               const double* src = o.grad.data() + ot * len * s.inner;
                               double* dst = g.data() + (ot * s.extent + begin) * s.inner;
                               for (std::size_t i = 0; i < len * s.inner; ++i) {
                                   dst[i] += src[i];
                               }
                           }
                       });
}

Tensor stack(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        shape_fail("stack", "no operands");
    }
    std::vector<Tensor> lifted;
    lifted.reserve(parts.size());
    Shape unit = parts.front().shape();
    unit.insert(unit.begin(), 1);
    for (const Tensor& p : parts) {
        if (p.shape() != parts.front().shape()) {
            shape_fail("stack", "operand " + shape_str(p.shape()) + " differs from " +
                                    shape_str(parts.front().shape()));
        }
        lifted.push_back(reshape(p, unit));
    }
    return concat(lifted, 0);
}

namespace {

struct ConvGeom {
    std::size_t n, c, h, w, o, k, stride, pad, oh, ow;
};

// cols: [c*k*k, oh*ow] for one sample.
void im2col(const double* x, const ConvGeom& g, double* cols) {
    const std::size_t plane = g.oh * g.ow;
    for (std::size_t ch = 0; ch < g.c; ++ch) {
        for (std::size_t ki = 0; ki < g.k; ++ki) {
            for (std::size_t kj = 0; kj < g.k; ++kj) {
                double* row = cols + ((ch * g.k + ki) * g.k + kj) * plane;
                for (std::size_t y = 0; y < g.oh; ++y) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + ki) -
                                              static_cast<std::ptrdiff_t>(g.pad);
                    for (std::size_t xo = 0; xo < g.ow; ++xo) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * g.stride + kj) -
                                                  static_cast<std::ptrdiff_t>(g.pad);
                        const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.h) &&
                                            ix < static_cast<std::ptrdiff_t>(g.w);
                        row[y * g.ow + xo] = inside ? x[(ch * g.h + static_cast<std::size_t>(iy)) * g.w +
                                                        static_cast<std::size_t>(ix)]
                                                    : 0.0;
                    }
                }
            }
        }
    }
}

void col2im(const double* cols, const ConvGeom& g, double* dx) {
    const std::size_t plane = g.oh * g.ow;
    for (std::size_t ch = 0; ch < g.c; ++ch) {
        for (std::size_t ki = 0; ki < g.k; ++ki) {
            for (std::size_t kj = 0; kj < g.k; ++kj) {
                const double* row = cols + ((ch * g.k + ki) * g.k + kj) * plane;
                for (std::size_t y = 0; y < g.oh; ++y) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + ki) -
                                              static_cast<std::ptrdiff_t>(g.pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
                        continue;
                    }
                    for (std::size_t xo = 0; xo < g.ow; ++xo) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * g.stride + kj) -
                                                  static_cast<std::ptrdiff_t>(g.pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) {
                            continue;
                        }
                        dx[(ch * g.h + static_cast<std::size_t>(iy)) * g.w + static_cast<std::size_t>(ix)] +=
                            row[y * g.ow + xo];
                    }
                }
            }
        }
    }
}

} // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride, std::size_t pad) {
    require_rank("conv2d", x, 4, "input");
    require_rank("conv2d", weight, 4, "weight");
    if (stride == 0) {
        shape_fail("conv2d", "stride must be positive");
    }
    ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), stride, pad, 0, 0};
    if (weight.dim(1) != g.c || weight.dim(3) != g.k) {
        shape_fail("conv2d", "weight " + shape_str(weight.shape()) + " incompatible with input " +
                                 shape_str(x.shape()));
    }
    if (bias.rank() != 1 || bias.dim(0) != g.o) {
        shape_fail("conv2d", "bias " + shape_str(bias.shape()) + " must be [" + std::to_string(g.o) + "]");
    }
    if (g.h + 2 * pad < g.k || g.w + 2 * pad < g.k) {
        shape_fail("conv2d", "kernel " + std::to_string(g.k) + " larger than padded input " + shape_str(x.shape()));
    }
    g.oh = (g.h + 2 * pad - g.k) / stride + 1;
    g.ow = (g.w + 2 * pad - g.k) / stride + 1;
    const std::size_t plane = g.oh * g.ow;
    const std::size_t patch = g.c * g.k * g.k;
    std::vector<double> out(g.n * g.o * plane);
    std::vector<double> cols(patch * plane);
    for (std::size_t s = 0; s < g.n; ++s) {
        im2col(x.data().data() + s * g.c * g.h * g.w, g, cols.data());
        double* dst = out.data() + s * g.o * plane;
        kernels::gemm({weight.data().data(), cols.data(), dst, g.o, plane, patch, false, false, false});
        for (std::size_t oc = 0; oc < g.o; ++oc) {
            for (std::size_t p = 0; p < plane; ++p) {
                dst[oc * plane + p] += bias[oc];
            }
        }
    }
    return make_result(
        "conv2d", Shape{g.n, g.o, g.oh, g.ow}, std::move(out), {x, weight, bias},
        [g, plane, patch](const TensorImpl& o, std::span<const ImplPtr> in) {
            const TensorImpl& X = *in[0];
            const TensorImpl& Wt = *in[1];
            std::vector<double> cols(patch * plane);
            std::vector<double> dcols(patch * plane);
            for (std::size_t s = 0; s < g.n; ++s) {
                const double* dout = o.grad.data() + s * g.o * plane;
                if (Wt.tracked()) {
                    im2col(X.data.data() + s * g.c * g.h * g.w, g, cols.data());
                    kernels::gemm({dout, cols.data(), in[1]->grad_buffer().data(), g.o, patch, plane, false, true,
                                   true});
                }
                if (X.tracked()) {
                    kernels::gemm({Wt.data.data(), dout, dcols.data(), patch, plane, g.o, true, false, false});
                    col2im(dcols.data(), g, in[0]->grad_buffer().data() + s * g.c * g.h * g.w);
                }
                if (in[2]->tracked()) {
                    auto& gb = in[2]->grad_buffer();
                    for (std::size_t oc = 0; oc < g.o; ++oc) {
                        for (std::size_t p = 0; p < plane; ++p) {
                            gb[oc] += dout[oc * plane + p];
                        }
                    }
                }
            }
        });
}

Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats, bool training,
                    double momentum, double eps) {
    require_rank("batch_norm2d", x, 4, "input");
    const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    const Shape cshape{c};
    if (gamma.shape() != cshape || beta.shape() != cshape || stats.running_mean.shape() != cshape ||
        stats.running_var.shape() != cshape) {
        shape_fail("batch_norm2d", "per-channel parameters must be [" + std::to_string(c) + "] for input " +
                                       shape_str(x.shape()));
    }
    const double count = static_cast<double>(n * plane);
    std::vector<double> mean(c), invstd(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        if (training) {
            double s = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                for (std::size_t p = 0; p < plane; ++p) {
                    s += x[(b * c + ch) * plane + p];
                }
            }
            const double mu = s / count;
            double ss = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                for (std::size_t p = 0; p < plane; ++p) {
                    const double d = x[(b * c + ch) * plane + p] - mu;
                    ss += d * d;
                }
            }
            const double var = ss / count;
            mean[ch] = mu;
            invstd[ch] = 1.0 / std::sqrt(var + eps);
            const double unbiased = count > 1.0 ? ss / (count - 1.0) : var;
            stats.running_mean[ch] = (1.0 - momentum) * stats.running_mean[ch] + momentum * mu;
            stats.running_var[ch] = (1.0 - momentum) * stats.running_var[ch] + momentum * unbiased;
        } else {
            mean[ch] = stats.running_mean[ch];
            invstd[ch] = 1.0 / std::sqrt(stats.running_var[ch] + eps);
        }
    }
    std::vector<double> out(x.size());
    std::vector<double> xhat(x.size());
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t p = 0; p < plane; ++p) {
                const std::size_t idx = (b * c + ch) * plane + p;
                xhat[idx] = (x[idx] - mean[ch]) * invstd[ch];
                out[idx] = gamma[ch] * xhat[idx] + beta[ch];
            }
        }
    }
    return make_result(
        "batch_norm2d", x.shape(), std::move(out), {x, gamma, beta},
        [n, c, plane, count, training, invstd, xhat = std::move(xhat)](const TensorImpl& o,
                                                                       std::span<const ImplPtr> in) {
            const TensorImpl& G = *in[1];
            std::vector<double> dsum(c, 0.0), dxhat_sum(c, 0.0);
            for (std::size_t b = 0; b < n; ++b) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    for (std::size_t p = 0; p < plane; ++p) {
                        const std::size_t idx = (b * c + ch) * plane + p;
                        dsum[ch] += o.grad[idx];
                        dxhat_sum[ch] += o.grad[idx] * xhat[idx];
                    }
                }
            }
            if (in[1]->tracked()) {
                auto& gg = in[1]->grad_buffer();
                for (std::size_t ch = 0; ch < c; ++ch) {
                    gg[ch] += dxhat_sum[ch];
                }
            }
            if (in[2]->tracked()) {
                auto& gb = in[2]->grad_buffer();
                for (std::size_t ch = 0; ch < c; ++ch) {
                    gb[ch] += dsum[ch];
                }
            }
            if (in[0]->tracked()) {
                auto& gx = in[0]->grad_buffer();
                for (std::size_t b = 0; b < n; ++b) {
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        const double gam = G.data[ch];
                        for (std::size_t p = 0; p < plane; ++p) {
                            const std::size_t idx = (b * c + ch) * plane + p;
                            if (training) {
                                // dy*gamma terms with the batch mean/variance dependence folded in.
                                gx[idx] += gam * invstd[ch] / count *
                                           (count * o.grad[idx] - dsum[ch] - xhat[idx] * dxhat_sum[ch]);
                            } else {
                                gx[idx] += gam * invstd[ch] * o.grad[idx];
                            }
                        }
                    }
                }
            }
        });
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
    require_rank("embedding", table, 2, "table");
    const std::size_t v = table.dim(0), e = table.dim(1);
    if (ids.empty()) {
        shape_fail("embedding", "empty id list");
    }
    std::vector<double> out(ids.size() * e);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= v) {
            shape_fail("embedding", "token id " + std::to_string(ids[r]) + " outside vocabulary of " +
                                        std::to_string(v));
        }
        std::copy_n(table.data().data() + static_cast<std::size_t>(ids[r]) * e, e, out.data() + r * e);
    }
    return make_result("embedding", Shape{ids.size(), e}, std::move(out), {table},
                       [ids, e](const TensorImpl& o, std::span<const ImplPtr> in) {
                           auto& g = in[0]->grad_buffer();
                           for (std::size_t r = 0; r < ids.size(); ++r) {
                               double* dst = g.data() + static_cast<std::size_t>(ids[r]) * e;
                               for (std::size_t j = 0; j < e; ++j) {
                                   dst[j] += o.grad[r * e + j];
                               }
                           }
                       });
}

Tensor cross_entropy_sum(const Tensor& logits, const std::vector<int>& targets, int ignore_index) {
    require_rank("cross_entropy", logits, 2, "logits");
    const std::size_t b = logits.dim(0), v = logits.dim(1);
    if (targets.size() != b) {
        shape_fail("cross_entropy", std::to_string(targets.size()) + " targets for " + std::to_string(b) +
                                        " rows of logits " + shape_str(logits.shape()));
    }
    std::vector<double> probs(b * v);
    double loss = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
        const double* row = logits.data().data() + r * v;
        double mx = row[0];
        for (std::size_t j = 1; j < v; ++j) {
            mx = std::max(mx, row[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < v; ++j) {
            probs[r * v + j] = std::exp(row[j] - mx);
            z += probs[r * v + j];
        }
        for (std::size_t j = 0; j < v; ++j) {
            probs[r * v + j] /= z;
        }
        if (targets[r] == ignore_index) {
            continue;
        }
        if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= v) {
            shape_fail("cross_entropy", "target " + std::to_string(targets[r]) + " outside " + std::to_string(v) +
                                            " classes");
        }
        loss += -(row[targets[r]] - mx - std::log(z));
    }
    return make_result("cross_entropy", Shape{}, {loss}, {logits},
                       [targets, ignore_index, b, v, probs = std::move(probs)](const TensorImpl& o,
                                                                              std::span<const ImplPtr> in) {
                           auto& g = in[0]->grad_buffer();
                           const double up = o.grad[0];
                           for (std::size_t r = 0; r < b; ++r) {
                               if (targets[r] == ignore_index) {
                                   continue;
                               }
                               for (std::size_t j = 0; j < v; ++j) {
                                   const double onehot = static_cast<int>(j) == targets[r] ? 1.0 : 0.0;
                                   g[r * v + j] += up * (probs[r * v + j] - onehot);
                               }
                           }
                       });
}

} // namespace l2c::ops
