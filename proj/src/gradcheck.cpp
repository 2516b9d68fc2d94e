#include "l2c/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace l2c {

double gradient_check(const std::function<Tensor()>& f, Tensor& x, double eps, std::size_t max_components) {
    if (!(eps >= 1e-7 && eps <= 1e-3)) {
        throw std::invalid_argument("gradient_check: eps must lie in [1e-7, 1e-3]");
    }
    x.zero_grad();
    const Tensor y = f();
    if (y.size() != 1) {
        throw std::invalid_argument("gradient_check: function must be scalar-valued");
    }
    const double base = y.item();
    backward(y);
    const std::vector<double> analytic = x.grad();

    NoGradGuard no_grad;
    if (f().item() != base) {
        throw std::runtime_error("gradient_check: function is not deterministic");
    }
    double worst = 0.0;
    auto data = x.data();
    const std::size_t n = data.size();
    const std::size_t count = max_components == 0 ? n : std::min(n, max_components);
    for (std::size_t c = 0; c < count; ++c) {
        const std::size_t i = c * n / count;
        const double saved = data[i];
        data[i] = saved + eps;
        const double plus = f().item();
        data[i] = saved - eps;
        const double minus = f().item();
        data[i] = saved;
        const double numeric = (plus - minus) / (2.0 * eps);
        const double err = std::fabs(analytic[i] - numeric) / std::max(1.0, std::fabs(analytic[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

} // namespace l2c
