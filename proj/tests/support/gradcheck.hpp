#ifndef ADVFACE_TESTS_GRADCHECK_HPP
#define ADVFACE_TESTS_GRADCHECK_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "advface/core/autograd.hpp"

// Central finite-difference gradient checker, independent of the backward
// implementations it verifies. Reported error is norm-based:
//   ||g_analytic - g_numeric|| / (||g_analytic|| + ||g_numeric|| + tiny)
namespace gradcheck {

template <typename S>
struct Result {
    double rel_error = 0.0;
    double analytic_norm = 0.0;
    double numeric_norm = 0.0;
};

// loss_fn rebuilds the graph from current leaf values and returns the scalar.
template <typename S>
Result<S> check(const std::vector<advface::nn::Var<S>>& leaves,
                const std::function<advface::nn::Var<S>()>& loss_fn, double h = 1e-5) {
    using advface::nn::backward;

    for (const auto& l : leaves) l->zero_grad();
    auto root = loss_fn();
    backward(root);

    std::vector<std::vector<S>> analytic;
    for (const auto& l : leaves) {
        std::vector<S> g(static_cast<size_t>(l->value.numel()));
        for (long i = 0; i < l->value.numel(); ++i) g[static_cast<size_t>(i)] = l->grad[i];
        analytic.push_back(std::move(g));
    }

    double diff2 = 0.0, an2 = 0.0, nu2 = 0.0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        auto& l = leaves[li];
        for (long i = 0; i < l->value.numel(); ++i) {
            S orig = l->value[i];
            l->value[i] = orig + static_cast<S>(h);
            double up = static_cast<double>(loss_fn()->value[0]);
            l->value[i] = orig - static_cast<S>(h);
            double dn = static_cast<double>(loss_fn()->value[0]);
            l->value[i] = orig;
            double gn = (up - dn) / (2.0 * h);
            double ga = static_cast<double>(analytic[li][static_cast<size_t>(i)]);
            diff2 += (ga - gn) * (ga - gn);
            an2 += ga * ga;
            nu2 += gn * gn;
        }
    }
    Result<S> r;
    r.analytic_norm = std::sqrt(an2);
    r.numeric_norm = std::sqrt(nu2);
    r.rel_error = std::sqrt(diff2) / (r.analytic_norm + r.numeric_norm + 1e-12);
    return r;
}

}  // namespace gradcheck

#endif
