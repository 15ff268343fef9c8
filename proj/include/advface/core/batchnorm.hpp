#ifndef ADVFACE_CORE_BATCHNORM_HPP
#define ADVFACE_CORE_BATCHNORM_HPP

#include "advface/core/ops.hpp"

namespace advface::nn {

// Batch normalization over (N,H,W) per channel. In training mode batch
// statistics are used and running statistics are updated in place (biased
// variance, matching the normalization path). In evaluation mode the stored
// running statistics are used, so outputs are independent of batch
// composition. running_mean/running_var live in the owning module and must
// outlive the graph.
template <typename S>
Var<S> batch_norm2d(Var<S> x, Var<S> gamma, Var<S> beta, Tensor<S>* running_mean,
                    Tensor<S>* running_var, bool training, S momentum = S(0.1),
                    S eps = S(1e-5)) {
    const auto& s = x->value.shape();
    require(s.size() == 4, "batch_norm2d: rank-4 input expected");
    int n0 = s[0], c = s[1], h = s[2], w = s[3];
    require(gamma->value.numel() == c && beta->value.numel() == c,
            "batch_norm2d: gamma/beta size mismatch");
    require(running_mean->numel() == c && running_var->numel() == c,
            "batch_norm2d: running stats size mismatch");
    long plane = static_cast<long>(h) * w;
    long m = static_cast<long>(n0) * plane;

    auto mean = std::make_shared<std::vector<S>>(c);
    auto ivar = std::make_shared<std::vector<S>>(c);
    auto xhat = std::make_shared<Tensor<S>>(x->value.shape());

    if (training) {
        for (int j = 0; j < c; ++j) {
            S mu = 0;
            for (int i = 0; i < n0; ++i) {
                const S* p = x->value.data() + (static_cast<long>(i) * c + j) * plane;
                for (long t = 0; t < plane; ++t) mu += p[t];
            }
            mu /= static_cast<S>(m);
            S var = 0;
            for (int i = 0; i < n0; ++i) {
                const S* p = x->value.data() + (static_cast<long>(i) * c + j) * plane;
                for (long t = 0; t < plane; ++t) {
                    S d = p[t] - mu;
                    var += d * d;
                }
            }
            var /= static_cast<S>(m);
            (*mean)[j] = mu;
            (*ivar)[j] = S(1) / std::sqrt(var + eps);
            (*running_mean)[j] = (S(1) - momentum) * (*running_mean)[j] + momentum * mu;
            (*running_var)[j] = (S(1) - momentum) * (*running_var)[j] + momentum * var;
        }
    } else {
        for (int j = 0; j < c; ++j) {
            (*mean)[j] = (*running_mean)[j];
            (*ivar)[j] = S(1) / std::sqrt((*running_var)[j] + eps);
        }
    }

    Tensor<S> out(x->value.shape());
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < c; ++j) {
            const S* p = x->value.data() + (static_cast<long>(i) * c + j) * plane;
            S* xh = xhat->data() + (static_cast<long>(i) * c + j) * plane;
            S* q = out.data() + (static_cast<long>(i) * c + j) * plane;
            S g = gamma->value[j], bb = beta->value[j], mu = (*mean)[j], iv = (*ivar)[j];
            for (long t = 0; t < plane; ++t) {
                xh[t] = (p[t] - mu) * iv;
                q[t] = g * xh[t] + bb;
            }
        }

    return make_op<S>(std::move(out), {x, gamma, beta},
                      [x, gamma, beta, xhat, ivar, n0, c, plane, m, training](Node<S>& n) {
        for (int j = 0; j < c; ++j) {
            S g = gamma->value[j], iv = (*ivar)[j];
            S sum_dy = 0, sum_dy_xhat = 0;
            for (int i = 0; i < n0; ++i) {
                const S* dy = n.grad.data() + (static_cast<long>(i) * c + j) * plane;
                const S* xh = xhat->data() + (static_cast<long>(i) * c + j) * plane;
                for (long t = 0; t < plane; ++t) {
                    sum_dy += dy[t];
                    sum_dy_xhat += dy[t] * xh[t];
                }
            }
            if (gamma->requires_grad) gamma->grad[j] += sum_dy_xhat;
            if (beta->requires_grad) beta->grad[j] += sum_dy;
            if (!x->requires_grad) continue;
            if (training) {
                // dx = (g*iv/m) * (m*dy - sum(dy) - xhat*sum(dy*xhat))
                S k1 = g * iv / static_cast<S>(m);
                for (int i = 0; i < n0; ++i) {
                    const S* dy = n.grad.data() + (static_cast<long>(i) * c + j) * plane;
                    const S* xh = xhat->data() + (static_cast<long>(i) * c + j) * plane;
                    S* dx = x->grad.data() + (static_cast<long>(i) * c + j) * plane;
                    for (long t = 0; t < plane; ++t)
                        dx[t] += k1 * (static_cast<S>(m) * dy[t] - sum_dy - xh[t] * sum_dy_xhat);
                }
            } else {
                S k = g * iv;
                for (int i = 0; i < n0; ++i) {
                    const S* dy = n.grad.data() + (static_cast<long>(i) * c + j) * plane;
                    S* dx = x->grad.data() + (static_cast<long>(i) * c + j) * plane;
                    for (long t = 0; t < plane; ++t) dx[t] += k * dy[t];
                }
            }
        }
    });
}

}  // namespace advface::nn

#endif
