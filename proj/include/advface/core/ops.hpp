#ifndef ADVFACE_CORE_OPS_HPP
#define ADVFACE_CORE_OPS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "advface/core/autograd.hpp"

namespace advface::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapMat = Eigen::Map<Mat<S>>;
template <typename S>
using CMapMat = Eigen::Map<const Mat<S>>;

template <typename S>
MapMat<S> as_matrix(Tensor<S>& t, int rows, int cols) {
    return MapMat<S>(t.data(), rows, cols);
}
template <typename S>
CMapMat<S> as_matrix(const Tensor<S>& t, int rows, int cols) {
    return CMapMat<S>(t.data(), rows, cols);
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
    require(a->value.same_shape(b->value), "add: shape mismatch");
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
    return make_op<S>(std::move(out), {a, b}, [a, b](Node<S>& n) {
        if (a->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
        if (b->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) b->grad[i] += n.grad[i];
    });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
    require(a->value.same_shape(b->value), "sub: shape mismatch");
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i) out[i] = a->value[i] - b->value[i];
    return make_op<S>(std::move(out), {a, b}, [a, b](Node<S>& n) {
        if (a->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
        if (b->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) b->grad[i] -= n.grad[i];
    });
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
    require(a->value.same_shape(b->value), "mul: shape mismatch");
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i) out[i] = a->value[i] * b->value[i];
    return make_op<S>(std::move(out), {a, b}, [a, b](Node<S>& n) {
        if (a->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i] * b->value[i];
        if (b->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) b->grad[i] += n.grad[i] * a->value[i];
    });
}

template <typename S>
Var<S> scale(Var<S> a, S s) {
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i) out[i] = a->value[i] * s;
    return make_op<S>(std::move(out), {a}, [a, s](Node<S>& n) {
        if (a->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i] * s;
    });
}

template <typename S>
Var<S> add_scalar(Var<S> a, S s) {
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i) out[i] = a->value[i] + s;
    return make_op<S>(std::move(out), {a}, [a](Node<S>& n) {
        if (a->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
    });
}

// Multiply by a fixed tensor (masks, piecewise-constant selectors).
template <typename S>
Var<S> mul_const(Var<S> a, Tensor<S> c) {
    require(a->value.same_shape(c), "mul_const: shape mismatch");
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i) out[i] = a->value[i] * c[i];
    return make_op<S>(std::move(out), {a}, [a, c = std::move(c)](Node<S>& n) {
        if (a->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i] * c[i];
    });
}

template <typename S>
Var<S> add_const(Var<S> a, Tensor<S> c) {
    require(a->value.same_shape(c), "add_const: shape mismatch");
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i) out[i] = a->value[i] + c[i];
    return make_op<S>(std::move(out), {a}, [a](Node<S>& n) {
        if (a->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
    });
}

template <typename S>
Var<S> relu(Var<S> a) {
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i) out[i] = a->value[i] > S(0) ? a->value[i] : S(0);
    return make_op<S>(std::move(out), {a}, [a](Node<S>& n) {
        if (!a->requires_grad) return;
        for (long i = 0; i < n.grad.numel(); ++i)
            if (a->value[i] > S(0)) a->grad[i] += n.grad[i];
    });
}

template <typename S>
Var<S> tanh_op(Var<S> a) {
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i) out[i] = std::tanh(a->value[i]);
    return make_op<S>(std::move(out), {a}, [a](Node<S>& n) {
        if (!a->requires_grad) return;
        for (long i = 0; i < n.grad.numel(); ++i) {
            S y = n.value[i];
            a->grad[i] += n.grad[i] * (S(1) - y * y);
        }
    });
}

// clip to [0,1] with the natural subgradient: 1 where the input already lies
// in [0,1] (boundary included), 0 outside.
template <typename S>
Var<S> clip01(Var<S> a) {
    Tensor<S> out(a->value.shape());
    for (long i = 0; i < out.numel(); ++i)
        out[i] = std::min(S(1), std::max(S(0), a->value[i]));
    return make_op<S>(std::move(out), {a}, [a](Node<S>& n) {
        if (!a->requires_grad) return;
        for (long i = 0; i < n.grad.numel(); ++i) {
            S v = a->value[i];
            if (v >= S(0) && v <= S(1)) a->grad[i] += n.grad[i];
        }
    });
}

// ---------------------------------------------------------------------------
// Matrix ops
// ---------------------------------------------------------------------------

// A (m x k) * B (k x n)
template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
    require(a->value.rank() == 2 && b->value.rank() == 2 && a->value.dim(1) == b->value.dim(0),
            "matmul: bad shapes");
    int m = a->value.dim(0), k = a->value.dim(1), n2 = b->value.dim(1);
    Tensor<S> out({m, n2});
    as_matrix(out, m, n2).noalias() = as_matrix(a->value, m, k) * as_matrix(b->value, k, n2);
    return make_op<S>(std::move(out), {a, b}, [a, b, m, k, n2](Node<S>& n) {
        auto dz = as_matrix(n.grad, m, n2);
        if (a->requires_grad)
            as_matrix(a->grad, m, k).noalias() += dz * as_matrix(b->value, k, n2).transpose();
        if (b->requires_grad)
            as_matrix(b->grad, k, n2).noalias() += as_matrix(a->value, m, k).transpose() * dz;
    });
}

// A (n x d) * B^T (c x d) -> (n x c)
template <typename S>
Var<S> matmul_nt(Var<S> a, Var<S> b) {
    require(a->value.rank() == 2 && b->value.rank() == 2 && a->value.dim(1) == b->value.dim(1),
            "matmul_nt: bad shapes");
    int n0 = a->value.dim(0), d = a->value.dim(1), c = b->value.dim(0);
    Tensor<S> out({n0, c});
    as_matrix(out, n0, c).noalias() =
        as_matrix(a->value, n0, d) * as_matrix(b->value, c, d).transpose();
    return make_op<S>(std::move(out), {a, b}, [a, b, n0, d, c](Node<S>& n) {
        auto dz = as_matrix(n.grad, n0, c);
        if (a->requires_grad)
            as_matrix(a->grad, n0, d).noalias() += dz * as_matrix(b->value, c, d);
        if (b->requires_grad)
            as_matrix(b->grad, c, d).noalias() += dz.transpose() * as_matrix(a->value, n0, d);
    });
}

// x (n x k) * W^T (o x k) + bias (o)
template <typename S>
Var<S> linear(Var<S> x, Var<S> w, Var<S> b) {
    int n0 = x->value.dim(0), k = x->value.dim(1), o = w->value.dim(0);
    require(w->value.dim(1) == k && b->value.numel() == o, "linear: bad shapes");
    Tensor<S> out({n0, o});
    auto om = as_matrix(out, n0, o);
    om.noalias() = as_matrix(x->value, n0, k) * as_matrix(w->value, o, k).transpose();
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < o; ++j) out.at(i, j) += b->value[j];
    return make_op<S>(std::move(out), {x, w, b}, [x, w, b, n0, k, o](Node<S>& n) {
        auto dz = as_matrix(n.grad, n0, o);
        if (x->requires_grad)
            as_matrix(x->grad, n0, k).noalias() += dz * as_matrix(w->value, o, k);
        if (w->requires_grad)
            as_matrix(w->grad, o, k).noalias() += dz.transpose() * as_matrix(x->value, n0, k);
        if (b->requires_grad)
            for (int i = 0; i < n0; ++i)
                for (int j = 0; j < o; ++j) b->grad[j] += n.grad[static_cast<long>(i) * o + j];
    });
}

// ---------------------------------------------------------------------------
// Shape / reduction
// ---------------------------------------------------------------------------

template <typename S>
Var<S> concat_channels(Var<S> a, Var<S> b) {
    const auto& sa = a->value.shape();
    const auto& sb = b->value.shape();
    require(sa.size() == 4 && sb.size() == 4 && sa[0] == sb[0] && sa[2] == sb[2] && sa[3] == sb[3],
            "concat_channels: incompatible shapes");
    int n0 = sa[0], ca = sa[1], cb = sb[1], h = sa[2], w = sa[3];
    Tensor<S> out({n0, ca + cb, h, w});
    long plane = static_cast<long>(h) * w;
    for (int i = 0; i < n0; ++i) {
        std::copy_n(a->value.data() + static_cast<long>(i) * ca * plane, ca * plane,
                    out.data() + static_cast<long>(i) * (ca + cb) * plane);
        std::copy_n(b->value.data() + static_cast<long>(i) * cb * plane, cb * plane,
                    out.data() + (static_cast<long>(i) * (ca + cb) + ca) * plane);
    }
    return make_op<S>(std::move(out), {a, b}, [a, b, n0, ca, cb, plane](Node<S>& n) {
        for (int i = 0; i < n0; ++i) {
            const S* gsrc = n.grad.data() + static_cast<long>(i) * (ca + cb) * plane;
            if (a->requires_grad) {
                S* dst = a->grad.data() + static_cast<long>(i) * ca * plane;
                for (long j = 0; j < ca * plane; ++j) dst[j] += gsrc[j];
            }
            if (b->requires_grad) {
                S* dst = b->grad.data() + static_cast<long>(i) * cb * plane;
                for (long j = 0; j < cb * plane; ++j) dst[j] += gsrc[ca * plane + j];
            }
        }
    });
}

template <typename S>
Var<S> global_avg_pool(Var<S> x) {
    const auto& s = x->value.shape();
    require(s.size() == 4, "global_avg_pool: rank-4 input expected");
    int n0 = s[0], c = s[1];
    long plane = static_cast<long>(s[2]) * s[3];
    Tensor<S> out({n0, c});
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < c; ++j) {
            const S* p = x->value.data() + (static_cast<long>(i) * c + j) * plane;
            S acc = 0;
            for (long t = 0; t < plane; ++t) acc += p[t];
            out.at(i, j) = acc / static_cast<S>(plane);
        }
    return make_op<S>(std::move(out), {x}, [x, n0, c, plane](Node<S>& n) {
        if (!x->requires_grad) return;
        for (int i = 0; i < n0; ++i)
            for (int j = 0; j < c; ++j) {
                S g = n.grad.at(i, j) / static_cast<S>(plane);
                S* p = x->grad.data() + (static_cast<long>(i) * c + j) * plane;
                for (long t = 0; t < plane; ++t) p[t] += g;
            }
    });
}

template <typename S>
Var<S> sum_all(Var<S> x) {
    Tensor<S> out({1});
    S acc = 0;
    for (long i = 0; i < x->value.numel(); ++i) acc += x->value[i];
    out[0] = acc;
    return make_op<S>(std::move(out), {x}, [x](Node<S>& n) {
        if (!x->requires_grad) return;
        for (long i = 0; i < x->grad.numel(); ++i) x->grad[i] += n.grad[0];
    });
}

template <typename S>
Var<S> mean_all(Var<S> x) {
    Tensor<S> out({1});
    S acc = 0;
    for (long i = 0; i < x->value.numel(); ++i) acc += x->value[i];
    out[0] = acc / static_cast<S>(x->value.numel());
    return make_op<S>(std::move(out), {x}, [x](Node<S>& n) {
        if (!x->requires_grad) return;
        S g = n.grad[0] / static_cast<S>(x->value.numel());
        for (long i = 0; i < x->grad.numel(); ++i) x->grad[i] += g;
    });
}

// (N,C,H,W) -> (N), mean over C,H,W per image.
template <typename S>
Var<S> mean_per_image(Var<S> x) {
    const auto& s = x->value.shape();
    require(s.size() == 4, "mean_per_image: rank-4 input expected");
    int n0 = s[0];
    long per = static_cast<long>(s[1]) * s[2] * s[3];
    Tensor<S> out({n0});
    for (int i = 0; i < n0; ++i) {
        const S* p = x->value.data() + i * per;
        S acc = 0;
        for (long t = 0; t < per; ++t) acc += p[t];
        out[i] = acc / static_cast<S>(per);
    }
    return make_op<S>(std::move(out), {x}, [x, n0, per](Node<S>& n) {
        if (!x->requires_grad) return;
        for (int i = 0; i < n0; ++i) {
            S g = n.grad[i] / static_cast<S>(per);
            S* p = x->grad.data() + i * per;
            for (long t = 0; t < per; ++t) p[t] += g;
        }
    });
}

// ---------------------------------------------------------------------------
// Normalization / similarity
// ---------------------------------------------------------------------------

namespace detail {
// Shared backward for y = x / ||x|| along a strided axis:
// dx = (dy - y * <y, dy>) / ||x||
template <typename S>
void normalize_backward(const S* y, const S* dy, S* dx, const S* norms, long groups,
                        long group_size, long stride, long outer_stride, long inner) {
    for (long g = 0; g < groups; ++g) {
        long base = (g / inner) * outer_stride + (g % inner);
        S dot = 0;
        for (long j = 0; j < group_size; ++j) dot += y[base + j * stride] * dy[base + j * stride];
        S inv = S(1) / norms[g];
        for (long j = 0; j < group_size; ++j)
            dx[base + j * stride] += (dy[base + j * stride] - y[base + j * stride] * dot) * inv;
    }
}
}  // namespace detail

// Rows of a (N,D) matrix to unit L2 norm.
template <typename S>
Var<S> l2_normalize_rows(Var<S> x, S eps = S(1e-12)) {
    require(x->value.rank() == 2, "l2_normalize_rows: rank-2 input expected");
    int n0 = x->value.dim(0), d = x->value.dim(1);
    Tensor<S> out(x->value.shape());
    auto norms = std::make_shared<std::vector<S>>(n0);
    for (int i = 0; i < n0; ++i) {
        const S* p = x->value.data() + static_cast<long>(i) * d;
        S acc = 0;
        for (int j = 0; j < d; ++j) acc += p[j] * p[j];
        S nv = std::sqrt(acc + eps);
        (*norms)[i] = nv;
        S* q = out.data() + static_cast<long>(i) * d;
        for (int j = 0; j < d; ++j) q[j] = p[j] / nv;
    }
    return make_op<S>(std::move(out), {x}, [x, norms, n0, d](Node<S>& n) {
        if (!x->requires_grad) return;
        detail::normalize_backward(n.value.data(), n.grad.data(), x->grad.data(), norms->data(),
                                   n0, d, 1L, static_cast<long>(d), 1L);
    });
}

// Channel vectors of a (N,C,H,W) map to unit L2 norm at every spatial site.
template <typename S>
Var<S> l2_normalize_channels(Var<S> x, S eps = S(1e-12)) {
    const auto& s = x->value.shape();
    require(s.size() == 4, "l2_normalize_channels: rank-4 input expected");
    int n0 = s[0], c = s[1], h = s[2], w = s[3];
    long plane = static_cast<long>(h) * w;
    long groups = static_cast<long>(n0) * plane;
    Tensor<S> out(x->value.shape());
    auto norms = std::make_shared<std::vector<S>>(groups);
    for (int i = 0; i < n0; ++i)
        for (long t = 0; t < plane; ++t) {
            long base = static_cast<long>(i) * c * plane + t;
            S acc = 0;
            for (int j = 0; j < c; ++j) {
                S v = x->value[base + j * plane];
                acc += v * v;
            }
            S nv = std::sqrt(acc + eps);
            (*norms)[i * plane + t] = nv;
            for (int j = 0; j < c; ++j) out[base + j * plane] = x->value[base + j * plane] / nv;
        }
    return make_op<S>(std::move(out), {x}, [x, norms, c, plane](Node<S>& n) {
        if (!x->requires_grad) return;
        detail::normalize_backward(n.value.data(), n.grad.data(), x->grad.data(), norms->data(),
                                   static_cast<long>(norms->size()), static_cast<long>(c), plane,
                                   static_cast<long>(c) * plane, plane);
    });
}

// Row-wise dot product of two (N,D) matrices -> (N).
template <typename S>
Var<S> rowdot(Var<S> a, Var<S> b) {
    require(a->value.same_shape(b->value) && a->value.rank() == 2, "rowdot: bad shapes");
    int n0 = a->value.dim(0), d = a->value.dim(1);
    Tensor<S> out({n0});
    for (int i = 0; i < n0; ++i) {
        S acc = 0;
        for (int j = 0; j < d; ++j) acc += a->value.at(i, j) * b->value.at(i, j);
        out[i] = acc;
    }
    return make_op<S>(std::move(out), {a, b}, [a, b, n0, d](Node<S>& n) {
        for (int i = 0; i < n0; ++i) {
            S g = n.grad[i];
            if (a->requires_grad)
                for (int j = 0; j < d; ++j) a->grad.at(i, j) += g * b->value.at(i, j);
            if (b->requires_grad)
                for (int j = 0; j < d; ++j) b->grad.at(i, j) += g * a->value.at(i, j);
        }
    });
}

// ---------------------------------------------------------------------------
// Classification losses
// ---------------------------------------------------------------------------

// Per-sample y_i = x[i, idx[i]].
template <typename S>
Var<S> gather_rows(Var<S> x, std::vector<int> idx) {
    require(x->value.rank() == 2, "gather_rows: rank-2 input expected");
    int n0 = x->value.dim(0);
    require(static_cast<int>(idx.size()) == n0, "gather_rows: index count mismatch");
    Tensor<S> out({n0});
    for (int i = 0; i < n0; ++i) out[i] = x->value.at(i, idx[i]);
    return make_op<S>(std::move(out), {x}, [x, idx = std::move(idx), n0](Node<S>& n) {
        if (!x->requires_grad) return;
        for (int i = 0; i < n0; ++i) x->grad.at(i, idx[i]) += n.grad[i];
    });
}

// y = x with y[i, idx[i]] += delta[i].
template <typename S>
Var<S> scatter_row_add(Var<S> x, std::vector<int> idx, Var<S> delta) {
    require(x->value.rank() == 2 && delta->value.rank() == 1, "scatter_row_add: bad shapes");
    int n0 = x->value.dim(0);
    require(static_cast<int>(idx.size()) == n0 && delta->value.numel() == n0,
            "scatter_row_add: index count mismatch");
    Tensor<S> out = x->value;
    for (int i = 0; i < n0; ++i) out.at(i, idx[i]) += delta->value[i];
    return make_op<S>(std::move(out), {x, delta}, [x, delta, idx = std::move(idx), n0](Node<S>& n) {
        if (x->requires_grad)
            for (long i = 0; i < n.grad.numel(); ++i) x->grad[i] += n.grad[i];
        if (delta->requires_grad)
            for (int i = 0; i < n0; ++i) delta->grad[i] += n.grad.at(i, idx[i]);
    });
}

// Per-sample softmax cross-entropy over logits (N,C) -> (N).
template <typename S>
Var<S> softmax_cross_entropy(Var<S> logits, std::vector<int> labels) {
    require(logits->value.rank() == 2, "softmax_cross_entropy: rank-2 logits expected");
    int n0 = logits->value.dim(0), c = logits->value.dim(1);
    require(static_cast<int>(labels.size()) == n0, "softmax_cross_entropy: label count mismatch");
    Tensor<S> out({n0});
    auto probs = std::make_shared<Tensor<S>>(std::vector<int>{n0, c});
    for (int i = 0; i < n0; ++i) {
        require(labels[i] >= 0 && labels[i] < c, "softmax_cross_entropy: label out of range");
        const S* row = logits->value.data() + static_cast<long>(i) * c;
        S mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        S sum = 0;
        for (int j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
        S lse = mx + std::log(sum);
        out[i] = lse - row[labels[i]];
        for (int j = 0; j < c; ++j) probs->at(i, j) = std::exp(row[j] - lse);
    }
    return make_op<S>(std::move(out), {logits},
                      [logits, probs, labels = std::move(labels), n0, c](Node<S>& n) {
                          if (!logits->requires_grad) return;
                          for (int i = 0; i < n0; ++i) {
                              S g = n.grad[i];
                              for (int j = 0; j < c; ++j)
                                  logits->grad.at(i, j) +=
                                      g * (probs->at(i, j) - (j == labels[i] ? S(1) : S(0)));
                          }
                      });
}

}  // namespace advface::nn

#endif
