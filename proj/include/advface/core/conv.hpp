#ifndef ADVFACE_CORE_CONV_HPP
#define ADVFACE_CORE_CONV_HPP

#include "advface/core/ops.hpp"

namespace advface::nn {

namespace detail {

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// (C,H,W) image -> (C*K*K, Ho*Wo) column matrix.
template <typename S>
void im2col(const S* src, int c, int h, int w, int k, int stride, int pad, int ho, int wo,
            S* col) {
    for (int ci = 0; ci < c; ++ci)
        for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
                S* dst = col + ((static_cast<long>(ci) * k + kh) * k + kw) * ho * wo;
                for (int oh = 0; oh < ho; ++oh) {
                    int ih = oh * stride - pad + kh;
                    if (ih < 0 || ih >= h) {
                        std::fill(dst, dst + wo, S(0));
                        dst += wo;
                        continue;
                    }
                    const S* srow = src + (static_cast<long>(ci) * h + ih) * w;
                    for (int ow = 0; ow < wo; ++ow) {
                        int iw = ow * stride - pad + kw;
                        *dst++ = (iw < 0 || iw >= w) ? S(0) : srow[iw];
                    }
                }
            }
}

// Adjoint of im2col: accumulate (C*K*K, Ho*Wo) columns back into (C,H,W).
template <typename S>
void col2im(const S* col, int c, int h, int w, int k, int stride, int pad, int ho, int wo,
            S* dst) {
    for (int ci = 0; ci < c; ++ci)
        for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
                const S* srcp = col + ((static_cast<long>(ci) * k + kh) * k + kw) * ho * wo;
                for (int oh = 0; oh < ho; ++oh) {
                    int ih = oh * stride - pad + kh;
                    if (ih < 0 || ih >= h) {
                        srcp += wo;
                        continue;
                    }
                    S* drow = dst + (static_cast<long>(ci) * h + ih) * w;
                    for (int ow = 0; ow < wo; ++ow) {
                        int iw = ow * stride - pad + kw;
                        if (iw >= 0 && iw < w) drow[iw] += srcp[ow];
                    }
                    srcp += wo;
                }
            }
}

}  // namespace detail

// 2-D convolution, weight (Co, Ci, K, K), bias (Co), NCHW activations.
template <typename S>
Var<S> conv2d(Var<S> x, Var<S> w, Var<S> b, int stride, int pad) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    require(xs.size() == 4 && ws.size() == 4, "conv2d: rank-4 input/weight expected");
    require(xs[1] == ws[1], "conv2d: channel mismatch");
    int n0 = xs[0], ci = xs[1], h = xs[2], wd = xs[3];
    int co = ws[0], k = ws[2];
    require(ws[3] == k, "conv2d: square kernels only");
    require(b->value.numel() == co, "conv2d: bias size mismatch");
    int ho = detail::conv_out_dim(h, k, stride, pad);
    int wo = detail::conv_out_dim(wd, k, stride, pad);
    require(ho > 0 && wo > 0, "conv2d: output collapsed to zero size");

    long ckk = static_cast<long>(ci) * k * k;
    long hw = static_cast<long>(ho) * wo;
    Tensor<S> out({n0, co, ho, wo});

#pragma omp parallel for schedule(static) if (n0 > 1)
    for (int i = 0; i < n0; ++i) {
        std::vector<S> col(static_cast<size_t>(ckk * hw));
        detail::im2col(x->value.data() + static_cast<long>(i) * ci * h * wd, ci, h, wd, k, stride,
                       pad, ho, wo, col.data());
        MapMat<S> ym(out.data() + static_cast<long>(i) * co * hw, co, hw);
        ym.noalias() = as_matrix(w->value, co, ckk) * CMapMat<S>(col.data(), ckk, hw);
        for (int j = 0; j < co; ++j) ym.row(j).array() += b->value[j];
    }

    return make_op<S>(std::move(out), {x, w, b},
                      [x, w, b, n0, ci, h, wd, co, k, stride, pad, ho, wo, ckk, hw](Node<S>& n) {
        bool need_w = w->requires_grad;
        bool need_x = x->requires_grad;
        // Per-image weight partials, reduced in image order so results do not
        // depend on the thread count.
        std::vector<Tensor<S>> wparts;
        if (need_w) wparts.assign(n0, Tensor<S>({static_cast<int>(co), static_cast<int>(ckk)}));
#pragma omp parallel for schedule(static) if (n0 > 1)
        for (int i = 0; i < n0; ++i) {
            CMapMat<S> dy(n.grad.data() + static_cast<long>(i) * co * hw, co, hw);
            std::vector<S> col(static_cast<size_t>(ckk * hw));
            if (need_w) {
                detail::im2col(x->value.data() + static_cast<long>(i) * ci * h * wd, ci, h, wd, k,
                               stride, pad, ho, wo, col.data());
                as_matrix(wparts[i], co, ckk).noalias() =
                    dy * CMapMat<S>(col.data(), ckk, hw).transpose();
            }
            if (need_x) {
                MapMat<S> dcol(col.data(), ckk, hw);
                dcol.noalias() = as_matrix(w->value, co, ckk).transpose() * dy;
                detail::col2im(col.data(), ci, h, wd, k, stride, pad, ho, wo,
                               x->grad.data() + static_cast<long>(i) * ci * h * wd);
            }
        }
        if (need_w)
            for (int i = 0; i < n0; ++i)
                for (long t = 0; t < wparts[i].numel(); ++t) w->grad[t] += wparts[i][t];
        if (b->requires_grad)
            for (int i = 0; i < n0; ++i)
                for (int j = 0; j < co; ++j) {
                    const S* p = n.grad.data() + (static_cast<long>(i) * co + j) * hw;
                    S acc = 0;
                    for (long t = 0; t < hw; ++t) acc += p[t];
                    b->grad[j] += acc;
                }
    });
}

// Transposed 2-D convolution, weight (Ci, Co, K, K).
// Output spatial size: stride*(in-1) + K - 2*pad.
template <typename S>
Var<S> conv_transpose2d(Var<S> x, Var<S> w, Var<S> b, int stride, int pad) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    require(xs.size() == 4 && ws.size() == 4, "conv_transpose2d: rank-4 input/weight expected");
    require(xs[1] == ws[0], "conv_transpose2d: channel mismatch");
    int n0 = xs[0], ci = xs[1], h = xs[2], wd = xs[3];
    int co = ws[1], k = ws[2];
    require(ws[3] == k, "conv_transpose2d: square kernels only");
    require(b->value.numel() == co, "conv_transpose2d: bias size mismatch");
    int ho = stride * (h - 1) + k - 2 * pad;
    int wo = stride * (wd - 1) + k - 2 * pad;
    require(ho > 0 && wo > 0, "conv_transpose2d: output collapsed to zero size");

    long ckk = static_cast<long>(co) * k * k;
    long hw_in = static_cast<long>(h) * wd;
    long hw_out = static_cast<long>(ho) * wo;
    Tensor<S> out({n0, co, ho, wo});

#pragma omp parallel for schedule(static) if (n0 > 1)
    for (int i = 0; i < n0; ++i) {
        std::vector<S> col(static_cast<size_t>(ckk * hw_in));
        MapMat<S> cm(col.data(), ckk, hw_in);
        cm.noalias() = as_matrix(w->value, ci, ckk).transpose() *
                       CMapMat<S>(x->value.data() + static_cast<long>(i) * ci * hw_in, ci, hw_in);
        S* dst = out.data() + static_cast<long>(i) * co * hw_out;
        detail::col2im(col.data(), co, ho, wo, k, stride, pad, h, wd, dst);
        for (int j = 0; j < co; ++j) {
            S* p = dst + static_cast<long>(j) * hw_out;
            for (long t = 0; t < hw_out; ++t) p[t] += b->value[j];
        }
    }

    return make_op<S>(std::move(out), {x, w, b},
                      [x, w, b, n0, ci, h, wd, co, k, stride, pad, ho, wo, ckk, hw_in,
                       hw_out](Node<S>& n) {
        bool need_w = w->requires_grad;
        bool need_x = x->requires_grad;
        std::vector<Tensor<S>> wparts;
        if (need_w) wparts.assign(n0, Tensor<S>({ci, static_cast<int>(ckk)}));
#pragma omp parallel for schedule(static) if (n0 > 1)
        for (int i = 0; i < n0; ++i) {
            std::vector<S> col(static_cast<size_t>(ckk * hw_in));
            detail::im2col(n.grad.data() + static_cast<long>(i) * co * hw_out, co, ho, wo, k,
                           stride, pad, h, wd, col.data());
            CMapMat<S> dycol(col.data(), ckk, hw_in);
            if (need_x)
                MapMat<S>(x->grad.data() + static_cast<long>(i) * ci * hw_in, ci, hw_in)
                    .noalias() += as_matrix(w->value, ci, ckk) * dycol;
            if (need_w)
                as_matrix(wparts[i], ci, ckk).noalias() =
                    CMapMat<S>(x->value.data() + static_cast<long>(i) * ci * hw_in, ci, hw_in) *
                    dycol.transpose();
        }
        if (need_w)
            for (int i = 0; i < n0; ++i)
                for (long t = 0; t < wparts[i].numel(); ++t) w->grad[t] += wparts[i][t];
        if (b->requires_grad)
            for (int i = 0; i < n0; ++i)
                for (int j = 0; j < co; ++j) {
                    const S* p = n.grad.data() + (static_cast<long>(i) * co + j) * hw_out;
                    S acc = 0;
                    for (long t = 0; t < hw_out; ++t) acc += p[t];
                    b->grad[j] += acc;
                }
    });
}

}  // namespace advface::nn

#endif
