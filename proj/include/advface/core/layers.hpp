#ifndef ADVFACE_CORE_LAYERS_HPP
#define ADVFACE_CORE_LAYERS_HPP

#include <memory>
#include <string>

#include "advface/core/batchnorm.hpp"
#include "advface/core/conv.hpp"
#include "advface/core/rng.hpp"

namespace advface::nn {

// Registry of named parameters and persistent buffers (running statistics).
// Buffers are registered by pointer; owning modules are heap-allocated and
// pinned for the model's lifetime.
template <typename S>
class ParamStore {
public:
    Var<S> add_param(const std::string& name, Tensor<S> init) {
        auto v = leaf(std::move(init), true);
        params_.emplace_back(name, v);
        return v;
    }
    void add_buffer(const std::string& name, Tensor<S>* t) { buffers_.emplace_back(name, t); }

    const std::vector<std::pair<std::string, Var<S>>>& params() const { return params_; }
    const std::vector<std::pair<std::string, Tensor<S>*>>& buffers() const { return buffers_; }

    void zero_grad() {
        for (auto& [name, p] : params_) p->zero_grad();
    }
    void set_trainable(bool trainable) {
        for (auto& [name, p] : params_) {
            p->requires_grad = trainable;
            if (trainable) p->ensure_grad();
        }
    }
    long param_count() const {
        long n = 0;
        for (const auto& [name, p] : params_) n += p->value.numel();
        return n;
    }

private:
    std::vector<std::pair<std::string, Var<S>>> params_;
    std::vector<std::pair<std::string, Tensor<S>*>> buffers_;
};

template <typename S>
struct Conv2d {
    Var<S> w, b;
    int stride, pad;

    Conv2d(ParamStore<S>& ps, const std::string& name, int cin, int cout, int k, int stride_,
           int pad_, Rng& rng, double init_scale = -1.0)
        : stride(stride_), pad(pad_) {
        Tensor<S> wt({cout, cin, k, k});
        double std = init_scale >= 0.0 ? init_scale : std::sqrt(2.0 / (cin * k * k));
        fill_normal(wt, rng, std);
        w = ps.add_param(name + ".w", std::move(wt));
        b = ps.add_param(name + ".b", Tensor<S>({cout}));
    }
    Var<S> forward(Var<S> x) const { return conv2d(x, w, b, stride, pad); }
};

template <typename S>
struct ConvTranspose2d {
    Var<S> w, b;
    int stride, pad;

    ConvTranspose2d(ParamStore<S>& ps, const std::string& name, int cin, int cout, int k,
                    int stride_, int pad_, Rng& rng, double init_scale = -1.0)
        : stride(stride_), pad(pad_) {
        Tensor<S> wt({cin, cout, k, k});
        double std = init_scale >= 0.0 ? init_scale : std::sqrt(2.0 / (cin * k * k));
        fill_normal(wt, rng, std);
        w = ps.add_param(name + ".w", std::move(wt));
        b = ps.add_param(name + ".b", Tensor<S>({cout}));
    }
    Var<S> forward(Var<S> x) const { return conv_transpose2d(x, w, b, stride, pad); }
};

template <typename S>
struct BatchNorm2d {
    Var<S> gamma, beta;
    Tensor<S> running_mean, running_var;
    S momentum = S(0.1);

    BatchNorm2d(ParamStore<S>& ps, const std::string& name, int c)
        : running_mean({c}), running_var({c}) {
        Tensor<S> g({c});
        g.fill(S(1));
        gamma = ps.add_param(name + ".gamma", std::move(g));
        beta = ps.add_param(name + ".beta", Tensor<S>({c}));
        running_var.fill(S(1));
        ps.add_buffer(name + ".running_mean", &running_mean);
        ps.add_buffer(name + ".running_var", &running_var);
    }
    BatchNorm2d(const BatchNorm2d&) = delete;
    BatchNorm2d& operator=(const BatchNorm2d&) = delete;

    Var<S> forward(Var<S> x, bool training) {
        return batch_norm2d(x, gamma, beta, &running_mean, &running_var, training, momentum);
    }
};

template <typename S>
struct Dense {
    Var<S> w, b;

    Dense(ParamStore<S>& ps, const std::string& name, int in, int out, Rng& rng) {
        Tensor<S> wt({out, in});
        fill_normal(wt, rng, std::sqrt(2.0 / in));
        w = ps.add_param(name + ".w", std::move(wt));
        b = ps.add_param(name + ".b", Tensor<S>({out}));
    }
    Var<S> forward(Var<S> x) const { return linear(x, w, b); }
};

}  // namespace advface::nn

#endif
