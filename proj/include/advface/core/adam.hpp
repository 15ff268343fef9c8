#ifndef ADVFACE_CORE_ADAM_HPP
#define ADVFACE_CORE_ADAM_HPP

#include "advface/core/layers.hpp"

namespace advface::nn {

// Adam update rule with bias correction.
template <typename S>
class Adam {
public:
    explicit Adam(S lr, S beta1 = S(0.9), S beta2 = S(0.999), S eps = S(1e-8))
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore<S>& ps) {
        const auto& params = ps.params();
        if (m_.empty()) {
            for (const auto& [name, p] : params) {
                m_.emplace_back(p->value.shape());
                v_.emplace_back(p->value.shape());
            }
        }
        require(m_.size() == params.size(), "adam: parameter set changed");
        ++t_;
        S bc1 = S(1) - std::pow(beta1_, static_cast<S>(t_));
        S bc2 = S(1) - std::pow(beta2_, static_cast<S>(t_));
        for (size_t i = 0; i < params.size(); ++i) {
            auto& p = params[i].second;
            p->ensure_grad();
            for (long j = 0; j < p->value.numel(); ++j) {
                S g = p->grad[j];
                m_[i][j] = beta1_ * m_[i][j] + (S(1) - beta1_) * g;
                v_[i][j] = beta2_ * v_[i][j] + (S(1) - beta2_) * g * g;
                S mhat = m_[i][j] / bc1;
                S vhat = v_[i][j] / bc2;
                p->value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    void set_lr(S lr) { lr_ = lr; }
    S lr() const { return lr_; }
    long steps_taken() const { return t_; }

    // Moment state as named tensors, for resumable checkpoints.
    std::vector<std::pair<std::string, Tensor<S>>> state() const {
        std::vector<std::pair<std::string, Tensor<S>>> out;
        for (size_t i = 0; i < m_.size(); ++i) {
            out.emplace_back("adam.m." + std::to_string(i), m_[i]);
            out.emplace_back("adam.v." + std::to_string(i), v_[i]);
        }
        Tensor<S> t({1});
        t[0] = static_cast<S>(t_);
        out.emplace_back("adam.t", std::move(t));
        return out;
    }
    void restore(const std::vector<std::pair<std::string, Tensor<S>>>& state,
                 const ParamStore<S>& ps) {
        m_.clear();
        v_.clear();
        for (const auto& [name, p] : ps.params()) {
            m_.emplace_back(p->value.shape());
            v_.emplace_back(p->value.shape());
        }
        for (const auto& [name, t] : state) {
            if (name == "adam.t") {
                t_ = static_cast<long>(t[0]);
            } else if (name.rfind("adam.m.", 0) == 0) {
                size_t i = std::stoul(name.substr(7));
                require(i < m_.size() && m_[i].same_shape(t), "adam restore: bad m state");
                m_[i] = t;
            } else if (name.rfind("adam.v.", 0) == 0) {
                size_t i = std::stoul(name.substr(7));
                require(i < v_.size() && v_[i].same_shape(t), "adam restore: bad v state");
                v_[i] = t;
            }
        }
    }

private:
    S lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor<S>> m_, v_;
};

}  // namespace advface::nn

#endif
