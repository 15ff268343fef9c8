#ifndef ADVFACE_CORE_BLOCKS_HPP
#define ADVFACE_CORE_BLOCKS_HPP

#include "advface/core/layers.hpp"

namespace advface::nn {

// Two-layer pre-activation residual block (BN -> ReLU -> conv, twice) with an
// identity shortcut, or a projection when shape changes. Decoder blocks use
// transposed convolutions; a stride-2 decoder block upsamples via a 2x2/s2
// transposed conv (3x3/s1/p1 otherwise), and the projection shortcut mirrors
// the main path.
template <typename S>
class PreActBlock {
public:
    PreActBlock(ParamStore<S>& ps, const std::string& name, int in_ch, int out_ch, int stride,
                bool transposed, Rng& rng)
        : bn1_(ps, name + ".bn1", in_ch), bn2_(ps, name + ".bn2", out_ch) {
        if (transposed) {
            if (stride == 2)
                up1_ = std::make_unique<ConvTranspose2d<S>>(ps, name + ".conv1", in_ch, out_ch, 2,
                                                            2, 0, rng);
            else
                up1_ = std::make_unique<ConvTranspose2d<S>>(ps, name + ".conv1", in_ch, out_ch, 3,
                                                            1, 1, rng);
            up2_ = std::make_unique<ConvTranspose2d<S>>(ps, name + ".conv2", out_ch, out_ch, 3, 1,
                                                        1, rng);
        } else {
            conv1_ = std::make_unique<Conv2d<S>>(ps, name + ".conv1", in_ch, out_ch, 3, stride, 1,
                                                 rng);
            conv2_ = std::make_unique<Conv2d<S>>(ps, name + ".conv2", out_ch, out_ch, 3, 1, 1,
                                                 rng);
        }
        if (in_ch != out_ch || stride != 1) {
            if (transposed && stride == 2)
                up_proj_ = std::make_unique<ConvTranspose2d<S>>(ps, name + ".proj", in_ch, out_ch,
                                                                2, 2, 0, rng);
            else
                proj_ = std::make_unique<Conv2d<S>>(ps, name + ".proj", in_ch, out_ch, 1, stride,
                                                    0, rng);
        }
    }

    Var<S> forward(Var<S> x, bool training) {
        auto h = relu(bn1_.forward(x, training));
        h = conv1_ ? conv1_->forward(h) : up1_->forward(h);
        h = relu(bn2_.forward(h, training));
        h = conv2_ ? conv2_->forward(h) : up2_->forward(h);
        Var<S> sc = x;
        if (proj_)
            sc = proj_->forward(x);
        else if (up_proj_)
            sc = up_proj_->forward(x);
        return add(h, sc);
    }

private:
    BatchNorm2d<S> bn1_, bn2_;
    std::unique_ptr<Conv2d<S>> conv1_, conv2_, proj_;
    std::unique_ptr<ConvTranspose2d<S>> up1_, up2_, up_proj_;
};

// Plain convolution unit: conv (or transposed conv) -> BN -> ReLU.
template <typename S>
class ConvUnit {
public:
    ConvUnit(ParamStore<S>& ps, const std::string& name, int in_ch, int out_ch, int stride,
             bool transposed, Rng& rng)
        : bn_(ps, name + ".bn", out_ch) {
        if (transposed) {
            if (stride == 2)
                up_ = std::make_unique<ConvTranspose2d<S>>(ps, name + ".conv", in_ch, out_ch, 2, 2,
                                                           0, rng);
            else
                up_ = std::make_unique<ConvTranspose2d<S>>(ps, name + ".conv", in_ch, out_ch, 3, 1,
                                                           1, rng);
        } else {
            conv_ = std::make_unique<Conv2d<S>>(ps, name + ".conv", in_ch, out_ch, 3, stride, 1,
                                                rng);
        }
    }

    Var<S> forward(Var<S> x, bool training) {
        auto h = conv_ ? conv_->forward(x) : up_->forward(x);
        return relu(bn_.forward(h, training));
    }

private:
    BatchNorm2d<S> bn_;
    std::unique_ptr<Conv2d<S>> conv_;
    std::unique_ptr<ConvTranspose2d<S>> up_;
};

}  // namespace advface::nn

#endif
