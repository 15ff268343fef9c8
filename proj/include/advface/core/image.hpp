#ifndef ADVFACE_CORE_IMAGE_HPP
#define ADVFACE_CORE_IMAGE_HPP

#include "advface/core/tensor.hpp"

namespace advface::img {

// Bilinear resize of a (C,H,W) float image.
template <typename S>
nn::Tensor<S> bilinear_resize(const nn::Tensor<S>& src, int oh, int ow) {
    require(src.rank() == 3, "bilinear_resize: (C,H,W) input expected");
    int c = src.dim(0), h = src.dim(1), w = src.dim(2);
    nn::Tensor<S> out({c, oh, ow});
    double sy = static_cast<double>(h) / oh;
    double sx = static_cast<double>(w) / ow;
    for (int y = 0; y < oh; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, h - 1), y1c = std::clamp(y0 + 1, 0, h - 1);
        for (int x = 0; x < ow; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, w - 1), x1c = std::clamp(x0 + 1, 0, w - 1);
            for (int ch = 0; ch < c; ++ch) {
                const S* p = src.data() + static_cast<long>(ch) * h * w;
                double v00 = p[y0c * w + x0c], v01 = p[y0c * w + x1c];
                double v10 = p[y1c * w + x0c], v11 = p[y1c * w + x1c];
                double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                           wy * ((1 - wx) * v10 + wx * v11);
                out[(static_cast<long>(ch) * oh + y) * ow + x] = static_cast<S>(v);
            }
        }
    }
    return out;
}

template <typename S>
nn::Tensor<S> crop(const nn::Tensor<S>& src, int y, int x, int h, int w) {
    require(src.rank() == 3, "crop: (C,H,W) input expected");
    int c = src.dim(0), sh = src.dim(1), sw = src.dim(2);
    require(y >= 0 && x >= 0 && y + h <= sh && x + w <= sw, "crop: window out of bounds");
    nn::Tensor<S> out({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < h; ++i)
            std::copy_n(src.data() + (static_cast<long>(ch) * sh + y + i) * sw + x, w,
                        out.data() + (static_cast<long>(ch) * h + i) * w);
    return out;
}

template <typename S>
void clamp01_inplace(nn::Tensor<S>& t) {
    for (long i = 0; i < t.numel(); ++i) t[i] = std::min(S(1), std::max(S(0), t[i]));
}

// Stack (C,H,W) images into an NCHW batch.
template <typename S>
nn::Tensor<S> make_batch(const std::vector<const nn::Tensor<S>*>& images) {
    require(!images.empty(), "make_batch: empty image list");
    int c = images[0]->dim(0), h = images[0]->dim(1), w = images[0]->dim(2);
    nn::Tensor<S> out({static_cast<int>(images.size()), c, h, w});
    long per = static_cast<long>(c) * h * w;
    for (size_t i = 0; i < images.size(); ++i) {
        require(images[i]->shape() == images[0]->shape(), "make_batch: mixed image shapes");
        std::copy_n(images[i]->data(), per, out.data() + static_cast<long>(i) * per);
    }
    return out;
}

template <typename S>
nn::Tensor<S> slice_image(const nn::Tensor<S>& batch, int i) {
    require(batch.rank() == 4, "slice_image: NCHW batch expected");
    int c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
    nn::Tensor<S> out({c, h, w});
    long per = static_cast<long>(c) * h * w;
    std::copy_n(batch.data() + static_cast<long>(i) * per, per, out.data());
    return out;
}

}  // namespace advface::img

#endif
