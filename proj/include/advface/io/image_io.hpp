#ifndef ADVFACE_IO_IMAGE_IO_HPP
#define ADVFACE_IO_IMAGE_IO_HPP

#include <filesystem>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "advface/core/image.hpp"

namespace advface::io {

// Images are (C,H,W) float tensors in [0,1], RGB channel order. OpenCV does
// the codec work; BGR<->RGB conversion happens at this boundary.

inline nn::Tensor<float> from_mat(const cv::Mat& m8, int channels) {
    cv::Mat m;
    if (channels == 1) {
        if (m8.channels() != 1)
            cv::cvtColor(m8, m, cv::COLOR_BGR2GRAY);
        else
            m = m8;
    } else {
        require(channels == 3, "images must have 1 or 3 channels");
        if (m8.channels() == 1)
            cv::cvtColor(m8, m, cv::COLOR_GRAY2RGB);
        else
            cv::cvtColor(m8, m, cv::COLOR_BGR2RGB);
    }
    nn::Tensor<float> out({channels, m.rows, m.cols});
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            for (int c = 0; c < channels; ++c)
                out[(static_cast<long>(c) * m.rows + y) * m.cols + x] =
                    static_cast<float>(m.ptr<unsigned char>(y)[x * channels + c]) / 255.0f;
    return out;
}

inline cv::Mat to_mat(const nn::Tensor<float>& img) {
    require(img.rank() == 3, "to_mat: (C,H,W) image expected");
    int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    require(c == 1 || c == 3, "to_mat: 1 or 3 channels expected");
    cv::Mat m(h, w, c == 1 ? CV_8UC1 : CV_8UC3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                float v = img[(static_cast<long>(ch) * h + y) * w + x];
                v = std::min(1.0f, std::max(0.0f, v));
                // RGB -> BGR for OpenCV.
                int dst_ch = c == 3 ? 2 - ch : 0;
                m.ptr<unsigned char>(y)[x * c + dst_ch] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
    return m;
}

// Decode + resize to the declared size. Throws on undecodable data.
inline nn::Tensor<float> decode_image(const std::vector<unsigned char>& bytes, int h, int w,
                                      int channels) {
    cv::Mat m = cv::imdecode(bytes, channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
    require(!m.empty(), "image decode failed");
    if (m.rows != h || m.cols != w) cv::resize(m, m, cv::Size(w, h), 0, 0, cv::INTER_AREA);
    return from_mat(m, channels);
}

inline nn::Tensor<float> load_image(const std::filesystem::path& path, int h, int w,
                                    int channels) {
    cv::Mat m = cv::imread(path.string(),
                           channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
    require(!m.empty(), "cannot decode image: ", path.string());
    if (m.rows != h || m.cols != w) cv::resize(m, m, cv::Size(w, h), 0, 0, cv::INTER_AREA);
    return from_mat(m, channels);
}

enum class ImageFormat { png, jpeg_q95 };

inline std::vector<unsigned char> encode_image(const nn::Tensor<float>& img, ImageFormat fmt) {
    std::vector<unsigned char> bytes;
    if (fmt == ImageFormat::png) {
        cv::imencode(".png", to_mat(img), bytes);
    } else {
        cv::imencode(".jpg", to_mat(img), bytes, {cv::IMWRITE_JPEG_QUALITY, 95});
    }
    return bytes;
}

inline void save_image(const std::filesystem::path& path, const nn::Tensor<float>& img) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    require(cv::imwrite(path.string(), to_mat(img)), "cannot write image: ", path.string());
}

}  // namespace advface::io

#endif
