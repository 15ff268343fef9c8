#ifndef ADVFACE_DATASET_FIXTURE_HPP
#define ADVFACE_DATASET_FIXTURE_HPP

#include "advface/dataset/dataset.hpp"

namespace advface::dataset {

// Synthetic identity corpus for desk-scale experiments: each identity is a
// fixed arrangement of colored Gaussian blobs over a gradient background;
// images of one identity vary by global shift, per-blob jitter, brightness
// and pixel noise. Variation is strong enough that untrained embeddings do
// not trivially separate identities.
struct FixtureParams {
    int n_identities = 40;
    int images_per_identity = 20;
    int size = 64;
    int channels = 3;
    uint64_t seed = 1234;
    double shift_px_frac = 0.09;    // global translation, fraction of side
    double blob_jitter_frac = 0.03; // per-blob jitter, fraction of side
    double brightness = 0.30;       // multiplicative range +-
    double noise = 0.035;           // additive gaussian sigma
};

namespace detail {

struct Blob {
    double cy, cx, r;
    double color[3];
};

struct IdentityPattern {
    double bg0[3], bg1[3];
    double angle;
    std::vector<Blob> blobs;
};

inline IdentityPattern sample_pattern(nn::Rng& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    IdentityPattern p;
    for (int c = 0; c < 3; ++c) {
        p.bg0[c] = 0.15 + 0.5 * u01(rng);
        p.bg1[c] = 0.15 + 0.5 * u01(rng);
    }
    p.angle = 2.0 * M_PI * u01(rng);
    int n_blobs = 4 + static_cast<int>(u01(rng) * 4);  // 4..7
    for (int b = 0; b < n_blobs; ++b) {
        Blob blob;
        blob.cy = 0.15 + 0.7 * u01(rng);
        blob.cx = 0.15 + 0.7 * u01(rng);
        blob.r = 0.05 + 0.12 * u01(rng);
        for (int c = 0; c < 3; ++c) blob.color[c] = -0.6 + 1.2 * u01(rng);
        p.blobs.push_back(blob);
    }
    return p;
}

inline nn::Tensor<float> render(const IdentityPattern& p, const FixtureParams& fp, nn::Rng& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int n = fp.size;
    double dy = (u01(rng) * 2 - 1) * fp.shift_px_frac;
    double dx = (u01(rng) * 2 - 1) * fp.shift_px_frac;
    double bright = 1.0 + (u01(rng) * 2 - 1) * fp.brightness;
    std::vector<std::pair<double, double>> jit(p.blobs.size());
    for (auto& [jy, jx] : jit) {
        jy = (u01(rng) * 2 - 1) * fp.blob_jitter_frac;
        jx = (u01(rng) * 2 - 1) * fp.blob_jitter_frac;
    }
    double ca = std::cos(p.angle), sa = std::sin(p.angle);

    nn::Tensor<float> img({fp.channels, n, n});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double fy = static_cast<double>(y) / n, fx = static_cast<double>(x) / n;
            double t = 0.5 + 0.5 * ((fy - 0.5) * sa + (fx - 0.5) * ca);
            double px[3];
            for (int c = 0; c < 3; ++c) px[c] = (1 - t) * p.bg0[c] + t * p.bg1[c];
            for (size_t b = 0; b < p.blobs.size(); ++b) {
                const Blob& blob = p.blobs[b];
                double by = blob.cy + dy + jit[b].first;
                double bx = blob.cx + dx + jit[b].second;
                double d2 = (fy - by) * (fy - by) + (fx - bx) * (fx - bx);
                double w = std::exp(-d2 / (2 * blob.r * blob.r));
                for (int c = 0; c < 3; ++c) px[c] += w * blob.color[c];
            }
            for (int c = 0; c < fp.channels; ++c) {
                double v = px[c % 3] * bright + fp.noise * gauss(rng);
                img[(static_cast<long>(c) * n + y) * n + x] =
                    static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    return img;
}

}  // namespace detail

inline std::string fixture_identity_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "id%03d", i);
    return buf;
}

// Render the corpus in memory: (identity -> images).
inline std::map<std::string, std::vector<nn::Tensor<float>>> render_fixture_corpus(
    const FixtureParams& fp) {
    std::map<std::string, std::vector<nn::Tensor<float>>> out;
    nn::Rng rng(fp.seed);
    for (int i = 0; i < fp.n_identities; ++i) {
        auto pattern = detail::sample_pattern(rng);
        auto& imgs = out[fixture_identity_name(i)];
        for (int k = 0; k < fp.images_per_identity; ++k)
            imgs.push_back(detail::render(pattern, fp, rng));
    }
    return out;
}

// Write the corpus as <root>/<identity>/img###.png.
inline void write_fixture_corpus(const fs::path& root, const FixtureParams& fp) {
    auto corpus = render_fixture_corpus(fp);
    for (const auto& [identity, images] : corpus)
        for (size_t k = 0; k < images.size(); ++k) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "img%03zu.png", k);
            io::save_image(root / identity / buf, images[k]);
        }
}

}  // namespace advface::dataset

#endif
