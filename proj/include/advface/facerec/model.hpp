#ifndef ADVFACE_FACEREC_MODEL_HPP
#define ADVFACE_FACEREC_MODEL_HPP

#include "advface/core/adam.hpp"
#include "advface/core/blocks.hpp"
#include "advface/core/checkpoint.hpp"
#include "advface/facerec/spec.hpp"

namespace advface::facerec {

using nn::Var;

// Anything that maps image batches to unit-norm embeddings. Victim networks
// implement it; tests plug in analytic toys.
template <typename S>
class EmbeddingModel {
public:
    virtual ~EmbeddingModel() = default;
    // (N,C,H,W) -> (N,D) with unit-norm rows. training toggles batch-norm
    // statistics; frozen inference uses the stored running statistics so the
    // result is batch-size independent.
    virtual Var<S> embed(Var<S> images, bool training) = 0;
    // Intermediate feature maps in inference mode (perceptual metrics).
    virtual std::vector<Var<S>> features(Var<S> images) = 0;
    virtual int embed_dim() const = 0;
    virtual std::array<int, 3> input_size() const = 0;  // h, w, c
    virtual nn::ParamStore<S>& params() = 0;
    virtual std::string name() const = 0;
};

namespace detail {
// depth_blocks distributed over 3 stages, earlier stages first.
inline std::array<int, 3> stage_blocks(int depth) {
    std::array<int, 3> out{depth / 3, depth / 3, depth / 3};
    for (int i = 0; i < depth % 3; ++i) out[static_cast<size_t>(i)]++;
    return out;
}
}  // namespace detail

// Pre-activation residual embedding network. Stem conv (stride 2), three
// stages at widths {b, 2b, 4b} with stride-2 stage transitions, then
// BN-ReLU-GAP-dense and L2 normalization.
template <typename S>
class ResNetVictim : public EmbeddingModel<S> {
public:
    explicit ResNetVictim(const VictimModelSpec& spec) : spec_(spec) {
        spec_.validate();
        nn::Rng rng(spec_.init_seed);
        int b = spec_.base_width;
        stem_ = std::make_unique<nn::Conv2d<S>>(ps_, "stem", spec_.input_c, b, 3, 2, 1, rng);
        auto counts = detail::stage_blocks(spec_.depth_blocks);
        int in_ch = b;
        for (int s = 0; s < 3; ++s) {
            int out_ch = b << s;
            for (int k = 0; k < counts[static_cast<size_t>(s)]; ++k) {
                int stride = (k == 0 && s > 0) ? 2 : 1;
                std::string nm = "stage" + std::to_string(s) + ".block" + std::to_string(k);
                blocks_.push_back(std::make_unique<nn::PreActBlock<S>>(ps_, nm, in_ch, out_ch,
                                                                       stride, false, rng));
                stage_of_block_.push_back(s);
                in_ch = out_ch;
            }
        }
        tail_bn_ = std::make_unique<nn::BatchNorm2d<S>>(ps_, "tail.bn", in_ch);
        head_ = std::make_unique<nn::Dense<S>>(ps_, "head", in_ch, spec_.embed_dim, rng);
    }

    Var<S> embed(Var<S> images, bool training) override {
        check_input(images);
        auto h = stem_->forward(images);
        for (const auto& blk : blocks_) h = blk->forward(h, training);
        h = nn::relu(tail_bn_->forward(h, training));
        auto pooled = nn::global_avg_pool(h);
        return nn::l2_normalize_rows(head_->forward(pooled));
    }

    std::vector<Var<S>> features(Var<S> images) override {
        check_input(images);
        std::vector<Var<S>> taps;
        auto h = stem_->forward(images);
        for (size_t i = 0; i < blocks_.size(); ++i) {
            h = blocks_[i]->forward(h, false);
            bool last_of_stage = i + 1 == blocks_.size() ||
                                 stage_of_block_[i + 1] != stage_of_block_[i];
            if (last_of_stage) taps.push_back(h);
        }
        return taps;
    }

    int embed_dim() const override { return spec_.embed_dim; }
    std::array<int, 3> input_size() const override {
        return {spec_.input_h, spec_.input_w, spec_.input_c};
    }
    nn::ParamStore<S>& params() override { return ps_; }
    std::string name() const override { return spec_.name(); }
    const VictimModelSpec& spec() const { return spec_; }

private:
    void check_input(const Var<S>& images) const {
        const auto& s = images->value.shape();
        require(s.size() == 4 && s[1] == spec_.input_c && s[2] == spec_.input_h &&
                    s[3] == spec_.input_w,
                "victim ", spec_.name(), ": expected input ", spec_.input_h, "x", spec_.input_w,
                "x", spec_.input_c);
    }

    VictimModelSpec spec_;
    nn::ParamStore<S> ps_;
    std::unique_ptr<nn::Conv2d<S>> stem_;
    std::vector<std::unique_ptr<nn::PreActBlock<S>>> blocks_;
    std::vector<int> stage_of_block_;
    std::unique_ptr<nn::BatchNorm2d<S>> tail_bn_;
    std::unique_ptr<nn::Dense<S>> head_;
};

// Multi-branch concat block: 1x1 -> w/4, 1x1-3x3 -> w/4, 1x1-3x3 -> w/2.
template <typename S>
class InceptionBlock {
public:
    InceptionBlock(nn::ParamStore<S>& ps, const std::string& name, int ch, nn::Rng& rng)
        : b1_(ps, name + ".b1", ch, ch / 4, 1, rng),
          b2a_(ps, name + ".b2a", ch, ch / 4, 1, rng),
          b2b_(ps, name + ".b2b", ch / 4, ch / 4, 3, rng),
          b3a_(ps, name + ".b3a", ch, ch / 4, 1, rng),
          b3b_(ps, name + ".b3b", ch / 4, ch / 2, 3, rng) {}

    Var<S> forward(Var<S> x, bool training) {
        auto t1 = b1_.forward(x, training);
        auto t2 = b2b_.forward(b2a_.forward(x, training), training);
        auto t3 = b3b_.forward(b3a_.forward(x, training), training);
        return nn::concat_channels(nn::concat_channels(t1, t2), t3);
    }

private:
    struct ConvBR {
        ConvBR(nn::ParamStore<S>& ps, const std::string& name, int in_ch, int out_ch, int k,
               nn::Rng& rng)
            : conv(ps, name + ".conv", in_ch, out_ch, k, 1, k / 2, rng),
              bn(ps, name + ".bn", out_ch) {}
        nn::Conv2d<S> conv;
        nn::BatchNorm2d<S> bn;
        Var<S> forward(Var<S> x, bool training) {
            return nn::relu(bn.forward(conv.forward(x), training));
        }
    };
    ConvBR b1_, b2a_, b2b_, b3a_, b3b_;
};

template <typename S>
class InceptionVictim : public EmbeddingModel<S> {
public:
    explicit InceptionVictim(const VictimModelSpec& spec) : spec_(spec) {
        spec_.validate();
        nn::Rng rng(spec_.init_seed);
        int b = spec_.base_width;
        stem_ = std::make_unique<nn::ConvUnit<S>>(ps_, "stem", spec_.input_c, b, 2, false, rng);
        auto counts = detail::stage_blocks(spec_.depth_blocks);
        int ch = b;
        for (int s = 0; s < 3; ++s) {
            int out_ch = b << s;
            if (s > 0) {
                reducers_.push_back(std::make_unique<nn::ConvUnit<S>>(
                    ps_, "reduce" + std::to_string(s), ch, out_ch, 2, false, rng));
                reducer_at_.push_back(static_cast<int>(blocks_.size()));
                ch = out_ch;
            }
            for (int k = 0; k < counts[static_cast<size_t>(s)]; ++k) {
                std::string nm = "stage" + std::to_string(s) + ".block" + std::to_string(k);
                blocks_.push_back(std::make_unique<InceptionBlock<S>>(ps_, nm, ch, rng));
                stage_of_block_.push_back(s);
            }
        }
        tail_bn_ = std::make_unique<nn::BatchNorm2d<S>>(ps_, "tail.bn", ch);
        head_ = std::make_unique<nn::Dense<S>>(ps_, "head", ch, spec_.embed_dim, rng);
    }

    Var<S> embed(Var<S> images, bool training) override {
        auto h = run_backbone(images, training, nullptr);
        h = nn::relu(tail_bn_->forward(h, training));
        return nn::l2_normalize_rows(head_->forward(nn::global_avg_pool(h)));
    }

    std::vector<Var<S>> features(Var<S> images) override {
        std::vector<Var<S>> taps;
        run_backbone(images, false, &taps);
        return taps;
    }

    int embed_dim() const override { return spec_.embed_dim; }
    std::array<int, 3> input_size() const override {
        return {spec_.input_h, spec_.input_w, spec_.input_c};
    }
    nn::ParamStore<S>& params() override { return ps_; }
    std::string name() const override { return spec_.name(); }
    const VictimModelSpec& spec() const { return spec_; }

private:
    Var<S> run_backbone(Var<S> images, bool training, std::vector<Var<S>>* taps) {
        const auto& s = images->value.shape();
        require(s.size() == 4 && s[1] == spec_.input_c && s[2] == spec_.input_h &&
                    s[3] == spec_.input_w,
                "victim ", spec_.name(), ": expected input ", spec_.input_h, "x", spec_.input_w,
                "x", spec_.input_c);
        auto h = stem_->forward(images, training);
        size_t r = 0;
        for (size_t i = 0; i < blocks_.size(); ++i) {
            while (r < reducer_at_.size() && reducer_at_[r] == static_cast<int>(i)) {
                h = reducers_[r]->forward(h, training);
                ++r;
            }
            h = blocks_[i]->forward(h, training);
            if (taps) {
                bool last_of_stage = i + 1 == blocks_.size() ||
                                     stage_of_block_[i + 1] != stage_of_block_[i];
                if (last_of_stage) taps->push_back(h);
            }
        }
        return h;
    }

    VictimModelSpec spec_;
    nn::ParamStore<S> ps_;
    std::unique_ptr<nn::ConvUnit<S>> stem_;
    std::vector<std::unique_ptr<InceptionBlock<S>>> blocks_;
    std::vector<std::unique_ptr<nn::ConvUnit<S>>> reducers_;
    std::vector<int> reducer_at_;
    std::vector<int> stage_of_block_;
    std::unique_ptr<nn::BatchNorm2d<S>> tail_bn_;
    std::unique_ptr<nn::Dense<S>> head_;
};

template <typename S>
std::shared_ptr<EmbeddingModel<S>> build_victim(const VictimModelSpec& spec) {
    spec.validate();
    if (spec.family == Family::resnet_style) return std::make_shared<ResNetVictim<S>>(spec);
    if (spec.family == Family::inception_style)
        return std::make_shared<InceptionVictim<S>>(spec);
    fail("unsupported model family");
}

template <typename S>
const VictimModelSpec& victim_spec(EmbeddingModel<S>& m) {
    if (auto* r = dynamic_cast<ResNetVictim<S>*>(&m)) return r->spec();
    if (auto* i = dynamic_cast<InceptionVictim<S>*>(&m)) return i->spec();
    fail("not a victim model");
}

// Frozen, batch-independent inference. Pure in the model weights and pixels.
template <typename S>
nn::Tensor<S> embed_batch(EmbeddingModel<S>& model, const nn::Tensor<S>& images,
                          int chunk = 64) {
    require(images.rank() == 4, "embed_batch: NCHW batch expected");
    auto sz = model.input_size();
    require(images.dim(2) == sz[0] && images.dim(3) == sz[1] && images.dim(1) == sz[2],
            "embed_batch: wrong spatial size, expected ", sz[0], "x", sz[1], "x", sz[2], ", got ",
            images.dim(2), "x", images.dim(3), "x", images.dim(1));
    int n = images.dim(0);
    nn::Tensor<S> out({n, model.embed_dim()});
    long per_in = images.numel() / n;
    for (int start = 0; start < n; start += chunk) {
        int b = std::min(chunk, n - start);
        nn::Tensor<S> part({b, images.dim(1), images.dim(2), images.dim(3)});
        std::copy_n(images.data() + static_cast<long>(start) * per_in, per_in * b, part.data());
        auto emb = model.embed(nn::constant(std::move(part)), false);
        std::copy_n(emb->value.data(), static_cast<long>(b) * model.embed_dim(),
                    out.data() + static_cast<long>(start) * model.embed_dim());
    }
    return out;
}

// --- checkpoints -----------------------------------------------------------

template <typename S>
void save_victim(EmbeddingModel<S>& model, const std::filesystem::path& path,
                 const nlohmann::json& extra_meta = {}) {
    nlohmann::json meta;
    meta["kind"] = "victim";
    meta["spec"] = victim_spec(model);
    if (!extra_meta.is_null()) meta["extra"] = extra_meta;
    nn::save_checkpoint(path, meta, nn::snapshot(model.params()));
}

template <typename S>
std::shared_ptr<EmbeddingModel<S>> load_victim(const std::filesystem::path& path) {
    auto [meta, tensors] = nn::load_checkpoint<S>(path);
    require(meta.contains("spec") && meta.value("kind", "") == "victim",
            "not a victim checkpoint: ", path.string());
    VictimModelSpec spec = meta.at("spec");
    auto model = build_victim<S>(spec);
    nn::restore(model->params(), tensors);
    return model;
}

}  // namespace advface::facerec

#endif
