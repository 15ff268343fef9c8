#ifndef ADVFACE_FACEREC_SPEC_HPP
#define ADVFACE_FACEREC_SPEC_HPP

#include <json.hpp>

#include "advface/common.hpp"

namespace advface::facerec {

enum class Family { resnet_style, inception_style };
enum class LossKind { sphereface, deepid };

inline std::string to_string(Family f) {
    return f == Family::resnet_style ? "resnet_style" : "inception_style";
}
inline std::string to_string(LossKind l) {
    return l == LossKind::sphereface ? "sphereface" : "deepid";
}

struct VictimModelSpec {
    Family family = Family::resnet_style;
    int depth_blocks = 4;
    LossKind loss = LossKind::sphereface;
    int embed_dim = 128;
    uint64_t init_seed = 0;
    int input_h = 64, input_w = 64, input_c = 3;
    int base_width = 16;

    void validate() const {
        require(depth_blocks >= 1, "victim spec: depth_blocks must be >= 1");
        require(embed_dim >= 8, "victim spec: embed_dim must be >= 8");
        require(base_width >= 4 && base_width % 4 == 0,
                "victim spec: base_width must be a positive multiple of 4");
        require(input_h >= 8 && input_w >= 8, "victim spec: input too small");
        require(input_c == 1 || input_c == 3, "victim spec: 1 or 3 channels");
    }

    // Short tag in the style RN-SF-s0 / IN-DID-s3; used to bind thresholds
    // and label report rows.
    std::string name() const {
        std::string f = family == Family::resnet_style ? "RN" : "IN";
        std::string l = loss == LossKind::sphereface ? "SF" : "DID";
        return f + "-" + l + "-s" + std::to_string(init_seed);
    }

    // Ensemble members may differ only in their weight initialization.
    bool same_except_seed(const VictimModelSpec& o) const {
        return family == o.family && depth_blocks == o.depth_blocks && loss == o.loss &&
               embed_dim == o.embed_dim && input_h == o.input_h && input_w == o.input_w &&
               input_c == o.input_c && base_width == o.base_width;
    }
    bool operator==(const VictimModelSpec&) const = default;
};

struct EnsembleSpec {
    std::vector<VictimModelSpec> members;
    std::string name;

    void validate() const {
        require(!members.empty(), "ensemble spec: no members");
        for (const auto& m : members) {
            m.validate();
            require(m.input_h == members[0].input_h && m.input_w == members[0].input_w &&
                        m.input_c == members[0].input_c,
                    "ensemble spec: members must share input size");
            require(m.embed_dim == members[0].embed_dim,
                    "ensemble spec: members must share embed_dim");
        }
    }
};

inline void to_json(nlohmann::json& j, const VictimModelSpec& s) {
    j = nlohmann::json{{"family", to_string(s.family)},
                       {"depth_blocks", s.depth_blocks},
                       {"loss", to_string(s.loss)},
                       {"embed_dim", s.embed_dim},
                       {"init_seed", s.init_seed},
                       {"input_size", {s.input_h, s.input_w, s.input_c}},
                       {"base_width", s.base_width}};
}
inline void from_json(const nlohmann::json& j, VictimModelSpec& s) {
    std::string fam = j.at("family");
    if (fam == "resnet_style")
        s.family = Family::resnet_style;
    else if (fam == "inception_style")
        s.family = Family::inception_style;
    else
        fail("unsupported model family: ", fam);
    j.at("depth_blocks").get_to(s.depth_blocks);
    std::string loss = j.at("loss");
    if (loss == "sphereface")
        s.loss = LossKind::sphereface;
    else if (loss == "deepid")
        s.loss = LossKind::deepid;
    else
        fail("unsupported loss: ", loss);
    j.at("embed_dim").get_to(s.embed_dim);
    j.at("init_seed").get_to(s.init_seed);
    auto sz = j.at("input_size");
    s.input_h = sz.at(0);
    s.input_w = sz.at(1);
    s.input_c = sz.at(2);
    if (j.contains("base_width")) j.at("base_width").get_to(s.base_width);
}

inline void to_json(nlohmann::json& j, const EnsembleSpec& s) {
    j = nlohmann::json{{"name", s.name}, {"members", s.members}};
}
inline void from_json(const nlohmann::json& j, EnsembleSpec& s) {
    j.at("name").get_to(s.name);
    j.at("members").get_to(s.members);
}

}  // namespace advface::facerec

#endif
