#ifndef ADVFACE_DATASET_DATASET_HPP
#define ADVFACE_DATASET_DATASET_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "advface/io/image_io.hpp"

namespace advface::dataset {

namespace fs = std::filesystem;

struct ImageSize {
    int height = 64;
    int width = 64;
    int channels = 3;
    bool operator==(const ImageSize&) const = default;
};

struct IndexEntry {
    std::string image_id;  // relative path, unique within the corpus
    std::string identity;
    std::string relative_path;
};

// Index over a directory-per-identity image corpus. Identities with fewer
// than two images are dropped at build time (counted, not fatal); entries are
// sorted so the index is independent of directory iteration order.
struct DatasetIndex {
    std::string root_path;
    std::vector<IndexEntry> entries;
    ImageSize image_size;
    int dropped_identities = 0;
    int skipped_files = 0;

    std::vector<std::string> identities() const {
        std::set<std::string> s;
        for (const auto& e : entries) s.insert(e.identity);
        return {s.begin(), s.end()};
    }
    std::map<std::string, std::vector<const IndexEntry*>> by_identity() const {
        std::map<std::string, std::vector<const IndexEntry*>> m;
        for (const auto& e : entries) m[e.identity].push_back(&e);
        return m;
    }
    const IndexEntry& entry(const std::string& image_id) const {
        for (const auto& e : entries)
            if (e.image_id == image_id) return e;
        fail("unknown image_id: ", image_id);
    }
};

struct IdentitySplit {
    std::vector<std::string> train_identities;
    std::vector<std::string> eval_identities;
    uint64_t seed = 0;
    double eval_fraction = 0.5;
};

enum class PairLabel { positive, negative };

struct VerificationPair {
    std::string image_id_a;
    std::string image_id_b;
    PairLabel label;
};

struct VerificationPairSet {
    std::vector<VerificationPair> pairs;
    uint64_t seed = 0;
};

struct GalleryTrial {
    std::vector<std::pair<std::string, std::string>> gallery;  // (image_id, identity)
    std::string probe_image_id;
    std::string probe_identity;
    uint64_t seed = 0;
};

inline bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(c));
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

inline DatasetIndex build_index(const fs::path& root, ImageSize size) {
    require(fs::exists(root) && fs::is_directory(root),
            "corpus root does not exist: ", root.string());
    DatasetIndex index;
    index.root_path = root.string();
    index.image_size = size;

    std::vector<std::string> dirs;
    for (const auto& d : fs::directory_iterator(root))
        if (d.is_directory()) dirs.push_back(d.path().filename().string());
    std::sort(dirs.begin(), dirs.end());

    for (const auto& identity : dirs) {
        std::vector<std::string> files;
        for (const auto& f : fs::directory_iterator(root / identity))
            if (f.is_regular_file() && is_image_file(f.path()))
                files.push_back(f.path().filename().string());
        std::sort(files.begin(), files.end());

        std::vector<IndexEntry> kept;
        for (const auto& fname : files) {
            std::string rel = identity + "/" + fname;
            try {
                io::load_image(root / rel, size.height, size.width, size.channels);
            } catch (const Error&) {
                warn("skipping undecodable image: ", rel);
                ++index.skipped_files;
                continue;
            }
            kept.push_back({rel, identity, rel});
        }
        if (kept.size() < 2) {
            if (!kept.empty() || !files.empty()) {
                warn("dropping identity with fewer than 2 usable images: ", identity);
                ++index.dropped_identities;
            }
            continue;
        }
        for (auto& e : kept) index.entries.push_back(std::move(e));
    }
    require(!index.entries.empty(), "no usable identities under: ", root.string());
    return index;
}

// All corpus pixels resident in memory, keyed by image_id.
class ImageBank {
public:
    ImageBank() = default;
    explicit ImageBank(const DatasetIndex& index) {
        ids_.reserve(index.entries.size());
        images_.resize(index.entries.size());
        for (const auto& e : index.entries) ids_.push_back(e.image_id);
#pragma omp parallel for schedule(dynamic)
        for (size_t i = 0; i < index.entries.size(); ++i) {
            images_[i] = io::load_image(fs::path(index.root_path) /
                                            index.entries[i].relative_path,
                                        index.image_size.height, index.image_size.width,
                                        index.image_size.channels);
        }
        for (size_t i = 0; i < ids_.size(); ++i) lookup_[ids_[i]] = i;
    }

    const nn::Tensor<float>& image(const std::string& image_id) const {
        auto it = lookup_.find(image_id);
        require(it != lookup_.end(), "image not in bank: ", image_id);
        return images_[it->second];
    }
    bool contains(const std::string& image_id) const { return lookup_.count(image_id) > 0; }
    void put(const std::string& image_id, nn::Tensor<float> img) {
        auto it = lookup_.find(image_id);
        if (it != lookup_.end()) {
            images_[it->second] = std::move(img);
        } else {
            lookup_[image_id] = images_.size();
            ids_.push_back(image_id);
            images_.push_back(std::move(img));
        }
    }
    const std::vector<std::string>& ids() const { return ids_; }
    size_t size() const { return images_.size(); }

private:
    std::vector<std::string> ids_;
    std::vector<nn::Tensor<float>> images_;
    std::unordered_map<std::string, size_t> lookup_;
};

// Disjoint identity split; |eval| = round(eval_fraction * total), clamped so
// both sides stay non-empty.
inline IdentitySplit split_identities(const DatasetIndex& index, double eval_fraction,
                                      uint64_t seed) {
    require(eval_fraction > 0.0 && eval_fraction < 1.0, "eval_fraction must be in (0,1)");
    std::vector<std::string> ids = index.identities();
    require(ids.size() >= 2, "need at least 2 identities to split, have ", ids.size());
    nn::Rng rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    long n_eval = std::lround(eval_fraction * static_cast<double>(ids.size()));
    n_eval = std::clamp(n_eval, 1L, static_cast<long>(ids.size()) - 1);
    IdentitySplit split;
    split.seed = seed;
    split.eval_fraction = eval_fraction;
    split.eval_identities.assign(ids.begin(), ids.begin() + n_eval);
    split.train_identities.assign(ids.begin() + n_eval, ids.end());
    std::sort(split.eval_identities.begin(), split.eval_identities.end());
    std::sort(split.train_identities.begin(), split.train_identities.end());
    return split;
}

// Balanced verification pairs. Positives are all same-identity pairs of
// distinct images, subsampled to max_pairs/2 when exhaustive enumeration
// exceeds the cap. Negatives are sampled across identity pairs without ever
// duplicating an unordered pair; if fewer distinct negatives exist than
// positives, positives are trimmed to keep the labels exactly balanced.
inline VerificationPairSet build_verification_pairs(const DatasetIndex& index,
                                                    const std::vector<std::string>& identities,
                                                    long max_pairs, uint64_t seed) {
    auto groups = index.by_identity();
    std::vector<std::pair<std::string, std::vector<const IndexEntry*>>> sel;
    for (const auto& id : identities) {
        auto it = groups.find(id);
        require(it != groups.end(), "identity not in index: ", id);
        sel.emplace_back(id, it->second);
    }
    std::sort(sel.begin(), sel.end(), [](auto& a, auto& b) { return a.first < b.first; });

    std::vector<std::pair<std::string, std::string>> positives;
    for (const auto& [id, imgs] : sel)
        for (size_t i = 0; i < imgs.size(); ++i)
            for (size_t j = i + 1; j < imgs.size(); ++j)
                positives.emplace_back(imgs[i]->image_id, imgs[j]->image_id);
    require(!positives.empty(), "no identity with >= 2 images among the requested identities");

    nn::Rng rng(seed);
    long cap_pos = max_pairs > 0 ? max_pairs / 2 : static_cast<long>(positives.size());
    if (static_cast<long>(positives.size()) > cap_pos) {
        std::shuffle(positives.begin(), positives.end(), rng);
        positives.resize(static_cast<size_t>(cap_pos));
    }

    // Distinct cross-identity image pairs available as negatives.
    long total_cross = 0;
    for (size_t i = 0; i < sel.size(); ++i)
        for (size_t j = i + 1; j < sel.size(); ++j)
            total_cross += static_cast<long>(sel[i].second.size() * sel[j].second.size());
    long n_neg = std::min(static_cast<long>(positives.size()), total_cross);
    if (n_neg < static_cast<long>(positives.size())) positives.resize(static_cast<size_t>(n_neg));

    std::set<std::pair<std::string, std::string>> seen;
    std::vector<std::pair<std::string, std::string>> negatives;
    auto canonical = [](std::string a, std::string b) {
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    };
    if (total_cross <= 4 * n_neg || total_cross <= 10000) {
        // Enumerate, shuffle, take what is needed.
        std::vector<std::pair<std::string, std::string>> all;
        all.reserve(static_cast<size_t>(total_cross));
        for (size_t i = 0; i < sel.size(); ++i)
            for (size_t j = i + 1; j < sel.size(); ++j)
                for (const auto* a : sel[i].second)
                    for (const auto* b : sel[j].second)
                        all.push_back(canonical(a->image_id, b->image_id));
        std::shuffle(all.begin(), all.end(), rng);
        negatives.assign(all.begin(), all.begin() + n_neg);
    } else {
        std::uniform_int_distribution<size_t> did(0, sel.size() - 1);
        while (static_cast<long>(negatives.size()) < n_neg) {
            size_t i = did(rng), j = did(rng);
            if (i == j) continue;
            const auto& gi = sel[i].second;
            const auto& gj = sel[j].second;
            std::uniform_int_distribution<size_t> ai(0, gi.size() - 1), aj(0, gj.size() - 1);
            auto key = canonical(gi[ai(rng)]->image_id, gj[aj(rng)]->image_id);
            if (seen.insert(key).second) negatives.push_back(key);
        }
    }

    VerificationPairSet out;
    out.seed = seed;
    for (const auto& [a, b] : positives) out.pairs.push_back({a, b, PairLabel::positive});
    for (const auto& [a, b] : negatives) out.pairs.push_back({a, b, PairLabel::negative});
    return out;
}

// Identification trials: galleries of unique identities with one enrolled
// image each; the probe is a different image of one gallery identity. With
// probe_each_identity, every gallery identity is probed once per gallery.
inline std::vector<GalleryTrial> build_gallery_trials(const DatasetIndex& index,
                                                      const std::vector<std::string>& identities,
                                                      int gallery_size, int n_trials,
                                                      uint64_t seed,
                                                      bool probe_each_identity = false) {
    auto groups = index.by_identity();
    std::vector<std::pair<std::string, std::vector<const IndexEntry*>>> usable;
    for (const auto& id : identities) {
        auto it = groups.find(id);
        require(it != groups.end(), "identity not in index: ", id);
        if (it->second.size() >= 2) usable.emplace_back(id, it->second);
    }
    std::sort(usable.begin(), usable.end(), [](auto& a, auto& b) { return a.first < b.first; });
    require(gallery_size >= 1, "gallery_size must be >= 1");
    require(static_cast<size_t>(gallery_size) <= usable.size(),
            "gallery_size ", gallery_size, " exceeds usable identities ", usable.size());

    nn::Rng rng(seed);
    std::vector<GalleryTrial> trials;
    for (int t = 0; t < n_trials; ++t) {
        std::vector<size_t> order(usable.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);

        std::vector<std::pair<std::string, std::string>> gallery;   // (image_id, identity)
        std::vector<size_t> member_idx(static_cast<size_t>(gallery_size));
        std::vector<size_t> gallery_img(static_cast<size_t>(gallery_size));
        for (int g = 0; g < gallery_size; ++g) {
            size_t idx = order[static_cast<size_t>(g)];
            const auto& [id, imgs] = usable[idx];
            std::uniform_int_distribution<size_t> pick(0, imgs.size() - 1);
            size_t gi = pick(rng);
            member_idx[static_cast<size_t>(g)] = idx;
            gallery_img[static_cast<size_t>(g)] = gi;
            gallery.emplace_back(imgs[gi]->image_id, id);
        }

        auto make_trial = [&](int g) {
            const auto& [id, imgs] = usable[member_idx[static_cast<size_t>(g)]];
            std::uniform_int_distribution<size_t> pick(0, imgs.size() - 2);
            size_t pi = pick(rng);
            if (pi >= gallery_img[static_cast<size_t>(g)]) ++pi;  // skip the enrolled image
            GalleryTrial trial;
            trial.gallery = gallery;
            trial.probe_image_id = imgs[pi]->image_id;
            trial.probe_identity = id;
            trial.seed = seed;
            trials.push_back(std::move(trial));
        };

        if (probe_each_identity) {
            for (int g = 0; g < gallery_size; ++g) make_trial(g);
        } else {
            std::uniform_int_distribution<int> pg(0, gallery_size - 1);
            make_trial(pg(rng));
        }
    }
    return trials;
}

// --- JSON serialization (artifacts carry their seeds for reproducibility) ---

inline void to_json(nlohmann::json& j, const ImageSize& s) {
    j = nlohmann::json{{"height", s.height}, {"width", s.width}, {"channels", s.channels}};
}
inline void from_json(const nlohmann::json& j, ImageSize& s) {
    j.at("height").get_to(s.height);
    j.at("width").get_to(s.width);
    j.at("channels").get_to(s.channels);
}

inline void to_json(nlohmann::json& j, const DatasetIndex& x) {
    j = nlohmann::json{{"root", x.root_path},
                       {"image_size", x.image_size},
                       {"dropped_identities", x.dropped_identities},
                       {"skipped_files", x.skipped_files}};
    for (const auto& e : x.entries)
        j["entries"].push_back({{"id", e.image_id}, {"identity", e.identity}, {"path", e.relative_path}});
}
inline void from_json(const nlohmann::json& j, DatasetIndex& x) {
    j.at("root").get_to(x.root_path);
    j.at("image_size").get_to(x.image_size);
    j.at("dropped_identities").get_to(x.dropped_identities);
    j.at("skipped_files").get_to(x.skipped_files);
    x.entries.clear();
    if (j.contains("entries"))
        for (const auto& e : j.at("entries"))
            x.entries.push_back({e.at("id"), e.at("identity"), e.at("path")});
}

inline void to_json(nlohmann::json& j, const IdentitySplit& s) {
    j = nlohmann::json{{"seed", s.seed},
                       {"eval_fraction", s.eval_fraction},
                       {"train", s.train_identities},
                       {"eval", s.eval_identities}};
}
inline void from_json(const nlohmann::json& j, IdentitySplit& s) {
    j.at("seed").get_to(s.seed);
    j.at("eval_fraction").get_to(s.eval_fraction);
    j.at("train").get_to(s.train_identities);
    j.at("eval").get_to(s.eval_identities);
}

inline void to_json(nlohmann::json& j, const VerificationPairSet& p) {
    j = nlohmann::json{{"seed", p.seed}, {"pairs", nlohmann::json::array()}};
    for (const auto& pr : p.pairs)
        j["pairs"].push_back({{"a", pr.image_id_a},
                              {"b", pr.image_id_b},
                              {"label", pr.label == PairLabel::positive ? "positive" : "negative"}});
}
inline void from_json(const nlohmann::json& j, VerificationPairSet& p) {
    j.at("seed").get_to(p.seed);
    p.pairs.clear();
    for (const auto& pr : j.at("pairs"))
        p.pairs.push_back({pr.at("a"), pr.at("b"),
                           pr.at("label") == "positive" ? PairLabel::positive
                                                        : PairLabel::negative});
}

inline void to_json(nlohmann::json& j, const GalleryTrial& t) {
    j = nlohmann::json{{"seed", t.seed},
                       {"probe_image", t.probe_image_id},
                       {"probe_identity", t.probe_identity},
                       {"gallery", nlohmann::json::array()}};
    for (const auto& [img, id] : t.gallery)
        j["gallery"].push_back({{"image", img}, {"identity", id}});
}
inline void from_json(const nlohmann::json& j, GalleryTrial& t) {
    j.at("seed").get_to(t.seed);
    j.at("probe_image").get_to(t.probe_image_id);
    j.at("probe_identity").get_to(t.probe_identity);
    t.gallery.clear();
    for (const auto& g : j.at("gallery")) t.gallery.emplace_back(g.at("image"), g.at("identity"));
}

template <typename T>
void save_json(const fs::path& path, const T& value) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    require(f.good(), "cannot write: ", path.string());
    nlohmann::json j = value;
    f << j.dump(2) << "\n";
}

template <typename T>
T load_json(const fs::path& path) {
    std::ifstream f(path);
    require(f.good(), "cannot read: ", path.string());
    nlohmann::json j;
    f >> j;
    return j.get<T>();
}

}  // namespace advface::dataset

#endif
