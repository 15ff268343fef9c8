#ifndef ADVFACE_CORE_CHECKPOINT_HPP
#define ADVFACE_CORE_CHECKPOINT_HPP

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "advface/core/layers.hpp"

namespace advface::nn {

// Single-file checkpoint: magic, JSON header (metadata + tensor manifest),
// then raw little-endian blobs in manifest order.
inline constexpr char kCheckpointMagic[8] = {'A', 'F', 'C', 'K', 'P', 'T', '1', '\n'};

template <typename S>
struct NamedTensors {
    std::vector<std::pair<std::string, Tensor<S>>> items;

    void add(const std::string& name, Tensor<S> t) { items.emplace_back(name, std::move(t)); }
    const Tensor<S>* find(const std::string& name) const {
        for (const auto& [k, v] : items)
            if (k == name) return &v;
        return nullptr;
    }
};

template <typename S>
void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     const NamedTensors<S>& tensors) {
    nlohmann::json header;
    header["meta"] = meta;
    header["tensors"] = nlohmann::json::array();
    for (const auto& [name, t] : tensors.items) {
        header["tensors"].push_back(
            {{"name", name}, {"shape", t.shape()}, {"dtype", sizeof(S) == 4 ? "f32" : "f64"}});
    }
    std::string hs = header.dump();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open checkpoint for writing: ", path.string());
    f.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    uint64_t len = hs.size();
    f.write(reinterpret_cast<const char*>(&len), sizeof(len));
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, t] : tensors.items)
        f.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(sizeof(S) * t.numel()));
    require(f.good(), "checkpoint write failed: ", path.string());
}

template <typename S>
std::pair<nlohmann::json, NamedTensors<S>> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open checkpoint: ", path.string());
    char magic[8];
    f.read(magic, sizeof(magic));
    require(f.good() && std::equal(magic, magic + 8, kCheckpointMagic),
            "not a checkpoint file: ", path.string());
    uint64_t len = 0;
    f.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string hs(len, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(len));
    require(f.good(), "truncated checkpoint header: ", path.string());
    nlohmann::json header = nlohmann::json::parse(hs);

    NamedTensors<S> tensors;
    for (const auto& entry : header.at("tensors")) {
        std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        std::string dtype = entry.at("dtype").get<std::string>();
        long n = Tensor<S>::count(shape);
        Tensor<S> t(shape);
        if ((dtype == "f32") == (sizeof(S) == 4)) {
            f.read(reinterpret_cast<char*>(t.data()),
                   static_cast<std::streamsize>(sizeof(S) * n));
        } else if (dtype == "f32") {
            std::vector<float> tmp(static_cast<size_t>(n));
            f.read(reinterpret_cast<char*>(tmp.data()),
                   static_cast<std::streamsize>(sizeof(float) * n));
            for (long i = 0; i < n; ++i) t[i] = static_cast<S>(tmp[i]);
        } else {
            std::vector<double> tmp(static_cast<size_t>(n));
            f.read(reinterpret_cast<char*>(tmp.data()),
                   static_cast<std::streamsize>(sizeof(double) * n));
            for (long i = 0; i < n; ++i) t[i] = static_cast<S>(tmp[i]);
        }
        require(f.good(), "truncated checkpoint tensor: ", entry.at("name").get<std::string>());
        tensors.add(entry.at("name").get<std::string>(), std::move(t));
    }
    return {header.at("meta"), std::move(tensors)};
}

// Snapshot all parameters and buffers of a store.
template <typename S>
NamedTensors<S> snapshot(const ParamStore<S>& ps) {
    NamedTensors<S> out;
    for (const auto& [name, p] : ps.params()) out.add(name, p->value);
    for (const auto& [name, t] : ps.buffers()) out.add(name, *t);
    return out;
}

// Restore parameters and buffers by name; every store entry must be present.
template <typename S>
void restore(ParamStore<S>& ps, const NamedTensors<S>& tensors) {
    for (auto& [name, p] : ps.params()) {
        const Tensor<S>* t = tensors.find(name);
        require(t != nullptr, "checkpoint missing tensor: ", name);
        require(t->shape() == p->value.shape(), "checkpoint shape mismatch for: ", name);
        p->value = *t;
    }
    for (auto& [name, buf] : ps.buffers()) {
        const Tensor<S>* t = tensors.find(name);
        require(t != nullptr, "checkpoint missing buffer: ", name);
        require(t->shape() == buf->shape(), "checkpoint buffer shape mismatch for: ", name);
        *buf = *t;
    }
}

}  // namespace advface::nn

#endif
