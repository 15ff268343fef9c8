#ifndef ADVFACE_EVAL_METRICS_HPP
#define ADVFACE_EVAL_METRICS_HPP

#include <fstream>
#include <map>
#include <optional>

#include <json.hpp>

#include "advface/common.hpp"

namespace advface::eval {

// Area under the ROC curve via the rank statistic (Mann-Whitney), ties
// counted one half. Scores are oriented so higher = more likely positive.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size(), "roc_auc: size mismatch");
    long n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    require(n_pos > 0 && n_neg > 0, "roc_auc: both classes required");

    std::vector<size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < idx.size()) {
        size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
        for (size_t k = i; k < j; ++k)
            if (labels[idx[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    double p = static_cast<double>(n_pos), n = static_cast<double>(n_neg);
    return (rank_sum_pos - p * (p + 1) / 2.0) / (p * n);
}

// Threshold minimizing |FPR - FNR| over midpoints between adjacent distinct
// sorted scores; ties resolved toward the smaller threshold. Convention:
// predict positive when score >= threshold. If every score is identical there
// is no midpoint and that score is returned.
inline double eer_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size(), "eer_threshold: size mismatch");
    long n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    require(n_pos > 0 && n_neg > 0, "eer_threshold: both classes required");

    std::vector<size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double best_t = scores[idx[0]];
    double best_gap = std::numeric_limits<double>::infinity();
    long pos_below = 0, neg_below = 0;
    bool found = false;
    size_t i = 0;
    while (i < idx.size()) {
        size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            (labels[idx[j]] ? pos_below : neg_below)++;
            ++j;
        }
        if (j == idx.size()) break;
        double t = 0.5 * (scores[idx[i]] + scores[idx[j]]);
        double fnr = static_cast<double>(pos_below) / static_cast<double>(n_pos);
        double fpr = static_cast<double>(n_neg - neg_below) / static_cast<double>(n_neg);
        double gap = std::abs(fpr - fnr);
        if (gap < best_gap) {
            best_gap = gap;
            best_t = t;
            found = true;
        }
        i = j;
    }
    if (!found) return scores[idx[0]];
    return best_t;
}

// Shared result record for verification, identification and timing runs.
struct MetricsReport {
    std::string model;       // model or model-set name
    int n_models = 1;
    std::string loss_name;   // victim training loss
    std::string attack = "clean";
    double epsilon = 0.0;
    double lambda = 0.0;

    double v_auc = -1.0;
    double v_acc = -1.0;        // percent at threshold
    double recall_pos = -1.0;   // percent on positive pairs
    double rank1_acc = -1.0;    // percent
    double threshold = 0.0;
    long n_pairs = 0;
    long n_trials = 0;
    std::map<std::string, double> timing;  // seconds per image per method

    static std::string csv_header() {
        return "model,n_models,loss,attack,epsilon,lambda,v_auc,v_acc,recall_pos,rank1_acc,"
               "threshold,n_pairs,n_trials";
    }
    std::string csv_row() const {
        std::ostringstream os;
        auto cell = [&os](double v) {
            if (v >= 0)
                os << v;
            os << ",";
        };
        os << model << "," << n_models << "," << loss_name << "," << attack << "," << epsilon
           << "," << lambda << ",";
        cell(v_auc);
        cell(v_acc);
        cell(recall_pos);
        cell(rank1_acc);
        os << threshold << "," << n_pairs << "," << n_trials;
        return os.str();
    }
};

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
    j = nlohmann::json{{"model", r.model},         {"n_models", r.n_models},
                       {"loss", r.loss_name},      {"attack", r.attack},
                       {"epsilon", r.epsilon},     {"lambda", r.lambda},
                       {"v_auc", r.v_auc},         {"v_acc", r.v_acc},
                       {"recall_pos", r.recall_pos}, {"rank1_acc", r.rank1_acc},
                       {"threshold", r.threshold}, {"n_pairs", r.n_pairs},
                       {"n_trials", r.n_trials}};
    if (!r.timing.empty()) j["timing"] = r.timing;
}
inline void from_json(const nlohmann::json& j, MetricsReport& r) {
    j.at("model").get_to(r.model);
    j.at("n_models").get_to(r.n_models);
    j.at("loss").get_to(r.loss_name);
    j.at("attack").get_to(r.attack);
    j.at("epsilon").get_to(r.epsilon);
    j.at("lambda").get_to(r.lambda);
    j.at("v_auc").get_to(r.v_auc);
    j.at("v_acc").get_to(r.v_acc);
    j.at("recall_pos").get_to(r.recall_pos);
    j.at("rank1_acc").get_to(r.rank1_acc);
    j.at("threshold").get_to(r.threshold);
    j.at("n_pairs").get_to(r.n_pairs);
    j.at("n_trials").get_to(r.n_trials);
    if (j.contains("timing")) j.at("timing").get_to(r.timing);
}

}  // namespace advface::eval

#endif
