#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfc/common.hpp"

namespace sfc {

// Rows are gold labels, columns are predictions.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<long long> cells;  // K x K row-major

    explicit ConfusionMatrix(int k = 0)
        : num_classes(k),
          cells(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0) {}

    long long& at(int gold, int pred) {
        return cells[static_cast<std::size_t>(gold) * static_cast<std::size_t>(num_classes) +
                     static_cast<std::size_t>(pred)];
    }
    long long at(int gold, int pred) const {
        return cells[static_cast<std::size_t>(gold) * static_cast<std::size_t>(num_classes) +
                     static_cast<std::size_t>(pred)];
    }
    long long total() const {
        long long t = 0;
        for (long long c : cells) t += c;
        return t;
    }
};

inline ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred,
                                 int num_classes) {
    if (gold.size() != pred.size())
        throw DataError("gold and predicted label vectors differ in length");
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] < 0 || gold[i] >= num_classes || pred[i] < 0 || pred[i] >= num_classes)
            throw DataError("label id out of range");
        ++cm.at(gold[i], pred[i]);
    }
    return cm;
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // zero-denominator cases report 0 and drop these flags
    bool precision_defined = true;
    bool recall_defined = true;
    bool f1_defined = true;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    std::vector<long long> support;  // gold count per class
    double accuracy = 0.0;
    double micro_p = 0.0, micro_r = 0.0, micro_f1 = 0.0;
    double macro_p = 0.0, macro_r = 0.0, macro_f1 = 0.0;
    double weighted_p = 0.0, weighted_r = 0.0, weighted_f1 = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json per = nlohmann::json::array();
        for (std::size_t c = 0; c < per_class.size(); ++c)
            per.push_back({{"precision", per_class[c].precision},
                           {"recall", per_class[c].recall},
                           {"f1", per_class[c].f1},
                           {"precision_defined", per_class[c].precision_defined},
                           {"recall_defined", per_class[c].recall_defined},
                           {"f1_defined", per_class[c].f1_defined},
                           {"support", support[c]}});
        return {{"accuracy", accuracy},
                {"per_class", std::move(per)},
                {"micro", {{"precision", micro_p}, {"recall", micro_r}, {"f1", micro_f1}}},
                {"macro", {{"precision", macro_p}, {"recall", macro_r}, {"f1", macro_f1}}},
                {"weighted",
                 {{"precision", weighted_p}, {"recall", weighted_r}, {"f1", weighted_f1}}}};
    }
};

// Per-class, micro (pooled counts), macro (unweighted mean) and
// support-weighted precision/recall/F1. For single-label data the micro
// values all collapse to accuracy.
inline MetricsReport metrics(const ConfusionMatrix& cm) {
    const long long total = cm.total();
    if (total == 0) throw DataError("cannot compute metrics of an empty confusion matrix");
    const int k = cm.num_classes;

    MetricsReport rep;
    rep.per_class.resize(static_cast<std::size_t>(k));
    rep.support.resize(static_cast<std::size_t>(k));

    long long diag = 0;
    for (int c = 0; c < k; ++c) {
        long long tp = cm.at(c, c);
        long long fp = 0, fn = 0;
        for (int o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        diag += tp;
        rep.support[static_cast<std::size_t>(c)] = tp + fn;
        auto& m = rep.per_class[static_cast<std::size_t>(c)];
        if (tp + fp > 0)
            m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        else
            m.precision_defined = false;
        if (tp + fn > 0)
            m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        else
            m.recall_defined = false;
        if (m.precision + m.recall > 0.0)
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        else
            m.f1_defined = false;
    }

    rep.accuracy = static_cast<double>(diag) / static_cast<double>(total);
    const auto pooled_fp = static_cast<double>(total - diag);
    rep.micro_p = static_cast<double>(diag) / (static_cast<double>(diag) + pooled_fp);
    rep.micro_r = static_cast<double>(diag) / (static_cast<double>(diag) + pooled_fp);
    rep.micro_f1 = rep.micro_p == rep.micro_r
                       ? rep.micro_p  // harmonic mean of equal values
                       : 2.0 * rep.micro_p * rep.micro_r / (rep.micro_p + rep.micro_r);

    for (int c = 0; c < k; ++c) {
        const auto& m = rep.per_class[static_cast<std::size_t>(c)];
        const auto w = static_cast<double>(rep.support[static_cast<std::size_t>(c)]) /
                       static_cast<double>(total);
        rep.macro_p += m.precision / k;
        rep.macro_r += m.recall / k;
        rep.macro_f1 += m.f1 / k;
        rep.weighted_p += w * m.precision;
        rep.weighted_r += w * m.recall;
        rep.weighted_f1 += w * m.f1;
    }
    return rep;
}

struct ResultRow {
    std::string model;
    std::string features;
    MetricsReport report;
};

// Aligned text table; P/R/F1 are weighted averages as percentages.
inline std::string format_result_table(const std::vector<ResultRow>& rows) {
    std::size_t model_w = 10, feat_w = 16;
    for (const auto& row : rows) {
        model_w = std::max(model_w, row.model.size());
        feat_w = std::max(feat_w, row.features.size());
    }
    const auto pad = [](std::string s, std::size_t w) {
        s.resize(w, ' ');
        return s;
    };
    const auto pct = [](double v) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%5.1f", 100.0 * v);
        return std::string(buf);
    };
    std::string out = pad("Algorithm", model_w) + " | " + pad("Features", feat_w) +
                      " |     P |     R |    F1\n";
    out += std::string(model_w, '-') + "-+-" + std::string(feat_w, '-') +
           "-+-------+-------+------\n";
    for (const auto& row : rows)
        out += pad(row.model, model_w) + " | " + pad(row.features, feat_w) + " | " +
               pct(row.report.weighted_p) + " | " + pct(row.report.weighted_r) + " | " +
               pct(row.report.weighted_f1) + "\n";
    return out;
}

}  // namespace sfc
