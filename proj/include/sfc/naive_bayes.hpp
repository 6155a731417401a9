#pragma once

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfc/common.hpp"
#include "sfc/features.hpp"

namespace sfc {

// Multinomial model over sparse count vectors. Everything is kept in log
// space; the evidence term is never computed since the decision is an argmax.
struct NbModel {
    int num_classes = 0;
    int vocab_size = 0;
    double alpha = 1.0;
    std::vector<double> log_prior;               // K
    std::vector<std::vector<double>> log_lik;    // K x V

    nlohmann::json to_json() const {
        return {{"version", 1},   {"alpha", alpha},        {"num_classes", num_classes},
                {"vocab_size", vocab_size}, {"log_prior", log_prior}, {"log_lik", log_lik}};
    }

    static NbModel from_json(const nlohmann::json& j) {
        if (!j.contains("version") || j.at("version").get<int>() != 1)
            throw DataError("unsupported naive bayes model version");
        NbModel m;
        m.alpha = j.at("alpha").get<double>();
        m.num_classes = j.at("num_classes").get<int>();
        m.vocab_size = j.at("vocab_size").get<int>();
        m.log_prior = j.at("log_prior").get<std::vector<double>>();
        m.log_lik = j.at("log_lik").get<std::vector<std::vector<double>>>();
        return m;
    }
};

// log P(c) = log(N_c / N)
// log P(t|c) = log((count(t,c) + alpha) / (sum_t count(t,c) + alpha * V))
inline NbModel train_nb(const std::vector<SparseVector>& docs, const std::vector<int>& labels,
                        int num_classes, int vocab_size, double alpha = 1.0) {
    if (alpha <= 0.0) throw UsageError("smoothing alpha must be positive");
    if (docs.empty() || docs.size() != labels.size())
        throw DataError("need one label per training document");
    if (num_classes < 1 || vocab_size < 0) throw DataError("bad model dimensions");

    std::vector<long long> class_docs(static_cast<std::size_t>(num_classes), 0);
    std::vector<std::vector<long long>> counts(
        static_cast<std::size_t>(num_classes),
        std::vector<long long>(static_cast<std::size_t>(vocab_size), 0));
    for (std::size_t d = 0; d < docs.size(); ++d) {
        int label = labels[d];
        if (label < 0 || label >= num_classes) throw DataError("label id out of range");
        ++class_docs[static_cast<std::size_t>(label)];
        for (const auto& [id, n] : docs[d].entries) {
            if (id < 0 || id >= vocab_size) throw DataError("feature id out of range");
            counts[static_cast<std::size_t>(label)][static_cast<std::size_t>(id)] += n;
        }
    }
    for (int c = 0; c < num_classes; ++c)
        if (class_docs[static_cast<std::size_t>(c)] == 0)
            throw DataError("class " + std::to_string(c) + " has no training documents");

    NbModel model;
    model.num_classes = num_classes;
    model.vocab_size = vocab_size;
    model.alpha = alpha;
    model.log_prior.resize(static_cast<std::size_t>(num_classes));
    model.log_lik.assign(static_cast<std::size_t>(num_classes),
                         std::vector<double>(static_cast<std::size_t>(vocab_size)));
    const double n_total = static_cast<double>(docs.size());
    for (int c = 0; c < num_classes; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        model.log_prior[ci] = std::log(static_cast<double>(class_docs[ci]) / n_total);
        long long token_total = 0;
        for (long long v : counts[ci]) token_total += v;
        const double denom =
            std::log(static_cast<double>(token_total) + alpha * static_cast<double>(vocab_size));
        for (int t = 0; t < vocab_size; ++t)
            model.log_lik[ci][static_cast<std::size_t>(t)] =
                std::log(static_cast<double>(counts[ci][static_cast<std::size_t>(t)]) + alpha) -
                denom;
    }
    return model;
}

struct NbPrediction {
    int label = 0;
    std::vector<double> log_posterior;  // unnormalised, one per class
};

// score(c) = log P(c) + sum_t n_t log P(t|c); ties go to the lowest class id.
inline NbPrediction predict_nb(const NbModel& model, const SparseVector& doc) {
    NbPrediction pred;
    pred.log_posterior = model.log_prior;
    for (const auto& [id, n] : doc.entries) {
        if (id < 0 || id >= model.vocab_size)
            throw DataError("feature id out of range for this model");
        for (int c = 0; c < model.num_classes; ++c)
            pred.log_posterior[static_cast<std::size_t>(c)] +=
                static_cast<double>(n) *
                model.log_lik[static_cast<std::size_t>(c)][static_cast<std::size_t>(id)];
    }
    for (int c = 1; c < model.num_classes; ++c)
        if (pred.log_posterior[static_cast<std::size_t>(c)] >
            pred.log_posterior[static_cast<std::size_t>(pred.label)])
            pred.label = c;
    return pred;
}

}  // namespace sfc
