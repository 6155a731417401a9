#pragma once

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfc/common.hpp"
#include "sfc/features.hpp"

namespace sfc {

// Multiclass log-linear model with one weight per (class, feature) pair and a
// quadratic penalty on the weights.
struct MaxentModel {
    int num_classes = 0;
    int num_features = 0;
    double sigma2 = 10.0;
    std::vector<double> weights;  // row-major by class, K x V

    double weight(int c, int t) const {
        return weights[static_cast<std::size_t>(c) * static_cast<std::size_t>(num_features) +
                       static_cast<std::size_t>(t)];
    }
    double& weight(int c, int t) {
        return weights[static_cast<std::size_t>(c) * static_cast<std::size_t>(num_features) +
                       static_cast<std::size_t>(t)];
    }

    nlohmann::json to_json() const {
        return {{"version", 1},
                {"num_classes", num_classes},
                {"num_features", num_features},
                {"sigma2", sigma2},
                {"weights", weights}};
    }

    static MaxentModel from_json(const nlohmann::json& j) {
        if (!j.contains("version") || j.at("version").get<int>() != 1)
            throw DataError("unsupported maxent model version");
        MaxentModel m;
        m.num_classes = j.at("num_classes").get<int>();
        m.num_features = j.at("num_features").get<int>();
        m.sigma2 = j.at("sigma2").get<double>();
        m.weights = j.at("weights").get<std::vector<double>>();
        if (m.weights.size() != static_cast<std::size_t>(m.num_classes) *
                                    static_cast<std::size_t>(m.num_features))
            throw DataError("maxent weight vector has the wrong size");
        return m;
    }
};

struct MaxentTrainConfig {
    double learning_rate = 0.5;
    int epochs = 500;
    double sigma2 = 10.0;
    double tolerance = 1e-9;  // stop when the objective moves less than this
    unsigned seed = 42;       // unused by the full-batch path, kept for interface parity
};

// Softmax over class scores s(c) = sum_t n_t * w(c,t), stabilised by
// subtracting the max score.
inline std::vector<double> maxent_prob(const MaxentModel& model, const SparseVector& doc) {
    std::vector<double> scores(static_cast<std::size_t>(model.num_classes), 0.0);
    for (const auto& [id, n] : doc.entries) {
        if (id < 0 || id >= model.num_features)
            throw DataError("feature id out of range for this model");
        for (int c = 0; c < model.num_classes; ++c)
            scores[static_cast<std::size_t>(c)] += static_cast<double>(n) * model.weight(c, id);
    }
    double max_score = scores[0];
    for (double s : scores) max_score = std::max(max_score, s);
    double z = 0.0;
    for (double& s : scores) {
        s = std::exp(s - max_score);
        z += s;
    }
    for (double& s : scores) s /= z;
    return scores;
}

struct MaxentObjective {
    double value = 0.0;
    std::vector<double> gradient;  // same layout as MaxentModel::weights
};

// Penalised log-likelihood and its gradient:
//   L = sum_d log P(c_d|d) - sum w^2 / (2 sigma^2)
//   dL/dw(c,t) = sum_d n_t(d) (1[c_d=c] - P(c|d)) - w(c,t) / sigma^2
inline MaxentObjective objective_and_gradient(const MaxentModel& model,
                                              const std::vector<SparseVector>& docs,
                                              const std::vector<int>& labels) {
    if (docs.empty() || docs.size() != labels.size())
        throw DataError("need one label per training document");
    MaxentObjective obj;
    obj.gradient.assign(model.weights.size(), 0.0);
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto probs = maxent_prob(model, docs[d]);
        const int gold = labels[d];
        if (gold < 0 || gold >= model.num_classes) throw DataError("label id out of range");
        obj.value += std::log(probs[static_cast<std::size_t>(gold)]);
        for (const auto& [id, n] : docs[d].entries)
            for (int c = 0; c < model.num_classes; ++c) {
                const double indicator = c == gold ? 1.0 : 0.0;
                obj.gradient[static_cast<std::size_t>(c) *
                                 static_cast<std::size_t>(model.num_features) +
                             static_cast<std::size_t>(id)] +=
                    static_cast<double>(n) * (indicator - probs[static_cast<std::size_t>(c)]);
            }
    }
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        obj.value -= model.weights[i] * model.weights[i] / (2.0 * model.sigma2);
        obj.gradient[i] -= model.weights[i] / model.sigma2;
    }
    return obj;
}

// Full-batch gradient ascent from zero weights. A step that would lower the
// objective is retried with a halved rate, up to 20 halvings; the objective
// is therefore non-decreasing over accepted steps. The problem is concave, so
// initialisation only affects speed.
inline MaxentModel train_maxent(const std::vector<SparseVector>& docs,
                                const std::vector<int>& labels, int num_classes,
                                int num_features, const MaxentTrainConfig& config = {}) {
    if (config.learning_rate <= 0.0 || config.epochs < 1 || config.sigma2 <= 0.0 ||
        config.tolerance <= 0.0)
        throw UsageError("maxent training parameters must be positive");
    std::vector<bool> present(static_cast<std::size_t>(num_classes), false);
    for (int label : labels) {
        if (label < 0 || label >= num_classes) throw DataError("label id out of range");
        present[static_cast<std::size_t>(label)] = true;
    }
    for (int c = 0; c < num_classes; ++c)
        if (!present[static_cast<std::size_t>(c)])
            throw DataError("class " + std::to_string(c) + " has no training documents");

    MaxentModel model;
    model.num_classes = num_classes;
    model.num_features = num_features;
    model.sigma2 = config.sigma2;
    model.weights.assign(
        static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_features), 0.0);

    MaxentObjective current = objective_and_gradient(model, docs, labels);
    if (!std::isfinite(current.value))
        throw NumericError("maxent objective is not finite at initialisation");

    double rate = config.learning_rate;
    std::vector<double> backup;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        backup = model.weights;
        int halvings = 0;
        MaxentObjective next;
        while (true) {
            for (std::size_t i = 0; i < model.weights.size(); ++i)
                model.weights[i] = backup[i] + rate * current.gradient[i];
            next = objective_and_gradient(model, docs, labels);
            if (std::isfinite(next.value) && next.value >= current.value) break;
            if (++halvings > 20) break;
            rate *= 0.5;
        }
        if (!std::isfinite(next.value)) throw NumericError("maxent objective diverged (NaN)");
        if (next.value < current.value) {
            model.weights = backup;  // no acceptable step exists at this scale
            break;
        }
        const double delta = next.value - current.value;
        current = std::move(next);
        if (delta < config.tolerance) break;
    }
    return model;
}

// Argmax of maxent_prob; ties go to the lowest class id.
inline int predict_maxent(const MaxentModel& model, const SparseVector& doc) {
    const auto probs = maxent_prob(model, doc);
    int best = 0;
    for (int c = 1; c < model.num_classes; ++c)
        if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)]) best = c;
    return best;
}

}  // namespace sfc
