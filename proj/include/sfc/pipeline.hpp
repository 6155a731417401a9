#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfc/common.hpp"
#include "sfc/corpus.hpp"
#include "sfc/embeddings.hpp"
#include "sfc/eval.hpp"
#include "sfc/features.hpp"
#include "sfc/maxent.hpp"
#include "sfc/naive_bayes.hpp"
#include "sfc/preprocess.hpp"
#include "sfc/recurrent.hpp"
#include "sfc/stats.hpp"

namespace sfc {

inline constexpr int kBundleVersion = 1;

struct ExperimentSpec {
    std::string task = "sentiment";  // sentiment | topic
    std::string model = "nb";        // nb | maxent | lstm | bilstm
    FeatureKinds features;           // n-gram models only
    std::string embeddings_path;     // recurrent models: pretrained vectors
    bool train_embeddings = false;   // recurrent models: fit word2vec on the train split
    double ratio = 0.8;
    unsigned seed = 42;
    int min_df = 1;
    int top_k = 0;  // chi-square selection; 0 keeps the whole vocabulary
    double nb_alpha = 1.0;
    MaxentTrainConfig maxent;
    W2vConfig w2v;
    NetworkConfig net;

    bool is_recurrent() const { return model == "lstm" || model == "bilstm"; }

    LabelAxis axis() const {
        return task == "sentiment" ? LabelAxis::sentiment : LabelAxis::topic;
    }

    // Flag-combination checks; runs before any data is touched.
    void validate() const {
        if (task != "sentiment" && task != "topic")
            throw UsageError("unknown task \"" + task + "\"");
        if (model != "nb" && model != "maxent" && model != "lstm" && model != "bilstm")
            throw UsageError("unknown model \"" + model + "\"");
        if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("split ratio must be in (0, 1)");
        if (is_recurrent()) {
            if (features.any())
                throw UsageError("recurrent models take embeddings, not n-gram features");
            if (embeddings_path.empty() && !train_embeddings)
                throw UsageError(model + " needs --embeddings or --train-embeddings");
        } else {
            if (!features.any())
                throw UsageError(model + " needs at least one of --features uni,bi,dep,pos");
            if (!embeddings_path.empty())
                throw UsageError("--embeddings only applies to lstm/bilstm");
        }
        if (top_k < 0) throw UsageError("top_k must be >= 0");
        if (min_df < 1) throw UsageError("min_df must be >= 1");
    }
};

inline std::string model_label(const std::string& model) {
    if (model == "nb") return "NB";
    if (model == "maxent") return "Maxent";
    if (model == "lstm") return "LSTM";
    return "Bi-LSTM";
}

inline std::string feature_label(const ExperimentSpec& spec) {
    if (spec.is_recurrent()) return "Word2Vec";
    std::string out;
    const auto add = [&](const char* name) {
        if (!out.empty()) out += "+";
        out += name;
    };
    if (spec.features.unigram) add("Uni-gram");
    if (spec.features.bigram) add("Bi-gram");
    if (spec.features.dep) add("DEP");
    if (spec.features.pos) add("POS");
    return out;
}

// A trained classifier plus everything needed to reproduce its preprocessing
// and featurisation on new text.
struct ModelBundle {
    std::string task;
    std::string model;
    FeatureKinds features;
    StopwordList stopwords;
    int num_classes = 0;

    Vocabulary vocab;  // n-gram models
    NbModel nb;
    MaxentModel maxent;

    EmbeddingTable embeddings;  // recurrent models
    SequenceClassifier network;

    bool is_recurrent() const { return model == "lstm" || model == "bilstm"; }

    struct Prediction {
        int label = 0;
        bool flagged = false;  // empty after preprocessing
    };

    Prediction predict(const TokenSequence& tokens,
                       const std::vector<TokenAnnotation>* annotations) const {
        Prediction out;
        out.flagged = tokens.empty();
        if (is_recurrent()) {
            std::vector<Eigen::VectorXd> seq;
            seq.reserve(tokens.size());
            for (const auto& tok : tokens) seq.push_back(embeddings.lookup(tok));
            const auto pred = predict_sequence(network, seq);
            out.label = pred.label;
            out.flagged = out.flagged || pred.fallback;
            return out;
        }
        const auto feats = extract_features(tokens, annotations, features);
        const auto vec = vectorize(feats, vocab);
        out.label = model == "nb" ? predict_nb(nb, vec).label : predict_maxent(maxent, vec);
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"version", kBundleVersion},
                            {"task", task},
                            {"model", model},
                            {"num_classes", num_classes},
                            {"features", features.names()}};
        std::vector<std::string> stops(stopwords.words.begin(), stopwords.words.end());
        std::sort(stops.begin(), stops.end());
        j["stopwords"] = std::move(stops);
        if (is_recurrent()) {
            j["embeddings"] = embeddings.to_json();
            j["network"] = network.to_json();
        } else {
            j["vocabulary"] = vocab.to_json();
            if (model == "nb")
                j["nb"] = nb.to_json();
            else
                j["maxent"] = maxent.to_json();
        }
        return j;
    }

    static ModelBundle from_json(const nlohmann::json& j) {
        if (!j.contains("version") || j.at("version").get<int>() != kBundleVersion)
            throw DataError("unsupported model bundle version");
        ModelBundle b;
        b.task = j.at("task").get<std::string>();
        b.model = j.at("model").get<std::string>();
        b.num_classes = j.at("num_classes").get<int>();
        b.features = FeatureKinds::parse(j.at("features").get<std::vector<std::string>>());
        for (const auto& w : j.at("stopwords")) b.stopwords.words.insert(w.get<std::string>());
        if (b.is_recurrent()) {
            b.embeddings = EmbeddingTable::from_json(j.at("embeddings"));
            b.network = SequenceClassifier::from_json(j.at("network"));
        } else {
            b.vocab = Vocabulary::from_json(j.at("vocabulary"));
            if (b.model == "nb")
                b.nb = NbModel::from_json(j.at("nb"));
            else
                b.maxent = MaxentModel::from_json(j.at("maxent"));
        }
        return b;
    }

    void save(const std::filesystem::path& path) const { write_text_file(path, to_json().dump()); }

    static ModelBundle load(const std::filesystem::path& path) {
        return from_json(nlohmann::json::parse(read_text_file(path)));
    }
};

struct ExperimentResult {
    MetricsReport report;
    nlohmann::json metrics_json;
    std::string table_row;
    ModelBundle bundle;
    std::vector<std::string> flagged_test_ids;
};

namespace detail {

inline int gold_label(const FeedbackRecord& rec, LabelAxis axis) {
    if (axis == LabelAxis::sentiment)
        return rec.sentiment ? static_cast<int>(*rec.sentiment) : -1;
    return rec.topic ? static_cast<int>(*rec.topic) : -1;
}

inline void require_labels(const Corpus& corpus, LabelAxis axis) {
    std::vector<std::string> missing;
    for (const auto& rec : corpus.records)
        if (gold_label(rec, axis) < 0) missing.push_back(rec.id);
    if (!missing.empty()) {
        std::string msg = "records missing " + std::string(to_string(axis)) + " label:";
        std::size_t shown = 0;
        for (const auto& id : missing) {
            if (++shown > 10) {
                msg += " ... (" + std::to_string(missing.size()) + " total)";
                break;
            }
            msg += " " + id;
        }
        throw DataError(msg);
    }
}

inline const std::vector<TokenAnnotation>* annotations_or_throw(const Corpus& corpus,
                                                                const std::string& id,
                                                                bool required) {
    const auto* ann = corpus.annotations_for(id);
    if (required && ann == nullptr)
        throw DataError("record " + id + " has no annotations but dep/pos features need them");
    return ann;
}

}  // namespace detail

// The whole supervised path: split, preprocess, featurise or embed, train,
// evaluate on the held-out part. Deterministic for a fixed spec and corpus.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const Corpus& corpus,
                                       const StopwordList& stopwords = {}) {
    spec.validate();
    const LabelAxis axis = spec.axis();
    detail::require_labels(corpus, axis);
    const int k = num_classes(axis);

    const auto split = split_train_test(corpus, spec.ratio, spec.seed);
    const auto train_tokens = preprocess_corpus(split.train, stopwords);
    const auto test_tokens = preprocess_corpus(split.test, stopwords);

    ExperimentResult result;
    auto& bundle = result.bundle;
    bundle.task = spec.task;
    bundle.model = spec.model;
    bundle.features = spec.features;
    bundle.stopwords = stopwords;
    bundle.num_classes = k;

    std::vector<int> gold, predicted;
    if (spec.is_recurrent()) {
        if (!spec.embeddings_path.empty()) {
            bundle.embeddings = EmbeddingTable::load_text(spec.embeddings_path);
        } else {
            std::vector<TokenSequence> sentences;
            for (const auto& rec : split.train.records) {
                const auto& toks = train_tokens.at(rec.id);
                if (!toks.empty()) sentences.push_back(toks);
            }
            bundle.embeddings = train_word2vec(sentences, spec.w2v);
        }

        std::vector<EmbeddedExample> examples;
        for (const auto& rec : split.train.records) {
            const auto& toks = train_tokens.at(rec.id);
            if (toks.empty()) continue;  // nothing to feed the network
            std::vector<Eigen::VectorXd> seq;
            seq.reserve(toks.size());
            for (const auto& tok : toks) seq.push_back(bundle.embeddings.lookup(tok));
            examples.emplace_back(std::move(seq), detail::gold_label(rec, axis));
        }
        NetworkConfig net_config = spec.net;
        net_config.num_classes = k;
        net_config.input_dim = bundle.embeddings.dim();
        const auto direction =
            spec.model == "bilstm" ? Direction::bidirectional : Direction::forward_only;
        bundle.network = train_network(examples, net_config, direction).model;
    } else {
        std::vector<std::vector<std::string>> train_feats;
        std::vector<int> train_labels;
        for (const auto& rec : split.train.records) {
            const auto* ann = detail::annotations_or_throw(split.train, rec.id,
                                                           spec.features.needs_annotations());
            train_feats.push_back(
                extract_features(train_tokens.at(rec.id), ann, spec.features));
            train_labels.push_back(detail::gold_label(rec, axis));
        }
        bundle.vocab = Vocabulary::build(train_feats, spec.min_df);
        std::vector<SparseVector> train_docs;
        train_docs.reserve(train_feats.size());
        for (const auto& feats : train_feats) train_docs.push_back(vectorize(feats, bundle.vocab));
        if (spec.top_k > 0 && spec.top_k < bundle.vocab.size()) {
            auto sel = chi_square_select(bundle.vocab, train_docs, train_labels, k, spec.top_k);
            for (auto& doc : train_docs) doc = remap(doc, sel.old_to_new);
            bundle.vocab = std::move(sel.reduced);
        }
        if (spec.model == "nb") {
            bundle.nb =
                train_nb(train_docs, train_labels, k, bundle.vocab.size(), spec.nb_alpha);
        } else {
            MaxentTrainConfig config = spec.maxent;
            bundle.maxent =
                train_maxent(train_docs, train_labels, k, bundle.vocab.size(), config);
        }
    }

    for (const auto& rec : split.test.records) {
        const auto* ann =
            spec.is_recurrent()
                ? nullptr
                : detail::annotations_or_throw(split.test, rec.id,
                                               spec.features.needs_annotations());
        const auto pred = bundle.predict(test_tokens.at(rec.id), ann);
        if (pred.flagged) result.flagged_test_ids.push_back(rec.id);
        gold.push_back(detail::gold_label(rec, axis));
        predicted.push_back(pred.label);
    }

    result.report = metrics(confusion(gold, predicted, k));
    result.metrics_json = {{"version", 1},
                           {"task", spec.task},
                           {"model", spec.model},
                           {"features", feature_label(spec)},
                           {"seed", spec.seed},
                           {"ratio", spec.ratio},
                           {"num_classes", k},
                           {"train_size", split.train.records.size()},
                           {"test_size", split.test.records.size()},
                           {"flagged_test_records", result.flagged_test_ids},
                           {"metrics", result.report.to_json()}};
    result.table_row = model_label(spec.model) + " | " + feature_label(spec) + " | " +
                       [&] {
                           char buf[64];
                           std::snprintf(buf, sizeof(buf), "%.1f | %.1f | %.1f",
                                         100.0 * result.report.weighted_p,
                                         100.0 * result.report.weighted_r,
                                         100.0 * result.report.weighted_f1);
                           return std::string(buf);
                       }();
    return result;
}

// The full ablation: four NB rows, four Maxent rows, then LSTM and Bi-LSTM on
// embeddings trained from the training split (unless a vector file is given).
inline std::vector<ExperimentResult> run_grid(const ExperimentSpec& base, const Corpus& corpus,
                                              const StopwordList& stopwords = {}) {
    const std::vector<FeatureKinds> ngram_rows = {
        FeatureKinds::parse({"uni"}),
        FeatureKinds::parse({"bi"}),
        FeatureKinds::parse({"bi", "dep"}),
        FeatureKinds::parse({"bi", "dep", "pos"}),
    };
    if (corpus.annotations.empty())
        throw DataError("the grid's DEP/POS rows need an annotations sidecar");

    std::vector<ExperimentResult> results;
    for (const std::string model : {"nb", "maxent"})
        for (const auto& kinds : ngram_rows) {
            ExperimentSpec spec = base;
            spec.model = model;
            spec.features = kinds;
            spec.embeddings_path.clear();
            spec.train_embeddings = false;
            results.push_back(run_experiment(spec, corpus, stopwords));
        }
    for (const std::string model : {"lstm", "bilstm"}) {
        ExperimentSpec spec = base;
        spec.model = model;
        spec.features = {};
        if (spec.embeddings_path.empty()) spec.train_embeddings = true;
        results.push_back(run_experiment(spec, corpus, stopwords));
    }
    return results;
}

inline std::string grid_table(const std::vector<ExperimentResult>& results) {
    std::vector<ResultRow> rows;
    for (const auto& r : results)
        rows.push_back({r.metrics_json.at("model") == "nb"       ? "NB"
                        : r.metrics_json.at("model") == "maxent" ? "Maxent"
                        : r.metrics_json.at("model") == "lstm"   ? "LSTM"
                                                                 : "Bi-LSTM",
                        r.metrics_json.at("features").get<std::string>(), r.report});
    return format_result_table(rows);
}

}  // namespace sfc
