#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfc/common.hpp"
#include "sfc/corpus.hpp"
#include "sfc/preprocess.hpp"

namespace sfc {

enum class FeatureKind { unigram, bigram, dep, pos };

struct FeatureKinds {
    bool unigram = false;
    bool bigram = false;
    bool dep = false;
    bool pos = false;

    bool any() const { return unigram || bigram || dep || pos; }
    bool needs_annotations() const { return dep || pos; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        if (unigram) out.push_back("unigram");
        if (bigram) out.push_back("bigram");
        if (dep) out.push_back("dep");
        if (pos) out.push_back("pos");
        return out;
    }

    // Accepts "uni"/"unigram", "bi"/"bigram", "dep", "pos".
    static FeatureKinds parse(const std::vector<std::string>& names) {
        FeatureKinds kinds;
        for (const auto& raw : names) {
            auto n = to_lower_ascii(trim(raw));
            if (n == "uni" || n == "unigram")
                kinds.unigram = true;
            else if (n == "bi" || n == "bigram")
                kinds.bigram = true;
            else if (n == "dep")
                kinds.dep = true;
            else if (n == "pos")
                kinds.pos = true;
            else
                throw UsageError("unknown feature kind \"" + raw + "\"");
        }
        return kinds;
    }
};

// Feature strings are namespaced by kind so the same surface form never
// collides across kinds. Tokens are whitespace-free, so a space is a safe
// bigram joiner.
inline std::vector<std::string> extract_features(const TokenSequence& tokens,
                                                 const std::vector<TokenAnnotation>* annotations,
                                                 const FeatureKinds& kinds) {
    if (kinds.needs_annotations() && annotations == nullptr)
        throw DataError("dep/pos features requested but no annotations available");

    std::vector<std::string> out;
    if (kinds.unigram)
        for (const auto& tok : tokens) out.push_back("u:" + tok);
    if (kinds.bigram)
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
            out.push_back("b:" + tokens[i] + " " + tokens[i + 1]);
    if (kinds.dep)
        for (const auto& ann : *annotations) {
            if (ann.head == TokenAnnotation::kRoot) continue;
            out.push_back("d:" + ann.deprel + "(" + (*annotations)[ann.head].token + "," +
                          ann.token + ")");
        }
    if (kinds.pos)
        for (const auto& ann : *annotations) out.push_back("p:" + ann.token + "/" + ann.pos);
    return out;
}

class Vocabulary {
public:
    int size() const { return static_cast<int>(names_.size()); }

    std::optional<int> lookup(const std::string& feature) const {
        auto it = index_.find(feature);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }

    int doc_freq(int id) const {
        return doc_freq_.empty() ? 0 : doc_freq_.at(static_cast<std::size_t>(id));
    }

    // Ids are dense and assigned in first-seen order over the training docs;
    // features below min_df are dropped.
    static Vocabulary build(const std::vector<std::vector<std::string>>& docs, int min_df = 1) {
        if (docs.empty()) throw DataError("cannot build a vocabulary from an empty training set");
        if (min_df < 1) throw UsageError("min_df must be >= 1");

        std::unordered_map<std::string, int> df;
        std::unordered_set<std::string> seen;
        for (const auto& doc : docs) {
            seen.clear();
            for (const auto& f : doc)
                if (seen.insert(f).second) ++df[f];
        }
        Vocabulary vocab;
        for (const auto& doc : docs)
            for (const auto& f : doc) {
                if (vocab.index_.count(f)) continue;
                if (df[f] < min_df) continue;
                vocab.index_.emplace(f, vocab.size());
                vocab.names_.push_back(f);
                vocab.doc_freq_.push_back(df[f]);
            }
        return vocab;
    }

    static Vocabulary from_entries(std::vector<std::string> names, std::vector<int> doc_freq) {
        Vocabulary vocab;
        vocab.names_ = std::move(names);
        vocab.doc_freq_ = std::move(doc_freq);
        for (int i = 0; i < vocab.size(); ++i)
            vocab.index_.emplace(vocab.names_[static_cast<std::size_t>(i)], i);
        return vocab;
    }

    nlohmann::json to_json() const {
        nlohmann::json features = nlohmann::json::object();
        for (int i = 0; i < size(); ++i) features[names_[static_cast<std::size_t>(i)]] = i;
        return {{"version", 1}, {"features", std::move(features)}};
    }

    static Vocabulary from_json(const nlohmann::json& j) {
        if (!j.contains("version") || j.at("version").get<int>() != 1)
            throw DataError("unsupported vocabulary version");
        const auto& features = j.at("features");
        std::vector<std::string> names(features.size());
        for (auto it = features.begin(); it != features.end(); ++it) {
            int id = it.value().get<int>();
            if (id < 0 || id >= static_cast<int>(names.size()))
                throw DataError("vocabulary ids are not dense");
            names[static_cast<std::size_t>(id)] = it.key();
        }
        return from_entries(std::move(names), {});
    }

private:
    std::unordered_map<std::string, int> index_;
    std::vector<std::string> names_;
    std::vector<int> doc_freq_;
};

// Sorted (feature id, count) pairs; ids strictly increasing, counts >= 1.
struct SparseVector {
    std::vector<std::pair<int, int>> entries;

    int l1() const {
        int sum = 0;
        for (const auto& [id, n] : entries) sum += n;
        return sum;
    }
    bool operator==(const SparseVector&) const = default;
};

// Counts in-vocabulary features; unknown features are dropped.
inline SparseVector vectorize(const std::vector<std::string>& doc, const Vocabulary& vocab) {
    std::unordered_map<int, int> counts;
    for (const auto& f : doc)
        if (auto id = vocab.lookup(f)) ++counts[*id];
    SparseVector vec;
    vec.entries.assign(counts.begin(), counts.end());
    std::sort(vec.entries.begin(), vec.entries.end());
    return vec;
}

// Chi-square statistic of the 2x2 presence/class table, maximised over
// classes. Degenerate tables (a marginal of zero) score 0.
inline std::vector<double> chi_square_scores(const std::vector<SparseVector>& docs,
                                             const std::vector<int>& labels, int num_classes,
                                             int vocab_size) {
    if (docs.size() != labels.size() || docs.empty())
        throw DataError("need one label per document");
    const auto n = static_cast<double>(docs.size());

    std::vector<double> class_count(static_cast<std::size_t>(num_classes), 0.0);
    for (int label : labels) {
        if (label < 0 || label >= num_classes) throw DataError("label id out of range");
        class_count[static_cast<std::size_t>(label)] += 1.0;
    }

    // presence[t][c] = number of class-c docs containing t
    std::vector<std::vector<double>> presence(
        static_cast<std::size_t>(vocab_size),
        std::vector<double>(static_cast<std::size_t>(num_classes), 0.0));
    std::vector<double> df(static_cast<std::size_t>(vocab_size), 0.0);
    for (std::size_t d = 0; d < docs.size(); ++d)
        for (const auto& [id, _] : docs[d].entries) {
            if (id < 0 || id >= vocab_size) throw DataError("feature id out of range");
            presence[static_cast<std::size_t>(id)][static_cast<std::size_t>(labels[d])] += 1.0;
            df[static_cast<std::size_t>(id)] += 1.0;
        }

    std::vector<double> scores(static_cast<std::size_t>(vocab_size), 0.0);
    for (int t = 0; t < vocab_size; ++t) {
        double best = 0.0;
        for (int c = 0; c < num_classes; ++c) {
            const double a = presence[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
            const double b = df[static_cast<std::size_t>(t)] - a;
            const double cc = class_count[static_cast<std::size_t>(c)] - a;
            const double dd = n - a - b - cc;
            const double denom = (a + cc) * (b + dd) * (a + b) * (cc + dd);
            if (denom > 0.0) {
                const double num = a * dd - cc * b;
                best = std::max(best, n * num * num / denom);
            }
        }
        scores[static_cast<std::size_t>(t)] = best;
    }
    return scores;
}

struct FeatureSelection {
    Vocabulary reduced;
    std::vector<int> old_to_new;  // -1 for dropped features
};

// Keeps the top_k features by score (ties to the lower original id) and
// re-indexes densely in original-id order. top_k >= vocabulary keeps all.
inline FeatureSelection chi_square_select(const Vocabulary& vocab,
                                          const std::vector<SparseVector>& docs,
                                          const std::vector<int>& labels, int num_classes,
                                          int top_k) {
    if (top_k < 1) throw UsageError("top_k must be >= 1");
    const auto scores = chi_square_scores(docs, labels, num_classes, vocab.size());

    std::vector<int> order(static_cast<std::size_t>(vocab.size()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double sa = scores[static_cast<std::size_t>(a)];
        const double sb = scores[static_cast<std::size_t>(b)];
        if (sa != sb) return sa > sb;
        return a < b;
    });
    if (top_k < static_cast<int>(order.size())) order.resize(static_cast<std::size_t>(top_k));
    std::sort(order.begin(), order.end());

    FeatureSelection sel;
    sel.old_to_new.assign(static_cast<std::size_t>(vocab.size()), -1);
    std::vector<std::string> names;
    std::vector<int> dfs;
    for (std::size_t i = 0; i < order.size(); ++i) {
        sel.old_to_new[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
        names.push_back(vocab.name(order[i]));
        dfs.push_back(vocab.doc_freq(order[i]));
    }
    sel.reduced = Vocabulary::from_entries(std::move(names), std::move(dfs));
    return sel;
}

inline SparseVector remap(const SparseVector& vec, const std::vector<int>& old_to_new) {
    SparseVector out;
    for (const auto& [id, n] : vec.entries) {
        int mapped = old_to_new.at(static_cast<std::size_t>(id));
        if (mapped >= 0) out.entries.emplace_back(mapped, n);
    }
    std::sort(out.entries.begin(), out.entries.end());
    return out;
}

}  // namespace sfc
