#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sfc/common.hpp"
#include "sfc/preprocess.hpp"

namespace sfc {

struct W2vConfig {
    int dim = 300;
    int window = 5;
    int negative = 5;  // negative samples per positive pair
    int epochs = 5;
    double learning_rate = 0.025;  // linearly decayed
    int min_count = 1;
    unsigned seed = 42;
};

class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::vector<std::string> tokens, int dim)
        : dim_(dim), tokens_(std::move(tokens)) {
        for (std::size_t i = 0; i < tokens_.size(); ++i)
            index_.emplace(tokens_[i], static_cast<int>(i));
        input_.setZero(static_cast<Eigen::Index>(tokens_.size()), dim_);
        output_.setZero(static_cast<Eigen::Index>(tokens_.size()), dim_);
    }

    int dim() const { return dim_; }
    int vocab_size() const { return static_cast<int>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    std::optional<int> token_id(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    Eigen::MatrixXd& input_vectors() { return input_; }
    const Eigen::MatrixXd& input_vectors() const { return input_; }
    Eigen::MatrixXd& output_vectors() { return output_; }
    const Eigen::MatrixXd& output_vectors() const { return output_; }

    // Unknown tokens map to the zero vector; *oov reports the miss.
    Eigen::VectorXd lookup(const std::string& token, bool* oov = nullptr) const {
        if (auto id = token_id(token)) {
            if (oov) *oov = false;
            return input_.row(*id).transpose();
        }
        if (oov) *oov = true;
        return Eigen::VectorXd::Zero(dim_);
    }

    // Plain-text vector format: "V D" header, then one "token v1 .. vD" line
    // per token, interchangeable with common word-vector files.
    std::string to_text() const {
        std::string out = std::to_string(vocab_size()) + " " + std::to_string(dim_) + "\n";
        char buf[32];
        for (int i = 0; i < vocab_size(); ++i) {
            out += tokens_[static_cast<std::size_t>(i)];
            for (int d = 0; d < dim_; ++d) {
                std::snprintf(buf, sizeof(buf), " %.17g", input_(i, d));
                out += buf;
            }
            out += '\n';
        }
        return out;
    }

    void save_text(const std::filesystem::path& path) const { write_text_file(path, to_text()); }

    static EmbeddingTable load_text(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open embedding file: " + path.string());
        int v = 0, d = 0;
        if (!(in >> v >> d) || v < 0 || d <= 0)
            throw DataError("bad embedding file header in " + path.string());
        std::vector<std::string> tokens;
        tokens.reserve(static_cast<std::size_t>(v));
        Eigen::MatrixXd vectors(v, d);
        for (int i = 0; i < v; ++i) {
            std::string token;
            if (!(in >> token))
                throw DataError("embedding file truncated at row " + std::to_string(i));
            for (int j = 0; j < d; ++j)
                if (!(in >> vectors(i, j)))
                    throw DataError("embedding file truncated at row " + std::to_string(i));
            tokens.push_back(std::move(token));
        }
        EmbeddingTable table(std::move(tokens), d);
        table.input_ = std::move(vectors);
        return table;
    }

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (int i = 0; i < vocab_size(); ++i) {
            std::vector<double> row(static_cast<std::size_t>(dim_));
            for (int d = 0; d < dim_; ++d) row[static_cast<std::size_t>(d)] = input_(i, d);
            rows.push_back(std::move(row));
        }
        return {{"version", 1}, {"dim", dim_}, {"tokens", tokens_}, {"vectors", std::move(rows)}};
    }

    static EmbeddingTable from_json(const nlohmann::json& j) {
        if (!j.contains("version") || j.at("version").get<int>() != 1)
            throw DataError("unsupported embedding table version");
        EmbeddingTable table(j.at("tokens").get<std::vector<std::string>>(),
                             j.at("dim").get<int>());
        const auto& rows = j.at("vectors");
        for (int i = 0; i < table.vocab_size(); ++i) {
            const auto row = rows.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
            for (int d = 0; d < table.dim_; ++d)
                table.input_(i, d) = row[static_cast<std::size_t>(d)];
        }
        return table;
    }

private:
    int dim_ = 0;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    Eigen::MatrixXd input_;   // V x D
    Eigen::MatrixXd output_;  // V x D
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct SgnsPairGradient {
    double loss = 0.0;                        // log sigma(u_c.v) + sum log sigma(-u_n.v)
    Eigen::VectorXd d_center;                 // ascent direction for v
    Eigen::VectorXd d_context;                // ascent direction for u_c
    std::vector<Eigen::VectorXd> d_negatives; // ascent directions for each u_n
};

// One skip-gram/negative-sampling pair: the objective and its exact gradient.
// Training applies these directions scaled by the learning rate.
inline SgnsPairGradient sgns_pair_gradient(const Eigen::VectorXd& center,
                                           const Eigen::VectorXd& context,
                                           const std::vector<Eigen::VectorXd>& negatives) {
    SgnsPairGradient g;
    const double pos = sigmoid(center.dot(context));
    g.loss = std::log(pos);
    g.d_center = (1.0 - pos) * context;
    g.d_context = (1.0 - pos) * center;
    for (const auto& neg : negatives) {
        const double s = sigmoid(center.dot(neg));
        g.loss += std::log(1.0 - s);
        g.d_center -= s * neg;
        g.d_negatives.push_back(-s * center);
    }
    return g;
}

namespace detail {

// Negative-sampling distribution: unigram counts raised to 3/4, as a CDF for
// binary-search sampling.
inline std::vector<double> negative_sampling_cdf(const std::vector<long long>& counts) {
    std::vector<double> cdf(counts.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        acc += std::pow(static_cast<double>(counts[i]), 0.75);
        cdf[i] = acc;
    }
    for (double& x : cdf) x /= acc;
    return cdf;
}

inline int sample_from_cdf(const std::vector<double>& cdf, std::mt19937& rng) {
    const double u = unit_real(rng);
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<int>(it - cdf.begin());
}

}  // namespace detail

// Skip-gram with negative sampling over the corpus sentences. Single-threaded
// on purpose: the training order is part of the determinism contract.
inline EmbeddingTable train_word2vec(const std::vector<TokenSequence>& sentences,
                                     const W2vConfig& config = {}) {
    if (config.dim < 1 || config.window < 1 || config.negative < 0 || config.epochs < 1 ||
        config.learning_rate <= 0.0 || config.min_count < 1)
        throw UsageError("word2vec configuration values must be positive");
    bool has_pairable = false;
    for (const auto& s : sentences) has_pairable = has_pairable || s.size() >= 2;
    if (!has_pairable) throw DataError("word2vec needs at least one sentence with two tokens");

    // vocabulary in first-seen order
    std::unordered_map<std::string, long long> freq;
    std::vector<std::string> order;
    for (const auto& sentence : sentences)
        for (const auto& tok : sentence) {
            if (++freq[tok] == 1) order.push_back(tok);
        }
    std::vector<std::string> kept;
    std::vector<long long> counts;
    for (const auto& tok : order)
        if (freq[tok] >= config.min_count) {
            kept.push_back(tok);
            counts.push_back(freq[tok]);
        }
    if (kept.empty()) throw DataError("word2vec vocabulary is empty after min_count filtering");

    EmbeddingTable table(std::move(kept), config.dim);
    std::mt19937 rng(config.seed);
    auto& in = table.input_vectors();
    auto& out = table.output_vectors();
    const double half = 0.5 / static_cast<double>(config.dim);
    for (Eigen::Index i = 0; i < in.rows(); ++i)
        for (int d = 0; d < config.dim; ++d) in(i, d) = uniform_real(rng, -half, half);
    // output vectors start at zero

    // sentences as id sequences, dropping filtered tokens
    std::vector<std::vector<int>> encoded;
    long long total_tokens = 0;
    for (const auto& sentence : sentences) {
        std::vector<int> ids;
        for (const auto& tok : sentence)
            if (auto id = table.token_id(tok)) ids.push_back(*id);
        total_tokens += static_cast<long long>(ids.size());
        if (ids.size() >= 1) encoded.push_back(std::move(ids));
    }

    const auto cdf = detail::negative_sampling_cdf(counts);
    const double lr0 = config.learning_rate;
    const double lr_floor = lr0 * 1e-4;
    const auto total_work = static_cast<double>(total_tokens) * config.epochs;
    long long processed = 0;

    std::vector<Eigen::VectorXd> negatives;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (const auto& ids : encoded) {
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const double lr =
                    std::max(lr_floor, lr0 * (1.0 - static_cast<double>(processed) /
                                                        (total_work + 1.0)));
                ++processed;
                const int center = ids[i];
                const auto lo = i >= static_cast<std::size_t>(config.window)
                                    ? i - static_cast<std::size_t>(config.window)
                                    : 0;
                const auto hi = std::min(ids.size() - 1, i + static_cast<std::size_t>(config.window));
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    const int context = ids[j];
                    negatives.clear();
                    std::vector<int> neg_ids;
                    for (int nk = 0; nk < config.negative; ++nk) {
                        int n = detail::sample_from_cdf(cdf, rng);
                        if (n == context) continue;  // skip accidental positives
                        neg_ids.push_back(n);
                        negatives.push_back(out.row(n).transpose());
                    }
                    const auto g = sgns_pair_gradient(in.row(center).transpose(),
                                                      out.row(context).transpose(), negatives);
                    in.row(center) += lr * g.d_center.transpose();
                    out.row(context) += lr * g.d_context.transpose();
                    for (std::size_t nk = 0; nk < neg_ids.size(); ++nk)
                        out.row(neg_ids[nk]) += lr * g.d_negatives[nk].transpose();
                }
            }
        }
    }
    return table;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

}  // namespace sfc
