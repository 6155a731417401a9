#pragma once

#include <array>
#include <string>
#include <vector>

#include "sfc/common.hpp"
#include "sfc/corpus.hpp"

namespace sfc {

// Desk-scale stand-in for a real dual-labeled feedback corpus: label
// marginals follow the configured imbalance exactly (largest-remainder
// quotas), sentence lengths follow the configured bucket mix, and a
// separability knob blends class-specific token pools with a shared
// confusable pool.
struct SynthConfig {
    int size = 1000;
    unsigned seed = 42;
    double separability = 1.0;  // 1 = class-pure tokens, 0 = all shared
    int semesters = 2;
    std::array<double, 3> sentiment_marginals = {0.498, 0.458, 0.043};
    std::array<double, 4> topic_marginals = {0.717, 0.188, 0.044, 0.050};
    std::array<double, 4> length_marginals = {0.448, 0.377, 0.061, 0.114};
    int pool_size = 12;    // tokens per class pool
    int shared_pool = 40;  // confusable tokens
};

namespace detail {

// Integer quotas by largest remainder; ties go to the lower index.
inline std::vector<int> quota_counts(int total, const std::vector<double>& shares) {
    std::vector<int> counts(shares.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const double exact = shares[i] * total;
        counts[i] = static_cast<int>(exact);
        assigned += counts[i];
        remainders.emplace_back(exact - counts[i], i);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int k = 0; k < total - assigned; ++k)
        ++counts[remainders[static_cast<std::size_t>(k) % remainders.size()].second];
    return counts;
}

}  // namespace detail

inline Corpus synth_corpus(const SynthConfig& config) {
    if (config.size < 10) throw UsageError("synthetic corpus size must be at least 10");
    if (config.separability < 0.0 || config.separability > 1.0)
        throw UsageError("separability must lie in [0, 1]");
    if (config.semesters < 1) throw UsageError("need at least one semester");

    std::mt19937 rng(config.seed);

    const std::array<const char*, 3> sentiment_prefix = {"pos", "neg", "neu"};
    const std::array<const char*, 4> topic_prefix = {"lec", "cur", "fac", "oth"};

    // label sequences with exact marginals, then shuffled
    auto make_labels = [&](const std::vector<double>& shares) {
        auto counts = detail::quota_counts(config.size, shares);
        std::vector<int> labels;
        for (std::size_t c = 0; c < counts.size(); ++c)
            labels.insert(labels.end(), static_cast<std::size_t>(counts[c]), static_cast<int>(c));
        shuffle_in_place(labels, rng);
        return labels;
    };
    const auto sentiments = make_labels(
        {config.sentiment_marginals.begin(), config.sentiment_marginals.end()});
    const auto topics =
        make_labels({config.topic_marginals.begin(), config.topic_marginals.end()});

    const auto sample_length = [&]() {
        const double u = unit_real(rng);
        double acc = 0.0;
        int bucket = 3;
        for (int b = 0; b < 4; ++b) {
            acc += config.length_marginals[static_cast<std::size_t>(b)];
            if (u < acc) {
                bucket = b;
                break;
            }
        }
        const int lo = bucket == 0 ? 1 : bucket * 10 + 1;
        const int hi = bucket == 3 ? 40 : (bucket + 1) * 10;
        const int len = lo + static_cast<int>(bounded_uint(rng, static_cast<uint32_t>(hi - lo + 1)));
        return std::max(2, len);  // room for one token of each signal
    };

    enum class Pool { sentiment, topic, shared };
    const auto draw_token = [&](Pool pool, int sentiment, int topic) {
        switch (pool) {
            case Pool::sentiment:
                return std::string(sentiment_prefix[static_cast<std::size_t>(sentiment)]) + "_" +
                       std::to_string(bounded_uint(rng, static_cast<uint32_t>(config.pool_size)));
            case Pool::topic:
                return std::string(topic_prefix[static_cast<std::size_t>(topic)]) + "_" +
                       std::to_string(bounded_uint(rng, static_cast<uint32_t>(config.pool_size)));
            default:
                return "com_" +
                       std::to_string(bounded_uint(rng, static_cast<uint32_t>(config.shared_pool)));
        }
    };

    Corpus corpus;
    const int per_semester = (config.size + config.semesters - 1) / config.semesters;
    for (int i = 0; i < config.size; ++i) {
        const int sentiment = sentiments[static_cast<std::size_t>(i)];
        const int topic = topics[static_cast<std::size_t>(i)];
        const int length = sample_length();

        std::vector<std::string> tokens;
        std::vector<Pool> pools;
        for (int t = 0; t < length; ++t) {
            Pool pool = Pool::shared;
            if (unit_real(rng) < config.separability) {
                if (t == 0)
                    pool = Pool::sentiment;
                else if (t == 1)
                    pool = Pool::topic;
                else
                    pool = bounded_uint(rng, 2) ? Pool::topic : Pool::sentiment;
            }
            pools.push_back(pool);
            tokens.push_back(draw_token(pool, sentiment, topic));
        }

        FeedbackRecord rec;
        rec.id = format_record_id(static_cast<std::size_t>(i) + 1);
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            if (t) rec.text += ' ';
            rec.text += tokens[t];
        }
        rec.sentiment = static_cast<Sentiment>(sentiment);
        rec.topic = static_cast<Topic>(topic);
        const int sem_index = i / per_semester;
        rec.semester = std::to_string(2015 + sem_index / 2) + "-" + std::to_string(1 + sem_index % 2);

        // chain-headed annotations so DEP/POS features carry the same signal
        std::vector<TokenAnnotation> ann;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            TokenAnnotation a;
            a.token = tokens[t];
            a.pos = pools[t] == Pool::sentiment ? "A" : pools[t] == Pool::topic ? "N" : "E";
            a.head = t == 0 ? TokenAnnotation::kRoot : static_cast<int>(t) - 1;
            a.deprel = t == 0          ? "root"
                       : pools[t] == Pool::sentiment ? "amod"
                       : pools[t] == Pool::topic     ? "nmod"
                                                     : "dep";
            ann.push_back(std::move(a));
        }
        corpus.annotations.emplace(rec.id, std::move(ann));
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

}  // namespace sfc
