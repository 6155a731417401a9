#pragma once

#include <string>
#include <vector>

#include "sfc/corpus.hpp"
#include "sfc/preprocess.hpp"

namespace sfc {

enum class LabelAxis { sentiment, topic };

inline const char* to_string(LabelAxis axis) {
    return axis == LabelAxis::sentiment ? "sentiment" : "topic";
}

inline std::vector<std::string> label_names(LabelAxis axis) {
    if (axis == LabelAxis::sentiment)
        return {to_string(Sentiment::positive), to_string(Sentiment::negative),
                to_string(Sentiment::neutral)};
    return {to_string(Topic::lecturers), to_string(Topic::curriculums),
            to_string(Topic::facilities), to_string(Topic::others)};
}

inline int num_classes(LabelAxis axis) {
    return axis == LabelAxis::sentiment ? kSentimentClasses : kTopicClasses;
}

inline constexpr int kLengthBuckets = 4;
inline constexpr const char* kBucketNames[kLengthBuckets] = {"1-10", "11-20", "21-30", ">30"};

// Token-count bucket; empty sequences fall into the first bucket.
inline int length_bucket(std::size_t tokens) {
    if (tokens <= 10) return 0;
    if (tokens <= 20) return 1;
    if (tokens <= 30) return 2;
    return 3;
}

struct LengthBucketStats {
    LabelAxis axis = LabelAxis::sentiment;
    std::vector<std::string> labels;
    std::vector<std::vector<long long>> counts;  // [bucket][label]
    std::vector<std::vector<double>> pct;        // [bucket][label], 0..100
    std::vector<double> bucket_pct;              // row sums
    std::vector<double> label_pct;               // column sums ("overall" row)
    long long total = 0;

    std::string format() const;
};

// Percentage table of (length bucket x label) shares. Lengths are counted on
// preprocessed text (tokenize + clean under the given stopword list).
inline LengthBucketStats length_bucket_stats(const Corpus& corpus, LabelAxis axis,
                                             const StopwordList& stopwords = {}) {
    const int k = num_classes(axis);
    LengthBucketStats stats;
    stats.axis = axis;
    stats.labels = label_names(axis);
    stats.counts.assign(kLengthBuckets, std::vector<long long>(k, 0));

    std::vector<std::string> unlabeled;
    for (const auto& rec : corpus.records) {
        int label = -1;
        if (axis == LabelAxis::sentiment && rec.sentiment)
            label = static_cast<int>(*rec.sentiment);
        else if (axis == LabelAxis::topic && rec.topic)
            label = static_cast<int>(*rec.topic);
        if (label < 0) {
            unlabeled.push_back(rec.id);
            continue;
        }
        const auto tokens = preprocess_text(rec.text, stopwords);
        stats.counts[length_bucket(tokens.size())][label] += 1;
        stats.total += 1;
    }
    if (!unlabeled.empty()) {
        std::string msg = "records missing " + std::string(to_string(axis)) + " label:";
        for (const auto& id : unlabeled) msg += " " + id;
        throw DataError(msg);
    }
    if (stats.total == 0) throw DataError("cannot compute length stats of an empty corpus");

    stats.pct.assign(kLengthBuckets, std::vector<double>(k, 0.0));
    stats.bucket_pct.assign(kLengthBuckets, 0.0);
    stats.label_pct.assign(k, 0.0);
    for (int b = 0; b < kLengthBuckets; ++b)
        for (int c = 0; c < k; ++c) {
            double p = 100.0 * static_cast<double>(stats.counts[b][c]) /
                       static_cast<double>(stats.total);
            stats.pct[b][c] = p;
            stats.bucket_pct[b] += p;
            stats.label_pct[c] += p;
        }
    return stats;
}

inline std::string LengthBucketStats::format() const {
    std::size_t col = 10;
    for (const auto& name : labels) col = std::max(col, name.size() + 2);
    const auto cell = [&](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%*.1f", static_cast<int>(col), v);
        return std::string(buf);
    };
    std::string out(8, ' ');
    for (const auto& name : labels) {
        std::string padded = name;
        if (padded.size() < col) padded.insert(0, col - padded.size(), ' ');
        out += padded;
    }
    std::string overall_header = "overall";
    overall_header.insert(0, col - overall_header.size(), ' ');
    out += overall_header + "\n";
    for (int b = 0; b < kLengthBuckets; ++b) {
        std::string row = kBucketNames[b];
        row.resize(8, ' ');
        out += row;
        for (std::size_t c = 0; c < labels.size(); ++c) out += cell(pct[b][c]);
        out += cell(bucket_pct[b]);
        out += '\n';
    }
    std::string row = "overall";
    row.resize(8, ' ');
    out += row;
    double total_pct = 0;
    for (std::size_t c = 0; c < labels.size(); ++c) {
        out += cell(label_pct[c]);
        total_pct += label_pct[c];
    }
    out += cell(total_pct);
    out += '\n';
    return out;
}

}  // namespace sfc
