#pragma once

#include <charconv>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "sfc/common.hpp"

namespace sfc {

// Integer codes are load-bearing: they index confusion matrices and weight rows.
enum class Sentiment : int { positive = 0, negative = 1, neutral = 2 };
enum class Topic : int { lecturers = 0, curriculums = 1, facilities = 2, others = 3 };

inline constexpr int kSentimentClasses = 3;
inline constexpr int kTopicClasses = 4;

inline const char* to_string(Sentiment s) {
    switch (s) {
        case Sentiment::positive: return "positive";
        case Sentiment::negative: return "negative";
        case Sentiment::neutral: return "neutral";
    }
    return "?";
}

inline const char* to_string(Topic t) {
    switch (t) {
        case Topic::lecturers: return "lecturers";
        case Topic::curriculums: return "curriculums";
        case Topic::facilities: return "facilities";
        case Topic::others: return "others";
    }
    return "?";
}

inline std::optional<Sentiment> parse_sentiment(std::string_view s) {
    std::string low = to_lower_ascii(trim(s));
    if (low == "positive") return Sentiment::positive;
    if (low == "negative") return Sentiment::negative;
    if (low == "neutral") return Sentiment::neutral;
    return std::nullopt;
}

inline std::optional<Topic> parse_topic(std::string_view s) {
    std::string low = to_lower_ascii(trim(s));
    if (low == "lecturers") return Topic::lecturers;
    if (low == "curriculums") return Topic::curriculums;
    if (low == "facilities") return Topic::facilities;
    if (low == "others") return Topic::others;
    return std::nullopt;
}

struct FeedbackRecord {
    std::string id;
    std::string text;
    std::string semester;  // empty when untagged
    std::optional<Sentiment> sentiment;
    std::optional<Topic> topic;

    bool operator==(const FeedbackRecord&) const = default;
};

struct TokenAnnotation {
    static constexpr int kRoot = -1;

    std::string token;
    std::string pos;
    int head = kRoot;  // 0-based index of the head token, kRoot for the root
    std::string deprel;

    bool operator==(const TokenAnnotation&) const = default;
};

using AnnotationMap = std::map<std::string, std::vector<TokenAnnotation>>;

struct Corpus {
    std::vector<FeedbackRecord> records;
    AnnotationMap annotations;  // keys are record ids; may be empty

    std::size_t size() const { return records.size(); }

    const std::vector<TokenAnnotation>* annotations_for(const std::string& id) const {
        auto it = annotations.find(id);
        return it == annotations.end() ? nullptr : &it->second;
    }
};

inline std::string format_record_id(std::size_t ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu", ordinal);
    return buf;
}

// TSV columns: text [, sentiment, topic, semester]. An optional header is
// detected by a literal "text" first cell. Ids are the 1-based data-line
// ordinals, zero padded.
inline Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file: " + path.string());

    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    std::size_t ordinal = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;

        auto fields = split(line, '\t');
        if (first_content_line) {
            first_content_line = false;
            if (trim(fields[0]) == "text") continue;  // header row
        }
        if (fields.size() > 4)
            throw DataError("line " + std::to_string(line_no) +
                            ": expected at most 4 tab-separated fields, got " +
                            std::to_string(fields.size()));

        FeedbackRecord rec;
        rec.text = std::string(trim(fields[0]));
        if (rec.text.empty())
            throw DataError("line " + std::to_string(line_no) + ": empty text field");
        if (fields.size() > 1 && !trim(fields[1]).empty()) {
            rec.sentiment = parse_sentiment(fields[1]);
            if (!rec.sentiment)
                throw DataError("line " + std::to_string(line_no) +
                                ": unknown sentiment label \"" + std::string(trim(fields[1])) + "\"");
        }
        if (fields.size() > 2 && !trim(fields[2]).empty()) {
            rec.topic = parse_topic(fields[2]);
            if (!rec.topic)
                throw DataError("line " + std::to_string(line_no) +
                                ": unknown topic label \"" + std::string(trim(fields[2])) + "\"");
        }
        if (fields.size() > 3) rec.semester = std::string(trim(fields[3]));
        rec.id = format_record_id(++ordinal);
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

inline std::string corpus_to_tsv(const Corpus& corpus) {
    std::string out;
    for (const auto& rec : corpus.records) {
        out += rec.text;
        out += '\t';
        if (rec.sentiment) out += to_string(*rec.sentiment);
        out += '\t';
        if (rec.topic) out += to_string(*rec.topic);
        out += '\t';
        out += rec.semester;
        out += '\n';
    }
    return out;
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    write_text_file(path, corpus_to_tsv(corpus));
}

namespace detail {

inline int parse_int_field(std::string_view s, std::size_t line_no, const char* what) {
    int value = 0;
    auto sv = trim(s);
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
    if (ec != std::errc{} || ptr != sv.data() + sv.size())
        throw DataError("line " + std::to_string(line_no) + ": bad " + std::string(what) +
                        " \"" + std::string(sv) + "\"");
    return value;
}

}  // namespace detail

// Sidecar annotation format: blank-line-separated blocks, each opened by a
// "# id = <record-id>" comment; token lines are
// index<TAB>form<TAB>pos<TAB>head<TAB>deprel with 1-based indices, head 0 = root.
inline AnnotationMap load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open annotation file: " + path.string());

    AnnotationMap map;
    std::string line;
    std::size_t line_no = 0;

    std::string block_id;
    std::vector<TokenAnnotation> tokens;
    std::vector<int> raw_heads;
    std::size_t block_start_line = 0;

    auto flush_block = [&]() {
        if (block_id.empty() && tokens.empty()) return;
        if (block_id.empty())
            throw DataError("line " + std::to_string(block_start_line) +
                            ": annotation block without \"# id =\" line");
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            int head = raw_heads[i];
            if (head < 0 || head > static_cast<int>(tokens.size()))
                throw DataError("annotation block \"" + block_id + "\": head index " +
                                std::to_string(head) + " out of range for " +
                                std::to_string(tokens.size()) + " tokens");
            tokens[i].head = head == 0 ? TokenAnnotation::kRoot : head - 1;
        }
        if (!map.emplace(block_id, std::move(tokens)).second)
            throw DataError("duplicate annotation block for id \"" + block_id + "\"");
        block_id.clear();
        tokens.clear();
        raw_heads.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto content = trim(line);
        if (content.empty()) {
            flush_block();
            continue;
        }
        if (content.front() == '#') {
            auto eq = content.find('=');
            auto key = trim(content.substr(1, eq == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : eq - 1));
            if (eq != std::string_view::npos && key == "id") {
                if (!block_id.empty() || !tokens.empty()) flush_block();
                block_id = std::string(trim(content.substr(eq + 1)));
                block_start_line = line_no;
                if (block_id.empty())
                    throw DataError("line " + std::to_string(line_no) + ": empty annotation id");
            }
            continue;  // other comments ignored
        }
        auto fields = split(content, '\t');
        if (fields.size() != 5)
            throw DataError("line " + std::to_string(line_no) +
                            ": expected 5 tab-separated token fields, got " +
                            std::to_string(fields.size()));
        int index = detail::parse_int_field(fields[0], line_no, "token index");
        if (index != static_cast<int>(tokens.size()) + 1)
            throw DataError("line " + std::to_string(line_no) + ": token index " +
                            std::to_string(index) + " out of order");
        TokenAnnotation ann;
        ann.token = std::string(trim(fields[1]));
        if (ann.token.empty())
            throw DataError("line " + std::to_string(line_no) + ": empty token form");
        ann.pos = std::string(trim(fields[2]));
        raw_heads.push_back(detail::parse_int_field(fields[3], line_no, "head index"));
        ann.deprel = std::string(trim(fields[4]));
        tokens.push_back(std::move(ann));
    }
    flush_block();
    return map;
}

inline std::string annotations_to_text(const AnnotationMap& map) {
    std::string out;
    for (const auto& [id, tokens] : map) {
        out += "# id = " + id + "\n";
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const auto& t = tokens[i];
            int head = t.head == TokenAnnotation::kRoot ? 0 : t.head + 1;
            out += std::to_string(i + 1) + "\t" + t.token + "\t" + t.pos + "\t" +
                   std::to_string(head) + "\t" + t.deprel + "\n";
        }
        out += "\n";
    }
    return out;
}

inline void save_annotations(const AnnotationMap& map, const std::filesystem::path& path) {
    write_text_file(path, annotations_to_text(map));
}

// Attaches a sidecar annotation map; every key must name a record.
inline void attach_annotations(Corpus& corpus, AnnotationMap map) {
    std::unordered_set<std::string> ids;
    ids.reserve(corpus.records.size());
    for (const auto& rec : corpus.records) ids.insert(rec.id);
    for (const auto& [id, _] : map)
        if (!ids.count(id))
            throw DataError("annotation id \"" + id + "\" matches no corpus record");
    corpus.annotations = std::move(map);
}

// Renumbers records to their current positions and re-keys annotations to
// match. Needed before persisting a derived corpus, since a reload assigns
// ids by line order.
inline void renumber_records(Corpus& corpus) {
    AnnotationMap renumbered;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        auto& rec = corpus.records[i];
        std::string fresh = format_record_id(i + 1);
        if (auto it = corpus.annotations.find(rec.id); it != corpus.annotations.end())
            renumbered.emplace(fresh, std::move(it->second));
        rec.id = std::move(fresh);
    }
    corpus.annotations = std::move(renumbered);
}

struct SplitResult {
    Corpus train;
    Corpus test;
};

// Seeded shuffle, then the first floor(ratio * N) records become the
// training half. Record ids are preserved, and annotations follow their records.
inline SplitResult split_train_test(const Corpus& corpus, double ratio, unsigned seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw UsageError("split ratio must be in (0, 1)");
    std::vector<std::size_t> order(corpus.records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937 rng(seed);
    shuffle_in_place(order, rng);

    const auto n_train =
        static_cast<std::size_t>(ratio * static_cast<double>(corpus.records.size()));
    SplitResult out;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& rec = corpus.records[order[k]];
        Corpus& dst = k < n_train ? out.train : out.test;
        dst.records.push_back(rec);
        if (auto it = corpus.annotations.find(rec.id); it != corpus.annotations.end())
            dst.annotations.insert(*it);
    }
    return out;
}

}  // namespace sfc
