#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfc/common.hpp"
#include "sfc/corpus.hpp"
#include "sfc/pipeline.hpp"

namespace sfc {

struct Distribution {
    std::vector<long long> counts;  // one per label
    std::vector<double> pct;        // 0..100, exact shares of the semester total

    long long total() const {
        long long t = 0;
        for (long long c : counts) t += c;
        return t;
    }
};

struct SemesterSnapshot {
    std::string semester;
    Distribution sentiment;              // 3 labels
    Distribution topic;                  // 4 labels
    std::vector<long long> joint;        // topic-major 4x3 counts
    long long records = 0;
};

struct TrendSeries {
    std::vector<std::string> semesters;          // sorted lexicographically
    std::vector<std::string> labels;
    std::vector<std::vector<double>> pct;        // [label][semester]
};

struct ReportBundle {
    std::vector<SemesterSnapshot> snapshots;  // sorted by semester tag
    TrendSeries sentiment_trend;
    TrendSeries topic_trend;
    std::string model_info;
    std::vector<std::string> flagged_ids;  // empty after preprocessing

    nlohmann::json to_json() const;
    static ReportBundle from_json(const nlohmann::json& j);
};

struct ClassifiedRecord {
    FeedbackRecord record;  // gold labels stay untouched
    Sentiment predicted_sentiment = Sentiment::positive;
    Topic predicted_topic = Topic::lecturers;
    bool flagged = false;
};

// Batch classification with a sentiment bundle and a topic bundle; both
// bundles replay their own training-time preprocessing.
inline std::vector<ClassifiedRecord> analyze_batch(const Corpus& corpus,
                                                   const ModelBundle& sentiment_model,
                                                   const ModelBundle& topic_model) {
    if (sentiment_model.task != "sentiment")
        throw DataError("sentiment model bundle is trained for task \"" +
                        sentiment_model.task + "\"");
    if (topic_model.task != "topic")
        throw DataError("topic model bundle is trained for task \"" + topic_model.task + "\"");

    std::vector<ClassifiedRecord> out;
    out.reserve(corpus.records.size());
    for (const auto& rec : corpus.records) {
        const auto* ann = corpus.annotations_for(rec.id);
        ClassifiedRecord cr;
        cr.record = rec;
        const auto need = [&](const ModelBundle& b) {
            if (b.features.needs_annotations() && ann == nullptr)
                throw DataError("record " + rec.id +
                                " has no annotations but the model uses dep/pos features");
        };
        need(sentiment_model);
        need(topic_model);
        const auto s =
            sentiment_model.predict(preprocess_text(rec.text, sentiment_model.stopwords), ann);
        const auto t = topic_model.predict(preprocess_text(rec.text, topic_model.stopwords), ann);
        cr.predicted_sentiment = static_cast<Sentiment>(s.label);
        cr.predicted_topic = static_cast<Topic>(t.label);
        cr.flagged = s.flagged || t.flagged;
        out.push_back(std::move(cr));
    }
    return out;
}

namespace detail {

inline Distribution make_distribution(const std::vector<long long>& counts) {
    Distribution d;
    d.counts = counts;
    long long total = 0;
    for (long long c : counts) total += c;
    d.pct.resize(counts.size(), 0.0);
    if (total > 0)
        for (std::size_t i = 0; i < counts.size(); ++i)
            d.pct[i] = 100.0 * static_cast<double>(counts[i]) / static_cast<double>(total);
    return d;
}

}  // namespace detail

// Per-semester snapshots plus cross-semester trend series. Records without a
// semester tag land in an "unknown" bucket.
inline ReportBundle build_report(const std::vector<ClassifiedRecord>& records,
                                 const std::string& model_info = {}) {
    ReportBundle bundle;
    bundle.model_info = model_info;

    std::map<std::string, std::vector<const ClassifiedRecord*>> by_semester;
    for (const auto& cr : records) {
        const std::string sem = cr.record.semester.empty() ? "unknown" : cr.record.semester;
        by_semester[sem].push_back(&cr);
        if (cr.flagged) bundle.flagged_ids.push_back(cr.record.id);
    }

    bundle.sentiment_trend.labels = label_names(LabelAxis::sentiment);
    bundle.topic_trend.labels = label_names(LabelAxis::topic);
    bundle.sentiment_trend.pct.resize(kSentimentClasses);
    bundle.topic_trend.pct.resize(kTopicClasses);

    for (const auto& [sem, members] : by_semester) {
        SemesterSnapshot snap;
        snap.semester = sem;
        snap.records = static_cast<long long>(members.size());
        std::vector<long long> sent_counts(kSentimentClasses, 0);
        std::vector<long long> topic_counts(kTopicClasses, 0);
        snap.joint.assign(kTopicClasses * kSentimentClasses, 0);
        for (const auto* cr : members) {
            const int s = static_cast<int>(cr->predicted_sentiment);
            const int t = static_cast<int>(cr->predicted_topic);
            ++sent_counts[static_cast<std::size_t>(s)];
            ++topic_counts[static_cast<std::size_t>(t)];
            ++snap.joint[static_cast<std::size_t>(t * kSentimentClasses + s)];
        }
        snap.sentiment = detail::make_distribution(sent_counts);
        snap.topic = detail::make_distribution(topic_counts);

        bundle.sentiment_trend.semesters.push_back(sem);
        bundle.topic_trend.semesters.push_back(sem);
        for (int c = 0; c < kSentimentClasses; ++c)
            bundle.sentiment_trend.pct[static_cast<std::size_t>(c)].push_back(
                snap.sentiment.pct[static_cast<std::size_t>(c)]);
        for (int c = 0; c < kTopicClasses; ++c)
            bundle.topic_trend.pct[static_cast<std::size_t>(c)].push_back(
                snap.topic.pct[static_cast<std::size_t>(c)]);
        bundle.snapshots.push_back(std::move(snap));
    }
    return bundle;
}

inline nlohmann::json ReportBundle::to_json() const {
    const auto dist = [](const Distribution& d, const std::vector<std::string>& names) {
        nlohmann::json out = nlohmann::json::object();
        for (std::size_t i = 0; i < names.size(); ++i)
            out[names[i]] = {{"count", d.counts[i]}, {"pct", d.pct[i]}};
        return out;
    };
    const auto sent_names = label_names(LabelAxis::sentiment);
    const auto topic_names = label_names(LabelAxis::topic);
    nlohmann::json snaps = nlohmann::json::array();
    for (const auto& s : snapshots) {
        nlohmann::json joint = nlohmann::json::array();
        for (long long v : s.joint) joint.push_back(v);
        snaps.push_back({{"semester", s.semester},
                         {"records", s.records},
                         {"sentiment", dist(s.sentiment, sent_names)},
                         {"topic", dist(s.topic, topic_names)},
                         {"joint_topic_sentiment", std::move(joint)}});
    }
    const auto trend = [](const TrendSeries& t) {
        nlohmann::json series = nlohmann::json::object();
        for (std::size_t l = 0; l < t.labels.size(); ++l) series[t.labels[l]] = t.pct[l];
        return nlohmann::json{{"semesters", t.semesters}, {"series", std::move(series)}};
    };
    return {{"version", 1},
            {"model_info", model_info},
            {"snapshots", std::move(snaps)},
            {"sentiment_trend", trend(sentiment_trend)},
            {"topic_trend", trend(topic_trend)},
            {"flagged_records", flagged_ids}};
}

inline ReportBundle ReportBundle::from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j.at("version").get<int>() != 1)
        throw DataError("unsupported report version");
    ReportBundle bundle;
    bundle.model_info = j.at("model_info").get<std::string>();
    bundle.flagged_ids = j.at("flagged_records").get<std::vector<std::string>>();
    const auto sent_names = label_names(LabelAxis::sentiment);
    const auto topic_names = label_names(LabelAxis::topic);
    const auto dist = [](const nlohmann::json& d, const std::vector<std::string>& names) {
        Distribution out;
        for (const auto& n : names) {
            out.counts.push_back(d.at(n).at("count").get<long long>());
            out.pct.push_back(d.at(n).at("pct").get<double>());
        }
        return out;
    };
    for (const auto& s : j.at("snapshots")) {
        SemesterSnapshot snap;
        snap.semester = s.at("semester").get<std::string>();
        snap.records = s.at("records").get<long long>();
        snap.sentiment = dist(s.at("sentiment"), sent_names);
        snap.topic = dist(s.at("topic"), topic_names);
        snap.joint = s.at("joint_topic_sentiment").get<std::vector<long long>>();
        bundle.snapshots.push_back(std::move(snap));
    }
    const auto trend = [](const nlohmann::json& t, const std::vector<std::string>& names) {
        TrendSeries out;
        out.semesters = t.at("semesters").get<std::vector<std::string>>();
        out.labels = names;
        for (const auto& n : names)
            out.pct.push_back(t.at("series").at(n).get<std::vector<double>>());
        return out;
    };
    bundle.sentiment_trend = trend(j.at("sentiment_trend"), sent_names);
    bundle.topic_trend = trend(j.at("topic_trend"), topic_names);
    return bundle;
}

namespace svg {

inline const char* kPalette[7] = {"#4e9a06", "#cc0000", "#3465a4", "#f57900",
                                  "#75507b", "#0f8a84", "#8a8a0f"};

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else if (c == '"')
            out += "&quot;";
        else
            out += c;
    }
    return out;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// Self-contained static pie chart with a legend.
inline std::string pie_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& pct) {
    const double cx = 170, cy = 190, r = 140;
    std::string out =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\" "
        "viewBox=\"0 0 480 360\">\n";
    out += "<title>" + escape(title) + "</title>\n";
    out += "<text x=\"16\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" +
           escape(title) + "</text>\n";

    double angle = -90.0;  // start at 12 o'clock
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double share = pct[i] / 100.0;
        const char* color = kPalette[i % 7];
        if (share > 0.999999) {
            out += std::string("<circle cx=\"") + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" +
                   num(r) + "\" fill=\"" + color + "\"/>\n";
        } else if (share > 0.0) {
            const double a0 = angle * M_PI / 180.0;
            const double a1 = (angle + 360.0 * share) * M_PI / 180.0;
            const double x0 = cx + r * std::cos(a0), y0 = cy + r * std::sin(a0);
            const double x1 = cx + r * std::cos(a1), y1 = cy + r * std::sin(a1);
            const int large = share > 0.5 ? 1 : 0;
            out += std::string("<path d=\"M ") + num(cx) + " " + num(cy) + " L " + num(x0) +
                   " " + num(y0) + " A " + num(r) + " " + num(r) + " 0 " +
                   std::to_string(large) + " 1 " + num(x1) + " " + num(y1) +
                   " Z\" fill=\"" + color + "\" stroke=\"white\" stroke-width=\"1\"/>\n";
            angle += 360.0 * share;
        }
    }
    double ly = 60;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const char* color = kPalette[i % 7];
        out += std::string("<rect x=\"330\" y=\"") + num(ly - 11) +
               "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
        char pct_buf[32];
        std::snprintf(pct_buf, sizeof(pct_buf), "%.1f%%", pct[i]);
        out += "<text x=\"348\" y=\"" + num(ly) +
               "\" font-family=\"sans-serif\" font-size=\"13\">" + escape(labels[i]) + " " +
               pct_buf + "</text>\n";
        ly += 20;
    }
    out += "</svg>\n";
    return out;
}

// Static line chart of per-label percentage series over semesters.
inline std::string line_chart(const std::string& title, const TrendSeries& trend) {
    const double width = 640, height = 400;
    const double x0 = 70, y0 = 330, x1 = 560, y1 = 60;
    std::string out =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
        num(width) + "\" height=\"" + num(height) + "\" viewBox=\"0 0 640 400\">\n";
    out += "<title>" + escape(title) + "</title>\n";
    out += "<text x=\"16\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" +
           escape(title) + "</text>\n";
    out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" +
           num(y0) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" +
           num(y1) + "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 100; tick += 25) {
        const double y = y0 - (y0 - y1) * tick / 100.0;
        out += "<text x=\"30\" y=\"" + num(y + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + std::to_string(tick) +
               "%</text>\n";
        out += "<line x1=\"" + num(x0 - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x0) +
               "\" y2=\"" + num(y) + "\" stroke=\"black\"/>\n";
    }
    const auto n = trend.semesters.size();
    const auto x_at = [&](std::size_t i) {
        if (n <= 1) return (x0 + x1) / 2.0;
        return x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    for (std::size_t i = 0; i < n; ++i) {
        out += "<text x=\"" + num(x_at(i) - 18) + "\" y=\"" + num(y0 + 20) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(trend.semesters[i]) +
               "</text>\n";
    }
    for (std::size_t l = 0; l < trend.labels.size(); ++l) {
        const char* color = kPalette[l % 7];
        std::string points;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = y0 - (y0 - y1) * trend.pct[l][i] / 100.0;
            points += num(x_at(i)) + "," + num(y) + " ";
            out += "<circle cx=\"" + num(x_at(i)) + "\" cy=\"" + num(y) +
                   "\" r=\"3\" fill=\"" + color + "\"/>\n";
        }
        out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        out += std::string("<rect x=\"") + num(574) + "\" y=\"" +
               num(60 + 20.0 * static_cast<double>(l) - 9) +
               "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
        out += "<text x=\"590\" y=\"" + num(60 + 20.0 * static_cast<double>(l) + 2) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(trend.labels[l]) +
               "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace svg

enum class ReportFormat { json, csv, svg };

inline std::string sanitize_filename(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')
                   ? c
                   : '_';
    return out.empty() ? std::string("unknown") : out;
}

// Writes the requested artifact set into dir:
//   report.json, snapshot_<sem>_<axis>.csv, trend_<axis>.csv,
//   pie_<sem>_<axis>.svg, trend_<axis>.svg
inline std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle,
                                                      const std::set<ReportFormat>& formats,
                                                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const auto emit_file = [&](const std::string& name, const std::string& content) {
        const auto path = dir / name;
        write_text_file(path, content);
        written.push_back(path);
    };

    if (formats.count(ReportFormat::json)) emit_file("report.json", bundle.to_json().dump(2) + "\n");

    const auto sent_names = label_names(LabelAxis::sentiment);
    const auto topic_names = label_names(LabelAxis::topic);
    if (formats.count(ReportFormat::csv)) {
        for (const auto& snap : bundle.snapshots) {
            const auto sem = sanitize_filename(snap.semester);
            const auto csv = [](const Distribution& d, const std::vector<std::string>& names) {
                std::string out;
                char buf[64];
                for (std::size_t i = 0; i < names.size(); ++i) {
                    std::snprintf(buf, sizeof(buf), "%s,%lld,%.1f\n", names[i].c_str(),
                                  d.counts[i], d.pct[i]);
                    out += buf;
                }
                return out;
            };
            emit_file("snapshot_" + sem + "_sentiment.csv", csv(snap.sentiment, sent_names));
            emit_file("snapshot_" + sem + "_topic.csv", csv(snap.topic, topic_names));
        }
        const auto trend_csv = [](const TrendSeries& t) {
            std::string out;
            char buf[128];
            for (std::size_t i = 0; i < t.semesters.size(); ++i)
                for (std::size_t l = 0; l < t.labels.size(); ++l) {
                    std::snprintf(buf, sizeof(buf), "%s,%s,%.1f\n", t.semesters[i].c_str(),
                                  t.labels[l].c_str(), t.pct[l][i]);
                    out += buf;
                }
            return out;
        };
        emit_file("trend_sentiment.csv", trend_csv(bundle.sentiment_trend));
        emit_file("trend_topic.csv", trend_csv(bundle.topic_trend));
    }

    if (formats.count(ReportFormat::svg)) {
        for (const auto& snap : bundle.snapshots) {
            const auto sem = sanitize_filename(snap.semester);
            emit_file("pie_" + sem + "_sentiment.svg",
                      svg::pie_chart("Sentiment - " + snap.semester, sent_names,
                                     snap.sentiment.pct));
            emit_file("pie_" + sem + "_topic.svg",
                      svg::pie_chart("Topics - " + snap.semester, topic_names, snap.topic.pct));
        }
        emit_file("trend_sentiment.svg",
                  svg::line_chart("Sentiment trend", bundle.sentiment_trend));
        emit_file("trend_topic.svg", svg::line_chart("Topic trend", bundle.topic_trend));
    }
    return written;
}

}  // namespace sfc
