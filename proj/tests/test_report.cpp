#include <catch2/catch_amalgamated.hpp>

#include "sfc/report.hpp"
#include "sfc/synth.hpp"
#include "test_util.hpp"
#include "xml_check.hpp"

using namespace sfc;

namespace {

ClassifiedRecord make_record(const std::string& id, const std::string& semester, Sentiment s,
                             Topic t) {
    ClassifiedRecord cr;
    cr.record.id = id;
    cr.record.text = "văn bản";
    cr.record.semester = semester;
    cr.predicted_sentiment = s;
    cr.predicted_topic = t;
    return cr;
}

std::pair<ModelBundle, ModelBundle> trained_bundles(const Corpus& corpus) {
    ExperimentSpec sent_spec;
    sent_spec.model = "nb";
    sent_spec.features = FeatureKinds::parse({"uni"});
    auto sent = run_experiment(sent_spec, corpus);

    ExperimentSpec topic_spec = sent_spec;
    topic_spec.task = "topic";
    auto topic = run_experiment(topic_spec, corpus);
    return {sent.bundle, topic.bundle};
}

}  // namespace

TEST_CASE("build_report counts one semester correctly") {
    std::vector<ClassifiedRecord> records = {
        make_record("1", "2015-1", Sentiment::positive, Topic::lecturers),
        make_record("2", "2015-1", Sentiment::positive, Topic::curriculums),
        make_record("3", "2015-1", Sentiment::negative, Topic::lecturers),
        make_record("4", "2015-1", Sentiment::neutral, Topic::facilities),
    };
    auto bundle = build_report(records);
    REQUIRE(bundle.snapshots.size() == 1);
    const auto& snap = bundle.snapshots[0];
    CHECK(snap.records == 4);
    CHECK(snap.sentiment.counts == std::vector<long long>{2, 1, 1});
    CHECK_THAT(snap.sentiment.pct[0], Catch::Matchers::WithinAbs(50.0, 1e-12));
    CHECK_THAT(snap.sentiment.pct[1], Catch::Matchers::WithinAbs(25.0, 1e-12));
    CHECK_THAT(snap.sentiment.pct[2], Catch::Matchers::WithinAbs(25.0, 1e-12));

    long long joint_total = 0;
    for (long long v : snap.joint) joint_total += v;
    CHECK(joint_total == snap.records);
}

TEST_CASE("trend series follow semester order") {
    std::vector<ClassifiedRecord> records;
    // 2015-1: 40% positive; 2015-2: 60% positive
    for (int i = 0; i < 2; ++i)
        records.push_back(make_record("a" + std::to_string(i), "2015-1", Sentiment::positive,
                                      Topic::lecturers));
    for (int i = 0; i < 3; ++i)
        records.push_back(make_record("b" + std::to_string(i), "2015-1", Sentiment::negative,
                                      Topic::lecturers));
    for (int i = 0; i < 3; ++i)
        records.push_back(make_record("c" + std::to_string(i), "2015-2", Sentiment::positive,
                                      Topic::lecturers));
    for (int i = 0; i < 2; ++i)
        records.push_back(make_record("d" + std::to_string(i), "2015-2", Sentiment::negative,
                                      Topic::lecturers));
    auto bundle = build_report(records);
    CHECK(bundle.sentiment_trend.semesters == std::vector<std::string>{"2015-1", "2015-2"});
    CHECK_THAT(bundle.sentiment_trend.pct[0][0], Catch::Matchers::WithinAbs(40.0, 1e-12));
    CHECK_THAT(bundle.sentiment_trend.pct[0][1], Catch::Matchers::WithinAbs(60.0, 1e-12));
}

TEST_CASE("build_report is invariant to record order and buckets missing semesters") {
    std::vector<ClassifiedRecord> records = {
        make_record("1", "2016-1", Sentiment::positive, Topic::others),
        make_record("2", "", Sentiment::negative, Topic::lecturers),
        make_record("3", "2015-2", Sentiment::neutral, Topic::facilities),
    };
    auto a = build_report(records);
    std::reverse(records.begin(), records.end());
    auto b = build_report(records);
    CHECK(a.to_json() == b.to_json());
    REQUIRE(a.snapshots.size() == 3);
    CHECK(a.snapshots[0].semester == "2015-2");
    CHECK(a.snapshots[2].semester == "unknown");
}

TEST_CASE("snapshot percentages sum to 100 within 0.1") {
    SynthConfig config;
    config.size = 333;
    config.semesters = 2;
    auto corpus = synth_corpus(config);
    auto [sent, topic] = trained_bundles(corpus);
    auto labeled = analyze_batch(corpus, sent, topic);
    auto bundle = build_report(labeled, "nb/nb");
    REQUIRE(bundle.snapshots.size() == 2);
    for (const auto& snap : bundle.snapshots) {
        double s = 0.0, t = 0.0;
        for (double v : snap.sentiment.pct) s += v;
        for (double v : snap.topic.pct) t += v;
        CHECK_THAT(s, Catch::Matchers::WithinAbs(100.0, 0.1));
        CHECK_THAT(t, Catch::Matchers::WithinAbs(100.0, 0.1));
    }
}

TEST_CASE("analyze_batch matches direct module predictions") {
    SynthConfig config;
    config.size = 150;
    auto corpus = synth_corpus(config);
    auto [sent, topic] = trained_bundles(corpus);
    auto labeled = analyze_batch(corpus, sent, topic);
    REQUIRE(labeled.size() == corpus.records.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        const auto tokens = preprocess_text(corpus.records[i].text, {});
        const auto expect_s = sent.predict(tokens, nullptr).label;
        const auto expect_t = topic.predict(tokens, nullptr).label;
        CHECK(static_cast<int>(labeled[i].predicted_sentiment) == expect_s);
        CHECK(static_cast<int>(labeled[i].predicted_topic) == expect_t);
        // gold labels preserved
        CHECK(labeled[i].record.sentiment == corpus.records[i].sentiment);
    }

    // task mismatch is rejected
    CHECK_THROWS_AS(analyze_batch(corpus, topic, sent), DataError);
}

TEST_CASE("analyze_batch flags records that preprocess to nothing") {
    SynthConfig config;
    config.size = 50;
    auto corpus = synth_corpus(config);
    auto [sent, topic] = trained_bundles(corpus);
    Corpus input;
    input.records.push_back({"000001", "123 :)", "2015-1", std::nullopt, std::nullopt});
    input.records.push_back({"000002", "pos_1 lec_2", "2015-1", std::nullopt, std::nullopt});
    auto labeled = analyze_batch(input, sent, topic);
    CHECK(labeled[0].flagged);
    CHECK_FALSE(labeled[1].flagged);
    auto rep = build_report(labeled);
    CHECK(rep.flagged_ids == std::vector<std::string>{"000001"});
}

TEST_CASE("report json round-trips structurally") {
    std::vector<ClassifiedRecord> records = {
        make_record("1", "2015-1", Sentiment::positive, Topic::lecturers),
        make_record("2", "2015-2", Sentiment::negative, Topic::facilities),
        make_record("3", "2015-2", Sentiment::positive, Topic::others),
    };
    auto bundle = build_report(records, "test-models");
    auto j = bundle.to_json();
    auto restored = ReportBundle::from_json(j);
    CHECK(restored.to_json() == j);
}

TEST_CASE("emit writes the advertised file set") {
    TempDir tmp;
    std::vector<ClassifiedRecord> records = {
        make_record("1", "2015-1", Sentiment::positive, Topic::lecturers),
        make_record("2", "2015-2", Sentiment::negative, Topic::facilities),
        make_record("3", "2015-2", Sentiment::neutral, Topic::others),
    };
    auto bundle = build_report(records);
    auto written = emit_report(
        bundle, {ReportFormat::json, ReportFormat::csv, ReportFormat::svg}, tmp.path());

    std::set<std::string> names;
    for (const auto& p : written) names.insert(p.filename().string());
    for (const char* expect :
         {"report.json", "snapshot_2015-1_sentiment.csv", "snapshot_2015-1_topic.csv",
          "snapshot_2015-2_sentiment.csv", "snapshot_2015-2_topic.csv", "trend_sentiment.csv",
          "trend_topic.csv", "pie_2015-1_sentiment.svg", "pie_2015-1_topic.svg",
          "pie_2015-2_sentiment.svg", "pie_2015-2_topic.svg", "trend_sentiment.svg",
          "trend_topic.svg"})
        CHECK(names.count(expect));

    // json parses back to the same structure
    auto parsed = nlohmann::json::parse(read_text_file(tmp.file("report.json")));
    CHECK(ReportBundle::from_json(parsed).to_json() == bundle.to_json());

    // trend csv rows = semesters x labels
    const auto trend_csv = read_text_file(tmp.file("trend_sentiment.csv"));
    CHECK(std::count(trend_csv.begin(), trend_csv.end(), '\n') == 2 * 3);
    const auto topic_csv = read_text_file(tmp.file("trend_topic.csv"));
    CHECK(std::count(topic_csv.begin(), topic_csv.end(), '\n') == 2 * 4);

    // every svg is well-formed XML
    for (const auto& p : written) {
        if (p.extension() != ".svg") continue;
        std::string err;
        const bool ok = xml_well_formed(read_text_file(p), &err);
        INFO(p.filename().string() << ": " << err);
        CHECK(ok);
    }
}

TEST_CASE("the xml checker itself rejects malformed documents") {
    CHECK(xml_well_formed("<a><b/></a>"));
    std::string err;
    CHECK_FALSE(xml_well_formed("<a><b></a>", &err));
    CHECK_FALSE(xml_well_formed("<a attr=unquoted></a4>", &err));
    CHECK_FALSE(xml_well_formed("<a>", &err));
}

TEST_CASE("pie charts cover degenerate distributions") {
    // single 100% slice renders as a full circle
    auto one = svg::pie_chart("t", {"only"}, {100.0});
    CHECK(xml_well_formed(one));
    CHECK_THAT(one, Catch::Matchers::ContainsSubstring("<circle"));

    auto empty = svg::pie_chart("t", {"a", "b"}, {0.0, 100.0});
    CHECK(xml_well_formed(empty));

    // single-semester trends still render
    TrendSeries t;
    t.semesters = {"2015-1"};
    t.labels = {"positive"};
    t.pct = {{100.0}};
    CHECK(xml_well_formed(svg::line_chart("t", t)));
}
