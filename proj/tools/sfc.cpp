// Command-line front end: data prep, training, ablation runs, evaluation and
// administrator reports over feedback corpora.

#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfc/pipeline.hpp"
#include "sfc/report.hpp"
#include "sfc/stats.hpp"
#include "sfc/synth.hpp"

namespace {

using namespace sfc;

struct ExperimentFlags {
    ExperimentSpec spec;
    std::vector<std::string> feature_names;
    std::string stopwords_path;
    unsigned seed = 42;

    void add_common(CLI::App* cmd) {
        cmd->add_option("--task", spec.task, "sentiment or topic")
            ->check(CLI::IsMember({"sentiment", "topic"}))
            ->capture_default_str();
        cmd->add_option("--ratio", spec.ratio, "train fraction of the split")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "seed for split, shuffles and initialisation")
            ->capture_default_str();
        cmd->add_option("--stopwords", stopwords_path, "stopword file, one token per line");
        cmd->add_option("--min-df", spec.min_df, "minimum document frequency")
            ->capture_default_str();
        cmd->add_option("--top-k", spec.top_k, "chi-square selection size, 0 keeps all")
            ->capture_default_str();
        cmd->add_option("--alpha", spec.nb_alpha, "naive bayes smoothing")
            ->capture_default_str();
        cmd->add_option("--maxent-lr", spec.maxent.learning_rate, "maxent step size")
            ->capture_default_str();
        cmd->add_option("--maxent-epochs", spec.maxent.epochs, "maxent iteration cap")
            ->capture_default_str();
        cmd->add_option("--sigma2", spec.maxent.sigma2, "maxent quadratic penalty")
            ->capture_default_str();
        cmd->add_option("--dim", spec.w2v.dim, "embedding dimension")->capture_default_str();
        cmd->add_option("--window", spec.w2v.window, "word2vec window")->capture_default_str();
        cmd->add_option("--negative", spec.w2v.negative, "negative samples per pair")
            ->capture_default_str();
        cmd->add_option("--w2v-epochs", spec.w2v.epochs, "word2vec epochs")
            ->capture_default_str();
        cmd->add_option("--w2v-lr", spec.w2v.learning_rate, "word2vec learning rate")
            ->capture_default_str();
        cmd->add_option("--min-count", spec.w2v.min_count, "word2vec frequency cutoff")
            ->capture_default_str();
        cmd->add_option("--layers", spec.net.layers, "lstm layers")->capture_default_str();
        cmd->add_option("--hidden", spec.net.hidden, "lstm units per layer")
            ->capture_default_str();
        cmd->add_option("--epochs", spec.net.epochs, "network training epochs")
            ->capture_default_str();
        cmd->add_option("--lr", spec.net.learning_rate, "network learning rate")
            ->capture_default_str();
        cmd->add_option("--dropout", spec.net.dropout, "dropout rate on layer outputs")
            ->capture_default_str();
        cmd->add_option("--clip", spec.net.clip_norm, "gradient clip norm")
            ->capture_default_str();
        cmd->add_option("--init-range", spec.net.init_range, "uniform init half-width")
            ->capture_default_str();
        cmd->add_flag("--no-peephole", "disable the output-gate peephole term");
    }

    void finalize(const CLI::App* cmd) {
        spec.features = FeatureKinds::parse(feature_names);
        spec.seed = seed;
        spec.w2v.seed = seed;
        spec.maxent.seed = seed;
        spec.net.seed = seed;
        if (cmd->count("--no-peephole")) spec.net.use_peephole = false;
    }

    StopwordList stopwords() const {
        return stopwords_path.empty() ? StopwordList{} : load_stopwords(stopwords_path);
    }
};

Corpus load_with_annotations(const std::string& corpus_path, const std::string& ann_path) {
    auto corpus = load_corpus(corpus_path);
    if (!ann_path.empty()) attach_annotations(corpus, load_annotations(ann_path));
    return corpus;
}

void write_experiment_artifacts(const ExperimentResult& result, const std::string& task,
                                const std::string& model,
                                const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    result.bundle.save(out_dir / ("model_" + task + "_" + model + ".json"));
    write_text_file(out_dir / ("metrics_" + task + "_" + model + ".json"),
                    result.metrics_json.dump(2) + "\n");
    write_text_file(out_dir / ("row_" + task + "_" + model + ".txt"), result.table_row + "\n");
}

int run_cli(int argc, char** argv) {
    CLI::App app{"supervised sentiment/topic classification over student feedback"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file; command-line flags take precedence");
    app.get_config_formatter_base()->valueSeparator('=');

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    SynthConfig synth_config;
    std::string synth_out = "synth.tsv";
    std::string synth_ann_out;
    synth->add_option("--size", synth_config.size, "number of records")->capture_default_str();
    synth->add_option("--seed", synth_config.seed, "generator seed")->capture_default_str();
    synth->add_option("--separability", synth_config.separability,
                      "0 = classes indistinguishable, 1 = perfectly separable")
        ->capture_default_str();
    synth->add_option("--semesters", synth_config.semesters, "semester tags to spread over")
        ->capture_default_str();
    synth->add_option("--out", synth_out, "corpus TSV output")->capture_default_str();
    synth->add_option("--annotations-out", synth_ann_out,
                      "annotation sidecar output (default <out>.ann)");
    synth->callback([&] {
        auto corpus = synth_corpus(synth_config);
        save_corpus(corpus, synth_out);
        const auto ann_path = synth_ann_out.empty() ? synth_out + ".ann" : synth_ann_out;
        save_annotations(corpus.annotations, ann_path);
        std::cout << "wrote " << corpus.records.size() << " records to " << synth_out
                  << " and annotations to " << ann_path << "\n";
    });

    // ---- split ----------------------------------------------------------
    auto* split_cmd = app.add_subcommand("split", "shuffle and split a corpus");
    std::string split_corpus, split_ann, train_out = "train.tsv", test_out = "test.tsv";
    double split_ratio = 0.8;
    unsigned split_seed = 42;
    split_cmd->add_option("--corpus", split_corpus, "corpus TSV")->required();
    split_cmd->add_option("--annotations", split_ann, "annotation sidecar");
    split_cmd->add_option("--ratio", split_ratio, "train fraction")->capture_default_str();
    split_cmd->add_option("--seed", split_seed, "shuffle seed")->capture_default_str();
    split_cmd->add_option("--train-out", train_out, "train TSV output")->capture_default_str();
    split_cmd->add_option("--test-out", test_out, "test TSV output")->capture_default_str();
    split_cmd->callback([&] {
        auto corpus = load_with_annotations(split_corpus, split_ann);
        auto split = split_train_test(corpus, split_ratio, split_seed);
        renumber_records(split.train);  // reloaded ids are line ordinals
        renumber_records(split.test);
        save_corpus(split.train, train_out);
        save_corpus(split.test, test_out);
        if (!split_ann.empty()) {
            save_annotations(split.train.annotations, train_out + ".ann");
            save_annotations(split.test.annotations, test_out + ".ann");
        }
        std::cout << "train: " << split.train.records.size()
                  << " records, test: " << split.test.records.size() << " records\n";
    });

    // ---- stats ----------------------------------------------------------
    auto* stats_cmd = app.add_subcommand("stats", "length-bucket label distribution table");
    std::string stats_corpus, stats_stopwords, stats_task = "sentiment", stats_json;
    stats_cmd->add_option("--corpus", stats_corpus, "corpus TSV")->required();
    stats_cmd->add_option("--task", stats_task, "sentiment or topic")
        ->check(CLI::IsMember({"sentiment", "topic"}))
        ->capture_default_str();
    stats_cmd->add_option("--stopwords", stats_stopwords, "stopword file");
    stats_cmd->add_option("--json", stats_json, "also write the table as JSON");
    stats_cmd->callback([&] {
        auto corpus = load_corpus(stats_corpus);
        const auto axis = stats_task == "sentiment" ? LabelAxis::sentiment : LabelAxis::topic;
        const auto stopwords =
            stats_stopwords.empty() ? StopwordList{} : load_stopwords(stats_stopwords);
        auto stats = length_bucket_stats(corpus, axis, stopwords);
        std::cout << stats.format();
        if (!stats_json.empty()) {
            nlohmann::json j = {{"task", stats_task},       {"labels", stats.labels},
                                {"total", stats.total},     {"bucket_pct", stats.bucket_pct},
                                {"label_pct", stats.label_pct}, {"pct", stats.pct}};
            write_text_file(stats_json, j.dump(2) + "\n");
        }
    });

    // ---- train-embeddings ------------------------------------------------
    auto* emb_cmd = app.add_subcommand("train-embeddings", "fit word vectors on a corpus");
    std::string emb_corpus, emb_out = "embeddings.txt", emb_stopwords;
    W2vConfig w2v;
    emb_cmd->add_option("--corpus", emb_corpus, "corpus TSV")->required();
    emb_cmd->add_option("--out", emb_out, "embedding text file")->capture_default_str();
    emb_cmd->add_option("--stopwords", emb_stopwords, "stopword file");
    emb_cmd->add_option("--dim", w2v.dim, "vector dimension")->capture_default_str();
    emb_cmd->add_option("--window", w2v.window, "context window")->capture_default_str();
    emb_cmd->add_option("--negative", w2v.negative, "negative samples")->capture_default_str();
    emb_cmd->add_option("--epochs", w2v.epochs, "passes over the corpus")->capture_default_str();
    emb_cmd->add_option("--lr", w2v.learning_rate, "initial learning rate")
        ->capture_default_str();
    emb_cmd->add_option("--min-count", w2v.min_count, "frequency cutoff")->capture_default_str();
    emb_cmd->add_option("--seed", w2v.seed, "seed")->capture_default_str();
    emb_cmd->callback([&] {
        auto corpus = load_corpus(emb_corpus);
        const auto stopwords =
            emb_stopwords.empty() ? StopwordList{} : load_stopwords(emb_stopwords);
        std::vector<TokenSequence> sentences;
        for (const auto& rec : corpus.records) {
            auto toks = preprocess_text(rec.text, stopwords);
            if (!toks.empty()) sentences.push_back(std::move(toks));
        }
        auto table = train_word2vec(sentences, w2v);
        table.save_text(emb_out);
        std::cout << "trained " << table.vocab_size() << " vectors of dimension " << table.dim()
                  << " -> " << emb_out << "\n";
    });

    // ---- run --------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "train one model and evaluate the held-out split");
    ExperimentFlags run_flags;
    std::string run_corpus, run_ann, run_out_dir = ".";
    run_cmd->add_option("--corpus", run_corpus, "corpus TSV")->required();
    run_cmd->add_option("--annotations", run_ann, "annotation sidecar (dep/pos features)");
    run_cmd->add_option("--model", run_flags.spec.model, "nb | maxent | lstm | bilstm")
        ->check(CLI::IsMember({"nb", "maxent", "lstm", "bilstm"}))
        ->capture_default_str();
    run_cmd
        ->add_option("--features", run_flags.feature_names,
                     "n-gram feature kinds: uni,bi,dep,pos")
        ->delimiter(',');
    run_cmd->add_option("--embeddings", run_flags.spec.embeddings_path,
                        "pretrained embedding text file (lstm/bilstm)");
    run_cmd->add_flag("--train-embeddings", run_flags.spec.train_embeddings,
                      "fit word2vec on the training split (lstm/bilstm)");
    run_cmd->add_option("--out-dir", run_out_dir, "artifact directory")->capture_default_str();
    run_flags.add_common(run_cmd);
    run_cmd->callback([&] {
        run_flags.finalize(run_cmd);
        run_flags.spec.validate();
        auto corpus = load_with_annotations(run_corpus, run_ann);
        auto result = run_experiment(run_flags.spec, corpus, run_flags.stopwords());
        write_experiment_artifacts(result, run_flags.spec.task, run_flags.spec.model,
                                   run_out_dir);
        std::cout << result.table_row << "\n";
    });

    // ---- grid --------------------------------------------------------------
    auto* grid_cmd =
        app.add_subcommand("grid", "full ablation: 4 NB rows, 4 Maxent rows, LSTM, Bi-LSTM");
    ExperimentFlags grid_flags;
    std::string grid_corpus, grid_ann, grid_out_dir = ".", grid_tasks = "both";
    grid_cmd->add_option("--corpus", grid_corpus, "corpus TSV")->required();
    grid_cmd->add_option("--annotations", grid_ann, "annotation sidecar")->required();
    grid_cmd->add_option("--tasks", grid_tasks, "sentiment, topic or both")
        ->check(CLI::IsMember({"sentiment", "topic", "both"}))
        ->capture_default_str();
    grid_cmd->add_option("--embeddings", grid_flags.spec.embeddings_path,
                         "pretrained vectors for the recurrent rows");
    grid_cmd->add_option("--out-dir", grid_out_dir, "artifact directory")->capture_default_str();
    grid_flags.add_common(grid_cmd);
    grid_cmd->callback([&] {
        grid_flags.finalize(grid_cmd);
        {
            // reject bad shared flags before reading any data
            ExperimentSpec probe = grid_flags.spec;
            probe.model = "nb";
            probe.features = FeatureKinds::parse({"uni"});
            probe.embeddings_path.clear();
            probe.validate();
        }
        auto corpus = load_with_annotations(grid_corpus, grid_ann);
        const auto stopwords = grid_flags.stopwords();
        std::filesystem::create_directories(grid_out_dir);
        std::vector<std::string> tasks;
        if (grid_tasks == "both")
            tasks = {"sentiment", "topic"};
        else
            tasks = {grid_tasks};
        for (const auto& task : tasks) {
            ExperimentSpec base = grid_flags.spec;
            base.task = task;
            auto results = run_grid(base, corpus, stopwords);
            const auto table = grid_table(results);
            std::cout << "== " << task << " ==\n"
                      << table
                      << "(P/R/F1 are weighted averages; micro and macro are in the metrics "
                         "JSON)\n\n";
            write_text_file(std::filesystem::path(grid_out_dir) / ("grid_" + task + ".txt"),
                            table);
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : results) rows.push_back(r.metrics_json);
            write_text_file(std::filesystem::path(grid_out_dir) / ("grid_" + task + ".json"),
                            rows.dump(2) + "\n");
            for (auto& r : results)
                write_experiment_artifacts(
                    r, task,
                    r.metrics_json.at("model").get<std::string>() + "_" +
                        sanitize_filename(r.metrics_json.at("features").get<std::string>()),
                    grid_out_dir);
        }
    });

    // ---- predict -----------------------------------------------------------
    auto* predict_cmd = app.add_subcommand("predict", "classify a corpus with a saved model");
    std::string pred_model, pred_corpus, pred_ann, pred_out = "predictions.tsv";
    predict_cmd->add_option("--model", pred_model, "model bundle JSON")->required();
    predict_cmd->add_option("--corpus", pred_corpus, "corpus TSV")->required();
    predict_cmd->add_option("--annotations", pred_ann, "annotation sidecar");
    predict_cmd->add_option("--out", pred_out, "predictions TSV output")->capture_default_str();
    predict_cmd->callback([&] {
        auto bundle = ModelBundle::load(pred_model);
        auto corpus = load_with_annotations(pred_corpus, pred_ann);
        std::string out = "id\tprediction\tflagged\n";
        for (const auto& rec : corpus.records) {
            const auto* ann = corpus.annotations_for(rec.id);
            if (bundle.features.needs_annotations() && ann == nullptr)
                throw DataError("record " + rec.id +
                                " has no annotations but the model uses dep/pos features");
            const auto tokens = preprocess_text(rec.text, bundle.stopwords);
            const auto pred = bundle.predict(tokens, ann);
            const std::string label = bundle.task == "sentiment"
                                          ? to_string(static_cast<Sentiment>(pred.label))
                                          : to_string(static_cast<Topic>(pred.label));
            out += rec.id + "\t" + label + "\t" + (pred.flagged ? "1" : "0") + "\n";
        }
        write_text_file(pred_out, out);
        std::cout << "wrote " << corpus.records.size() << " predictions to " << pred_out << "\n";
    });

    // ---- report ------------------------------------------------------------
    auto* report_cmd =
        app.add_subcommand("report", "classify a feedback file and emit charts per semester");
    std::string rep_corpus, rep_ann, rep_sent_model, rep_topic_model, rep_out_dir = "report";
    std::vector<std::string> rep_formats = {"json", "csv", "svg"};
    report_cmd->add_option("--corpus", rep_corpus, "feedback TSV (labels optional)")->required();
    report_cmd->add_option("--annotations", rep_ann, "annotation sidecar");
    report_cmd->add_option("--sentiment-model", rep_sent_model, "sentiment bundle JSON")
        ->required();
    report_cmd->add_option("--topic-model", rep_topic_model, "topic bundle JSON")->required();
    report_cmd->add_option("--out-dir", rep_out_dir, "output directory")->capture_default_str();
    report_cmd->add_option("--formats", rep_formats, "any of json,csv,svg")->delimiter(',');
    report_cmd->callback([&] {
        auto sent_bundle = ModelBundle::load(rep_sent_model);
        auto topic_bundle = ModelBundle::load(rep_topic_model);
        auto corpus = load_with_annotations(rep_corpus, rep_ann);
        auto labeled = analyze_batch(corpus, sent_bundle, topic_bundle);
        auto report = build_report(
            labeled, "sentiment: " + sent_bundle.model + ", topic: " + topic_bundle.model);
        std::set<ReportFormat> formats;
        for (const auto& f : rep_formats) {
            if (f == "json")
                formats.insert(ReportFormat::json);
            else if (f == "csv")
                formats.insert(ReportFormat::csv);
            else if (f == "svg")
                formats.insert(ReportFormat::svg);
            else
                throw UsageError("unknown report format \"" + f + "\"");
        }
        auto written = emit_report(report, formats, rep_out_dir);
        std::cout << "classified " << labeled.size() << " records into "
                  << report.snapshots.size() << " semester snapshots; " << written.size()
                  << " files in " << rep_out_dir << "\n";
        if (!report.flagged_ids.empty())
            std::cout << report.flagged_ids.size()
                      << " records were empty after preprocessing\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const sfc::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const sfc::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const sfc::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
