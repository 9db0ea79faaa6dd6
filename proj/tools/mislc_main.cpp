// Pipeline CLI: chunking, indexing, retrieval-augmented classification runs,
// evaluation, the theta sweep, and the dataset-curation commands.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mislc/config.hpp"
#include "mislc/corpus.hpp"
#include "mislc/curation.hpp"
#include "mislc/datamodel.hpp"
#include "mislc/detector.hpp"
#include "mislc/errors.hpp"
#include "mislc/index.hpp"
#include "mislc/metrics.hpp"
#include "mislc/runner.hpp"
#include "mislc/tokenizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct CommandArgs {
    std::string config_path;
    std::string dataset;
    std::string corpus;
    std::string index;
    std::string issues;
    std::string out;
    std::string chunks;
    std::string predictions;
    std::string annotations;
    std::string mode;
    std::string prompt_mode;
    std::string name;
    std::string grid;
    std::string rule = "vote";
    std::string tokenizer;
    size_t budget = 2048;
    bool no_hard_split = false;
    bool extra_f1 = false;
    double k1 = 0.9;
    double b = 0.4;
    size_t k = 1000;
    size_t runs = 3;
    size_t dim = 64;
    size_t epochs = 200;
    double lr = 0.1;
    size_t min_count = 50;
    int64_t seed = -1;
    int64_t parallelism = -1;
    double theta = -1.0;
};

mislc::RunConfig resolve_config(const CommandArgs& args) {
    mislc::RunConfig cfg;
    if (!args.config_path.empty()) cfg = mislc::load_run_config(args.config_path);
    // flags win over the config file
    if (!args.dataset.empty()) cfg.dataset = args.dataset;
    if (!args.corpus.empty()) cfg.corpus = args.corpus;
    if (!args.index.empty()) cfg.index = args.index;
    if (!args.issues.empty()) cfg.issues = args.issues;
    if (!args.out.empty()) cfg.out = args.out;
    if (!args.mode.empty()) cfg.retrieval.mode = args.mode;
    if (!args.prompt_mode.empty()) cfg.prompt.mode = args.prompt_mode;
    if (!args.name.empty()) cfg.run.name = args.name;
    if (!args.tokenizer.empty()) cfg.tokenizer = args.tokenizer;
    if (args.seed >= 0) {
        cfg.seed = static_cast<uint64_t>(args.seed);
        cfg.retrieval.seed = static_cast<uint64_t>(args.seed);
    }
    if (args.parallelism >= 1) cfg.run.parallelism = static_cast<size_t>(args.parallelism);
    if (args.theta >= 0.0) cfg.retrieval.theta = args.theta;
    return cfg;
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw mislc::ConfigError(what + " path not set");
    if (!fs::exists(path)) throw mislc::ConfigError(what + " not found: " + path);
}

std::vector<mislc::Label> golds_for(const std::vector<mislc::Prediction>& preds,
                                    const std::vector<mislc::Sample>& samples) {
    std::map<std::string, const mislc::Sample*> by_id;
    for (const auto& s : samples) by_id[s.id] = &s;
    std::vector<mislc::Label> golds;
    golds.reserve(preds.size());
    for (const auto& p : preds) {
        auto it = by_id.find(p.sample_id);
        if (it == by_id.end()) {
            throw mislc::MissingGoldError("prediction " + p.sample_id + " not in dataset");
        }
        if (!it->second->gold.has_value()) {
            throw mislc::MissingGoldError("sample " + p.sample_id + " has no gold label");
        }
        golds.push_back(*it->second->gold);
    }
    return golds;
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mislc::ConfigError("cannot write " + path.string());
    out << body;
}

std::string label_distribution_csv(
    const std::vector<std::pair<std::string, mislc::EvalReport>>& rows) {
    std::ostringstream csv;
    csv << "run,non_mislc,unclear,mislc\n";
    for (const auto& [name, report] : rows) {
        csv << name << ',' << report.label_distribution[0] << ',' << report.label_distribution[1]
            << ',' << report.label_distribution[2] << '\n';
    }
    return csv.str();
}

int cmd_chunk(const CommandArgs& args) {
    const auto cfg = resolve_config(args);
    require_file(cfg.corpus, "corpus directory");
    const auto docs = mislc::load_corpus_dir(cfg.corpus);
    if (docs.empty()) throw mislc::EmptyCorpusError();

    const auto tok = mislc::make_tokenizer(args.tokenizer.empty() ? cfg.tokenizer : args.tokenizer);
    mislc::ChunkOptions opts;
    opts.budget = args.budget;
    opts.hard_split = !args.no_hard_split;

    std::vector<mislc::Chunk> all;
    for (const auto& doc : docs) {
        auto chunks = mislc::chunk_document(doc, *tok, opts);
        all.insert(all.end(), std::make_move_iterator(chunks.begin()),
                   std::make_move_iterator(chunks.end()));
    }
    if (args.out.empty()) throw mislc::ConfigError("--out manifest path required");
    mislc::write_chunk_manifest(args.out, all);
    std::cout << "chunked " << docs.size() << " documents into " << all.size() << " chunks -> "
              << args.out << "\n";
    return kExitOk;
}

int cmd_build_index(const CommandArgs& args) {
    require_file(args.chunks, "chunk manifest");
    if (args.out.empty()) throw mislc::ConfigError("--out index directory required");
    const auto chunks = mislc::read_chunk_manifest(args.chunks);
    const auto cfg = resolve_config(args);
    const auto tok = mislc::make_tokenizer(cfg.tokenizer);
    const auto index =
        mislc::PostingsIndex::build(chunks, *tok, mislc::Bm25Params{args.k1, args.b});
    index.save(args.out);
    std::cout << "indexed " << index.size() << " chunks (avgdl " << index.avgdl() << ") -> "
              << args.out << "\n";
    return kExitOk;
}

struct LoadedRun {
    std::vector<mislc::Sample> samples;
    std::vector<mislc::Prediction> predictions;
    mislc::TraceSummary summary;
};

LoadedRun execute_run(const mislc::RunConfig& cfg) {
    require_file(cfg.dataset, "dataset");
    const auto samples = mislc::read_samples(cfg.dataset);

    const auto mode = mislc::retrieval_mode_from_string(cfg.retrieval.mode);
    const bool needs_index = mode == mislc::RetrievalMode::RalmLegal ||
                             mode == mislc::RetrievalMode::FlareLegal ||
                             mode == mislc::RetrievalMode::FlareLegalWeb ||
                             mode == mislc::RetrievalMode::FlareTheta1 ||
                             mode == mislc::RetrievalMode::RandomLegal ||
                             mode == mislc::RetrievalMode::OracleLegal ||
                             mode == mislc::RetrievalMode::OracleLegalWeb;
    const bool needs_catalog = mode == mislc::RetrievalMode::OracleLegal ||
                               mode == mislc::RetrievalMode::OracleLegalWeb;

    mislc::PostingsIndex index;
    if (needs_index) {
        require_file(cfg.index, "index directory");
        index = mislc::PostingsIndex::load(cfg.index);
    }
    mislc::IssueCatalog catalog;
    if (needs_catalog) {
        require_file(cfg.issues, "issue catalog");
        catalog = mislc::IssueCatalog::load_jsonl(cfg.issues);
    }

    auto gateways = mislc::make_gateways(cfg);
    if (gateways.llm == nullptr) {
        throw mislc::ConfigError("no llm configured: set llm.endpoint or mock.llm_script");
    }

    mislc::ClassifyDeps deps;
    deps.llm = gateways.llm.get();
    deps.index = needs_index ? &index : nullptr;
    deps.web = gateways.web.get();
    deps.pages = gateways.pages.get();
    deps.catalog = needs_catalog ? &catalog : nullptr;

    const size_t step = std::max<size_t>(1, samples.size() / 10);
    auto progress = [step](size_t done, size_t total) {
        if (done % step == 0 || done == total) {
            std::cerr << "progress: " << done << "/" << total << "\n";
        }
    };

    LoadedRun run;
    run.predictions = mislc::run_pipeline(samples, mislc::classify_options_from_config(cfg), deps,
                                          cfg.run.parallelism, progress);
    run.samples = samples;
    run.summary = mislc::summarize_traces(run.predictions);
    return run;
}

fs::path prepare_run_dir(const mislc::RunConfig& cfg) {
    const fs::path dir = fs::path(cfg.out) / cfg.run.name;
    fs::create_directories(dir);
    write_text(dir / "resolved_config.json", mislc::run_config_to_json(cfg) + "\n");
    return dir;
}

int cmd_run(const CommandArgs& args) {
    const auto cfg = resolve_config(args);
    const auto dir = prepare_run_dir(cfg);
    const auto run = execute_run(cfg);

    mislc::write_predictions(dir / "predictions.jsonl", run.predictions);
    json summary;
    summary["samples"] = run.predictions.size();
    summary["retrieval_events"] = run.summary.retrieval_events;
    summary["legal_chunks"] = run.summary.legal_chunks;
    summary["web_queries"] = run.summary.web_queries;
    summary["errors"] = run.summary.errors;
    write_text(dir / "trace_summary.json", summary.dump(2) + "\n");

    std::cout << "ran " << run.predictions.size() << " samples in mode " << cfg.retrieval.mode
              << " (" << run.summary.retrieval_events << " retrieval events, "
              << run.summary.errors << " errors) -> " << (dir / "predictions.jsonl").string()
              << "\n";
    return kExitOk;
}

int cmd_eval(const CommandArgs& args) {
    require_file(args.predictions, "predictions");
    const auto cfg = resolve_config(args);
    require_file(cfg.dataset, "dataset");

    const auto predictions = mislc::read_predictions(args.predictions);
    const auto samples = mislc::read_samples(cfg.dataset);
    const auto golds = golds_for(predictions, samples);
    const auto report = mislc::evaluate(predictions, golds);

    const fs::path dir = args.out.empty() ? fs::path(".") : fs::path(args.out);
    fs::create_directories(dir);
    write_text(dir / "report.json", mislc::eval_report_to_json(report, args.extra_f1) + "\n");
    write_text(dir / "label_distribution.csv",
               label_distribution_csv({{args.name.empty() ? "eval" : args.name, report}}));

    std::cout << "n=" << report.n << " bin_f1=" << report.bin_f1 << " ma_f1=" << report.ma_f1
              << " mi_f1=" << report.mi_f1 << " er=" << report.error_rate << "\n";
    return kExitOk;
}

int cmd_sweep_theta(const CommandArgs& args) {
    auto cfg = resolve_config(args);
    const auto mode = mislc::retrieval_mode_from_string(cfg.retrieval.mode);
    if (mode != mislc::RetrievalMode::FlareLegal && mode != mislc::RetrievalMode::FlareWeb &&
        mode != mislc::RetrievalMode::FlareLegalWeb) {
        throw mislc::ConfigError("sweep-theta requires a flare retrieval mode");
    }

    std::vector<double> grid;
    std::stringstream ss(args.grid);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const double theta = std::stod(item);
        if (theta < 0.0 || theta > 1.0) {
            throw mislc::ConfigError("theta must lie in [0,1]: " + item);
        }
        grid.push_back(theta);
    }
    if (grid.empty()) throw mislc::ConfigError("--grid must list at least one theta");

    const fs::path dir = prepare_run_dir(cfg);
    std::ostringstream csv;
    csv << "theta,bin_f1,ma_f1,mi_f1,error_rate,retrieval_events,non_mislc,unclear,mislc\n";
    for (const double theta : grid) {
        cfg.retrieval.theta = theta;
        const auto run = execute_run(cfg);
        const auto golds = golds_for(run.predictions, run.samples);
        const auto report = mislc::evaluate(run.predictions, golds);
        csv << theta << ',' << report.bin_f1 << ',' << report.ma_f1 << ',' << report.mi_f1 << ','
            << report.error_rate << ',' << run.summary.retrieval_events << ','
            << report.label_distribution[0] << ',' << report.label_distribution[1] << ','
            << report.label_distribution[2] << '\n';
    }
    write_text(dir / "theta_sweep.csv", csv.str());
    std::cout << "swept " << grid.size() << " theta values -> "
              << (dir / "theta_sweep.csv").string() << "\n";
    return kExitOk;
}

int cmd_filter(const CommandArgs& args) {
    const auto cfg = resolve_config(args);
    require_file(cfg.dataset, "dataset");
    if (args.out.empty()) throw mislc::ConfigError("--out directory required");
    const auto samples = mislc::read_samples(cfg.dataset);

    const mislc::HashEmbeddingProvider provider(args.dim);
    mislc::FilterOptions opts;
    opts.epochs = args.epochs;
    opts.learning_rate = args.lr;

    fs::create_directories(args.out);
    const uint64_t base_seed = args.seed >= 0 ? static_cast<uint64_t>(args.seed) : cfg.seed;

    std::vector<std::set<std::string>> kept_sets;
    for (size_t r = 0; r < args.runs; ++r) {
        const auto result =
            mislc::adversarial_filter(samples, provider, args.k, base_seed + r, opts);
        std::ostringstream body;
        for (const auto& id : result.kept_ids) body << id << '\n';
        write_text(fs::path(args.out) / ("kept_run" + std::to_string(r) + ".txt"), body.str());
        kept_sets.emplace_back(result.kept_ids.begin(), result.kept_ids.end());
        std::cout << "run " << r << ": kept " << result.kept_ids.size() << " of "
                  << samples.size() << " in " << result.rounds.size() << " rounds\n";
    }
    const auto common = mislc::intersect_runs(kept_sets);
    std::ostringstream body;
    for (const auto& id : common) body << id << '\n';
    write_text(fs::path(args.out) / "intersection.txt", body.str());
    std::cout << "intersection: " << common.size() << " samples\n";
    return kExitOk;
}

int cmd_agreement(const CommandArgs& args) {
    require_file(args.annotations, "annotations");
    const auto annotations = mislc::read_annotations(args.annotations);
    const auto result = mislc::krippendorff_alpha(annotations);

    json j;
    j["alpha"] = result.alpha;
    j["units"] = result.units;
    j["pairable_values"] = result.n;
    j["coincidence"] = result.coincidence;
    j["margins"] = result.margins;
    if (!args.out.empty()) write_text(args.out, j.dump(2) + "\n");
    std::cout << "krippendorff_alpha=" << result.alpha << " over " << result.units << " units\n";
    return kExitOk;
}

int cmd_experts(const CommandArgs& args) {
    require_file(args.annotations, "annotations");
    const auto annotations = mislc::read_annotations(args.annotations);

    std::map<std::string, mislc::Label> consensus;
    for (const auto& [id, vote] : mislc::consensus_by_sample(annotations)) {
        consensus[id] = vote.label;
    }
    const auto perf = mislc::expert_performance(annotations, consensus, args.min_count);

    json experts = json::array();
    for (const auto& e : perf.experts) {
        experts.push_back({{"annotator_id", e.annotator_id},
                           {"annotations", e.annotation_count},
                           {"bin_f1", e.bin_f1},
                           {"ma_f1", e.ma_f1},
                           {"mi_f1", e.mi_f1}});
    }
    json j;
    j["experts"] = experts;
    j["bin_f1"] = {{"mean", perf.bin.mean}, {"std", perf.bin.stddev}};
    j["ma_f1"] = {{"mean", perf.ma.mean}, {"std", perf.ma.stddev}};
    j["mi_f1"] = {{"mean", perf.mi.mean}, {"std", perf.mi.stddev}};
    if (!args.out.empty()) write_text(args.out, j.dump(2) + "\n");

    std::cout << perf.experts.size() << " qualified experts; bin_f1 " << perf.bin.mean << " +- "
              << perf.bin.stddev << ", ma_f1 " << perf.ma.mean << " +- " << perf.ma.stddev
              << ", mi_f1 " << perf.mi.mean << " +- " << perf.mi.stddev << "\n";
    return kExitOk;
}

int cmd_label(const CommandArgs& args) {
    require_file(args.annotations, "annotations");
    const auto cfg = resolve_config(args);
    require_file(cfg.dataset, "dataset");
    if (args.out.empty()) throw mislc::ConfigError("--out dataset path required");

    const auto annotations = mislc::read_annotations(args.annotations);
    auto samples = mislc::read_samples(cfg.dataset);

    std::map<std::string, std::vector<mislc::AnnotationRecord>> grouped;
    for (const auto& a : annotations) grouped[a.sample_id].push_back(a);

    for (auto& sample : samples) {
        auto it = grouped.find(sample.id);
        if (it == grouped.end()) continue;
        const auto& anns = it->second;
        const auto vote = mislc::majority_vote(anns);

        // evidence is the union of sample-level and annotator-supplied urls
        std::set<std::string> urls(sample.evidence_urls.begin(), sample.evidence_urls.end());
        size_t no_claim_votes = 0;
        size_t defence_votes = 0;
        for (const auto& a : anns) {
            urls.insert(a.evidence_urls.begin(), a.evidence_urls.end());
            no_claim_votes += a.no_claim;
            defence_votes += a.defence;
        }
        sample.evidence_urls.assign(urls.begin(), urls.end());
        sample.legal_issues = vote.issues;
        sample.flags.no_claim = 2 * no_claim_votes > anns.size();
        sample.flags.defence = 2 * defence_votes > anns.size();

        if (args.rule == "vote") {
            sample.gold = vote.label;
        } else if (args.rule == "eq1") {
            sample.gold = mislc::assign_label(static_cast<int64_t>(sample.evidence_urls.size()),
                                              static_cast<int64_t>(sample.legal_issues.size()),
                                              !sample.flags.no_claim);
        } else {
            throw mislc::ConfigError("unknown labeling rule: " + args.rule);
        }
    }

    mislc::write_samples(args.out, samples);
    for (const auto& v : mislc::validate_dataset(samples)) {
        std::cerr << "warning: " << v << "\n";
    }
    std::cout << "labeled " << grouped.size() << " of " << samples.size() << " samples ("
              << args.rule << " rule) -> " << args.out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"misinformation-with-legal-consequence pipeline"};
    app.require_subcommand(1);
    CommandArgs args;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "JSON config file");
        cmd->add_option("--seed", args.seed, "seed override");
        cmd->add_option("--out", args.out, "output path");
    };

    auto* chunk = app.add_subcommand("chunk", "split a corpus directory into token chunks");
    add_common(chunk);
    chunk->add_option("--corpus", args.corpus, "directory of .txt documents");
    chunk->add_option("--budget", args.budget, "token budget per chunk");
    chunk->add_option("--tokenizer", args.tokenizer, "tokenizer id");
    chunk->add_flag("--no-hard-split", args.no_hard_split,
                    "fail on paragraphs larger than the budget");

    auto* build = app.add_subcommand("build-index", "build the BM25 index from a chunk manifest");
    add_common(build);
    build->add_option("--chunks", args.chunks, "chunk manifest (jsonl)");
    build->add_option("--k1", args.k1, "BM25 k1");
    build->add_option("--b", args.b, "BM25 b");
    build->add_option("--tokenizer", args.tokenizer, "tokenizer id");

    auto* run = app.add_subcommand("run", "classify every dataset sample");
    add_common(run);
    run->add_option("--dataset", args.dataset, "samples jsonl");
    run->add_option("--index", args.index, "index directory");
    run->add_option("--issues", args.issues, "issue catalog jsonl");
    run->add_option("--mode", args.mode, "retrieval mode");
    run->add_option("--prompt-mode", args.prompt_mode, "constrained|unconstrained");
    run->add_option("--name", args.name, "run directory name");
    run->add_option("--parallelism", args.parallelism, "worker pool size");
    run->add_option("--theta", args.theta, "flare theta override");

    auto* eval = app.add_subcommand("eval", "score a predictions file against gold labels");
    add_common(eval);
    eval->add_option("--predictions", args.predictions, "predictions jsonl");
    eval->add_option("--dataset", args.dataset, "samples jsonl with gold labels");
    eval->add_option("--name", args.name, "row name in label_distribution.csv");
    eval->add_flag("--extra-f1", args.extra_f1, "include conventional 3-class macro/micro f1");

    auto* sweep = app.add_subcommand("sweep-theta", "run+eval across a theta grid");
    add_common(sweep);
    sweep->add_option("--dataset", args.dataset, "samples jsonl");
    sweep->add_option("--index", args.index, "index directory");
    sweep->add_option("--issues", args.issues, "issue catalog jsonl");
    sweep->add_option("--mode", args.mode, "flare retrieval mode");
    sweep->add_option("--name", args.name, "run directory name");
    sweep->add_option("--grid", args.grid, "comma-separated theta values")->required();

    auto* filter = app.add_subcommand("filter", "adversarial dataset filtering");
    add_common(filter);
    filter->add_option("--dataset", args.dataset, "samples jsonl with checkworthy votes");
    filter->add_option("--k", args.k, "target kept size");
    filter->add_option("--runs", args.runs, "independent seeded runs");
    filter->add_option("--dim", args.dim, "hash embedding dimension");
    filter->add_option("--epochs", args.epochs, "classifier epochs per round");
    filter->add_option("--lr", args.lr, "classifier learning rate");

    auto* agreement = app.add_subcommand("agreement", "nominal Krippendorff alpha");
    add_common(agreement);
    agreement->add_option("--annotations", args.annotations, "annotations jsonl");

    auto* experts = app.add_subcommand("experts", "per-annotator performance vs consensus");
    add_common(experts);
    experts->add_option("--annotations", args.annotations, "annotations jsonl");
    experts->add_option("--min-count", args.min_count, "qualify above this many annotations");

    auto* label = app.add_subcommand("label", "aggregate annotations onto a dataset");
    add_common(label);
    label->add_option("--annotations", args.annotations, "annotations jsonl");
    label->add_option("--dataset", args.dataset, "unlabeled samples jsonl");
    label->add_option("--rule", args.rule, "vote|eq1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (chunk->parsed()) return cmd_chunk(args);
        if (build->parsed()) return cmd_build_index(args);
        if (run->parsed()) return cmd_run(args);
        if (eval->parsed()) return cmd_eval(args);
        if (sweep->parsed()) return cmd_sweep_theta(args);
        if (filter->parsed()) return cmd_filter(args);
        if (agreement->parsed()) return cmd_agreement(args);
        if (experts->parsed()) return cmd_experts(args);
        if (label->parsed()) return cmd_label(args);
    } catch (const mislc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mislc::EmptyCorpusError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mislc::OversizeParagraphError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mislc::MissingGoldError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
