#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mislc/datamodel.hpp"
#include "mislc/hash.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path log = fs::temp_directory_path() / ("mislc_cli_" + std::to_string(counter++));
    const std::string cmd = std::string(MISLC_CLI_BIN) + " " + args + " > " + log.string() +
                            " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    result.output = ss.str();
    fs::remove(log);
    return result;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& body) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << body;
}

// a scratch area with a 3-document corpus, a 4-sample dataset, annotations,
// an issue catalog, and stateless mock scripts
struct Workspace {
    fs::path root;

    Workspace() {
        root = fs::temp_directory_path() / ("mislc_ws_" + std::to_string(::getpid())) /
               std::to_string(reinterpret_cast<uintptr_t>(this));
        fs::remove_all(root);
        fs::create_directories(root / "corpus");

        write_file(root / "corpus/alpha.txt",
                   "The defamation test looks at reputation harm.\n\n"
                   "Publication to a third party is required.\n\n"
                   "Fair comment is a defence on matters of public interest.\n");
        write_file(root / "corpus/beta.txt",
                   "Election law forbids false statements about candidates.\n\n"
                   "The statement must be made during the election period.\n");
        write_file(root / "corpus/gamma.txt",
                   "Public mischief covers false reports to peace officers.\n\n"
                   "Hate speech harms members of a specific group.\n");

        std::ostringstream dataset;
        mislc::Sample s1;
        s1.id = "s1";
        s1.text = "The troops were fed expired rations during the election";
        s1.gold = mislc::Label::MisLC;
        s1.legal_issues = {"election_laws"};
        s1.evidence_urls = {"http://fixture/a"};
        s1.checkworthy_votes = {3, 0, 0};
        mislc::Sample s2;
        s2.id = "s2";
        s2.text = "Some artists are speaking out against the war";
        s2.gold = mislc::Label::NonMisLC;
        s2.checkworthy_votes = {1, 2, 0};
        mislc::Sample s3;
        s3.id = "s3";
        s3.text = "We all know what he did over there";
        s3.gold = mislc::Label::Unclear;
        s3.checkworthy_votes = {2, 1, 0};
        mislc::Sample s4;
        s4.id = "s4";
        s4.text = "A defamatory statement about the mayor spread online";
        s4.gold = mislc::Label::MisLC;
        s4.legal_issues = {"defamation"};
        s4.evidence_urls = {"http://fixture/b"};
        s4.checkworthy_votes = {3, 1, 0};
        for (const auto& s : {s1, s2, s3, s4}) dataset << mislc::sample_to_jsonl(s) << "\n";
        write_file(root / "dataset.jsonl", dataset.str());

        json issues = json::array();
        write_file(root / "issues.jsonl",
                   json{{"id", "defamation"},
                        {"name", "Defamation"},
                        {"test_text", "reputation harm plus publication"},
                        {"defence_text", "fair comment"},
                        {"definition_text", "defamation lowers reputation in the eyes of a "
                                            "reasonable person"}}
                           .dump() +
                       "\n" +
                       json{{"id", "election_laws"},
                            {"name", "Election Laws"},
                            {"test_text", "false statements about candidates"},
                            {"defence_text", ""},
                            {"definition_text", "election law forbids false statements about "
                                                "candidates during the period"}}
                           .dump() +
                       "\n");

        const json llm_script = {
            {"rules",
             json::array(
                 {{{"match", "legal context"}, {"response", {{"text", "misinformation"},
                                                             {"probs", json::array({0.9})}}}},
                  {{"match", "Web search results"},
                   {"response", {{"text", "factual"}, {"probs", json::array({0.9})}}}}})},
            {"default", {{"text", "The verdict is unsure."}, {"probs", json::array({0.45})}}}};
        write_file(root / "llm_script.json", llm_script.dump());

        const json search_script = {
            {"entries", json::array({{{"match", ""},
                                      {"results", json::array({{{"title", "T"},
                                                                {"link", "http://fixture/a"},
                                                                {"snippet", "fixture snippet"}}})}}})}};
        write_file(root / "search_script.json", search_script.dump());

        const json pages = {{"http://fixture/a", "<p>evidence page one body text</p>"},
                            {"http://fixture/b", "<p>evidence page two body text</p>"}};
        write_file(root / "pages.json", pages.dump());

        std::ostringstream anns;
        const char* annotators[] = {"a1", "a2", "a3"};
        for (const auto* sid : {"s1", "s2", "s3", "s4"}) {
            for (const auto* who : annotators) {
                mislc::AnnotationRecord rec;
                rec.sample_id = sid;
                rec.annotator_id = who;
                if (std::string(sid) == "s1" || std::string(sid) == "s4") {
                    rec.verdict = std::string(who) == "a3" ? mislc::Verdict3::No
                                                           : mislc::Verdict3::Yes;
                    rec.issues = {std::string(sid) == "s1" ? "election_laws" : "defamation"};
                    rec.evidence_urls = {"http://fixture/a"};
                } else if (std::string(sid) == "s2") {
                    rec.verdict = mislc::Verdict3::No;
                    rec.no_claim = std::string(who) != "a1";
                } else {
                    rec.verdict = std::string(who) == "a1" ? mislc::Verdict3::Yes
                                  : std::string(who) == "a2" ? mislc::Verdict3::No
                                                             : mislc::Verdict3::Unclear;
                }
                anns << mislc::annotation_to_jsonl(rec) << "\n";
            }
        }
        write_file(root / "annotations.jsonl", anns.str());
    }

    ~Workspace() { fs::remove_all(root); }

    std::string p(const std::string& rel) const { return (root / rel).string(); }
};

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("chunk produces a deterministic manifest with per-doc ordinals") {
        Workspace ws;
        auto r1 = run_cli("chunk --corpus " + ws.p("corpus") + " --out " + ws.p("chunks.jsonl") +
                          " --budget 64");
        CHECK(r1.exit_code == 0);
        const auto manifest = slurp(ws.p("chunks.jsonl"));
        CHECK(manifest.find("alpha-0000") != std::string::npos);
        CHECK(manifest.find("beta-0000") != std::string::npos);
        CHECK(manifest.find("gamma-0000") != std::string::npos);

        auto r2 = run_cli("chunk --corpus " + ws.p("corpus") + " --out " + ws.p("chunks2.jsonl") +
                          " --budget 64");
        CHECK(r2.exit_code == 0);
        CHECK(mislc::sha256_hex(manifest) == mislc::sha256_hex(slurp(ws.p("chunks2.jsonl"))));
    }

    TEST_CASE("chunk on an empty directory exits 2 with EmptyCorpus") {
        Workspace ws;
        fs::create_directories(ws.root / "empty");
        const auto r = run_cli("chunk --corpus " + ws.p("empty") + " --out " + ws.p("x.jsonl"));
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("EmptyCorpus") != std::string::npos);
    }

    TEST_CASE("run and eval round trip with mocks") {
        Workspace ws;
        REQUIRE(run_cli("chunk --corpus " + ws.p("corpus") + " --out " + ws.p("chunks.jsonl") +
                        " --budget 64")
                    .exit_code == 0);
        REQUIRE(run_cli("build-index --chunks " + ws.p("chunks.jsonl") + " --out " +
                        ws.p("index"))
                    .exit_code == 0);

        json config;
        config["dataset"] = ws.p("dataset.jsonl");
        config["index"] = ws.p("index");
        config["issues"] = ws.p("issues.jsonl");
        config["out"] = ws.p("runs");
        config["retrieval"] = {{"mode", "flare_legal"}};
        config["mock"] = {{"llm_script", ws.p("llm_script.json")},
                          {"search_script", ws.p("search_script.json")},
                          {"pages", ws.p("pages.json")}};
        write_file(ws.root / "config.json", config.dump());

        const auto run = run_cli("run --config " + ws.p("config.json") + " --name r1");
        CHECK(run.exit_code == 0);
        const auto predictions = mislc::read_predictions(ws.p("runs/r1/predictions.jsonl"));
        REQUIRE(predictions.size() == 4);
        for (const auto& p : predictions) CHECK(p.verdict == mislc::Label::MisLC);

        const auto eval = run_cli("eval --predictions " + ws.p("runs/r1/predictions.jsonl") +
                                  " --dataset " + ws.p("dataset.jsonl") + " --out " +
                                  ws.p("runs/r1"));
        CHECK(eval.exit_code == 0);
        const auto report = json::parse(slurp(ws.p("runs/r1/report.json")));
        CHECK(report.at("n") == 4);
        // all-mislc on golds {2,0,1,2}: tp=2 fp=2 -> bin = 4/6
        CHECK(report.at("bin_f1").get<double>() == doctest::Approx(2.0 * 2 / (2 * 2 + 2)));
        CHECK(slurp(ws.p("runs/r1/label_distribution.csv"))
                  .find("eval,0,0,4") != std::string::npos);
    }

    TEST_CASE("same seed twice gives byte-identical predictions") {
        Workspace ws;
        REQUIRE(run_cli("chunk --corpus " + ws.p("corpus") + " --out " + ws.p("chunks.jsonl") +
                        " --budget 64")
                    .exit_code == 0);
        REQUIRE(run_cli("build-index --chunks " + ws.p("chunks.jsonl") + " --out " +
                        ws.p("index"))
                    .exit_code == 0);
        json config;
        config["dataset"] = ws.p("dataset.jsonl");
        config["index"] = ws.p("index");
        config["out"] = ws.p("runs");
        config["retrieval"] = {{"mode", "random_legal"}, {"seed", 11}};
        config["run"] = {{"parallelism", 2}};
        config["mock"] = {{"llm_script", ws.p("llm_script.json")}};
        write_file(ws.root / "config.json", config.dump());

        REQUIRE(run_cli("run --config " + ws.p("config.json") + " --name a").exit_code == 0);
        REQUIRE(run_cli("run --config " + ws.p("config.json") + " --name b").exit_code == 0);
        CHECK(slurp(ws.p("runs/a/predictions.jsonl")) == slurp(ws.p("runs/b/predictions.jsonl")));
    }

    TEST_CASE("config errors exit 2") {
        Workspace ws;
        CHECK(run_cli("run --dataset " + ws.p("missing.jsonl")).exit_code == 2);
        CHECK(run_cli("eval --predictions nope.jsonl --dataset nope2.jsonl").exit_code == 2);
        CHECK(run_cli("sweep-theta --grid 1.5 --mode flare_legal --dataset " +
                      ws.p("dataset.jsonl"))
                  .exit_code == 2);
        CHECK(run_cli("sweep-theta --grid 0.5 --mode none --dataset " + ws.p("dataset.jsonl"))
                  .exit_code == 2);
        CHECK(run_cli("definitely-not-a-command").exit_code == 2);
    }

    TEST_CASE("eval without gold labels exits 2") {
        Workspace ws;
        mislc::Sample s;
        s.id = "s1";
        s.text = "t";
        write_file(ws.root / "nogold.jsonl", mislc::sample_to_jsonl(s) + "\n");
        mislc::Prediction p;
        p.sample_id = "s1";
        p.verdict = mislc::Label::MisLC;
        write_file(ws.root / "preds.jsonl", mislc::prediction_to_jsonl(p) + "\n");
        const auto r = run_cli("eval --predictions " + ws.p("preds.jsonl") + " --dataset " +
                               ws.p("nogold.jsonl") + " --out " + ws.p("evalout"));
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("gold") != std::string::npos);
    }

    TEST_CASE("label command aggregates votes onto the dataset") {
        Workspace ws;
        const auto r = run_cli("label --annotations " + ws.p("annotations.jsonl") +
                               " --dataset " + ws.p("dataset.jsonl") + " --out " +
                               ws.p("labeled.jsonl"));
        CHECK(r.exit_code == 0);
        const auto samples = mislc::read_samples(ws.p("labeled.jsonl"));
        REQUIRE(samples.size() == 4);
        CHECK(samples[0].gold == mislc::Label::MisLC);     // 2 yes / 1 no
        CHECK(samples[1].gold == mislc::Label::NonMisLC);  // 3 no
        CHECK(samples[2].gold == mislc::Label::Unclear);   // three-way tie
        CHECK(samples[0].legal_issues == std::vector<std::string>{"election_laws"});
        CHECK(samples[1].flags.no_claim);  // 2 of 3 marked no_claim
    }

    TEST_CASE("agreement and experts commands run on the fixture annotations") {
        Workspace ws;
        const auto agreement = run_cli("agreement --annotations " + ws.p("annotations.jsonl") +
                                       " --out " + ws.p("alpha.json"));
        CHECK(agreement.exit_code == 0);
        CHECK(agreement.output.find("krippendorff_alpha=") != std::string::npos);
        const auto parsed = json::parse(slurp(ws.p("alpha.json")));
        CHECK(parsed.contains("alpha"));
        CHECK(parsed.contains("coincidence"));

        // nobody clears the default 50-annotation bar
        CHECK(run_cli("experts --annotations " + ws.p("annotations.jsonl")).exit_code == 1);
        const auto experts = run_cli("experts --annotations " + ws.p("annotations.jsonl") +
                                     " --min-count 3 --out " + ws.p("experts.json"));
        CHECK(experts.exit_code == 0);
        CHECK(json::parse(slurp(ws.p("experts.json"))).at("experts").size() == 3);
    }

    TEST_CASE("filter command emits per-run kept files and the intersection") {
        Workspace ws;
        const auto r = run_cli("filter --dataset " + ws.p("dataset.jsonl") +
                               " --k 2 --runs 3 --seed 5 --out " + ws.p("filter_out"));
        CHECK(r.exit_code == 0);
        CHECK(fs::exists(ws.p("filter_out/kept_run0.txt")));
        CHECK(fs::exists(ws.p("filter_out/kept_run2.txt")));
        CHECK(fs::exists(ws.p("filter_out/intersection.txt")));
        CHECK(r.output.find("intersection:") != std::string::npos);
    }

    TEST_CASE("sweep-theta emits one row per grid point") {
        Workspace ws;
        REQUIRE(run_cli("chunk --corpus " + ws.p("corpus") + " --out " + ws.p("chunks.jsonl") +
                        " --budget 64")
                    .exit_code == 0);
        REQUIRE(run_cli("build-index --chunks " + ws.p("chunks.jsonl") + " --out " +
                        ws.p("index"))
                    .exit_code == 0);
        json config;
        config["dataset"] = ws.p("dataset.jsonl");
        config["index"] = ws.p("index");
        config["out"] = ws.p("runs");
        config["retrieval"] = {{"mode", "flare_legal"}};
        config["mock"] = {{"llm_script", ws.p("llm_script.json")}};
        write_file(ws.root / "config.json", config.dump());

        const auto r = run_cli("sweep-theta --config " + ws.p("config.json") +
                               " --grid 0,0.5,1 --name sweep");
        CHECK(r.exit_code == 0);
        const auto csv = slurp(ws.p("runs/sweep/theta_sweep.csv"));
        size_t rows = 0;
        for (char c : csv) rows += c == '\n';
        CHECK(rows == 4);  // header + 3 grid points

        // retrieval counts are non-decreasing in theta
        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);  // header
        long prev_events = -1;
        while (std::getline(lines, line)) {
            std::stringstream row(line);
            std::string cell;
            for (int i = 0; i <= 5; ++i) std::getline(row, cell, ',');
            const long events = std::stol(cell);
            CHECK(events >= prev_events);
            prev_events = events;
        }
    }
}
