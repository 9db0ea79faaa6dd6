#include "mislc/datamodel.hpp"

#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "mislc/errors.hpp"

namespace mislc {

using nlohmann::json;

Label label_from_code(int code) {
    switch (code) {
        case 0: return Label::NonMisLC;
        case 1: return Label::Unclear;
        case 2: return Label::MisLC;
        default: throw ProtocolError("label code out of range: " + std::to_string(code));
    }
}

const char* label_name(Label l) {
    switch (l) {
        case Label::NonMisLC: return "non_mislc";
        case Label::Unclear: return "unclear";
        case Label::MisLC: return "mislc";
    }
    return "?";
}

Verdict3 verdict_from_string(const std::string& s) {
    if (s == "yes") return Verdict3::Yes;
    if (s == "no") return Verdict3::No;
    if (s == "unclear") return Verdict3::Unclear;
    throw ProtocolError("unknown verdict: " + s);
}

std::string verdict_to_string(Verdict3 v) {
    switch (v) {
        case Verdict3::Yes: return "yes";
        case Verdict3::No: return "no";
        case Verdict3::Unclear: return "unclear";
    }
    return "?";
}

void IssueCatalog::add(LegalIssue issue) {
    if (contains(issue.id)) throw ConfigError("duplicate issue id: " + issue.id);
    issues_.push_back(std::move(issue));
}

bool IssueCatalog::contains(const std::string& id) const {
    for (const auto& i : issues_) {
        if (i.id == id) return true;
    }
    return false;
}

const LegalIssue& IssueCatalog::get(const std::string& id) const {
    for (const auto& i : issues_) {
        if (i.id == id) return i;
    }
    throw UnknownIssueIdError(id);
}

IssueCatalog IssueCatalog::load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read issue catalog: " + path.string());
    IssueCatalog cat;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = json::parse(line);
        LegalIssue issue;
        issue.id = j.at("id").get<std::string>();
        issue.name = j.at("name").get<std::string>();
        issue.test_text = j.value("test_text", "");
        issue.defence_text = j.value("defence_text", "");
        issue.definition_text = j.value("definition_text", "");
        cat.add(std::move(issue));
    }
    return cat;
}

void IssueCatalog::save_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write issue catalog: " + path.string());
    for (const auto& i : issues_) {
        json j;
        j["id"] = i.id;
        j["name"] = i.name;
        j["test_text"] = i.test_text;
        j["defence_text"] = i.defence_text;
        j["definition_text"] = i.definition_text;
        out << j.dump() << '\n';
    }
}

SourceMode source_mode_from_string(const std::string& s) {
    if (s == "none") return SourceMode::None;
    if (s == "legal") return SourceMode::Legal;
    if (s == "web") return SourceMode::Web;
    if (s == "legal_web") return SourceMode::LegalWeb;
    if (s == "random_legal") return SourceMode::RandomLegal;
    if (s == "oracle_legal") return SourceMode::OracleLegal;
    if (s == "oracle_web") return SourceMode::OracleWeb;
    if (s == "oracle_legal_web") return SourceMode::OracleLegalWeb;
    throw ConfigError("unknown source mode: " + s);
}

std::string source_mode_to_string(SourceMode m) {
    switch (m) {
        case SourceMode::None: return "none";
        case SourceMode::Legal: return "legal";
        case SourceMode::Web: return "web";
        case SourceMode::LegalWeb: return "legal_web";
        case SourceMode::RandomLegal: return "random_legal";
        case SourceMode::OracleLegal: return "oracle_legal";
        case SourceMode::OracleWeb: return "oracle_web";
        case SourceMode::OracleLegalWeb: return "oracle_legal_web";
    }
    return "?";
}

std::vector<std::string> validate_dataset(const std::vector<Sample>& samples,
                                          const IssueCatalog* catalog) {
    std::vector<std::string> violations;
    std::unordered_set<std::string> seen;
    std::unordered_set<std::string> reported_dup;
    for (const auto& s : samples) {
        if (!seen.insert(s.id).second && reported_dup.insert(s.id).second) {
            violations.push_back("duplicate id " + s.id);
        }
        if (s.text.empty()) violations.push_back(s.id + ": empty text");
        if (s.gold == Label::MisLC && s.legal_issues.empty()) {
            violations.push_back(s.id + ": MisLC without legal issues");
        }
        for (const auto& vote : s.checkworthy_votes) {
            if (vote < 0) {
                violations.push_back(s.id + ": negative checkworthy vote count");
                break;
            }
        }
        if (catalog != nullptr) {
            for (const auto& issue : s.legal_issues) {
                if (!catalog->contains(issue)) {
                    violations.push_back(s.id + ": unknown legal issue " + issue);
                }
            }
        }
    }
    return violations;
}

std::string sample_to_jsonl(const Sample& s) {
    json j;
    j["id"] = s.id;
    j["text"] = s.text;
    j["evidence_urls"] = s.evidence_urls;
    j["legal_issues"] = s.legal_issues;
    j["gold"] = s.gold.has_value() ? json(label_code(*s.gold)) : json(nullptr);
    j["checkworthy_votes"] = s.checkworthy_votes;
    j["flags"] = {{"no_claim", s.flags.no_claim}, {"defence", s.flags.defence}};
    return j.dump();
}

Sample sample_from_jsonl(const std::string& line) {
    const auto j = json::parse(line);
    Sample s;
    s.id = j.at("id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    s.evidence_urls = j.value("evidence_urls", std::vector<std::string>{});
    s.legal_issues = j.value("legal_issues", std::vector<std::string>{});
    if (j.contains("gold") && !j.at("gold").is_null()) {
        s.gold = label_from_code(j.at("gold").get<int>());
    }
    if (j.contains("checkworthy_votes")) {
        const auto& v = j.at("checkworthy_votes");
        for (size_t i = 0; i < 3 && i < v.size(); ++i) s.checkworthy_votes[i] = v[i].get<int64_t>();
    }
    if (j.contains("flags")) {
        s.flags.no_claim = j.at("flags").value("no_claim", false);
        s.flags.defence = j.at("flags").value("defence", false);
    }
    return s;
}

std::string annotation_to_jsonl(const AnnotationRecord& a) {
    json j;
    j["sample_id"] = a.sample_id;
    j["annotator_id"] = a.annotator_id;
    j["verdict"] = verdict_to_string(a.verdict);
    j["issues"] = a.issues;
    j["no_claim"] = a.no_claim;
    j["defence"] = a.defence;
    j["evidence_urls"] = a.evidence_urls;
    return j.dump();
}

AnnotationRecord annotation_from_jsonl(const std::string& line) {
    const auto j = json::parse(line);
    AnnotationRecord a;
    a.sample_id = j.at("sample_id").get<std::string>();
    a.annotator_id = j.at("annotator_id").get<std::string>();
    a.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    a.issues = j.value("issues", std::vector<std::string>{});
    a.no_claim = j.value("no_claim", false);
    a.defence = j.value("defence", false);
    a.evidence_urls = j.value("evidence_urls", std::vector<std::string>{});
    return a;
}

std::string prediction_to_jsonl(const Prediction& p) {
    json trace = json::array();
    for (const auto& e : p.retrieval_trace) {
        trace.push_back({{"position", e.position},
                         {"query", e.query},
                         {"source", e.source},
                         {"chunk_ids", e.chunk_ids},
                         {"web_result_count", e.web_result_count}});
    }
    json j;
    j["sample_id"] = p.sample_id;
    j["verdict"] = label_code(p.verdict);
    j["is_error"] = p.is_error;
    j["raw_text"] = p.raw_text;
    j["retrieval_trace"] = trace;
    j["prompt_sha256"] = p.prompt_sha256;
    return j.dump();
}

Prediction prediction_from_jsonl(const std::string& line) {
    const auto j = json::parse(line);
    Prediction p;
    p.sample_id = j.at("sample_id").get<std::string>();
    p.verdict = label_from_code(j.at("verdict").get<int>());
    p.is_error = j.at("is_error").get<bool>();
    if (p.is_error && p.verdict != Label::NonMisLC) {
        throw ProtocolError(p.sample_id + ": error prediction must carry label 0");
    }
    p.raw_text = j.value("raw_text", "");
    p.prompt_sha256 = j.value("prompt_sha256", "");
    if (j.contains("retrieval_trace")) {
        for (const auto& e : j.at("retrieval_trace")) {
            RetrievalEvent ev;
            ev.position = e.value("position", 0ULL);
            ev.query = e.value("query", "");
            ev.source = e.value("source", "");
            ev.chunk_ids = e.value("chunk_ids", std::vector<std::string>{});
            ev.web_result_count = e.value("web_result_count", 0ULL);
            p.retrieval_trace.push_back(std::move(ev));
        }
    }
    return p;
}

namespace {

template <typename T, typename Parse>
std::vector<T> read_jsonl(const std::filesystem::path& path, Parse parse) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::vector<T> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(parse(line));
    }
    return out;
}

template <typename T, typename Dump>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items, Dump dump) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (const auto& item : items) out << dump(item) << '\n';
}

}  // namespace

std::vector<Sample> read_samples(const std::filesystem::path& path) {
    return read_jsonl<Sample>(path, sample_from_jsonl);
}
void write_samples(const std::filesystem::path& path, const std::vector<Sample>& samples) {
    write_jsonl(path, samples, sample_to_jsonl);
}
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
    return read_jsonl<AnnotationRecord>(path, annotation_from_jsonl);
}
void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotationRecord>& annotations) {
    write_jsonl(path, annotations, annotation_to_jsonl);
}
std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
    return read_jsonl<Prediction>(path, prediction_from_jsonl);
}
void write_predictions(const std::filesystem::path& path,
                       const std::vector<Prediction>& predictions) {
    write_jsonl(path, predictions, prediction_to_jsonl);
}

}  // namespace mislc
