#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mislc {

// Integer codes are part of the file contract and never change.
enum class Label : int { NonMisLC = 0, Unclear = 1, MisLC = 2 };

constexpr int label_code(Label l) { return static_cast<int>(l); }
Label label_from_code(int code);
const char* label_name(Label l);

enum class Verdict3 : int { No = 0, Unclear = 1, Yes = 2 };
Verdict3 verdict_from_string(const std::string& s);
std::string verdict_to_string(Verdict3 v);

struct LegalIssue {
    std::string id;
    std::string name;
    std::string test_text;
    std::string defence_text;    // may be empty
    std::string definition_text; // consumed by the oracle retriever
};

// Catalog keeps insertion order; lookups are by id.
class IssueCatalog {
public:
    void add(LegalIssue issue);
    bool contains(const std::string& id) const;
    const LegalIssue& get(const std::string& id) const;  // UnknownIssueIdError
    const std::vector<LegalIssue>& issues() const { return issues_; }
    size_t size() const { return issues_.size(); }

    static IssueCatalog load_jsonl(const std::filesystem::path& path);
    void save_jsonl(const std::filesystem::path& path) const;

private:
    std::vector<LegalIssue> issues_;
};

struct SampleFlags {
    bool no_claim = false;
    bool defence = false;
};

struct Sample {
    std::string id;
    std::string text;
    std::vector<std::string> evidence_urls;
    std::vector<std::string> legal_issues;
    std::optional<Label> gold;
    std::array<int64_t, 3> checkworthy_votes{0, 0, 0};  // checkworthy, not, invalid/no-claim
    SampleFlags flags;
};

struct AnnotationRecord {
    std::string sample_id;
    std::string annotator_id;
    Verdict3 verdict = Verdict3::Unclear;
    std::vector<std::string> issues;
    bool no_claim = false;
    bool defence = false;
    std::vector<std::string> evidence_urls;
};

struct RetrievalEvent {
    uint64_t position = 0;  // token index (stride methods) or sentence index
    std::string query;
    std::string source;  // "legal", "web", or "both"
    std::vector<std::string> chunk_ids;
    uint64_t web_result_count = 0;
};

struct Prediction {
    std::string sample_id;
    Label verdict = Label::NonMisLC;
    bool is_error = false;  // is_error implies verdict == NonMisLC
    std::string raw_text;
    std::vector<RetrievalEvent> retrieval_trace;
    std::string prompt_sha256;
};

enum class SourceMode {
    None,
    Legal,
    Web,
    LegalWeb,
    RandomLegal,
    OracleLegal,
    OracleWeb,
    OracleLegalWeb,
};
SourceMode source_mode_from_string(const std::string& s);
std::string source_mode_to_string(SourceMode m);

struct RetrievedContext {
    std::vector<std::pair<std::string, std::string>> legal_chunks;  // (chunk_id, text)
    std::vector<std::string> web_snippets;
    SourceMode source_mode = SourceMode::None;
};

// Returns every invariant violation ("duplicate id X", "X: MisLC without
// legal issues", ...); an empty list means the dataset is valid. Unknown
// issue ids are reported only when a catalog is supplied.
std::vector<std::string> validate_dataset(const std::vector<Sample>& samples,
                                          const IssueCatalog* catalog = nullptr);

// JSONL codecs. Field names are the file contract; see README.
std::string sample_to_jsonl(const Sample& s);
Sample sample_from_jsonl(const std::string& line);
std::string annotation_to_jsonl(const AnnotationRecord& a);
AnnotationRecord annotation_from_jsonl(const std::string& line);
std::string prediction_to_jsonl(const Prediction& p);
Prediction prediction_from_jsonl(const std::string& line);

std::vector<Sample> read_samples(const std::filesystem::path& path);
void write_samples(const std::filesystem::path& path, const std::vector<Sample>& samples);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotationRecord>& annotations);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path,
                       const std::vector<Prediction>& predictions);

}  // namespace mislc
