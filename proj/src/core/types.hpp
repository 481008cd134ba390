#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace xkde {

// Short lowercase language identifier ("en", "zh", ...). No fixed enumeration:
// any non-empty lowercase alphanumeric code is accepted.
class LanguageCode {
public:
    LanguageCode() = default;
    explicit LanguageCode(std::string code);

    const std::string& str() const { return code_; }
    bool empty() const { return code_.empty(); }

    auto operator<=>(const LanguageCode&) const = default;

private:
    std::string code_;
};

// One edit in one language: the question identifying the fact (prompt) and its
// new answer (target_new). Parallel translations of the same edit share an id.
struct EditDescriptor {
    std::string id;
    LanguageCode lang;
    std::string subject;
    std::string prompt;
    std::string target_new;
    std::optional<std::string> target_old;
    // Set when the subject does not occur verbatim in the prompt.
    bool subject_implicit = false;
};

struct Probe {
    std::string query;
    std::string answer;

    bool operator==(const Probe&) const = default;
};

// A full evaluation case: per-language descriptors plus the probe sets used by
// the four metrics (rephrases for generality, locality probes with pre-edit
// answers, portability probes with post-edit answers).
struct EvalCase {
    std::string id;
    std::map<LanguageCode, EditDescriptor> edit;
    std::map<LanguageCode, std::vector<std::string>> rephrases;
    std::map<LanguageCode, std::vector<Probe>> locality_probes;
    std::map<LanguageCode, std::vector<Probe>> portability_probes;
};

enum class SourceTag {
    zsre,
    halluedit,
    ripple,
    wikibio,
    mquake,
    counterfact,
    synthetic,
};

const char* to_string(SourceTag tag);
SourceTag parse_source_tag(const std::string& s);
std::vector<SourceTag> all_source_tags();

enum class Scope { in_scope, out_of_scope };

const char* to_string(Scope scope);
Scope parse_scope(const std::string& s);

// Judge-assigned quality of a generated sample; each score in [1,10].
// `overall` is recorded as emitted by the judge, never recomputed.
struct QualityScore {
    int syntactic = 0;
    int lexical = 0;
    int faithfulness = 0;
    int overall = 0;

    bool operator==(const QualityScore&) const = default;
};

// One training record. `edit_text` is the serialized descriptor and is present
// iff with_edit. `extra_json` carries unknown fields accepted in lenient
// parsing (a serialized JSON object; empty when there are none) so they
// survive a round trip.
struct ParallelSample {
    std::string id;
    SourceTag source_tag = SourceTag::synthetic;
    LanguageCode edit_lang;
    LanguageCode query_lang;
    Scope scope = Scope::in_scope;
    bool with_edit = false;
    std::optional<std::string> edit_text;
    std::string query;
    std::string answer;
    std::optional<QualityScore> quality;
    std::string extra_json;

    bool monolingual() const { return edit_lang == query_lang; }
};

// ---- pure validation (no I/O) ----

void validate_language(const LanguageCode& lang);
void validate_descriptor(const EditDescriptor& edit);
void validate_case(const EvalCase& c);
void validate_sample(const ParallelSample& s);
void validate_quality(const QualityScore& q);

// Serialization of a descriptor into the single-line edit text used both in
// training records and in retrieval prompts: "prompt target_new", inserting a
// '?' when the prompt lacks terminal punctuation.
std::string serialize_edit(const EditDescriptor& edit);

} // namespace xkde
