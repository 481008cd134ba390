#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/types.hpp"
#include "metrics/report.hpp"

namespace xkde::metrics {

// What the metrics need from a model: a deterministic greedy decode of the
// answer to a query, as a token list. Conditioning on edits (retrieval memory,
// prompt formatting, decode budget) lives behind this interface.
class Decoder {
public:
    virtual ~Decoder() = default;
    virtual std::vector<std::string> decode(const std::string& query) const = 0;
    virtual bool concurrent_read_safe() const { return false; }
};

// The edited model for a given case. Single-edit evaluation hands every case
// its own freshly conditioned model; batch/sequential evaluation returns one
// shared model for all cases in the batch.
using EditedModelProvider =
    std::function<std::shared_ptr<const Decoder>(const EvalCase&)>;

struct ScoreOptions {
    // When set, the per-query score is 1.0 only on a full-token match
    // instead of positional accuracy.
    bool exact_match = false;
    // Worker threads for scoring cases; >1 requires concurrent-read-safe
    // decoders. Results are order-deterministic either way.
    std::size_t threads = 1;
};

// Positional token accuracy against gold: fraction of gold positions where
// predicted matches; predictions shorter than gold count missing positions
// as mismatches. Throws EmptyGold on an empty gold.
double token_match(const std::vector<std::string>& predicted,
                   const std::vector<std::string>& gold);

// Accuracy on the edit question itself: decode x_e in the test language and
// match against y_e. With edit_lang == test_lang this is the monolingual
// form; otherwise the edit conditioning is in edit_lang and the query in
// test_lang (one code path covers both).
MetricValue reliability(const EditedModelProvider& edited, const std::vector<EvalCase>& cases,
                        const LanguageCode& edit_lang, const LanguageCode& test_lang,
                        const ScoreOptions& opts = {});

// Accuracy over rephrased queries; mean within case, then across cases.
// Cases with no rephrases in the test language are skipped (n_cases reflects
// that); AllCasesSkipped if every case lacks them.
MetricValue generality(const EditedModelProvider& edited, const std::vector<EvalCase>& cases,
                       const LanguageCode& edit_lang, const LanguageCode& test_lang,
                       const ScoreOptions& opts = {});

// Agreement with the unedited model on out-of-scope probes: token match of
// the edited decode against the base decode (both models may be wrong, what
// matters is that the edit did not disturb the behavior).
MetricValue locality(const EditedModelProvider& edited, const Decoder& base,
                     const std::vector<EvalCase>& cases, const LanguageCode& edit_lang,
                     const LanguageCode& test_lang, const ScoreOptions& opts = {});

// Accuracy on related inferential probes whose gold answers reflect the edit.
MetricValue portability(const EditedModelProvider& edited, const std::vector<EvalCase>& cases,
                        const LanguageCode& edit_lang, const LanguageCode& test_lang,
                        const ScoreOptions& opts = {});

// Tokenization used for gold answers in all metrics (same toy rule as stats).
std::vector<std::string> gold_tokens(const std::string& text);

} // namespace xkde::metrics
