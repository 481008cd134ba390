#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "align/translator.hpp"
#include "core/types.hpp"
#include "data/assemble.hpp"
#include "lm/edit_memory.hpp"
#include "lm/scoring_model.hpp"
#include "lm/vocab.hpp"
#include "metrics/metrics.hpp"
#include "metrics/report.hpp"
#include "train/tlpo.hpp"
#include "train/xeit.hpp"

namespace xkde::harness {

// ---- run configuration -----------------------------------------------------

enum class RunMode { single, batch, sequential };

const char* to_string(RunMode mode);
RunMode parse_run_mode(const std::string& s); // ConfigError on unknown names

// Where the evaluated model comes from: a toy checkpoint + vocabulary on
// disk, or (endpoint set) a remote chat service evaluated through the same
// prompt frame. Remote models are evaluation-only.
struct ModelSpec {
    std::string checkpoint;
    std::string vocab;
    std::string endpoint;
    std::string name; // remote model identifier
};

// Which training stages an ablation variant runs before evaluating.
struct StageFlags {
    bool xeit = true;
    bool tlpo = true;

    bool operator==(const StageFlags&) const = default;
};

struct RunConfig {
    RunMode mode = RunMode::single;
    std::vector<std::size_t> batch_sizes{1, 10, 100, 1000};
    std::vector<std::size_t> stream_sizes{1, 10, 100, 500, 1000};
    LanguageCode edit_lang{"en"};
    std::vector<LanguageCode> test_langs{LanguageCode("en"), LanguageCode("zh")};
    ModelSpec model;
    std::size_t top_k = 1; // edits retrieved into the prompt
    StageFlags stages;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::string cases;       // evaluation-case file
    bool exact_match = false;
    std::size_t threads = 1;
    int max_new_tokens = 16; // decode budget per query
};

// Size lists must be non-empty, positive and strictly ascending; languages
// non-empty; top_k / threads / max_new_tokens positive. Throws ConfigError.
void validate_run_config(const RunConfig& cfg);

// ---- model surface ----------------------------------------------------------

// The harness sees a model as "give me the decoder view for this memory";
// a null memory is the plain no-edit frame used as the locality reference.
using DecoderFactory = std::function<std::shared_ptr<const metrics::Decoder>(
    std::shared_ptr<const lm::EditMemory>)>;

DecoderFactory toy_decoder_factory(std::shared_ptr<const lm::ScoringModel> model,
                                   std::shared_ptr<const lm::ToyVocab> vocab,
                                   std::size_t top_k, int max_new_tokens);

// ---- evaluation runs ---------------------------------------------------------

// Each case evaluated in isolation: fresh memory, the single edit in
// edit_lang, all four metrics in every test language.
metrics::ReportTable run_single(const RunConfig& cfg, const std::vector<EvalCase>& cases,
                                const DecoderFactory& factory);

struct SizedRun {
    std::size_t requested = 0; // configured size
    std::size_t effective = 0; // after capping at the case count
    metrics::ReportTable table;
};

// For every batch size b the cases are taken in order in groups of b; each
// group shares one memory holding that group's edits, and every inserted
// case is evaluated against it. b = 1 therefore reproduces run_single
// exactly. Sizes beyond the case count are capped with a warning.
std::vector<SizedRun> run_batch(const RunConfig& cfg, const std::vector<EvalCase>& cases,
                                const DecoderFactory& factory);

// For every stream size n the first n edits are inserted one at a time into
// a single never-cleared memory; all n cases are then evaluated against it.
std::vector<SizedRun> run_sequential(const RunConfig& cfg, const std::vector<EvalCase>& cases,
                                     const DecoderFactory& factory);

// ---- ablation runs -----------------------------------------------------------

// Removes the sections selected by the flags from an already-built dataset
// (same sections the builder's drop flags suppress at generation time).
std::vector<ParallelSample> apply_drops(const std::vector<ParallelSample>& samples,
                                        const data::AblationDrops& drops);

struct AblationVariant {
    std::string name;
    StageFlags stages;
    data::AblationDrops drops;
};

// Everything an ablation needs to retrain from scratch: the untuned base
// model, the stage-1 dataset, the evaluation cases (also the source of
// stage-2 preference pairs), and the alignment scorer.
struct AblationInputs {
    lm::ToyLm base;
    std::shared_ptr<const lm::ToyVocab> vocab;
    std::vector<ParallelSample> training;
    std::vector<EvalCase> cases;
    std::shared_ptr<const align::Translator> aligner;
    train::TrainConfig train;
    train::TlpoConfig tlpo;
};

struct AblationRun {
    AblationVariant variant;
    metrics::ReportTable table;
    metrics::ReportTable delta; // variant minus the full configuration
};

// Trains and evaluates the full configuration once, then every listed
// variant; each result carries a cell-wise delta against the full run (the
// full configuration's own delta is all zeros).
std::vector<AblationRun> run_ablation(const RunConfig& cfg, const AblationInputs& inputs,
                                      const std::vector<AblationVariant>& variants);

// Cell-wise difference a - b; both tables must have identical keys.
metrics::ReportTable table_delta(const metrics::ReportTable& a, const metrics::ReportTable& b);

} // namespace xkde::harness
