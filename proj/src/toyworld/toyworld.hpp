#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "align/toy_translator.hpp"
#include "core/types.hpp"
#include "lm/vocab.hpp"

namespace xkde::toyworld {

// Knobs for the generated benchmark world. Two "languages" share all
// content tokens (subjects, places, colors) and differ in function words
// and the answer-leading marker token, which keeps the vocabulary small
// enough for the toy model while making "answered in the right language" a
// one-token check.
struct WorldConfig {
    int n_cases = 200;

    // Fraction of cases whose cross-lingual supervised answers carry the
    // edit-language marker instead of the query-language one. Stage-1
    // training absorbs the mislabeling per case (the subject token keys
    // it), which leaves preference training measurable headroom on the
    // marker-rate metric; 0 disables the effect.
    double marker_noise = 0.35;

    // Fraction of with-edit training samples that show a second, unrelated
    // edit line, so prompts with several retrieved edits stay in
    // distribution at evaluation time.
    double distractor_fraction = 0.25;

    std::uint64_t seed = 7;
};

void validate_world_config(const WorldConfig& cfg);

// Everything a desk-scale end-to-end run needs: the benchmark cases, a
// pre-training corpus teaching the unedited facts, a four-quadrant
// instruction-tuning corpus teaching edit-following, the closed vocabulary
// covering all of it, and the cross-language token pairs for the noisy
// translation channel.
struct ToyWorld {
    std::vector<EvalCase> cases;
    std::vector<ParallelSample> pretrain;
    std::vector<ParallelSample> training;
    lm::ToyVocab vocab;
    std::vector<std::vector<std::string>> equivalences;
};

// Deterministic in cfg: equal configs produce byte-identical worlds.
ToyWorld make_world(const WorldConfig& cfg = {});

// The two languages the world is written in.
const std::vector<LanguageCode>& world_languages();

// Noisy-channel translator over the world's vocabulary with its
// cross-language equivalences registered.
align::ToyTranslator make_translator(const ToyWorld& world, double beta = 8.0);

// Equivalence-group persistence (one JSON array of string arrays), so a
// translator can be rebuilt from files alone.
void write_equivalences(const std::vector<std::vector<std::string>>& groups,
                        const std::string& path);
std::vector<std::vector<std::string>> read_equivalences(const std::string& path);

} // namespace xkde::toyworld
