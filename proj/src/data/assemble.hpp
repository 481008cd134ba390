#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/stats.hpp"
#include "core/types.hpp"
#include "data/chat_client.hpp"
#include "data/ops.hpp"

namespace xkde::data {

// Samples wanted per quadrant for one (source tag, language) row.
struct QuadrantQuota {
    std::size_t in_scope_with_edit = 0;
    std::size_t in_scope_without_edit = 0;
    std::size_t out_scope_with_edit = 0;
    std::size_t out_scope_without_edit = 0;
};

// Each flag removes exactly one section of the dataset, leaving the rest
// byte-identical (generation is keyed per slot, not by a running counter).
struct AblationDrops {
    bool mono = false;            // monolingual slots (even parity)
    bool cross = false;           // cross-lingual slots (odd parity)
    bool in_scope = false;        // both in-scope quadrants
    bool out_of_scope = false;    // both out-of-scope quadrants
    bool edit_descriptor = false; // the with-edit quadrants
    bool long_text = false;       // long-text sources (mquake, counterfact)
};

struct BuildConfig {
    std::map<SourceTag, std::map<LanguageCode, QuadrantQuota>> quotas;
    int qc_threshold = 7; // minimum overall score, inclusive
    LanguageCode source_lang{"en"};
    std::vector<LanguageCode> target_langs{LanguageCode("en"), LanguageCode("zh")};
    AblationDrops drops;
    int regen_budget = 3; // generation attempts per in-scope slot
    std::uint64_t seed = 0;
    std::size_t max_in_flight = 8;
    OpsOptions ops;
};

// Published full-scale per-quadrant counts divided by `scale` (half-even,
// floored at 1): zsre 20000, halluedit 2000, ripple 2250, wikibio 250,
// mquake 4000, counterfact 7500 per language per quadrant.
BuildConfig default_build_config(std::size_t scale = 1000);

void validate_build_config(const BuildConfig& cfg);

struct BuildStats {
    DatasetStats data;              // per (tag, lang) quadrant counts
    std::size_t qc_regenerated = 0; // rejected attempts that triggered a redraw
    std::size_t qc_dropped = 0;     // slots dropped after the retry budget
    std::size_t shortfall = 0;      // slots unfillable from the given cases
    ChatStats service;              // client counters after the run
};

struct BuildResult {
    std::vector<ParallelSample> samples; // sorted by id
    BuildStats stats;
};

// Runs the full generation pipeline over the quota grid. Within one (tag,
// lang, quadrant) row, even slots are monolingual and odd slots are
// cross-lingual (edit descriptor in the source language). Queries and
// answers are generated in the source language and translated into the row
// language. In-scope slots pass the judge + score gate (overall >=
// qc_threshold) with regen_budget fresh draws before being dropped.
// Deterministic in (config, cases, cache state) regardless of concurrency.
BuildResult assemble(const BuildConfig& cfg, const std::vector<EvalCase>& cases,
                     ChatClient& client, const PromptLibrary& prompts);

} // namespace xkde::data
