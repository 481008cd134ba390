#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "align/translator.hpp"
#include "core/types.hpp"
#include "lm/scoring_model.hpp"
#include "lm/toy_lm.hpp"
#include "lm/vocab.hpp"

namespace xkde::train {

// One ranked preference example: the stage-1 prompt frame as context, the
// best- and worst-aligned sampled responses, and their alignment scores.
struct PreferencePair {
    std::string context; // edit block (source language) + query frame
    std::string y_w;     // preferred response text
    std::string y_l;     // dispreferred response text
    double alignment_w = 0.0;
    double alignment_l = 0.0;
};

// Throws on alignment_w <= alignment_l or y_w == y_l.
void validate_pair(const PreferencePair& pair);

// Stage-2 configuration. Defaults mirror the full-scale recipe; toy runs
// override the learning rate while keeping the shapes.
struct TlpoConfig {
    double lambda = 0.1;      // odds-ratio loss weight
    int k = 4;                // candidates sampled per query
    double temperature = 1.0; // candidate sampling temperature
    double learning_rate = 1e-6;
    std::size_t max_length = 1024;
    double weight_decay = 0.05;
    std::size_t warmup_steps = 100;
    std::size_t epochs = 1;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
    double pair_skip_delta = 1e-6; // min alignment gap to keep a pair
    int max_new_tokens = 16;       // candidate length cap
    bool include_monolingual = false;
    bool raw_logprob = false;          // alignment scores as raw sums
    std::string preference_method = "orpo"; // orpo | dpo | sft
    double dpo_beta = 0.1;
    std::string checkpoint_dir;
    std::string curve_path;
};

void validate_tlpo_config(const TlpoConfig& cfg);

// odds = p/(1-p) with p clamped to [1e-12, 1-1e-12]; *clamped reports
// whether the clamp fired.
double odds(double p, bool* clamped = nullptr);

// Components of the odds-ratio loss for one pair. Sequence probability is
// length-normalized: P(y|x) = exp(mean per-token log-prob) over the answer
// span (eos included).
struct OrLossParts {
    double loss = 0.0;           // -log sigmoid(log_odds_ratio)
    double log_odds_ratio = 0.0; // log odds(y_w) - log odds(y_l)
    double mean_lp_w = 0.0;      // mean per-token log-prob of y_w
    double mean_lp_l = 0.0;
    bool clamped_w = false;
    bool clamped_l = false;
};

OrLossParts or_loss_parts(const lm::ScoringModel& model, const lm::ToyVocab& vocab,
                          const PreferencePair& pair);
double or_loss(const lm::ScoringModel& model, const lm::ToyVocab& vocab,
               const PreferencePair& pair);

// Batch mean of [answer-masked NLL of y_w] + lambda * [odds-ratio loss].
// With lambda = 0 this is arithmetically identical to the stage-1 loss on
// the preferred responses. Throws EmptyBatch.
double orpo_loss(const lm::ScoringModel& model, const lm::ToyVocab& vocab,
                 const std::vector<PreferencePair>& batch, double lambda);

// Same value for a trainable toy model, accumulating gradients into grad.
double orpo_loss_grad(const lm::ToyLm& model, const lm::ToyVocab& vocab,
                      const std::vector<PreferencePair>& batch, double lambda,
                      std::vector<double>& grad);

// Standard direct-preference objective on raw (summed) sequence log-probs
// against a frozen reference model; no NLL term.
double dpo_loss(const lm::ScoringModel& model, const lm::ScoringModel& reference,
                const lm::ToyVocab& vocab, const PreferencePair& pair, double beta);
double dpo_loss(const lm::ScoringModel& model, const lm::ScoringModel& reference,
                const lm::ToyVocab& vocab, const std::vector<PreferencePair>& batch,
                double beta);
double dpo_loss_grad(const lm::ToyLm& model, const lm::ScoringModel& reference,
                     const lm::ToyVocab& vocab, const std::vector<PreferencePair>& batch,
                     double beta, std::vector<double>& grad);

// Builds ranked pairs from evaluation cases: for every source-language edit
// and target-language query, sample k candidates, score alignment against
// the target-language gold, keep (argmax, argmin) when the gap clears
// pair_skip_delta and the texts differ. Deterministic in (cases, config).
struct BuildPairsResult {
    std::vector<PreferencePair> pairs;
    std::size_t queries_seen = 0;
    std::size_t queries_skipped = 0;
};

BuildPairsResult build_pairs(const lm::ScoringModel& model, const lm::ToyVocab& vocab,
                             const std::vector<EvalCase>& cases,
                             const align::Translator& aligner, const TlpoConfig& cfg);

// Stage-2 loop over a pair set. Curve rows are (step, loss,
// mean_log_odds_ratio). Throws DivergedLoss / EmptyBatch as stage 1.
struct TlpoResult {
    std::vector<std::tuple<std::size_t, double, double>> curve;
};

TlpoResult train_tlpo(lm::ToyLm& model, const std::vector<PreferencePair>& pairs,
                      const lm::ToyVocab& vocab, const TlpoConfig& cfg);

// Line-record pair files with fields {context, y_w, y_l, alignment_w,
// alignment_l}, one JSON object per line.
void write_pairs(const std::string& path, const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> read_pairs(const std::string& path);

} // namespace xkde::train
