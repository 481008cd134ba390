#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lm/scoring_model.hpp"
#include "lm/toy_lm.hpp"
#include "train/format.hpp"

namespace xkde::train {

// Stage-1 instruction-tuning configuration. The shipped defaults mirror the
// full-scale recipe; toy runs override the learning rate (and epochs) while
// keeping the shapes: AdamW, cosine decay after linear warmup, answer-only
// loss.
struct TrainConfig {
    double learning_rate = 5e-6;
    std::size_t max_length = 2560;
    double weight_decay = 0.1;
    std::size_t warmup_steps = 100;
    std::size_t epochs = 1;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::string checkpoint_dir; // per-epoch checkpoints when non-empty
    std::string curve_path;     // two-column (step, loss) file when non-empty
};

void validate_train_config(const TrainConfig& cfg);

// Learning-rate schedule: linear warmup to the configured rate, then cosine
// decay to zero over the remaining steps. step is 0-based.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

// Decoupled-weight-decay Adam over a flat parameter vector.
class AdamW {
public:
    AdamW(std::size_t n_params, const TrainConfig& cfg);
    // params -= lr * (mhat/(sqrt(vhat)+eps) + wd * params), element-wise.
    void step(std::vector<double>& params, const std::vector<double>& grad, double lr);

private:
    double beta1_, beta2_, eps_, weight_decay_;
    std::size_t t_ = 0;
    std::vector<double> m_, v_;
};

// Answer-masked next-token loss: per example the mean negative log-prob over
// the m answer tokens, then the batch mean. Works against any ScoringModel.
// Throws EmptyBatch.
double xeit_loss(const lm::ScoringModel& model, const std::vector<FormattedExample>& batch);

// Same value for a trainable toy model, accumulating gradients (+=) into
// grad (return value equals xeit_loss to rounding of the shared kernels).
double xeit_loss_grad(const lm::ToyLm& model, const std::vector<FormattedExample>& batch,
                      std::vector<double>& grad);

struct TrainResult {
    std::vector<std::pair<std::size_t, double>> curve; // (1-based step, batch loss)
};

// Runs the stage-1 loop in place on the model. Deterministic in (dataset
// order, config). Throws DivergedLoss when the loss exceeds 10x the initial
// value for 50 consecutive steps; EmptyBatch on an empty dataset.
TrainResult train_xeit(lm::ToyLm& model, const std::vector<FormattedExample>& dataset,
                       const TrainConfig& cfg);

// Two-column "step loss" text file (one row per step).
void write_curve(const std::string& path,
                 const std::vector<std::pair<std::size_t, double>>& curve);

} // namespace xkde::train
