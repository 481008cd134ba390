#include "train/xeit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "common/errors.hpp"
#include "common/log.hpp"
#include "common/rng.hpp"

namespace xkde::train {

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.learning_rate < 0.0) throw ConfigError("learning rate must be non-negative");
    if (cfg.max_length == 0) throw ConfigError("max length must be positive");
    if (cfg.weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    if (cfg.epochs == 0) throw ConfigError("epochs must be positive");
    if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
    if (cfg.adam_beta1 <= 0.0 || cfg.adam_beta1 >= 1.0 || cfg.adam_beta2 <= 0.0 ||
        cfg.adam_beta2 >= 1.0) {
        throw ConfigError("adam betas must lie strictly inside (0, 1)");
    }
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
    if (cfg.warmup_steps > 0 && step < cfg.warmup_steps) {
        return cfg.learning_rate * static_cast<double>(step + 1) /
               static_cast<double>(cfg.warmup_steps);
    }
    const std::size_t decay_span =
        total_steps > cfg.warmup_steps ? total_steps - cfg.warmup_steps : 1;
    const std::size_t into = step >= cfg.warmup_steps ? step - cfg.warmup_steps : 0;
    const double progress =
        std::min(1.0, static_cast<double>(into) / static_cast<double>(decay_span));
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

AdamW::AdamW(std::size_t n_params, const TrainConfig& cfg)
    : beta1_(cfg.adam_beta1),
      beta2_(cfg.adam_beta2),
      eps_(cfg.adam_eps),
      weight_decay_(cfg.weight_decay),
      m_(n_params, 0.0),
      v_(n_params, 0.0) {}

void AdamW::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * params[i]);
    }
}

double xeit_loss(const lm::ScoringModel& model, const std::vector<FormattedExample>& batch) {
    if (batch.empty()) throw EmptyBatch("answer-masked loss over an empty batch");
    double total = 0.0;
    for (const auto& ex : batch) {
        const std::vector<double> lp = model.score_sequence(ex.prompt_tokens(),
                                                            ex.answer_labels());
        const double sum = std::accumulate(lp.begin(), lp.end(), 0.0);
        total += -sum / static_cast<double>(lp.size());
    }
    return total / static_cast<double>(batch.size());
}

double xeit_loss_grad(const lm::ToyLm& model, const std::vector<FormattedExample>& batch,
                      std::vector<double>& grad) {
    if (batch.empty()) throw EmptyBatch("answer-masked loss over an empty batch");
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    std::vector<double> weights;
    for (const auto& ex : batch) {
        weights.assign(ex.mask.size(), 0.0);
        const double scale = inv_batch / static_cast<double>(ex.answer_len);
        for (std::size_t t = 0; t < ex.mask.size(); ++t) weights[t] = ex.mask[t] * scale;
        total += model.weighted_nll_grad(ex.tokens, ex.labels, weights, grad);
    }
    return total;
}

TrainResult train_xeit(lm::ToyLm& model, const std::vector<FormattedExample>& dataset,
                       const TrainConfig& cfg) {
    validate_train_config(cfg);
    if (dataset.empty()) throw EmptyBatch("training needs a non-empty dataset");
    if (!cfg.checkpoint_dir.empty()) {
        std::filesystem::create_directories(cfg.checkpoint_dir);
    }

    const std::size_t steps_per_epoch = (dataset.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = steps_per_epoch * cfg.epochs;

    AdamW opt(model.n_params(), cfg);
    std::vector<double> grad(model.n_params());
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    double initial_loss = 0.0;
    std::size_t diverged_streak = 0;
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, epoch));
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < dataset.size(); start += cfg.batch_size) {
            std::vector<FormattedExample> batch;
            for (std::size_t i = start; i < std::min(start + cfg.batch_size, dataset.size());
                 ++i) {
                batch.push_back(dataset[order[i]]);
            }
            std::fill(grad.begin(), grad.end(), 0.0);
            const double loss = xeit_loss_grad(model, batch, grad);
            opt.step(model.params(), grad, lr_at(step, total_steps, cfg));
            ++step;
            result.curve.emplace_back(step, loss);

            if (step == 1) initial_loss = loss;
            // A non-finite loss can never recover, so it always counts as
            // beyond the 10x divergence threshold.
            const bool beyond = !std::isfinite(loss) || loss > 10.0 * initial_loss;
            diverged_streak = beyond ? diverged_streak + 1 : 0;
            if (diverged_streak >= 50) {
                throw DivergedLoss("loss " + std::to_string(loss) + " stayed above 10x the " +
                                   "initial " + std::to_string(initial_loss) +
                                   " for 50 consecutive steps");
            }
        }
        if (!cfg.checkpoint_dir.empty()) {
            model.save(cfg.checkpoint_dir + "/xeit-epoch-" + std::to_string(epoch + 1) + ".bin");
        }
    }
    if (!cfg.curve_path.empty()) write_curve(cfg.curve_path, result.curve);
    return result;
}

void write_curve(const std::string& path,
                 const std::vector<std::pair<std::size_t, double>>& curve) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write curve file: " + path);
    for (const auto& [step, loss] : curve) out << step << ' ' << loss << '\n';
    if (!out.good()) throw DataError("short write on curve file: " + path);
}

} // namespace xkde::train
