#include "train/tlpo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "align/align.hpp"
#include "common/errors.hpp"
#include "common/log.hpp"
#include "common/rng.hpp"
#include "common/text.hpp"
#include "lm/edit_memory.hpp"
#include "train/xeit.hpp"

namespace xkde::train {

namespace {

constexpr double kProbEps = 1e-12;

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// log(1 + e^z) without overflow.
double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

std::vector<int> answer_tokens(const lm::ToyVocab& vocab, const std::string& text) {
    std::vector<int> ids = vocab.encode(text);
    ids.push_back(lm::ToyVocab::kEos);
    return ids;
}

double mean_logprob(const lm::ScoringModel& model, const std::vector<int>& ctx,
                    const std::vector<int>& answer) {
    const std::vector<double> lp = model.score_sequence(ctx, answer);
    return std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
}

double sum_logprob(const lm::ScoringModel& model, const std::vector<int>& ctx,
                   const std::vector<int>& answer) {
    const std::vector<double> lp = model.score_sequence(ctx, answer);
    return std::accumulate(lp.begin(), lp.end(), 0.0);
}

} // namespace

void validate_pair(const PreferencePair& pair) {
    if (!(pair.alignment_w > pair.alignment_l)) {
        throw DataError("preference pair needs alignment_w strictly above alignment_l");
    }
    if (pair.y_w == pair.y_l) {
        throw DataError("preference pair needs distinct preferred/dispreferred responses");
    }
}

void validate_tlpo_config(const TlpoConfig& cfg) {
    if (cfg.lambda < 0.0) throw ConfigError("lambda must be non-negative");
    if (cfg.k < 2) throw ConfigError("at least two candidates per query are required");
    if (cfg.temperature <= 0.0) throw ConfigError("sampling temperature must be positive");
    if (cfg.learning_rate < 0.0) throw ConfigError("learning rate must be non-negative");
    if (cfg.max_length == 0) throw ConfigError("max length must be positive");
    if (cfg.weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    if (cfg.epochs == 0 || cfg.batch_size == 0) {
        throw ConfigError("epochs and batch size must be positive");
    }
    if (cfg.pair_skip_delta < 0.0) throw ConfigError("pair skip delta must be non-negative");
    if (cfg.max_new_tokens <= 0) throw ConfigError("candidate length cap must be positive");
    if (cfg.preference_method != "orpo" && cfg.preference_method != "dpo" &&
        cfg.preference_method != "sft") {
        throw ConfigError("preference method must be one of orpo, dpo, sft");
    }
    if (cfg.dpo_beta < 0.0) throw ConfigError("dpo beta must be non-negative");
}

double odds(double p, bool* clamped) {
    bool fired = false;
    if (p < kProbEps) {
        p = kProbEps;
        fired = true;
    } else if (p > 1.0 - kProbEps) {
        p = 1.0 - kProbEps;
        fired = true;
    }
    if (clamped) *clamped = fired;
    return p / (1.0 - p);
}

OrLossParts or_loss_parts(const lm::ScoringModel& model, const lm::ToyVocab& vocab,
                          const PreferencePair& pair) {
    const std::vector<int> ctx = vocab.encode(pair.context);
    OrLossParts parts;
    parts.mean_lp_w = mean_logprob(model, ctx, answer_tokens(vocab, pair.y_w));
    parts.mean_lp_l = mean_logprob(model, ctx, answer_tokens(vocab, pair.y_l));
    const double odds_w = odds(std::exp(parts.mean_lp_w), &parts.clamped_w);
    const double odds_l = odds(std::exp(parts.mean_lp_l), &parts.clamped_l);
    parts.log_odds_ratio = std::log(odds_w) - std::log(odds_l);
    parts.loss = softplus(-parts.log_odds_ratio); // -log sigmoid(x)
    return parts;
}

double or_loss(const lm::ScoringModel& model, const lm::ToyVocab& vocab,
               const PreferencePair& pair) {
    return or_loss_parts(model, vocab, pair).loss;
}

double orpo_loss(const lm::ScoringModel& model, const lm::ToyVocab& vocab,
                 const std::vector<PreferencePair>& batch, double lambda) {
    if (batch.empty()) throw EmptyBatch("preference loss over an empty batch");
    double total = 0.0;
    for (const auto& pair : batch) {
        const std::vector<int> ctx = vocab.encode(pair.context);
        const std::vector<double> lp = model.score_sequence(ctx, answer_tokens(vocab, pair.y_w));
        const double sum = std::accumulate(lp.begin(), lp.end(), 0.0);
        const double nll = -sum / static_cast<double>(lp.size());
        total += nll + lambda * or_loss(model, vocab, pair);
    }
    return total / static_cast<double>(batch.size());
}

double orpo_loss_grad(const lm::ToyLm& model, const lm::ToyVocab& vocab,
                      const std::vector<PreferencePair>& batch, double lambda,
                      std::vector<double>& grad) {
    if (batch.empty()) throw EmptyBatch("preference loss over an empty batch");
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;

    for (const auto& pair : batch) {
        const std::vector<int> ctx = vocab.encode(pair.context);
        const std::vector<int> yw = answer_tokens(vocab, pair.y_w);
        const std::vector<int> yl = answer_tokens(vocab, pair.y_l);
        const double m_w = static_cast<double>(yw.size());
        const double m_l = static_cast<double>(yl.size());

        const OrLossParts parts = or_loss_parts(model, vocab, pair);
        total += -parts.mean_lp_w + lambda * parts.loss;

        // d loss / d log_odds_ratio; the ratio rises when y_w gains mass.
        const double g = sigmoid(parts.log_odds_ratio) - 1.0;
        const double p_w = std::exp(parts.mean_lp_w);
        const double p_l = std::exp(parts.mean_lp_l);

        // Per-token weights for the shared weighted-NLL kernel. The clamp in
        // odds() has zero derivative, so a clamped sequence contributes no
        // odds-ratio gradient.
        double w_w = inv_batch / m_w; // preferred-response NLL term
        if (!parts.clamped_w) w_w -= lambda * g * inv_batch / (m_w * (1.0 - p_w));
        double w_l = 0.0;
        if (!parts.clamped_l) w_l = lambda * g * inv_batch / (m_l * (1.0 - p_l));

        std::vector<int> seq = ctx;
        seq.insert(seq.end(), yw.begin(), yw.end());
        std::vector<double> weights(seq.size(), 0.0);
        std::fill(weights.begin() + static_cast<std::ptrdiff_t>(ctx.size()), weights.end(), w_w);
        model.weighted_nll_grad(seq, seq, weights, grad);

        if (w_l != 0.0) {
            std::vector<int> seq_l = ctx;
            seq_l.insert(seq_l.end(), yl.begin(), yl.end());
            std::vector<double> weights_l(seq_l.size(), 0.0);
            std::fill(weights_l.begin() + static_cast<std::ptrdiff_t>(ctx.size()),
                      weights_l.end(), w_l);
            model.weighted_nll_grad(seq_l, seq_l, weights_l, grad);
        }
    }
    return total / static_cast<double>(batch.size());
}

double dpo_loss(const lm::ScoringModel& model, const lm::ScoringModel& reference,
                const lm::ToyVocab& vocab, const PreferencePair& pair, double beta) {
    const std::vector<int> ctx = vocab.encode(pair.context);
    const std::vector<int> yw = answer_tokens(vocab, pair.y_w);
    const std::vector<int> yl = answer_tokens(vocab, pair.y_l);
    const double h = (sum_logprob(model, ctx, yw) - sum_logprob(reference, ctx, yw)) -
                     (sum_logprob(model, ctx, yl) - sum_logprob(reference, ctx, yl));
    return softplus(-beta * h);
}

double dpo_loss(const lm::ScoringModel& model, const lm::ScoringModel& reference,
                const lm::ToyVocab& vocab, const std::vector<PreferencePair>& batch,
                double beta) {
    if (batch.empty()) throw EmptyBatch("preference loss over an empty batch");
    double total = 0.0;
    for (const auto& pair : batch) total += dpo_loss(model, reference, vocab, pair, beta);
    return total / static_cast<double>(batch.size());
}

double dpo_loss_grad(const lm::ToyLm& model, const lm::ScoringModel& reference,
                     const lm::ToyVocab& vocab, const std::vector<PreferencePair>& batch,
                     double beta, std::vector<double>& grad) {
    if (batch.empty()) throw EmptyBatch("preference loss over an empty batch");
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const auto& pair : batch) {
        const std::vector<int> ctx = vocab.encode(pair.context);
        const std::vector<int> yw = answer_tokens(vocab, pair.y_w);
        const std::vector<int> yl = answer_tokens(vocab, pair.y_l);
        const double h = (sum_logprob(model, ctx, yw) - sum_logprob(reference, ctx, yw)) -
                         (sum_logprob(model, ctx, yl) - sum_logprob(reference, ctx, yl));
        total += softplus(-beta * h);
        const double w = beta * sigmoid(-beta * h) * inv_batch;

        std::vector<int> seq = ctx;
        seq.insert(seq.end(), yw.begin(), yw.end());
        std::vector<double> weights(seq.size(), 0.0);
        std::fill(weights.begin() + static_cast<std::ptrdiff_t>(ctx.size()), weights.end(), w);
        model.weighted_nll_grad(seq, seq, weights, grad);

        std::vector<int> seq_l = ctx;
        seq_l.insert(seq_l.end(), yl.begin(), yl.end());
        std::vector<double> weights_l(seq_l.size(), 0.0);
        std::fill(weights_l.begin() + static_cast<std::ptrdiff_t>(ctx.size()), weights_l.end(),
                  -w);
        model.weighted_nll_grad(seq_l, seq_l, weights_l, grad);
    }
    return total * inv_batch;
}

BuildPairsResult build_pairs(const lm::ScoringModel& model, const lm::ToyVocab& vocab,
                             const std::vector<EvalCase>& cases,
                             const align::Translator& aligner, const TlpoConfig& cfg) {
    validate_tlpo_config(cfg);
    BuildPairsResult result;
    std::uint64_t query_index = 0;

    for (const auto& c : cases) {
        validate_case(c);
        for (const auto& [src, src_edit] : c.edit) {
            for (const auto& [tgt, tgt_edit] : c.edit) {
                if (!cfg.include_monolingual && src == tgt) continue;
                std::vector<std::string> queries = {tgt_edit.prompt};
                const auto re = c.rephrases.find(tgt);
                if (re != c.rephrases.end()) {
                    queries.insert(queries.end(), re->second.begin(), re->second.end());
                }
                const std::string& gold = tgt_edit.target_new;

                for (const auto& query : queries) {
                    const std::uint64_t seed = derive_seed(cfg.seed, query_index++);
                    ++result.queries_seen;

                    const std::string context =
                        lm::edit_block(serialize_edit(src_edit)) + lm::query_frame(query);
                    const std::vector<int> ctx = vocab.encode(context);
                    if (static_cast<int>(ctx.size()) + cfg.max_new_tokens >
                        model.context_limit()) {
                        log_warn("skipping over-long preference context for case " + c.id);
                        ++result.queries_skipped;
                        continue;
                    }

                    const auto candidates =
                        model.sample(ctx, cfg.max_new_tokens, cfg.temperature, cfg.k, seed);
                    std::vector<std::string> texts;
                    texts.reserve(candidates.size());
                    for (const auto& ids : candidates) texts.push_back(vocab.decode(ids));

                    std::vector<double> scores(texts.size());
                    for (std::size_t i = 0; i < texts.size(); ++i) {
                        scores[i] = align::alignment_score(aligner, texts[i], gold, tgt,
                                                           cfg.raw_logprob)
                                        .value;
                    }
                    const auto order =
                        align::rank(texts, gold, aligner, tgt, cfg.raw_logprob);
                    const std::size_t best = order.front();
                    const std::size_t worst = order.back();

                    if (scores[best] - scores[worst] < cfg.pair_skip_delta ||
                        texts[best] == texts[worst]) {
                        ++result.queries_skipped;
                        continue;
                    }
                    PreferencePair pair;
                    pair.context = context;
                    pair.y_w = texts[best];
                    pair.y_l = texts[worst];
                    pair.alignment_w = scores[best];
                    pair.alignment_l = scores[worst];
                    validate_pair(pair);
                    result.pairs.push_back(std::move(pair));
                }
            }
        }
    }
    if (result.queries_skipped > 0) {
        log_info("preference building skipped " + std::to_string(result.queries_skipped) +
                 " of " + std::to_string(result.queries_seen) + " queries");
    }
    return result;
}

TlpoResult train_tlpo(lm::ToyLm& model, const std::vector<PreferencePair>& pairs,
                      const lm::ToyVocab& vocab, const TlpoConfig& cfg) {
    validate_tlpo_config(cfg);
    if (pairs.empty()) throw EmptyBatch("stage-2 training needs a non-empty pair set");
    for (const auto& p : pairs) validate_pair(p);
    if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

    // The reference model for the dpo variant is the incoming (post-stage-1)
    // model, frozen.
    const lm::ToyLm reference = model;

    TrainConfig opt_cfg;
    opt_cfg.learning_rate = cfg.learning_rate;
    opt_cfg.weight_decay = cfg.weight_decay;
    opt_cfg.warmup_steps = cfg.warmup_steps;
    AdamW opt(model.n_params(), opt_cfg);

    const std::size_t steps_per_epoch = (pairs.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = steps_per_epoch * cfg.epochs;

    std::vector<double> grad(model.n_params());
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    TlpoResult result;
    double initial_loss = 0.0;
    std::size_t diverged_streak = 0;
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, epoch));
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
            std::vector<PreferencePair> batch;
            for (std::size_t i = start; i < std::min(start + cfg.batch_size, pairs.size());
                 ++i) {
                batch.push_back(pairs[order[i]]);
            }
            std::fill(grad.begin(), grad.end(), 0.0);
            double loss = 0.0;
            if (cfg.preference_method == "dpo") {
                loss = dpo_loss_grad(model, reference, vocab, batch, cfg.dpo_beta, grad);
            } else {
                const double lambda = cfg.preference_method == "sft" ? 0.0 : cfg.lambda;
                loss = orpo_loss_grad(model, vocab, batch, lambda, grad);
            }
            // Curve diagnostics: the batch-mean log odds ratio.
            double mean_ratio = 0.0;
            for (const auto& pair : batch) {
                mean_ratio += or_loss_parts(model, vocab, pair).log_odds_ratio;
            }
            mean_ratio /= static_cast<double>(batch.size());

            opt.step(model.params(), grad, lr_at(step, total_steps, opt_cfg));
            ++step;
            result.curve.emplace_back(step, loss, mean_ratio);

            if (step == 1) initial_loss = loss;
            const bool beyond = !std::isfinite(loss) || loss > 10.0 * initial_loss;
            diverged_streak = beyond ? diverged_streak + 1 : 0;
            if (diverged_streak >= 50) {
                throw DivergedLoss("stage-2 loss " + std::to_string(loss) +
                                   " stayed above 10x the initial " +
                                   std::to_string(initial_loss) + " for 50 consecutive steps");
            }
        }
        if (!cfg.checkpoint_dir.empty()) {
            model.save(cfg.checkpoint_dir + "/tlpo-epoch-" + std::to_string(epoch + 1) + ".bin");
        }
    }

    if (!cfg.curve_path.empty()) {
        std::ofstream out(cfg.curve_path, std::ios::trunc);
        if (!out) throw DataError("cannot write curve file: " + cfg.curve_path);
        for (const auto& [s, loss, ratio] : result.curve) {
            out << s << ' ' << loss << ' ' << ratio << '\n';
        }
        if (!out.good()) throw DataError("short write on curve file: " + cfg.curve_path);
    }
    return result;
}

void write_pairs(const std::string& path, const std::vector<PreferencePair>& pairs) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write pair file: " + path);
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["context"] = p.context;
        j["y_w"] = p.y_w;
        j["y_l"] = p.y_l;
        j["alignment_w"] = p.alignment_w;
        j["alignment_l"] = p.alignment_l;
        out << j.dump() << '\n';
    }
    if (!out.good()) throw DataError("short write on pair file: " + path);
}

std::vector<PreferencePair> read_pairs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read pair file: " + path);
    std::vector<PreferencePair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        for (const auto& field : {"context", "y_w", "y_l", "alignment_w", "alignment_l"}) {
            if (!j.contains(field)) {
                throw SchemaViolation(field, path + ":" + std::to_string(line_no) + ": missing");
            }
        }
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (key != "context" && key != "y_w" && key != "y_l" && key != "alignment_w" &&
                key != "alignment_l") {
                throw SchemaViolation(key, path + ":" + std::to_string(line_no) + ": unknown");
            }
        }
        PreferencePair p;
        try {
            p.context = j.at("context").get<std::string>();
            p.y_w = j.at("y_w").get<std::string>();
            p.y_l = j.at("y_l").get<std::string>();
            p.alignment_w = j.at("alignment_w").get<double>();
            p.alignment_l = j.at("alignment_l").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        validate_pair(p);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

} // namespace xkde::train
