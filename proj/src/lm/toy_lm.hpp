#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lm/scoring_model.hpp"

namespace xkde::lm {

// Small trainable causal language model: 2 pre-norm transformer blocks
// (single-head attention with key dim hidden/4, tanh MLP of width hidden/2),
// a final layer norm, tied input/output embeddings and fixed sinusoidal
// positions. Everything runs in double precision with a hand-written
// backward pass so finite-difference checks can be tight.
class ToyLm : public ScoringModel {
public:
    static constexpr int kBlocks = 2;
    static constexpr int kContextLimit = 256;

    // hidden must be divisible by 4. Weights are drawn from a seeded normal,
    // layer-norm gains start at 1 and shifts at 0.
    ToyLm(int vocab_size, int hidden, std::uint64_t seed);

    // --- ScoringModel ------------------------------------------------------
    int vocab_size() const override { return vocab_; }
    int context_limit() const override { return kContextLimit; }
    int eos_id() const override;
    std::vector<double> score_sequence(const std::vector<int>& context,
                                       const std::vector<int>& target) const override;
    std::vector<int> greedy_decode(const std::vector<int>& context, int max_new) const override;
    std::vector<std::vector<int>> sample(const std::vector<int>& context, int max_new,
                                         double temperature, int k,
                                         std::uint64_t seed) const override;
    bool concurrent_read_safe() const override { return true; }

    // --- training surface --------------------------------------------------
    // Weighted next-token negative log likelihood over one sequence. Slot t
    // is the prediction made after consuming seq[0..t-1] (plus the internal
    // begin token); its default label is seq[t]. labels/weights must match
    // seq in length; weight 0 removes a slot from the loss entirely.
    double weighted_nll(const std::vector<int>& seq, const std::vector<int>& labels,
                        const std::vector<double>& weights) const;

    // Same value, accumulating d loss / d params into grad (+=). grad must
    // already have n_params() entries.
    double weighted_nll_grad(const std::vector<int>& seq, const std::vector<int>& labels,
                             const std::vector<double>& weights,
                             std::vector<double>& grad) const;

    // Full next-token distribution after the given context (softmax at
    // temperature; 1.0 = the model's own distribution).
    std::vector<double> next_distribution(const std::vector<int>& context,
                                          double temperature = 1.0) const;

    // Parameter vector layout (stable contract, relied on by checkpoints):
    // embeddings [vocab x hidden] row-major, then per block in order:
    // ln1 gain [d], ln1 shift [d], Wq [dk x d], Wk [dk x d], Wv [d x d],
    // Wo [d x d], ln2 gain [d], ln2 shift [d], W1 [dm x d], b1 [dm],
    // W2 [d x dm], b2 [d]; finally the output layer-norm gain and shift
    // [d each]. dk = hidden/4, dm = hidden/2, layer-norm epsilon 1e-5,
    // positions are the standard sinusoid pairs (sin/cos, base 10000).
    std::size_t n_params() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    int hidden() const { return d_; }
    std::uint64_t seed() const { return seed_; }

    // --- persistence ---------------------------------------------------
    // Binary checkpoint: magic, format version, vocab size, hidden size,
    // init seed, then the raw little-endian double parameters.
    void save(const std::string& path) const;
    static ToyLm load(const std::string& path);

private:
    struct Cache;

    void forward(const std::vector<int>& z, Cache& cache) const;
    void logits_at(const Cache& cache, int pos, std::vector<double>& out) const;
    void check_ids(const std::vector<int>& ids) const;

    int vocab_ = 0;
    int d_ = 0;   // hidden width
    int dk_ = 0;  // attention key/query width (d/4)
    int dm_ = 0;  // mlp inner width (d/2)
    std::uint64_t seed_ = 0;
    std::vector<double> params_;

    // Offsets into params_ (embeddings first, then per-block weights, then
    // the final layer norm).
    struct BlockOffsets {
        std::size_t ln1_g, ln1_b;
        std::size_t wq, wk, wv, wo;
        std::size_t ln2_g, ln2_b;
        std::size_t w1, b1, w2, b2;
    };
    std::size_t off_embed_ = 0;
    BlockOffsets off_block_[kBlocks] = {};
    std::size_t off_lnf_g_ = 0, off_lnf_b_ = 0;

    void layout();
};

} // namespace xkde::lm
