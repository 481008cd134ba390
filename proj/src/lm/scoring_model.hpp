#pragma once

#include <cstdint>
#include <vector>

namespace xkde::lm {

// Token-level language model surface used by training, scoring and decoding.
// All sequences are token ids; implementations prepend their own
// begin-of-sequence handling internally, callers never pass one.
class ScoringModel {
public:
    virtual ~ScoringModel() = default;

    virtual int vocab_size() const = 0;

    // Maximum total tokens (context + continuation) a call may touch.
    virtual int context_limit() const = 0;

    // Token id that terminates decoding, or -1 if the model has none.
    virtual int eos_id() const = 0;

    // Per-token log P(target[t] | context, target[<t]). Result has
    // target.size() entries. Throws ContextOverflow when the combined
    // sequence exceeds context_limit(), ModelError on out-of-range ids.
    virtual std::vector<double> score_sequence(const std::vector<int>& context,
                                               const std::vector<int>& target) const = 0;

    // Greedy argmax decoding, ties broken towards the lowest token id.
    // Stops at eos (not included in the result), after max_new tokens, or
    // when the context limit is reached. Throws ContextOverflow when the
    // starting context already fills the window.
    virtual std::vector<int> greedy_decode(const std::vector<int>& context,
                                           int max_new) const = 0;

    // k independent ancestral samples at the given temperature, each capped
    // at max_new tokens, eos stripped. Deterministic in (inputs, seed).
    // Throws NonPositiveTemperature for temperature <= 0.
    virtual std::vector<std::vector<int>> sample(const std::vector<int>& context,
                                                 int max_new, double temperature, int k,
                                                 std::uint64_t seed) const = 0;

    // Whether const member calls may run from several threads at once.
    virtual bool concurrent_read_safe() const { return false; }
};

} // namespace xkde::lm
