#pragma once

// Deterministic stand-in models for metric and harness tests: behavior is a
// pure function of the query text, so independent oracles can replay it.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "common/sha256.hpp"
#include "common/text.hpp"
#include "core/types.hpp"
#include "lm/scoring_model.hpp"
#include "metrics/metrics.hpp"

namespace xkde::testsupport {

// Answers from a fixed lookup table; unknown queries get the fallback.
class ScriptedDecoder : public metrics::Decoder {
public:
    ScriptedDecoder() = default;
    explicit ScriptedDecoder(std::map<std::string, std::string> answers,
                             std::string fallback = "")
        : answers_(std::move(answers)), fallback_(std::move(fallback)) {}

    void set(const std::string& query, const std::string& answer) { answers_[query] = answer; }

    std::vector<std::string> decode(const std::string& query) const override {
        const auto it = answers_.find(query);
        return split_tokens(it == answers_.end() ? fallback_ : it->second);
    }
    bool concurrent_read_safe() const override { return true; }

private:
    std::map<std::string, std::string> answers_;
    std::string fallback_;
};

// Pseudo-random but deterministic: the answer is derived from a hash of the
// query and a salt, with `quality` controlling how many tokens come from the
// gold-free hash stream. Used for oracle-equivalence fixtures where values
// must be fractional and model-agnostic.
class HashDecoder : public metrics::Decoder {
public:
    explicit HashDecoder(std::string salt, int max_tokens = 4)
        : salt_(std::move(salt)), max_tokens_(max_tokens) {}

    std::vector<std::string> decode(const std::string& query) const override {
        const std::string h = sha256_hex(salt_ + "|" + query);
        std::vector<std::string> out;
        const int n = 1 + (h[0] % max_tokens_);
        for (int i = 0; i < n; ++i) {
            out.push_back("w" + h.substr(static_cast<std::size_t>(i) * 2, 2));
        }
        return out;
    }
    bool concurrent_read_safe() const override { return true; }

private:
    std::string salt_;
    int max_tokens_;
};

// A decoder that mixes gold-following and hash behavior per query so metric
// values land strictly inside (0,1): with probability tied to the query hash
// it answers the scripted gold, otherwise emits hash tokens.
class MixedDecoder : public metrics::Decoder {
public:
    MixedDecoder(std::map<std::string, std::string> gold, std::string salt, int follow_mod)
        : gold_(std::move(gold)), hash_(salt, 3), follow_mod_(follow_mod), salt_(salt) {}

    std::vector<std::string> decode(const std::string& query) const override {
        const auto it = gold_.find(query);
        if (it != gold_.end()) {
            const std::string h = sha256_hex(salt_ + "#" + query);
            if ((h[1] % follow_mod_) != 0) return split_tokens(it->second);
        }
        return hash_.decode(query);
    }
    bool concurrent_read_safe() const override { return true; }

private:
    std::map<std::string, std::string> gold_;
    HashDecoder hash_;
    int follow_mod_;
    std::string salt_;
};

// Synthetic bilingual cases with rephrases and both probe kinds; answers are
// drawn from small deterministic word pools.
std::vector<EvalCase> make_synthetic_cases(int n, unsigned seed = 11);

// Token-level model that assigns every token probability 1/V regardless of
// context. Closed forms: per-token log-prob = -ln V, greedy always picks
// token id 0.
class UniformModel : public lm::ScoringModel {
public:
    explicit UniformModel(int vocab, int limit = 4096, int eos = -1)
        : vocab_(vocab), limit_(limit), eos_(eos) {}

    int vocab_size() const override { return vocab_; }
    int context_limit() const override { return limit_; }
    int eos_id() const override { return eos_; }
    std::vector<double> score_sequence(const std::vector<int>& context,
                                       const std::vector<int>& target) const override;
    std::vector<int> greedy_decode(const std::vector<int>& context, int max_new) const override;
    std::vector<std::vector<int>> sample(const std::vector<int>& context, int max_new,
                                         double temperature, int k,
                                         std::uint64_t seed) const override;
    bool concurrent_read_safe() const override { return true; }

private:
    int vocab_;
    int limit_;
    int eos_;
};

// Token-level model with (almost) all mass on one fixed token: the gold
// token scores log-prob 0, anything else a large negative constant.
class DeltaModel : public lm::ScoringModel {
public:
    explicit DeltaModel(int target, int vocab, int limit = 4096, int eos = -1)
        : target_(target), vocab_(vocab), limit_(limit), eos_(eos) {}

    int vocab_size() const override { return vocab_; }
    int context_limit() const override { return limit_; }
    int eos_id() const override { return eos_; }
    std::vector<double> score_sequence(const std::vector<int>& context,
                                       const std::vector<int>& target) const override;
    std::vector<int> greedy_decode(const std::vector<int>& context, int max_new) const override;
    std::vector<std::vector<int>> sample(const std::vector<int>& context, int max_new,
                                         double temperature, int k,
                                         std::uint64_t seed) const override;
    bool concurrent_read_safe() const override { return true; }

private:
    int target_;
    int vocab_;
    int limit_;
    int eos_;
};

} // namespace xkde::testsupport
