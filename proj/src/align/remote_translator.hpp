#pragma once

#include <set>
#include <string>
#include <vector>

#include "align/translator.hpp"

namespace xkde::align {

// Adapter for an external forced-decoding translation service. One POST per
// score: {src_text, tgt_text, tgt_lang} in, {token_logprobs: [...]} out —
// one log-probability per gold token. The API key comes from the environment
// and is sent as a bearer token when present.
class RemoteTranslator : public Translator {
public:
    struct Options {
        std::string endpoint;             // e.g. "http://host:port"
        std::string path = "/v1/forced_score";
        int timeout_s = 30;
        std::string api_key_env = "XKDE_API_KEY";
        std::set<std::string> targets;    // supported languages; empty = all
        int context_limit = 4096;
    };

    explicit RemoteTranslator(Options options);

    bool supports(const LanguageCode& tgt) const override;
    int context_limit() const override { return options_.context_limit; }
    std::vector<double> forced_score(const std::string& response,
                                     const std::string& gold_target,
                                     const LanguageCode& tgt) const override;
    // One request per call on a fresh connection; no shared mutable state.
    bool concurrent_read_safe() const override { return true; }

private:
    Options options_;
};

} // namespace xkde::align
