#include "align/remote_translator.hpp"

#include <cstdlib>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "common/errors.hpp"
#include "common/text.hpp"

namespace xkde::align {

RemoteTranslator::RemoteTranslator(Options options) : options_(std::move(options)) {
    if (options_.endpoint.empty()) {
        throw ConfigError("remote translator requires an endpoint");
    }
}

bool RemoteTranslator::supports(const LanguageCode& tgt) const {
    return options_.targets.empty() || options_.targets.count(tgt.str()) != 0;
}

std::vector<double> RemoteTranslator::forced_score(const std::string& response,
                                                   const std::string& gold_target,
                                                   const LanguageCode& tgt) const {
    if (!supports(tgt)) {
        throw UnsupportedPair("remote translator does not serve '" + tgt.str() + "'");
    }
    const int needed = static_cast<int>(split_tokens(response).size() +
                                        split_tokens(gold_target).size());
    if (needed > options_.context_limit) throw ContextOverflow(needed, options_.context_limit);

    nlohmann::ordered_json body;
    body["src_text"] = response;
    body["tgt_text"] = gold_target;
    body["tgt_lang"] = tgt.str();

    httplib::Client client(options_.endpoint);
    client.set_connection_timeout(options_.timeout_s);
    client.set_read_timeout(options_.timeout_s);
    httplib::Headers headers;
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const auto res = client.Post(options_.path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransientServiceError("no response from " + options_.endpoint + ": " +
                                    httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransientServiceError("translation service returned status " +
                                    std::to_string(res->status));
    }
    if (res->status != 200) {
        throw ServiceError("translation service returned status " +
                           std::to_string(res->status) + ": " + res->body);
    }
    try {
        const auto doc = nlohmann::json::parse(res->body);
        const auto scores = doc.at("token_logprobs").get<std::vector<double>>();
        if (scores.empty()) throw ServiceError("translation service returned no token scores");
        return scores;
    } catch (const nlohmann::json::exception& e) {
        throw ServiceError(std::string("malformed forced-score document: ") + e.what());
    }
}

} // namespace xkde::align
