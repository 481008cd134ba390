#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "core/types.hpp"
#include "data/chat_client.hpp"
#include "data/prompt_template.hpp"

namespace xkde::data {

using PromptLibrary = std::map<std::string, PromptTemplate>;

// Request knobs shared by the pipeline operations. The seed distinguishes
// otherwise-identical generation requests (fresh draws for quality-control
// regeneration); judging/scoring/translation always run at temperature 0.
struct OpsOptions {
    std::string model = "deepseek-chat";
    double gen_temperature = 0.7;
    int max_tokens = 512;
};

// In-scope question for an edit. Throws EmptyCompletion when the service
// returns only whitespace.
std::string generate_query(ChatClient& client, const PromptLibrary& prompts,
                           const EditDescriptor& edit, std::uint64_t seed = 0,
                           const OpsOptions& options = {});

// Answer for (edit, question), treating the edit as ground truth.
std::string generate_answer(ChatClient& client, const PromptLibrary& prompts,
                            const EditDescriptor& edit, const std::string& question,
                            std::uint64_t seed = 0, const OpsOptions& options = {});

// Unrelated-attribute question/answer for the same subject. Parses the
// "New question:" / "New answer:" fields; throws ParseError when absent.
std::pair<std::string, std::string> generate_out_of_scope(ChatClient& client,
                                                          const PromptLibrary& prompts,
                                                          const EditDescriptor& edit,
                                                          std::uint64_t seed = 0,
                                                          const OpsOptions& options = {});

// True iff the completion contains "[T]" and not "[F]"; the inverse gives
// false; both or neither raise JudgeAmbiguous.
bool judge_sample(ChatClient& client, const PromptLibrary& prompts, const EditDescriptor& edit,
                  const std::string& question, const std::string& answer,
                  const OpsOptions& options = {});

// Parses "[Sentence complexity: a; Vocabulary richness: b; Faithfulness: c;
// Overall score: d]"; every score must lie in [1,10] (ScoreParseError).
QualityScore score_sample(ChatClient& client, const PromptLibrary& prompts,
                          const EditDescriptor& edit, const std::string& question,
                          const std::string& answer, const OpsOptions& options = {});

// Translates text between languages; identity (and zero service calls)
// when src == tgt.
std::string translate(ChatClient& client, const PromptLibrary& prompts,
                      const std::string& text, const LanguageCode& src,
                      const LanguageCode& tgt, const OpsOptions& options = {});

// Parsing helpers, exposed for tests and reused by the mock-driven
// pipeline: these never touch a client.
std::pair<std::string, std::string> parse_out_of_scope(const std::string& completion);
bool parse_judge(const std::string& completion);
QualityScore parse_score(const std::string& completion);

} // namespace xkde::data
