#include "data/ops.hpp"

#include <regex>

#include "common/errors.hpp"
#include "common/text.hpp"

namespace xkde::data {

namespace {

const PromptTemplate& pick(const PromptLibrary& prompts, const std::string& name) {
    const auto it = prompts.find(name);
    if (it == prompts.end()) throw TemplateError("prompt library lacks template: " + name);
    return it->second;
}

ChatRequest make_request(const OpsOptions& options, const std::string& prompt,
                         double temperature, std::uint64_t seed) {
    ChatRequest request;
    request.model = options.model;
    request.messages = {{"user", prompt}};
    request.temperature = temperature;
    request.max_tokens = options.max_tokens;
    request.seed = seed;
    return request;
}

std::string complete_nonempty(ChatClient& client, const ChatRequest& request) {
    const std::string text = trim(client.complete(request));
    if (text.empty()) throw EmptyCompletion("service returned an empty completion");
    return text;
}

// The field value after `marker`, up to end of line.
std::string field_after(const std::string& text, const std::string& marker) {
    const std::size_t at = text.find(marker);
    if (at == std::string::npos) {
        throw ParseError("completion is missing the field '" + trim(marker) + "'");
    }
    const std::size_t start = at + marker.size();
    const std::size_t end = text.find('\n', start);
    return trim(end == std::string::npos ? text.substr(start)
                                         : text.substr(start, end - start));
}

} // namespace

std::string generate_query(ChatClient& client, const PromptLibrary& prompts,
                           const EditDescriptor& edit, std::uint64_t seed,
                           const OpsOptions& options) {
    const std::string prompt = render_request(pick(prompts, "query_gen"),
                                              {{"instruct", serialize_edit(edit)},
                                               {"subject", edit.subject}});
    return complete_nonempty(client, make_request(options, prompt, options.gen_temperature,
                                                  seed));
}

std::string generate_answer(ChatClient& client, const PromptLibrary& prompts,
                            const EditDescriptor& edit, const std::string& question,
                            std::uint64_t seed, const OpsOptions& options) {
    const std::string prompt = render_request(pick(prompts, "answer_gen"),
                                              {{"instruct", serialize_edit(edit)},
                                               {"question", question},
                                               {"subject", edit.subject},
                                               {"new answer", edit.target_new}});
    return complete_nonempty(client, make_request(options, prompt, options.gen_temperature,
                                                  seed));
}

std::pair<std::string, std::string> parse_out_of_scope(const std::string& completion) {
    return {field_after(completion, "New question:"), field_after(completion, "New answer:")};
}

std::pair<std::string, std::string> generate_out_of_scope(ChatClient& client,
                                                          const PromptLibrary& prompts,
                                                          const EditDescriptor& edit,
                                                          std::uint64_t seed,
                                                          const OpsOptions& options) {
    if (edit.target_new.empty()) {
        throw DataError("out-of-scope generation needs the edit's new answer");
    }
    const std::string prompt = render_request(pick(prompts, "out_of_scope_gen"),
                                              {{"question", edit.prompt},
                                               {"subject", edit.subject},
                                               {"new answer", edit.target_new}});
    const std::string completion =
        complete_nonempty(client, make_request(options, prompt, options.gen_temperature, seed));
    return parse_out_of_scope(completion);
}

bool parse_judge(const std::string& completion) {
    const bool yes = completion.find("[T]") != std::string::npos;
    const bool no = completion.find("[F]") != std::string::npos;
    if (yes == no) {
        throw JudgeAmbiguous(yes ? "judge emitted both [T] and [F]"
                                 : "judge emitted neither [T] nor [F]");
    }
    return yes;
}

bool judge_sample(ChatClient& client, const PromptLibrary& prompts, const EditDescriptor& edit,
                  const std::string& question, const std::string& answer,
                  const OpsOptions& options) {
    const std::string prompt = render_request(pick(prompts, "judge"),
                                              {{"instruct", serialize_edit(edit)},
                                               {"question", question},
                                               {"answer", answer}});
    return parse_judge(complete_nonempty(client, make_request(options, prompt, 0.0, 0)));
}

QualityScore parse_score(const std::string& completion) {
    static const std::regex pattern(
        R"(\[Sentence complexity:\s*(\d+);\s*Vocabulary richness:\s*(\d+);\s*)"
        R"(Faithfulness:\s*(\d+);\s*Overall score:\s*(\d+)\])");
    std::smatch m;
    if (!std::regex_search(completion, m, pattern)) {
        throw ScoreParseError("completion lacks the bracketed four-score line");
    }
    QualityScore score;
    int* fields[] = {&score.syntactic, &score.lexical, &score.faithfulness, &score.overall};
    for (int i = 0; i < 4; ++i) {
        const int value = std::stoi(m[static_cast<std::size_t>(i + 1)].str());
        if (value < 1 || value > 10) {
            throw ScoreParseError("score " + std::to_string(value) + " outside [1,10]");
        }
        *fields[i] = value;
    }
    return score;
}

QualityScore score_sample(ChatClient& client, const PromptLibrary& prompts,
                          const EditDescriptor& edit, const std::string& question,
                          const std::string& answer, const OpsOptions& options) {
    const std::string prompt = render_request(pick(prompts, "score"),
                                              {{"instruct", serialize_edit(edit)},
                                               {"question", question},
                                               {"answer", answer}});
    return parse_score(complete_nonempty(client, make_request(options, prompt, 0.0, 0)));
}

std::string translate(ChatClient& client, const PromptLibrary& prompts,
                      const std::string& text, const LanguageCode& src,
                      const LanguageCode& tgt, const OpsOptions& options) {
    if (src == tgt) return text;
    const std::string prompt = render_request(pick(prompts, "translate"),
                                              {{"subject", src.str()},
                                               {"new answer", tgt.str()},
                                               {"question", text}});
    return complete_nonempty(client, make_request(options, prompt, 0.0, 0));
}

} // namespace xkde::data
