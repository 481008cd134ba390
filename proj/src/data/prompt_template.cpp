#include "data/prompt_template.hpp"

#include <algorithm>

#include "common/errors.hpp"
#include "core/record_io.hpp"

namespace xkde::data {

namespace {

std::string placeholder_token(const std::string& key) { return "<" + key + ">"; }

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

} // namespace

const std::vector<std::string>& template_names() {
    static const std::vector<std::string> names = {
        "query_gen", "answer_gen", "out_of_scope_gen", "judge", "score", "translate",
    };
    return names;
}

const std::vector<std::string>& required_placeholders(const std::string& name) {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"query_gen", {"instruct", "subject", "answer"}},
        {"answer_gen", {"instruct", "question", "subject", "new answer"}},
        {"out_of_scope_gen", {"question", "subject", "new answer"}},
        {"judge", {"instruct", "question", "answer"}},
        {"score", {"instruct", "question", "answer"}},
        {"translate", {"subject", "new answer", "question", "answer"}},
    };
    const auto it = table.find(name);
    if (it == table.end()) throw TemplateError("unknown prompt template: " + name);
    return it->second;
}

std::string generation_slot(const std::string& name) {
    if (name == "query_gen" || name == "translate") return "answer";
    if (name == "answer_gen") return "new answer";
    required_placeholders(name); // validates the name
    return "";
}

PromptTemplate load_template(const std::string& name, const std::string& dir) {
    const std::string path = dir + "/" + name + ".txt";
    PromptTemplate t;
    t.name = name;
    try {
        t.body = read_file(path);
    } catch (const Error& e) {
        throw TemplateError("cannot load template '" + name + "': " + e.what());
    }
    for (const auto& key : required_placeholders(name)) {
        if (t.body.find(placeholder_token(key)) == std::string::npos) {
            throw TemplateError("template '" + name + "' is missing placeholder <" + key + ">");
        }
    }
    return t;
}

std::map<std::string, PromptTemplate> load_templates(const std::string& dir) {
    std::map<std::string, PromptTemplate> out;
    for (const auto& name : template_names()) out[name] = load_template(name, dir);
    return out;
}

std::string render_request(const PromptTemplate& t,
                           const std::map<std::string, std::string>& values) {
    const auto& required = required_placeholders(t.name);
    const std::string slot = generation_slot(t.name);

    std::string body = t.body;
    if (!slot.empty()) {
        const std::size_t cut = body.rfind(placeholder_token(slot));
        if (cut == std::string::npos) {
            throw TemplateError("template '" + t.name + "' lost its generation slot");
        }
        body.erase(cut);
    }

    for (const auto& [key, value] : values) {
        if (std::find(required.begin(), required.end(), key) == required.end()) {
            throw TemplateError("template '" + t.name + "' takes no placeholder <" + key + ">");
        }
        body = replace_all(body, placeholder_token(key), value);
    }
    // The cut consumed the generation slot; anything else left unreplaced
    // means a value is missing. (answer_gen repeats its slot key mid-body,
    // so this must inspect the rendered text, not the value map.)
    for (const auto& key : required) {
        if (body.find(placeholder_token(key)) != std::string::npos) {
            throw TemplateError("template '" + t.name + "' needs a value for <" + key + ">");
        }
    }
    return body;
}

} // namespace xkde::data
