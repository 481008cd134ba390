#pragma once

#include <map>
#include <string>
#include <vector>

namespace xkde::data {

// A named prompt body with <placeholder> slots, loaded from a data file.
// The six known templates drive query/answer/out-of-scope generation,
// judging, scoring, and translation. Bodies are data, never inlined in
// code; a frozen hash fixture guards them against drift.
struct PromptTemplate {
    std::string name;
    std::string body;
};

// The template names the pipeline knows, in canonical order.
const std::vector<std::string>& template_names();

// Placeholders a template of this name must contain (each at least once;
// the answer-generation body legitimately repeats two of them).
const std::vector<std::string>& required_placeholders(const std::string& name);

// The placeholder that marks where the completion starts, or "" when the
// whole body is sent and the service free-continues. Everything from the
// placeholder's last occurrence onward is cut from the outgoing request,
// leaving the cue line (e.g. "[Generated Question]: ") as the prompt tail.
std::string generation_slot(const std::string& name);

// Reads <dir>/<name>.txt and validates the placeholder set.
// Throws TemplateError on missing file or missing placeholder.
PromptTemplate load_template(const std::string& name, const std::string& dir);

// All six templates from one directory.
std::map<std::string, PromptTemplate> load_templates(const std::string& dir);

// Replaces every occurrence of each <key> with its value, after removing
// the generation slot. Throws TemplateError when a required placeholder has
// no value or a value for an unknown placeholder is supplied.
std::string render_request(const PromptTemplate& t,
                           const std::map<std::string, std::string>& values);

} // namespace xkde::data
