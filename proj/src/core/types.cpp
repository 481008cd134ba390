#include "core/types.hpp"

#include <cctype>

#include "common/errors.hpp"
#include "common/text.hpp"

namespace xkde {

LanguageCode::LanguageCode(std::string code) : code_(std::move(code)) {
    validate_language(*this);
}

void validate_language(const LanguageCode& lang) {
    if (lang.str().empty()) throw SchemaViolation("lang", "language code is empty");
    for (unsigned char c : lang.str()) {
        if (!(std::islower(c) || std::isdigit(c))) {
            throw SchemaViolation("lang", "language code must be lowercase alphanumeric: '" +
                                              lang.str() + "'");
        }
    }
}

const char* to_string(SourceTag tag) {
    switch (tag) {
        case SourceTag::zsre: return "zsre";
        case SourceTag::halluedit: return "halluedit";
        case SourceTag::ripple: return "ripple";
        case SourceTag::wikibio: return "wikibio";
        case SourceTag::mquake: return "mquake";
        case SourceTag::counterfact: return "counterfact";
        case SourceTag::synthetic: return "synthetic";
    }
    return "synthetic";
}

SourceTag parse_source_tag(const std::string& s) {
    for (SourceTag tag : all_source_tags()) {
        if (s == to_string(tag)) return tag;
    }
    throw SchemaViolation("source_tag", "unknown source tag '" + s + "'");
}

std::vector<SourceTag> all_source_tags() {
    return {SourceTag::zsre,   SourceTag::halluedit,   SourceTag::ripple,   SourceTag::wikibio,
            SourceTag::mquake, SourceTag::counterfact, SourceTag::synthetic};
}

const char* to_string(Scope scope) {
    return scope == Scope::in_scope ? "in" : "out";
}

Scope parse_scope(const std::string& s) {
    if (s == "in") return Scope::in_scope;
    if (s == "out") return Scope::out_of_scope;
    throw SchemaViolation("scope", "scope must be 'in' or 'out', got '" + s + "'");
}

void validate_descriptor(const EditDescriptor& edit) {
    validate_language(edit.lang);
    if (edit.prompt.empty()) throw SchemaViolation("prompt", "descriptor prompt is empty");
    if (edit.target_new.empty())
        throw SchemaViolation("target_new", "descriptor target_new is empty");
    if (!edit.subject_implicit && !contains(edit.prompt, edit.subject)) {
        throw SchemaViolation("subject", "subject '" + edit.subject +
                                             "' not found in prompt and not marked implicit");
    }
}

void validate_case(const EvalCase& c) {
    if (c.id.empty()) throw SchemaViolation("id", "case id is empty");
    if (c.edit.empty()) throw SchemaViolation("edit", "case has no descriptors");
    for (const auto& [lang, desc] : c.edit) {
        validate_descriptor(desc);
        if (desc.id != c.id) {
            throw SchemaViolation("edit", "descriptor id '" + desc.id +
                                              "' differs from case id '" + c.id + "'");
        }
        if (desc.lang != lang) {
            throw SchemaViolation("edit", "descriptor under key '" + lang.str() +
                                              "' carries lang '" + desc.lang.str() + "'");
        }
        if (!c.rephrases.count(lang))
            throw SchemaViolation("rephrases", "missing language key '" + lang.str() + "'");
        if (!c.locality_probes.count(lang))
            throw SchemaViolation("locality_probes", "missing language key '" + lang.str() + "'");
        if (!c.portability_probes.count(lang))
            throw SchemaViolation("portability_probes",
                                  "missing language key '" + lang.str() + "'");
    }
}

void validate_quality(const QualityScore& q) {
    auto check = [](const char* name, int v) {
        if (v < 1 || v > 10)
            throw SchemaViolation(name, "score out of range [1,10]: " + std::to_string(v));
    };
    check("syntactic", q.syntactic);
    check("lexical", q.lexical);
    check("faithfulness", q.faithfulness);
    check("overall", q.overall);
}

void validate_sample(const ParallelSample& s) {
    if (s.id.empty()) throw SchemaViolation("id", "sample id is empty");
    validate_language(s.edit_lang);
    validate_language(s.query_lang);
    if (s.with_edit && !s.edit_text)
        throw SchemaViolation("edit_text", "with_edit=true but edit_text absent");
    if (!s.with_edit && s.edit_text)
        throw SchemaViolation("edit_text", "with_edit=false but edit_text present");
    if (s.quality) validate_quality(*s.quality);
}

std::string serialize_edit(const EditDescriptor& edit) {
    const std::string p = trim(edit.prompt);
    if (p.empty()) return edit.target_new;
    const char last = p.back();
    if (last == '?' || last == '.' || last == ':' || last == '!') {
        return p + " " + edit.target_new;
    }
    return p + "? " + edit.target_new;
}

} // namespace xkde
