#include "core/record_io.hpp"

#include <atomic>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "common/errors.hpp"

namespace xkde {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json parse_line(const std::string& record) {
    ordered_json j;
    try {
        j = ordered_json::parse(record);
    } catch (const ordered_json::parse_error& e) {
        throw MalformedRecord(std::string("record is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedRecord("record is not an object");
    return j;
}

std::string require_string(const ordered_json& j, const char* key) {
    if (!j.contains(key)) throw SchemaViolation(key, "missing");
    if (!j.at(key).is_string()) throw SchemaViolation(key, "not a string");
    return j.at(key).get<std::string>();
}

int require_int(const ordered_json& j, const char* key) {
    if (!j.contains(key)) throw SchemaViolation(key, "missing");
    if (!j.at(key).is_number_integer()) throw SchemaViolation(key, "not an integer");
    return j.at(key).get<int>();
}

const char* const kSampleKeys[] = {"id",        "source_tag", "edit_lang", "query_lang",
                                   "scope",     "with_edit",  "edit_text", "query",
                                   "answer",    "quality"};

bool is_known_sample_key(const std::string& key) {
    for (const char* k : kSampleKeys) {
        if (key == k) return true;
    }
    return false;
}

} // namespace

ParallelSample parse_sample(const std::string& record, bool strict) {
    const ordered_json j = parse_line(record);

    ParallelSample s;
    s.id = require_string(j, "id");
    s.source_tag = parse_source_tag(require_string(j, "source_tag"));
    s.edit_lang = LanguageCode(require_string(j, "edit_lang"));
    s.query_lang = LanguageCode(require_string(j, "query_lang"));
    s.scope = parse_scope(require_string(j, "scope"));
    if (!j.contains("with_edit")) throw SchemaViolation("with_edit", "missing");
    if (!j.at("with_edit").is_boolean()) throw SchemaViolation("with_edit", "not a boolean");
    s.with_edit = j.at("with_edit").get<bool>();
    if (j.contains("edit_text")) {
        if (!j.at("edit_text").is_string()) throw SchemaViolation("edit_text", "not a string");
        s.edit_text = j.at("edit_text").get<std::string>();
    }
    s.query = require_string(j, "query");
    s.answer = require_string(j, "answer");
    if (j.contains("quality")) {
        const auto& q = j.at("quality");
        if (!q.is_object()) throw SchemaViolation("quality", "not an object");
        QualityScore qs;
        qs.syntactic = require_int(q, "syntactic");
        qs.lexical = require_int(q, "lexical");
        qs.faithfulness = require_int(q, "faithfulness");
        qs.overall = require_int(q, "overall");
        for (const auto& [key, value] : q.items()) {
            (void)value;
            if (key != "syntactic" && key != "lexical" && key != "faithfulness" &&
                key != "overall") {
                throw SchemaViolation("quality." + key, "unknown field");
            }
        }
        s.quality = qs;
    }

    ordered_json extra = ordered_json::object();
    for (const auto& [key, value] : j.items()) {
        if (is_known_sample_key(key)) continue;
        if (strict) throw SchemaViolation(key, "unknown field");
        extra[key] = value;
    }
    if (!extra.empty()) s.extra_json = extra.dump();

    validate_sample(s);
    return s;
}

std::string serialize_sample(const ParallelSample& sample) {
    validate_sample(sample);
    ordered_json j;
    j["id"] = sample.id;
    j["source_tag"] = to_string(sample.source_tag);
    j["edit_lang"] = sample.edit_lang.str();
    j["query_lang"] = sample.query_lang.str();
    j["scope"] = to_string(sample.scope);
    j["with_edit"] = sample.with_edit;
    if (sample.edit_text) j["edit_text"] = *sample.edit_text;
    j["query"] = sample.query;
    j["answer"] = sample.answer;
    if (sample.quality) {
        ordered_json q;
        q["syntactic"] = sample.quality->syntactic;
        q["lexical"] = sample.quality->lexical;
        q["faithfulness"] = sample.quality->faithfulness;
        q["overall"] = sample.quality->overall;
        j["quality"] = q;
    }
    if (!sample.extra_json.empty()) {
        const ordered_json extra = ordered_json::parse(sample.extra_json);
        for (const auto& [key, value] : extra.items()) j[key] = value;
    }
    return j.dump();
}

std::vector<ParallelSample> read_samples(const std::string& path, bool strict) {
    std::vector<ParallelSample> out;
    for_each_sample(path, [&](const ParallelSample& s) { out.push_back(s); }, strict);
    return out;
}

void for_each_sample(const std::string& path,
                     const std::function<void(const ParallelSample&)>& fn, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            fn(parse_sample(line, strict));
        } catch (const DataError& e) {
            throw MalformedRecord(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void write_samples(const std::string& path, const std::vector<ParallelSample>& samples) {
    std::string body;
    for (const auto& s : samples) {
        body += serialize_sample(s);
        body += '\n';
    }
    atomic_write_file(path, body);
}

// ---- evaluation cases ----

namespace {

ordered_json probe_to_json(const Probe& p) {
    ordered_json j;
    j["query"] = p.query;
    j["answer"] = p.answer;
    return j;
}

Probe probe_from_json(const ordered_json& j) {
    Probe p;
    p.query = require_string(j, "query");
    p.answer = require_string(j, "answer");
    return p;
}

} // namespace

EvalCase parse_case(const std::string& record) {
    const ordered_json j = parse_line(record);
    EvalCase c;
    c.id = require_string(j, "id");
    if (!j.contains("edit") || !j.at("edit").is_object())
        throw SchemaViolation("edit", "missing or not an object");
    for (const auto& [lang_str, desc_json] : j.at("edit").items()) {
        EditDescriptor d;
        d.id = c.id;
        d.lang = LanguageCode(lang_str);
        d.subject = require_string(desc_json, "subject");
        d.prompt = require_string(desc_json, "prompt");
        d.target_new = require_string(desc_json, "target_new");
        if (desc_json.contains("target_old"))
            d.target_old = require_string(desc_json, "target_old");
        if (desc_json.contains("subject_implicit"))
            d.subject_implicit = desc_json.at("subject_implicit").get<bool>();
        c.edit.emplace(d.lang, d);
    }
    auto read_probe_map = [&](const char* key, std::map<LanguageCode, std::vector<Probe>>& out) {
        if (!j.contains(key)) return;
        for (const auto& [lang_str, list] : j.at(key).items()) {
            std::vector<Probe> probes;
            for (const auto& pj : list) probes.push_back(probe_from_json(pj));
            out.emplace(LanguageCode(lang_str), std::move(probes));
        }
    };
    if (j.contains("rephrases")) {
        for (const auto& [lang_str, list] : j.at("rephrases").items()) {
            std::vector<std::string> rs;
            for (const auto& r : list) rs.push_back(r.get<std::string>());
            c.rephrases.emplace(LanguageCode(lang_str), std::move(rs));
        }
    }
    read_probe_map("locality_probes", c.locality_probes);
    read_probe_map("portability_probes", c.portability_probes);
    validate_case(c);
    return c;
}

std::string serialize_case(const EvalCase& c) {
    validate_case(c);
    ordered_json j;
    j["id"] = c.id;
    ordered_json edits = ordered_json::object();
    for (const auto& [lang, d] : c.edit) {
        ordered_json dj;
        dj["subject"] = d.subject;
        dj["prompt"] = d.prompt;
        dj["target_new"] = d.target_new;
        if (d.target_old) dj["target_old"] = *d.target_old;
        if (d.subject_implicit) dj["subject_implicit"] = true;
        edits[lang.str()] = dj;
    }
    j["edit"] = edits;
    ordered_json rephrases = ordered_json::object();
    for (const auto& [lang, list] : c.rephrases) rephrases[lang.str()] = list;
    j["rephrases"] = rephrases;
    auto probes_json = [](const std::map<LanguageCode, std::vector<Probe>>& m) {
        ordered_json out = ordered_json::object();
        for (const auto& [lang, list] : m) {
            ordered_json arr = ordered_json::array();
            for (const auto& p : list) arr.push_back(probe_to_json(p));
            out[lang.str()] = arr;
        }
        return out;
    };
    j["locality_probes"] = probes_json(c.locality_probes);
    j["portability_probes"] = probes_json(c.portability_probes);
    return j.dump();
}

std::vector<EvalCase> read_cases(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open cases file: " + path);
    std::vector<EvalCase> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(parse_case(line));
        } catch (const DataError& e) {
            throw MalformedRecord(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_cases(const std::string& path, const std::vector<EvalCase>& cases) {
    std::string body;
    for (const auto& c : cases) {
        body += serialize_case(c);
        body += '\n';
    }
    atomic_write_file(path, body);
}

// ---- files ----

void atomic_write_file(const std::string& path, const std::string& contents) {
    // Unique per writer: concurrent writers of the same path (e.g. cache
    // fills for duplicate requests) must not race on one temp file.
    static std::atomic<std::uint64_t> serial{0};
    const std::string tmp = path + ".tmp." + std::to_string(::getpid()) + "." +
                            std::to_string(serial.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw DataError("short write: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw DataError("cannot rename " + tmp + " -> " + path);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace xkde
