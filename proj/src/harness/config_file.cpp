#include "harness/config_file.hpp"

#include <limits>
#include <set>
#include <utility>

#include <json.hpp>

#include "common/errors.hpp"
#include "core/record_io.hpp"

namespace xkde::harness {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---- strict section reader ----------------------------------------------------

// Wraps one JSON object: typed reads mark keys as consumed, done() rejects
// whatever was not, so typos surface with their full path.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_ + " must be an object");
    }

    bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    const json& raw(const char* key) {
        seen_.insert(key);
        return node_.at(key);
    }

    void read_string(const char* key, std::string& out) { read_typed(key, out, "a string"); }
    void read_bool(const char* key, bool& out) { read_typed(key, out, "a boolean"); }
    void read_double(const char* key, double& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(at(key) + " must be a number");
        out = v.get<double>();
    }
    void read_int(const char* key, int& out) {
        long long wide = out;
        read_integer(key, wide);
        out = static_cast<int>(wide);
    }
    void read_size(const char* key, std::size_t& out) {
        long long wide = static_cast<long long>(out);
        read_integer(key, wide);
        if (wide < 0) throw ConfigError(at(key) + " must not be negative");
        out = static_cast<std::size_t>(wide);
    }
    void read_seed(const char* key, std::uint64_t& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
            throw ConfigError(at(key) + " must be an integer");
        }
        out = v.get<std::uint64_t>();
    }
    void read_sizes(const char* key, std::vector<std::size_t>& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(at(key) + " must be an array of integers");
        out.clear();
        for (const auto& item : v) {
            if (!item.is_number_integer() && !item.is_number_unsigned()) {
                throw ConfigError(at(key) + " must contain only integers");
            }
            const long long n = item.get<long long>();
            if (n < 0) throw ConfigError(at(key) + " must not contain negative values");
            out.push_back(static_cast<std::size_t>(n));
        }
    }
    void read_lang(const char* key, LanguageCode& out) {
        std::string s = out.str();
        read_string(key, s);
        out = make_lang(s, at(key));
    }
    void read_langs(const char* key, std::vector<LanguageCode>& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(at(key) + " must be an array of language codes");
        out.clear();
        for (const auto& item : v) {
            if (!item.is_string()) throw ConfigError(at(key) + " must contain only strings");
            out.push_back(make_lang(item.get<std::string>(), at(key)));
        }
    }

    Reader sub(const char* key) {
        seen_.insert(key);
        return Reader(node_.at(key), at(key));
    }

    void done() const {
        for (const auto& [key, value] : node_.items()) {
            (void)value;
            if (!seen_.count(key)) throw ConfigError("unknown key '" + at(key.c_str()) + "'");
        }
    }

    std::string at(const char* key) const { return path_ + "." + key; }

private:
    static LanguageCode make_lang(const std::string& s, const std::string& where) {
        try {
            LanguageCode lang(s);
            validate_language(lang);
            return lang;
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }

    template <typename T>
    void read_typed(const char* key, T& out, const char* kind) {
        if (!has(key)) return;
        try {
            raw(key).get_to(out);
        } catch (const json::exception&) {
            throw ConfigError(at(key) + " must be " + kind);
        }
    }
    void read_integer(const char* key, long long& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
            throw ConfigError(at(key) + " must be an integer");
        }
        out = v.get<long long>();
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

// ---- section parsers ------------------------------------------------------------

void parse_stages(Reader& parent, const char* key, StageFlags& out) {
    if (!parent.has(key)) return;
    Reader r = parent.sub(key);
    r.read_bool("xeit", out.xeit);
    r.read_bool("tlpo", out.tlpo);
    r.done();
}

void parse_drops(Reader& parent, const char* key, data::AblationDrops& out) {
    if (!parent.has(key)) return;
    Reader r = parent.sub(key);
    r.read_bool("mono", out.mono);
    r.read_bool("cross", out.cross);
    r.read_bool("in_scope", out.in_scope);
    r.read_bool("out_of_scope", out.out_of_scope);
    r.read_bool("edit_descriptor", out.edit_descriptor);
    r.read_bool("long_text", out.long_text);
    r.done();
}

void parse_run(Reader& parent, RunConfig& out) {
    if (!parent.has("run")) return;
    Reader r = parent.sub("run");
    if (r.has("mode")) {
        std::string mode;
        r.read_string("mode", mode);
        out.mode = parse_run_mode(mode);
    }
    r.read_sizes("batch_sizes", out.batch_sizes);
    r.read_sizes("stream_sizes", out.stream_sizes);
    r.read_lang("edit_lang", out.edit_lang);
    r.read_langs("test_langs", out.test_langs);
    if (r.has("model")) {
        Reader m = r.sub("model");
        m.read_string("checkpoint", out.model.checkpoint);
        m.read_string("vocab", out.model.vocab);
        m.read_string("endpoint", out.model.endpoint);
        m.read_string("name", out.model.name);
        m.done();
    }
    r.read_size("top_k", out.top_k);
    parse_stages(r, "stages", out.stages);
    r.read_seed("seed", out.seed);
    r.read_string("output_dir", out.output_dir);
    r.read_string("cases", out.cases);
    r.read_bool("exact_match", out.exact_match);
    r.read_size("threads", out.threads);
    r.read_int("max_new_tokens", out.max_new_tokens);
    r.done();
}

void parse_quota_grid(Reader& r, data::BuildConfig& cfg) {
    const json& grid = r.raw("quotas");
    if (!grid.is_object()) throw ConfigError(r.at("quotas") + " must be an object");
    cfg.quotas.clear();
    for (const auto& [tag_key, langs] : grid.items()) {
        SourceTag tag;
        try {
            tag = parse_source_tag(tag_key);
        } catch (const Error& e) {
            throw ConfigError(r.at("quotas") + ": " + e.what());
        }
        Reader lr(langs, r.at("quotas") + "." + tag_key);
        for (const auto& [lang_key, quad] : langs.items()) {
            (void)quad;
            data::QuadrantQuota q;
            Reader qr = lr.sub(lang_key.c_str());
            qr.read_size("in_scope_with_edit", q.in_scope_with_edit);
            qr.read_size("in_scope_without_edit", q.in_scope_without_edit);
            qr.read_size("out_scope_with_edit", q.out_scope_with_edit);
            qr.read_size("out_scope_without_edit", q.out_scope_without_edit);
            qr.done();
            try {
                cfg.quotas[tag][LanguageCode(lang_key)] = q;
            } catch (const Error& e) {
                throw ConfigError(r.at("quotas") + ": " + e.what());
            }
        }
    }
}

void parse_build(Reader& parent, BuildSection& out) {
    if (!parent.has("build")) {
        out.config.quotas = data::default_build_config(out.scale).quotas;
        return;
    }
    Reader r = parent.sub("build");
    r.read_size("scale", out.scale);
    if (out.scale == 0) throw ConfigError(r.at("scale") + " must be positive");
    if (r.has("quotas")) {
        parse_quota_grid(r, out.config);
    } else {
        out.config.quotas = data::default_build_config(out.scale).quotas;
    }
    r.read_int("qc_threshold", out.config.qc_threshold);
    r.read_lang("source_lang", out.config.source_lang);
    r.read_langs("target_langs", out.config.target_langs);
    parse_drops(r, "drops", out.config.drops);
    r.read_int("regen_budget", out.config.regen_budget);
    r.read_seed("seed", out.config.seed);
    r.read_size("max_in_flight", out.config.max_in_flight);
    if (r.has("ops")) {
        Reader o = r.sub("ops");
        o.read_string("model", out.config.ops.model);
        o.read_double("gen_temperature", out.config.ops.gen_temperature);
        o.read_int("max_tokens", out.config.ops.max_tokens);
        o.done();
    }
    r.read_string("cases", out.cases);
    r.read_string("templates_dir", out.templates_dir);
    r.read_string("out", out.out);
    if (r.has("client")) {
        Reader c = r.sub("client");
        c.read_string("kind", out.client.kind);
        c.read_string("cache_dir", out.client.cache_dir);
        c.read_string("endpoint", out.client.endpoint);
        c.read_string("path", out.client.path);
        c.read_int("timeout_s", out.client.timeout_s);
        c.read_string("api_key_env", out.client.api_key_env);
        c.done();
        if (out.client.kind != "mock" && out.client.kind != "http") {
            throw ConfigError(r.at("client") + ".kind must be 'mock' or 'http'");
        }
    }
    r.done();
}

void parse_train_config(Reader& r, train::TrainConfig& cfg) {
    r.read_double("learning_rate", cfg.learning_rate);
    r.read_size("max_length", cfg.max_length);
    r.read_double("weight_decay", cfg.weight_decay);
    r.read_size("warmup_steps", cfg.warmup_steps);
    r.read_size("epochs", cfg.epochs);
    r.read_size("batch_size", cfg.batch_size);
    r.read_seed("seed", cfg.seed);
    r.read_double("adam_beta1", cfg.adam_beta1);
    r.read_double("adam_beta2", cfg.adam_beta2);
    r.read_double("adam_eps", cfg.adam_eps);
    r.read_string("checkpoint_dir", cfg.checkpoint_dir);
    r.read_string("curve_path", cfg.curve_path);
}

void parse_train(Reader& parent, TrainSection& out) {
    if (!parent.has("train")) return;
    Reader r = parent.sub("train");
    parse_train_config(r, out.config);
    r.read_string("dataset", out.dataset);
    r.read_string("vocab", out.vocab);
    r.read_string("model_in", out.model_in);
    r.read_string("model_out", out.model_out);
    r.read_int("hidden", out.hidden);
    r.done();
}

void parse_tlpo(Reader& parent, TlpoSection& out) {
    if (!parent.has("tlpo")) return;
    Reader r = parent.sub("tlpo");
    train::TlpoConfig& cfg = out.config;
    r.read_double("lambda", cfg.lambda);
    r.read_int("k", cfg.k);
    r.read_double("temperature", cfg.temperature);
    r.read_double("learning_rate", cfg.learning_rate);
    r.read_size("max_length", cfg.max_length);
    r.read_double("weight_decay", cfg.weight_decay);
    r.read_size("warmup_steps", cfg.warmup_steps);
    r.read_size("epochs", cfg.epochs);
    r.read_size("batch_size", cfg.batch_size);
    r.read_seed("seed", cfg.seed);
    r.read_double("pair_skip_delta", cfg.pair_skip_delta);
    r.read_int("max_new_tokens", cfg.max_new_tokens);
    r.read_bool("include_monolingual", cfg.include_monolingual);
    r.read_bool("raw_logprob", cfg.raw_logprob);
    r.read_string("preference_method", cfg.preference_method);
    r.read_double("dpo_beta", cfg.dpo_beta);
    r.read_string("checkpoint_dir", cfg.checkpoint_dir);
    r.read_string("curve_path", cfg.curve_path);
    r.read_string("cases", out.cases);
    r.read_string("vocab", out.vocab);
    r.read_string("model_in", out.model_in);
    r.read_string("model_out", out.model_out);
    r.read_string("equivalences", out.equivalences);
    r.read_string("pairs_out", out.pairs_out);
    r.read_double("aligner_beta", out.aligner_beta);
    r.done();
}

void parse_world(Reader& parent, WorldSection& out) {
    if (!parent.has("world")) return;
    Reader r = parent.sub("world");
    r.read_int("n_cases", out.config.n_cases);
    r.read_double("marker_noise", out.config.marker_noise);
    r.read_double("distractor_fraction", out.config.distractor_fraction);
    r.read_seed("seed", out.config.seed);
    r.done();
}

void check_variant_name(const std::string& name) {
    if (name.empty()) throw ConfigError("ablation variant names must not be empty");
    for (const char ch : name) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '-' ||
                        ch == '_';
        if (!ok) {
            throw ConfigError("ablation variant name '" + name +
                              "' may use only [a-z0-9_-] (it becomes a file name)");
        }
    }
}

void parse_ablate(Reader& parent, AblateSection& out) {
    out.variants = default_ablation_variants();
    if (!parent.has("ablate")) return;
    Reader r = parent.sub("ablate");
    r.read_string("base_checkpoint", out.base_checkpoint);
    r.read_string("vocab", out.vocab);
    r.read_string("training", out.training);
    r.read_string("cases", out.cases);
    r.read_string("equivalences", out.equivalences);
    r.read_double("aligner_beta", out.aligner_beta);
    if (r.has("variants")) {
        const json& list = r.raw("variants");
        if (!list.is_array()) throw ConfigError(r.at("variants") + " must be an array");
        out.variants.clear();
        std::set<std::string> names;
        for (std::size_t i = 0; i < list.size(); ++i) {
            AblationVariant v;
            Reader vr(list[i], r.at("variants") + "[" + std::to_string(i) + "]");
            vr.read_string("name", v.name);
            parse_stages(vr, "stages", v.stages);
            parse_drops(vr, "drops", v.drops);
            vr.done();
            check_variant_name(v.name);
            if (!names.insert(v.name).second) {
                throw ConfigError("duplicate ablation variant name '" + v.name + "'");
            }
            out.variants.push_back(std::move(v));
        }
        if (out.variants.empty()) throw ConfigError(r.at("variants") + " must not be empty");
    }
    r.done();
}

// ---- default document -----------------------------------------------------------

ordered_json stages_json(const StageFlags& s) {
    return {{"xeit", s.xeit}, {"tlpo", s.tlpo}};
}

ordered_json drops_json(const data::AblationDrops& d) {
    return {{"mono", d.mono},
            {"cross", d.cross},
            {"in_scope", d.in_scope},
            {"out_of_scope", d.out_of_scope},
            {"edit_descriptor", d.edit_descriptor},
            {"long_text", d.long_text}};
}

ordered_json langs_json(const std::vector<LanguageCode>& langs) {
    ordered_json arr = ordered_json::array();
    for (const auto& lang : langs) arr.push_back(lang.str());
    return arr;
}

} // namespace

std::vector<AblationVariant> default_ablation_variants() {
    const StageFlags full{true, true};
    std::vector<AblationVariant> variants;
    variants.push_back({"full", full, {}});
    variants.push_back({"xeit-only", StageFlags{true, false}, {}});
    variants.push_back({"base", StageFlags{false, false}, {}});
    data::AblationDrops no_mono;
    no_mono.mono = true;
    variants.push_back({"no-mono", full, no_mono});
    data::AblationDrops no_cross;
    no_cross.cross = true;
    variants.push_back({"no-cross", full, no_cross});
    return variants;
}

FileConfig parse_config_text(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text.empty() ? "{}" : text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    FileConfig out;
    Reader root(doc, origin);
    parse_run(root, out.run);
    parse_build(root, out.build);
    parse_train(root, out.train);
    parse_tlpo(root, out.tlpo);
    parse_world(root, out.world);
    parse_ablate(root, out.ablate);
    root.done();
    return out;
}

FileConfig load_config_file(const std::string& path) {
    if (path.empty()) return parse_config_text("", "config");
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(std::string("cannot read config file: ") + e.what());
    }
    return parse_config_text(text, path);
}

std::string apply_override(const std::string& doc_text, const std::string& dotted_key,
                           const std::string& value) {
    if (dotted_key.empty()) throw ConfigError("override key must not be empty");
    json doc;
    try {
        doc = json::parse(doc_text.empty() ? "{}" : doc_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) parsed = value; // not JSON: take it as a string

    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = dotted_key.find('.', start);
        const std::string part = dotted_key.substr(start, dot - start);
        if (part.empty()) throw ConfigError("override key '" + dotted_key + "' is malformed");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(parsed);
            break;
        }
        json& next = (*node)[part];
        if (!next.is_object()) next = json::object();
        node = &next;
        start = dot + 1;
    }
    return doc.dump();
}

std::string default_config_text() {
    const FileConfig d;

    ordered_json run;
    run["mode"] = to_string(d.run.mode);
    run["batch_sizes"] = d.run.batch_sizes;
    run["stream_sizes"] = d.run.stream_sizes;
    run["edit_lang"] = d.run.edit_lang.str();
    run["test_langs"] = langs_json(d.run.test_langs);
    run["model"] = {{"checkpoint", d.run.model.checkpoint},
                    {"vocab", d.run.model.vocab},
                    {"endpoint", d.run.model.endpoint},
                    {"name", d.run.model.name}};
    run["top_k"] = d.run.top_k;
    run["stages"] = stages_json(d.run.stages);
    run["seed"] = d.run.seed;
    run["output_dir"] = d.run.output_dir;
    run["cases"] = d.run.cases;
    run["exact_match"] = d.run.exact_match;
    run["threads"] = d.run.threads;
    run["max_new_tokens"] = d.run.max_new_tokens;

    ordered_json build;
    build["scale"] = d.build.scale;
    build["qc_threshold"] = d.build.config.qc_threshold;
    build["source_lang"] = d.build.config.source_lang.str();
    build["target_langs"] = langs_json(d.build.config.target_langs);
    build["drops"] = drops_json(d.build.config.drops);
    build["regen_budget"] = d.build.config.regen_budget;
    build["seed"] = d.build.config.seed;
    build["max_in_flight"] = d.build.config.max_in_flight;
    build["ops"] = {{"model", d.build.config.ops.model},
                    {"gen_temperature", d.build.config.ops.gen_temperature},
                    {"max_tokens", d.build.config.ops.max_tokens}};
    build["cases"] = d.build.cases;
    build["templates_dir"] = d.build.templates_dir;
    build["out"] = d.build.out;
    build["client"] = {{"kind", d.build.client.kind},
                       {"cache_dir", d.build.client.cache_dir},
                       {"endpoint", d.build.client.endpoint},
                       {"path", d.build.client.path},
                       {"timeout_s", d.build.client.timeout_s},
                       {"api_key_env", d.build.client.api_key_env}};

    ordered_json train;
    train["learning_rate"] = d.train.config.learning_rate;
    train["max_length"] = d.train.config.max_length;
    train["weight_decay"] = d.train.config.weight_decay;
    train["warmup_steps"] = d.train.config.warmup_steps;
    train["epochs"] = d.train.config.epochs;
    train["batch_size"] = d.train.config.batch_size;
    train["seed"] = d.train.config.seed;
    train["adam_beta1"] = d.train.config.adam_beta1;
    train["adam_beta2"] = d.train.config.adam_beta2;
    train["adam_eps"] = d.train.config.adam_eps;
    train["checkpoint_dir"] = d.train.config.checkpoint_dir;
    train["curve_path"] = d.train.config.curve_path;
    train["dataset"] = d.train.dataset;
    train["vocab"] = d.train.vocab;
    train["model_in"] = d.train.model_in;
    train["model_out"] = d.train.model_out;
    train["hidden"] = d.train.hidden;

    ordered_json tlpo;
    tlpo["lambda"] = d.tlpo.config.lambda;
    tlpo["k"] = d.tlpo.config.k;
    tlpo["temperature"] = d.tlpo.config.temperature;
    tlpo["learning_rate"] = d.tlpo.config.learning_rate;
    tlpo["max_length"] = d.tlpo.config.max_length;
    tlpo["weight_decay"] = d.tlpo.config.weight_decay;
    tlpo["warmup_steps"] = d.tlpo.config.warmup_steps;
    tlpo["epochs"] = d.tlpo.config.epochs;
    tlpo["batch_size"] = d.tlpo.config.batch_size;
    tlpo["seed"] = d.tlpo.config.seed;
    tlpo["pair_skip_delta"] = d.tlpo.config.pair_skip_delta;
    tlpo["max_new_tokens"] = d.tlpo.config.max_new_tokens;
    tlpo["include_monolingual"] = d.tlpo.config.include_monolingual;
    tlpo["raw_logprob"] = d.tlpo.config.raw_logprob;
    tlpo["preference_method"] = d.tlpo.config.preference_method;
    tlpo["dpo_beta"] = d.tlpo.config.dpo_beta;
    tlpo["checkpoint_dir"] = d.tlpo.config.checkpoint_dir;
    tlpo["curve_path"] = d.tlpo.config.curve_path;
    tlpo["cases"] = d.tlpo.cases;
    tlpo["vocab"] = d.tlpo.vocab;
    tlpo["model_in"] = d.tlpo.model_in;
    tlpo["model_out"] = d.tlpo.model_out;
    tlpo["equivalences"] = d.tlpo.equivalences;
    tlpo["pairs_out"] = d.tlpo.pairs_out;
    tlpo["aligner_beta"] = d.tlpo.aligner_beta;

    ordered_json world;
    world["n_cases"] = d.world.config.n_cases;
    world["marker_noise"] = d.world.config.marker_noise;
    world["distractor_fraction"] = d.world.config.distractor_fraction;
    world["seed"] = d.world.config.seed;

    ordered_json ablate;
    ablate["base_checkpoint"] = d.ablate.base_checkpoint;
    ablate["vocab"] = d.ablate.vocab;
    ablate["training"] = d.ablate.training;
    ablate["cases"] = d.ablate.cases;
    ablate["equivalences"] = d.ablate.equivalences;
    ablate["aligner_beta"] = d.ablate.aligner_beta;

    ordered_json doc;
    doc["run"] = run;
    doc["build"] = build;
    doc["train"] = train;
    doc["tlpo"] = tlpo;
    doc["world"] = world;
    doc["ablate"] = ablate;
    return doc.dump(2) + "\n";
}

} // namespace xkde::harness
