#include "toyworld/toyworld.hpp"

#include <array>
#include <cstdio>

#include <json.hpp>

#include "common/errors.hpp"
#include "common/rng.hpp"
#include "core/record_io.hpp"
#include "lm/edit_memory.hpp"

namespace xkde::toyworld {

namespace {

// ---------------------------------------------------------------------------
// closed token pools
// ---------------------------------------------------------------------------
// Names are two syllables from disjoint pools, so every subject and place is
// a single word token and no subject ever collides with a place. The first
// syllables of the two pools share no 3-character prefix, which keeps the
// concatenations globally unique.

const std::vector<std::string>& subject_names() {
    static const std::vector<std::string> names = [] {
        static const char* first[] = {"var", "tol", "mir", "ken", "osa", "bel", "run", "fei",
                                      "gal", "dor", "nev", "lus", "tam", "ryk", "zin"};
        static const char* second[] = {"an", "eth", "or", "ila", "us", "em", "ot", "ia",
                                       "el", "un", "ard", "iv", "ek", "oma", "ur"};
        std::vector<std::string> out;
        for (const char* a : first) {
            for (const char* b : second) out.push_back(std::string(a) + b);
        }
        return out;
    }();
    return names;
}

const std::vector<std::string>& place_names() {
    static const std::vector<std::string> names = [] {
        static const char* first[] = {"brin", "osk", "mel", "tarn", "vey", "qul", "ard", "fenn"};
        static const char* second[] = {"ia", "or", "um"};
        std::vector<std::string> out;
        for (const char* a : first) {
            for (const char* b : second) out.push_back(std::string(a) + b);
        }
        return out;
    }();
    return names;
}

const std::vector<std::string>& color_names() {
    static const std::vector<std::string> names = {"crimson", "teal",  "amber",
                                                   "violet",  "slate", "jade"};
    return names;
}

// ---------------------------------------------------------------------------
// per-language phrasing
// ---------------------------------------------------------------------------
// Content tokens (subjects, places, colors) are shared; only the function
// words differ. The second "language" is romanized so the whole corpus stays
// inside the ASCII-word tokenizer rule.

bool is_en(const LanguageCode& lang) { return lang == LanguageCode("en"); }

std::string marker(const LanguageCode& lang) { return lm::ToyVocab::marker(lang); }

std::string main_query(const LanguageCode& lang, const std::string& s) {
    return is_en(lang) ? "where does " + s + " live now ?" : s + " xianzai zhu zai nali ?";
}

std::string rephrase0(const LanguageCode& lang, const std::string& s) {
    return is_en(lang) ? "in which town does " + s + " reside ?"
                       : s + " de jia xianzai zai nar ?";
}

std::string rephrase1(const LanguageCode& lang, const std::string& s) {
    return is_en(lang) ? "name the current home of " + s + " ."
                       : "qing shuo chu " + s + " de zhu chu .";
}

std::string locality_query(const LanguageCode& lang, const std::string& s) {
    return is_en(lang) ? "what color is the banner of " + s + " ?"
                       : s + " de qizhi shi shenme yanse ?";
}

std::string portability_query(const LanguageCode& lang, const std::string& s) {
    return is_en(lang) ? "which region contains the home of " + s + " ?"
                       : s + " de jia zai na ge diqu ?";
}

std::string region_word(const LanguageCode& lang) { return is_en(lang) ? "region" : "diqu"; }

std::string place_answer(const LanguageCode& mark, const std::string& place) {
    return marker(mark) + " " + place;
}

std::string region_answer(const LanguageCode& mark, const LanguageCode& words,
                          const std::string& place) {
    return marker(mark) + " " + place + " " + region_word(words);
}

// ---------------------------------------------------------------------------
// generation
// ---------------------------------------------------------------------------

struct CaseFacts {
    std::string subject;
    std::string place_old;
    std::string place_new;
    std::string color;
    bool marker_flip = false; // cross-lingual supervised answers mis-marked
};

std::string case_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "toy-%04d", i);
    return buf;
}

ParallelSample make_sample(const std::string& id, const LanguageCode& edit_lang,
                           const LanguageCode& query_lang, Scope scope,
                           std::optional<std::string> edit_text, std::string query,
                           std::string answer) {
    ParallelSample s;
    s.id = id;
    s.source_tag = SourceTag::synthetic;
    s.edit_lang = edit_lang;
    s.query_lang = query_lang;
    s.scope = scope;
    s.with_edit = edit_text.has_value();
    s.edit_text = std::move(edit_text);
    s.query = std::move(query);
    s.answer = std::move(answer);
    validate_sample(s);
    return s;
}

} // namespace

const std::vector<LanguageCode>& world_languages() {
    static const std::vector<LanguageCode> langs = {LanguageCode("en"), LanguageCode("zh")};
    return langs;
}

void validate_world_config(const WorldConfig& cfg) {
    if (cfg.n_cases < 1 || cfg.n_cases > static_cast<int>(subject_names().size())) {
        throw ConfigError("world size must lie in [1, " +
                          std::to_string(subject_names().size()) + "], got " +
                          std::to_string(cfg.n_cases));
    }
    if (cfg.marker_noise < 0.0 || cfg.marker_noise > 1.0) {
        throw ConfigError("marker noise must lie in [0,1]");
    }
    if (cfg.distractor_fraction < 0.0 || cfg.distractor_fraction > 1.0) {
        throw ConfigError("distractor fraction must lie in [0,1]");
    }
}

ToyWorld make_world(const WorldConfig& cfg) {
    validate_world_config(cfg);
    const auto& langs = world_languages();
    const auto& places = place_names();

    // Facts first: everything else derives from them.
    std::vector<CaseFacts> facts(static_cast<std::size_t>(cfg.n_cases));
    for (int i = 0; i < cfg.n_cases; ++i) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        CaseFacts& f = facts[static_cast<std::size_t>(i)];
        f.subject = subject_names()[static_cast<std::size_t>(i)];
        const std::size_t old_ix = rng.below(places.size());
        std::size_t new_ix = rng.below(places.size() - 1);
        if (new_ix >= old_ix) ++new_ix; // the edit always changes the fact
        f.place_old = places[old_ix];
        f.place_new = places[new_ix];
        f.color = color_names()[rng.below(color_names().size())];
        f.marker_flip = rng.uniform01() < cfg.marker_noise;
    }

    ToyWorld world;

    // ---- benchmark cases ----
    for (int i = 0; i < cfg.n_cases; ++i) {
        const CaseFacts& f = facts[static_cast<std::size_t>(i)];
        EvalCase c;
        c.id = case_id(i);
        for (const auto& lang : langs) {
            EditDescriptor d;
            d.id = c.id;
            d.lang = lang;
            d.subject = f.subject;
            d.prompt = main_query(lang, f.subject);
            d.target_new = place_answer(lang, f.place_new);
            d.target_old = place_answer(lang, f.place_old);
            c.edit[lang] = d;
            c.rephrases[lang] = {rephrase0(lang, f.subject), rephrase1(lang, f.subject)};
            c.locality_probes[lang] = {
                {locality_query(lang, f.subject), marker(lang) + " " + f.color}};
            c.portability_probes[lang] = {
                {portability_query(lang, f.subject), region_answer(lang, lang, f.place_new)}};
        }
        validate_case(c);
        world.cases.push_back(std::move(c));
    }

    // ---- pre-training corpus: the unedited world, no edit lines ----
    for (int i = 0; i < cfg.n_cases; ++i) {
        const CaseFacts& f = facts[static_cast<std::size_t>(i)];
        const std::string id = case_id(i);
        for (const auto& lang : langs) {
            const std::string tag = id + "-" + lang.str();
            const std::string old_ans = place_answer(lang, f.place_old);
            world.pretrain.push_back(make_sample(tag + "-pre-main", lang, lang, Scope::in_scope,
                                                 std::nullopt, main_query(lang, f.subject),
                                                 old_ans));
            world.pretrain.push_back(make_sample(tag + "-pre-re0", lang, lang, Scope::in_scope,
                                                 std::nullopt, rephrase0(lang, f.subject),
                                                 old_ans));
            world.pretrain.push_back(make_sample(tag + "-pre-re1", lang, lang, Scope::in_scope,
                                                 std::nullopt, rephrase1(lang, f.subject),
                                                 old_ans));
            world.pretrain.push_back(make_sample(tag + "-pre-loc", lang, lang,
                                                 Scope::out_of_scope, std::nullopt,
                                                 locality_query(lang, f.subject),
                                                 marker(lang) + " " + f.color));
            world.pretrain.push_back(make_sample(tag + "-pre-port", lang, lang,
                                                 Scope::out_of_scope, std::nullopt,
                                                 portability_query(lang, f.subject),
                                                 region_answer(lang, lang, f.place_old)));
        }
    }

    // ---- instruction-tuning corpus: the four scope/edit quadrants ----
    for (int i = 0; i < cfg.n_cases; ++i) {
        const CaseFacts& f = facts[static_cast<std::size_t>(i)];
        const std::string id = case_id(i);
        const EvalCase& c = world.cases[static_cast<std::size_t>(i)];
        Rng rng(derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)), 0x7261));

        // Splices a second edit line into the single edit-text field; the
        // prompt frame renders it as two retrieved descriptors, which is
        // byte-identical to what the decoder emits at top-k 2.
        const auto with_distractor = [&](std::string own) {
            if (rng.uniform01() >= cfg.distractor_fraction || cfg.n_cases < 2) return own;
            std::size_t j = rng.below(static_cast<std::uint64_t>(cfg.n_cases - 1));
            if (j >= static_cast<std::size_t>(i)) ++j;
            const std::string other =
                serialize_edit(world.cases[j].edit.at(langs[rng.below(langs.size())]));
            const bool own_first = rng.below(2) == 0;
            const std::string& a = own_first ? own : other;
            const std::string& b = own_first ? other : own;
            return a + "\n[Edit description]: " + b;
        };

        for (const auto& e : langs) {
            const std::string edit_text = serialize_edit(c.edit.at(e));
            for (const auto& q : langs) {
                const std::string tag = id + "-" + e.str() + q.str();
                // Cross-lingual answers in flipped cases carry the edit
                // language's marker: the stage-1 failure mode.
                const LanguageCode mark = (e != q && f.marker_flip) ? e : q;
                world.training.push_back(make_sample(
                    tag + "-we-main", e, q, Scope::in_scope, with_distractor(edit_text),
                    main_query(q, f.subject), place_answer(mark, f.place_new)));
                world.training.push_back(make_sample(
                    tag + "-we-re0", e, q, Scope::in_scope, with_distractor(edit_text),
                    rephrase0(q, f.subject), place_answer(mark, f.place_new)));
                world.training.push_back(make_sample(
                    tag + "-we-port", e, q, Scope::in_scope, with_distractor(edit_text),
                    portability_query(q, f.subject), region_answer(mark, q, f.place_new)));
                world.training.push_back(make_sample(
                    tag + "-we-loc", e, q, Scope::out_of_scope, with_distractor(edit_text),
                    locality_query(q, f.subject), marker(q) + " " + f.color));
            }
        }
        for (const auto& q : langs) {
            const std::string tag = id + "-" + q.str();
            world.training.push_back(make_sample(tag + "-wo-main", q, q, Scope::in_scope,
                                                 std::nullopt, main_query(q, f.subject),
                                                 place_answer(q, f.place_old)));
            world.training.push_back(make_sample(tag + "-wo-loc", q, q, Scope::out_of_scope,
                                                 std::nullopt, locality_query(q, f.subject),
                                                 marker(q) + " " + f.color));
        }
    }

    // ---- vocabulary: exactly the strings the model will ever see ----
    world.vocab.add_text(lm::edit_block("") + lm::query_frame(""));
    for (const auto& lang : langs) world.vocab.add_word(marker(lang));
    for (const auto& c : world.cases) {
        for (const auto& [lang, d] : c.edit) {
            world.vocab.add_text(serialize_edit(d));
            if (d.target_old) world.vocab.add_text(*d.target_old);
        }
        for (const auto& [lang, list] : c.rephrases) {
            for (const auto& r : list) world.vocab.add_text(r);
        }
        for (const auto& [lang, probes] : c.locality_probes) {
            for (const auto& p : probes) world.vocab.add_text(p.query + " " + p.answer);
        }
        for (const auto& [lang, probes] : c.portability_probes) {
            for (const auto& p : probes) world.vocab.add_text(p.query + " " + p.answer);
        }
    }
    for (const auto& s : world.training) world.vocab.add_text(s.query + " " + s.answer);
    for (const auto& s : world.pretrain) world.vocab.add_text(s.query + " " + s.answer);

    // ---- cross-language token pairs for the noisy channel ----
    world.equivalences = {
        {"where", "nali"},  {"live", "zhu"},     {"now", "xianzai"}, {"home", "jia"},
        {"color", "yanse"}, {"banner", "qizhi"}, {"what", "shenme"}, {"region", "diqu"},
        {"town", "nar"},
    };
    return world;
}

align::ToyTranslator make_translator(const ToyWorld& world, double beta) {
    // The channel vocabulary is the world's word list without the reserved
    // specials, which never appear in text.
    std::vector<std::string> words;
    for (int i = 4; i < world.vocab.size(); ++i) words.push_back(world.vocab.token(i));
    align::ToyTranslator translator(std::move(words), beta);
    for (const auto& group : world.equivalences) translator.add_equivalence(group);
    return translator;
}

void write_equivalences(const std::vector<std::vector<std::string>>& groups,
                        const std::string& path) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& group : groups) doc.push_back(group);
    atomic_write_file(path, doc.dump(2) + "\n");
}

std::vector<std::vector<std::string>> read_equivalences(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRecord(path + ": " + e.what());
    }
    if (!doc.is_array()) throw SchemaViolation("equivalences", "expected an array of arrays");
    std::vector<std::vector<std::string>> out;
    for (const auto& group : doc) {
        if (!group.is_array()) {
            throw SchemaViolation("equivalences", "expected an array of arrays");
        }
        std::vector<std::string> g;
        for (const auto& token : group) {
            if (!token.is_string()) {
                throw SchemaViolation("equivalences", "groups must hold strings");
            }
            g.push_back(token.get<std::string>());
        }
        out.push_back(std::move(g));
    }
    return out;
}

} // namespace xkde::toyworld
