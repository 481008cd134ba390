#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "align/align.hpp"
#include "common/errors.hpp"
#include "core/record_io.hpp"
#include "lm/edit_memory.hpp"
#include "lm/toy_lm.hpp"
#include "toyworld/toyworld.hpp"
#include "train/format.hpp"

using namespace xkde;
using namespace xkde::toyworld;

namespace {

WorldConfig small_config() {
    WorldConfig cfg;
    cfg.n_cases = 24;
    return cfg;
}

std::string world_bytes(const ToyWorld& w) {
    std::string out;
    for (const auto& c : w.cases) out += serialize_case(c) + "\n";
    for (const auto& s : w.pretrain) out += serialize_sample(s) + "\n";
    for (const auto& s : w.training) out += serialize_sample(s) + "\n";
    for (int i = 0; i < w.vocab.size(); ++i) out += w.vocab.token(i) + "\n";
    return out;
}

// Every word of every string the model can meet must be in-vocabulary.
bool unk_free(const lm::ToyVocab& vocab, const std::string& text) {
    for (int id : vocab.encode(text)) {
        if (id == lm::ToyVocab::kUnk) return false;
    }
    return true;
}

} // namespace

TEST_CASE("the generated world has the advertised shape") {
    const ToyWorld w = make_world(small_config());
    REQUIRE(w.cases.size() == 24);
    CHECK(w.pretrain.size() == 24 * 2 * 5);
    CHECK(w.training.size() == 24 * (4 * 4 + 2 * 2));

    std::set<std::string> ids;
    for (const auto& c : w.cases) {
        CHECK_NOTHROW(validate_case(c));
        CHECK(ids.insert(c.id).second);
        for (const auto& lang : world_languages()) {
            const auto& d = c.edit.at(lang);
            CHECK(d.target_new != d.target_old.value());      // the edit changes the fact
            CHECK(c.rephrases.at(lang).size() == 2);
            CHECK(c.locality_probes.at(lang).size() == 1);
            CHECK(c.portability_probes.at(lang).size() == 1);
        }
    }
    std::set<std::string> sample_ids;
    for (const auto& s : w.pretrain) CHECK(sample_ids.insert(s.id).second);
    for (const auto& s : w.training) CHECK(sample_ids.insert(s.id).second);

    // Subjects are unique across cases (retrieval hinges on it).
    std::set<std::string> subjects;
    for (const auto& c : w.cases) {
        CHECK(subjects.insert(c.edit.at(LanguageCode("en")).subject).second);
    }
}

TEST_CASE("the full-size world stays inside the toy model budget") {
    WorldConfig cfg;
    cfg.n_cases = 200;
    const ToyWorld w = make_world(cfg);
    CHECK(w.vocab.size() <= 320);
    CHECK(lm::ToyLm(w.vocab.size(), 64, 0).n_params() <= 50000);

    // Markers tokenize as single words.
    for (const auto& lang : world_languages()) {
        const auto ids = w.vocab.encode(lm::ToyVocab::marker(lang));
        REQUIRE(ids.size() == 1);
        CHECK(ids[0] != lm::ToyVocab::kUnk);
    }

    // No string in the world falls back to <unk>: frames, edits, queries,
    // answers, probes.
    CHECK(unk_free(w.vocab, lm::edit_block("x") + lm::query_frame("y")) == false); // sanity: x,y unknown
    for (const auto& c : w.cases) {
        for (const auto& [lang, d] : c.edit) {
            CHECK(unk_free(w.vocab, lm::edit_block(serialize_edit(d)) + lm::query_frame(d.prompt)));
            CHECK(unk_free(w.vocab, d.target_new));
            CHECK(unk_free(w.vocab, *d.target_old));
        }
        for (const auto& [lang, list] : c.rephrases) {
            for (const auto& r : list) CHECK(unk_free(w.vocab, r));
        }
        for (const auto& [lang, probes] : c.locality_probes) {
            for (const auto& p : probes) CHECK(unk_free(w.vocab, p.query + " " + p.answer));
        }
        for (const auto& [lang, probes] : c.portability_probes) {
            for (const auto& p : probes) CHECK(unk_free(w.vocab, p.query + " " + p.answer));
        }
    }
    for (const auto& s : w.training) {
        CHECK(unk_free(w.vocab, s.query + " " + s.answer));
        if (s.edit_text) CHECK(unk_free(w.vocab, *s.edit_text));
    }

    // Every training sample formats within the toy context window.
    std::size_t longest = 0;
    for (const auto& s : w.training) {
        const auto ex = train::format_example(s, w.vocab, 256);
        longest = std::max(longest, ex.tokens.size());
    }
    CHECK(longest <= 64); // plenty of room for multi-edit prompts at eval
}

TEST_CASE("world generation is deterministic and config-sensitive") {
    const ToyWorld a = make_world(small_config());
    const ToyWorld b = make_world(small_config());
    CHECK(world_bytes(a) == world_bytes(b));

    WorldConfig other = small_config();
    other.seed = 8;
    CHECK(world_bytes(make_world(other)) != world_bytes(a));
}

TEST_CASE("marker noise mislabels cross-lingual answers per case") {
    WorldConfig cfg = small_config();
    cfg.n_cases = 60;

    const auto flipped_cases = [&](const ToyWorld& w) {
        std::set<std::string> flipped;
        for (const auto& s : w.training) {
            if (!s.with_edit || s.scope != Scope::in_scope) continue;
            if (s.edit_lang == s.query_lang) continue;
            const std::string want = lm::ToyVocab::marker(s.query_lang);
            const std::string got = w.vocab.pieces(s.answer).front();
            if (got != want) {
                CHECK(got == lm::ToyVocab::marker(s.edit_lang));
                flipped.insert(s.id.substr(0, 8)); // "toy-0000"
            }
        }
        return flipped;
    };

    cfg.marker_noise = 0.0;
    CHECK(flipped_cases(make_world(cfg)).empty());

    cfg.marker_noise = 1.0;
    CHECK(flipped_cases(make_world(cfg)).size() == 60);

    cfg.marker_noise = 0.35;
    const std::size_t n = flipped_cases(make_world(cfg)).size();
    CHECK(n >= 12); // loose binomial band around 21 of 60
    CHECK(n <= 32);

    // Monolingual answers are never mislabeled, whatever the noise.
    const ToyWorld noisy = make_world(cfg);
    for (const auto& s : noisy.training) {
        if (s.edit_lang != s.query_lang) continue;
        CHECK(noisy.vocab.pieces(s.answer).front() ==
              lm::ToyVocab::marker(s.query_lang));
    }
}

TEST_CASE("distractor splicing renders a second edit line") {
    WorldConfig cfg = small_config();
    cfg.n_cases = 40;

    cfg.distractor_fraction = 0.0;
    for (const auto& s : make_world(cfg).training) {
        if (s.edit_text) CHECK(s.edit_text->find('\n') == std::string::npos);
    }

    cfg.distractor_fraction = 0.25;
    const ToyWorld w = make_world(cfg);
    std::size_t with_edit = 0, spliced = 0;
    for (const auto& s : w.training) {
        if (!s.edit_text) continue;
        ++with_edit;
        const std::string prompt = lm::edit_block(*s.edit_text);
        const std::size_t lines = static_cast<std::size_t>(
            std::count(prompt.begin(), prompt.end(), '\n'));
        if (s.edit_text->find('\n') == std::string::npos) {
            CHECK(lines == 1);
            continue;
        }
        ++spliced;
        // The spliced field renders exactly like two retrieved descriptors.
        CHECK(lines == 2);
        std::size_t blocks = 0, pos = 0;
        while ((pos = prompt.find("[Edit description]: ", pos)) != std::string::npos) {
            ++blocks;
            pos += 1;
        }
        CHECK(blocks == 2);
        CHECK(unk_free(w.vocab, prompt));
    }
    const double rate = static_cast<double>(spliced) / static_cast<double>(with_edit);
    CHECK(rate > 0.15);
    CHECK(rate < 0.35);
}

TEST_CASE("the noisy channel prefers the right marker and knows word pairs") {
    const ToyWorld w = make_world(small_config());
    const align::ToyTranslator tr = make_translator(w);
    const LanguageCode zh("zh");

    const auto& d = w.cases.front().edit.at(zh);
    const std::string& gold = d.target_new; // "⟨zh⟩ <place>"
    const std::string wrong =
        "⟨en⟩" + gold.substr(std::string("⟨zh⟩").size()); // same place, wrong marker

    const double right_score = align::alignment_score(tr, gold, gold, zh).value;
    const double flip_score = align::alignment_score(tr, wrong, gold, zh).value;
    CHECK(right_score > flip_score);

    const auto order = align::rank({wrong, gold}, gold, tr, zh);
    CHECK(order.front() == 1);

    // Registered translation pairs count as matches for the channel.
    const double en_words =
        align::alignment_score(tr, "which region", "na ge diqu", zh).value;
    const double unrelated =
        align::alignment_score(tr, "crimson banner", "na ge diqu", zh).value;
    CHECK(en_words > unrelated);
}

TEST_CASE("equivalence groups round-trip through their file form") {
    const ToyWorld w = make_world(small_config());
    const std::string path = "/tmp/xkde_equiv_test.json";
    write_equivalences(w.equivalences, path);
    CHECK(read_equivalences(path) == w.equivalences);
    std::filesystem::remove(path);

    const std::string bad = "/tmp/xkde_equiv_bad.json";
    atomic_write_file(bad, "{\"not\": \"an array\"}\n");
    CHECK_THROWS_AS(read_equivalences(bad), SchemaViolation);
    atomic_write_file(bad, "[[1, 2]]\n");
    CHECK_THROWS_AS(read_equivalences(bad), SchemaViolation);
    atomic_write_file(bad, "not json\n");
    CHECK_THROWS_AS(read_equivalences(bad), MalformedRecord);
    std::filesystem::remove(bad);
}

TEST_CASE("world configuration is validated") {
    WorldConfig cfg;
    CHECK_NOTHROW(validate_world_config(cfg));
    cfg.n_cases = 0;
    CHECK_THROWS_AS(validate_world_config(cfg), ConfigError);
    cfg.n_cases = 226;
    CHECK_THROWS_AS(validate_world_config(cfg), ConfigError);
    cfg = WorldConfig{};
    cfg.marker_noise = 1.5;
    CHECK_THROWS_AS(validate_world_config(cfg), ConfigError);
    cfg = WorldConfig{};
    cfg.distractor_fraction = -0.1;
    CHECK_THROWS_AS(validate_world_config(cfg), ConfigError);
}
