#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "common/errors.hpp"
#include "common/rng.hpp"
#include "common/text.hpp"
#include "metrics/metrics.hpp"
#include "metrics/report.hpp"
#include "support/fake_models.hpp"

using namespace xkde;
using namespace xkde::metrics;
using namespace xkde::testsupport;

namespace {

// Independent per-case loops, written with no shared code with the library
// implementation. Positional accuracy, mean-within-case-then-across-cases.
double oracle_match(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    int hit = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (i < pred.size() && pred[i] == gold[i]) hit++;
    }
    return double(hit) / double(gold.size());
}

double oracle_reliability(const EditedModelProvider& edited, const std::vector<EvalCase>& cases,
                          const std::string& test_lang) {
    double total = 0;
    for (const EvalCase& c : cases) {
        const EditDescriptor& d = c.edit.at(LanguageCode(test_lang));
        auto m = edited(c);
        total += oracle_match(m->decode(d.prompt), split_tokens(d.target_new));
    }
    return total / double(cases.size());
}

double oracle_generality(const EditedModelProvider& edited, const std::vector<EvalCase>& cases,
                         const std::string& test_lang) {
    double total = 0;
    int counted = 0;
    for (const EvalCase& c : cases) {
        const auto& rs = c.rephrases.at(LanguageCode(test_lang));
        if (rs.empty()) continue;
        const EditDescriptor& d = c.edit.at(LanguageCode(test_lang));
        auto m = edited(c);
        double case_sum = 0;
        for (const auto& q : rs) case_sum += oracle_match(m->decode(q), split_tokens(d.target_new));
        total += case_sum / double(rs.size());
        counted++;
    }
    return total / double(counted);
}

double oracle_locality(const EditedModelProvider& edited, const Decoder& base,
                       const std::vector<EvalCase>& cases, const std::string& test_lang) {
    double total = 0;
    int counted = 0;
    for (const EvalCase& c : cases) {
        const auto& probes = c.locality_probes.at(LanguageCode(test_lang));
        if (probes.empty()) continue;
        auto m = edited(c);
        double case_sum = 0;
        for (const auto& p : probes) {
            auto ref = base.decode(p.query);
            auto post = m->decode(p.query);
            if (ref.empty()) {
                case_sum += post.empty() ? 1.0 : 0.0;
            } else {
                case_sum += oracle_match(post, ref);
            }
        }
        total += case_sum / double(probes.size());
        counted++;
    }
    return total / double(counted);
}

double oracle_portability(const EditedModelProvider& edited, const std::vector<EvalCase>& cases,
                          const std::string& test_lang) {
    double total = 0;
    int counted = 0;
    for (const EvalCase& c : cases) {
        const auto& probes = c.portability_probes.at(LanguageCode(test_lang));
        if (probes.empty()) continue;
        auto m = edited(c);
        double case_sum = 0;
        for (const auto& p : probes) case_sum += oracle_match(m->decode(p.query), split_tokens(p.answer));
        total += case_sum / double(probes.size());
        counted++;
    }
    return total / double(counted);
}

EditedModelProvider shared_provider(std::shared_ptr<const Decoder> d) {
    return [d](const EvalCase&) { return d; };
}

} // namespace

TEST_CASE("token_match basics") {
    CHECK(token_match({"a", "b", "c"}, {"a", "b", "c"}) == 1.0);
    CHECK(token_match({"a", "x", "c"}, {"a", "b", "c"}) == doctest::Approx(2.0 / 3.0));
    CHECK(token_match({"a"}, {"a", "b"}) == doctest::Approx(0.5));
    CHECK(token_match({}, {"a"}) == 0.0);
    CHECK(token_match({"a", "b", "c", "d"}, {"a", "b"}) == 1.0); // extra tokens ignored
    CHECK_THROWS_AS(token_match({"a"}, {}), EmptyGold);
}

TEST_CASE("reliability: perfect and mixed models") {
    auto cases = make_synthetic_cases(4);
    auto perfect = std::make_shared<ScriptedDecoder>();
    for (const auto& c : cases) {
        for (const auto& [lang, d] : c.edit) perfect->set(d.prompt, d.target_new);
    }
    auto v = reliability(shared_provider(perfect), cases, LanguageCode("en"), LanguageCode("en"));
    CHECK(v.value == 1.0);
    CHECK(v.n_cases == 4);

    // two cases at 1.0 and 0.5 average to 0.75
    auto half = std::make_shared<ScriptedDecoder>();
    auto two = std::vector<EvalCase>{cases[0], cases[1]};
    half->set(two[0].edit.at(LanguageCode("en")).prompt,
              two[0].edit.at(LanguageCode("en")).target_new);
    {
        const auto& d = two[1].edit.at(LanguageCode("en"));
        auto gold = split_tokens(d.target_new);
        // answer only matches on even positions by construction: single-token
        // golds here, so miss entirely -> use rephrase-style partial: append junk
        half->set(d.prompt, gold[0] + " junk");
    }
    // gold for these cases is a single token, so scores are 1.0 and 1.0; force
    // a true half by making the second answer empty instead:
    half->set(two[1].edit.at(LanguageCode("en")).prompt, "wrongtown");
    auto v2 = reliability(shared_provider(half), two, LanguageCode("en"), LanguageCode("en"));
    CHECK(v2.value == doctest::Approx(0.5));
}

TEST_CASE("cross-lingual and monolingual reliability share one code path") {
    auto cases = make_synthetic_cases(6);
    auto model = std::make_shared<HashDecoder>("xl");
    const auto mono = reliability(shared_provider(model), cases, LanguageCode("en"),
                                  LanguageCode("en"));
    // calling the "cross-lingual form" with edit==test must be the same number
    const auto mono_again = reliability(shared_provider(model), cases, LanguageCode("en"),
                                        LanguageCode("en"));
    CHECK(mono.value == mono_again.value);
    // cross direction works when both languages exist
    CHECK_NOTHROW(reliability(shared_provider(model), cases, LanguageCode("en"),
                              LanguageCode("zh")));
    // missing language reported
    std::vector<EvalCase> en_only = cases;
    for (auto& c : en_only) {
        c.edit.erase(LanguageCode("zh"));
        c.rephrases.erase(LanguageCode("zh"));
        c.locality_probes.erase(LanguageCode("zh"));
        c.portability_probes.erase(LanguageCode("zh"));
    }
    CHECK_THROWS_AS(reliability(shared_provider(model), en_only, LanguageCode("en"),
                                LanguageCode("zh")),
                    MissingLanguage);
}

TEST_CASE("generality skips caseless rephrase lists and errors when all skip") {
    auto cases = make_synthetic_cases(3);
    auto model = std::make_shared<HashDecoder>("gen");
    cases[1].rephrases[LanguageCode("en")] = {};
    auto v = generality(shared_provider(model), cases, LanguageCode("en"), LanguageCode("en"));
    CHECK(v.n_cases == 2);
    for (auto& c : cases) c.rephrases[LanguageCode("en")] = {};
    CHECK_THROWS_AS(generality(shared_provider(model), cases, LanguageCode("en"),
                               LanguageCode("en")),
                    AllCasesSkipped);
}

TEST_CASE("generality within-case mean: probes scoring {1,1,0} give 2/3") {
    auto cases = make_synthetic_cases(1);
    EvalCase& c = cases[0];
    const auto& d = c.edit.at(LanguageCode("en"));
    c.rephrases[LanguageCode("en")] = {"q one", "q two", "q three"};
    auto model = std::make_shared<ScriptedDecoder>();
    model->set("q one", d.target_new);
    model->set("q two", d.target_new);
    model->set("q three", "somethingelse");
    auto v = generality(shared_provider(model), cases, LanguageCode("en"), LanguageCode("en"));
    CHECK(v.value == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("locality: identity edit scores 1.0, disjoint answers score 0.0") {
    auto cases = make_synthetic_cases(5);
    auto base = std::make_shared<HashDecoder>("base");
    // edited model identical to base
    auto v = locality(shared_provider(base), *base, cases, LanguageCode("en"),
                      LanguageCode("en"));
    CHECK(v.value == 1.0);
    // edited model answers every probe with a token-disjoint fixed phrase
    auto noisy = std::make_shared<ScriptedDecoder>(std::map<std::string, std::string>{},
                                                   "完全不同 答案");
    auto v0 = locality(shared_provider(noisy), *base, cases, LanguageCode("en"),
                       LanguageCode("en"));
    CHECK(v0.value == 0.0);
}

TEST_CASE("portability: fixed-output model matching probe answers") {
    auto cases = make_synthetic_cases(1);
    EvalCase& c = cases[0];
    c.portability_probes[LanguageCode("en")] = {{"probe q", "fixed answer"}};
    auto model =
        std::make_shared<ScriptedDecoder>(std::map<std::string, std::string>{}, "fixed answer");
    auto v = portability(shared_provider(model), cases, LanguageCode("en"), LanguageCode("en"));
    CHECK(v.value == 1.0);
    for (auto& cc : cases) cc.portability_probes[LanguageCode("en")] = {};
    CHECK_THROWS_AS(portability(shared_provider(model), cases, LanguageCode("en"),
                                LanguageCode("en")),
                    AllCasesSkipped);
}

TEST_CASE("oracle equivalence on 50 synthetic cases, both directions") {
    const auto cases = make_synthetic_cases(50, 2024);
    std::map<std::string, std::string> gold;
    for (const auto& c : cases) {
        for (const auto& [lang, d] : c.edit) gold[d.prompt] = d.target_new;
        for (const auto& [lang, rs] : c.rephrases) {
            for (const auto& q : rs) gold[q] = c.edit.at(lang).target_new;
        }
        for (const auto& [lang, ps] : c.portability_probes) {
            for (const auto& p : ps) gold[p.query] = p.answer;
        }
    }
    auto edited = std::make_shared<MixedDecoder>(gold, "edited-salt", 3);
    auto base = std::make_shared<HashDecoder>("base-salt");
    auto provider = shared_provider(edited);

    for (const std::string& el : {"en", "zh"}) {
        for (const std::string& tl : {"en", "zh"}) {
            const LanguageCode elc(el), tlc(tl);
            const double r = reliability(provider, cases, elc, tlc).value;
            const double g = generality(provider, cases, elc, tlc).value;
            const double l = locality(provider, *base, cases, elc, tlc).value;
            const double p = portability(provider, cases, elc, tlc).value;
            CHECK(std::abs(r - oracle_reliability(provider, cases, tl)) <= 1e-12);
            CHECK(std::abs(g - oracle_generality(provider, cases, tl)) <= 1e-12);
            CHECK(std::abs(l - oracle_locality(provider, *base, cases, tl)) <= 1e-12);
            CHECK(std::abs(p - oracle_portability(provider, cases, tl)) <= 1e-12);
            // sanity: mixed model keeps values strictly inside (0,1)
            CHECK(r > 0.0);
            CHECK(r < 1.0);
        }
    }
}

TEST_CASE("permutation invariance: shuffling cases changes no metric value") {
    auto cases = make_synthetic_cases(20, 5);
    auto model = std::make_shared<HashDecoder>("perm");
    auto base = std::make_shared<HashDecoder>("perm-base");
    auto provider = shared_provider(model);
    const LanguageCode en("en"), zh("zh");
    const double r = reliability(provider, cases, en, zh).value;
    const double g = generality(provider, cases, en, zh).value;
    const double l = locality(provider, *base, cases, en, zh).value;
    const double p = portability(provider, cases, en, zh).value;
    Rng rng(42);
    rng.shuffle(cases);
    CHECK(reliability(provider, cases, en, zh).value == doctest::Approx(r).epsilon(1e-15));
    CHECK(generality(provider, cases, en, zh).value == doctest::Approx(g).epsilon(1e-15));
    CHECK(locality(provider, *base, cases, en, zh).value == doctest::Approx(l).epsilon(1e-15));
    CHECK(portability(provider, cases, en, zh).value == doctest::Approx(p).epsilon(1e-15));
}

TEST_CASE("concurrent scoring equals single-threaded scoring") {
    auto cases = make_synthetic_cases(30, 9);
    auto model = std::make_shared<HashDecoder>("mt");
    auto provider = shared_provider(model);
    ScoreOptions st;
    ScoreOptions mt;
    mt.threads = 8;
    const auto a = reliability(provider, cases, LanguageCode("en"), LanguageCode("en"), st);
    const auto b = reliability(provider, cases, LanguageCode("en"), LanguageCode("en"), mt);
    CHECK(a.value == b.value);
}

TEST_CASE("metric values stay in [0,1] and aggregation preserves that (property)") {
    auto cases = make_synthetic_cases(25, 31);
    std::map<std::string, std::string> gold;
    for (const auto& c : cases) {
        for (const auto& [lang, d] : c.edit) gold[d.prompt] = d.target_new;
    }
    auto model = std::make_shared<MixedDecoder>(gold, "bounds", 2);
    auto base = std::make_shared<HashDecoder>("bounds-base");
    auto provider = shared_provider(model);
    std::vector<MetricValue> values;
    for (const std::string& tl : {"en", "zh"}) {
        values.push_back(reliability(provider, cases, LanguageCode("en"), LanguageCode(tl)));
        values.push_back(generality(provider, cases, LanguageCode("en"), LanguageCode(tl)));
        values.push_back(locality(provider, *base, cases, LanguageCode("en"), LanguageCode(tl)));
        values.push_back(portability(provider, cases, LanguageCode("en"), LanguageCode(tl)));
    }
    for (const auto& v : values) {
        CHECK(v.value >= 0.0);
        CHECK(v.value <= 1.0);
        CHECK(v.n_cases >= 1);
    }
    const ReportTable t = aggregate(values);
    const double avg = t.direction_average("en");
    CHECK(avg >= 0.0);
    CHECK(avg <= 100.0); // percent scale in tables
    CHECK(t.verify());
}

TEST_CASE("aggregate: single cell, duplicate keys, published-row arithmetic") {
    ReportTable single = aggregate(std::vector<CellValue>{
        {LanguageCode("en"), LanguageCode("en"), "reliability", 0.8}});
    CHECK(single.direction_average("en") == doctest::Approx(0.8));

    std::vector<CellValue> dup = {
        {LanguageCode("en"), LanguageCode("en"), "reliability", 0.8},
        {LanguageCode("en"), LanguageCode("en"), "reliability", 0.9}};
    CHECK_THROWS_AS(aggregate(dup), DuplicateKey);

    // the published edit-in-English row: eight cells averaging to 91.04
    const std::vector<double> en_cells = {99.93, 99.87, 90.15, 76.41};
    const std::vector<double> zh_cells = {94.81, 94.65, 95.05, 77.43};
    const char* names[] = {"reliability", "generality", "locality", "portability"};
    std::vector<CellValue> cells;
    for (int i = 0; i < 4; ++i)
        cells.push_back({LanguageCode("en"), LanguageCode("en"), names[i], en_cells[i]});
    for (int i = 0; i < 4; ++i)
        cells.push_back({LanguageCode("en"), LanguageCode("zh"), names[i], zh_cells[i]});
    const ReportTable t = aggregate(cells);
    CHECK(format_fixed2(t.direction_average("en")) == "91.04");
}

TEST_CASE("averages equal independent recomputation on random tables (property)") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<CellValue> cells;
        double sum = 0;
        const int n = 1 + int(rng.below(12));
        for (int i = 0; i < n; ++i) {
            CellValue c;
            c.edit_lang = LanguageCode("en");
            c.test_lang = LanguageCode("l" + std::to_string(i));
            c.metric = "reliability";
            c.value = rng.uniform01() * 100.0;
            sum += c.value;
            cells.push_back(c);
        }
        const ReportTable t = aggregate(cells);
        CHECK(t.direction_average("en") == doctest::Approx(sum / n).epsilon(1e-13));
        CHECK(t.metric_average("en", "reliability") == doctest::Approx(sum / n).epsilon(1e-13));
    }
}

TEST_CASE("emitters carry identical two-decimal numbers in all three formats") {
    std::vector<CellValue> cells = {
        {LanguageCode("en"), LanguageCode("en"), "reliability", 91.0375},
        {LanguageCode("en"), LanguageCode("zh"), "reliability", 40.0}};
    const ReportTable t = aggregate(cells);
    const std::string text = emit_text(t);
    const std::string csv = emit_csv(t);
    const std::string json = emit_json(t);
    for (const std::string& needle : {"91.04", "40.00", "65.52"}) {
        CHECK(contains(text, needle));
        CHECK(contains(csv, needle));
        CHECK(contains(json, needle));
    }
    // round-trip through the structured format
    const ReportTable back = parse_report_json(json);
    CHECK(back.cell("en", "zh", "reliability") == 40.0);
    CHECK(emit_csv(back) == csv);
}

TEST_CASE("half-to-even rounding at the boundary") {
    CHECK(format_fixed2(2.005) == "2.00");  // 2.005 stored below the tie
    CHECK(format_fixed2(2.675) == "2.68");  // 2.675*100 lands exactly on 267.5 -> even
    CHECK(format_fixed2(0.125) == "0.12");  // exact tie -> even
    CHECK(format_fixed2(0.375) == "0.38");  // exact tie -> even
    CHECK(format_fixed2(91.0375) == "91.04");
    CHECK(format_fixed2(-0.0001) == "0.00");
}
