#include "data/assemble.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>

#include "common/errors.hpp"
#include "common/log.hpp"
#include "common/parallel.hpp"
#include "common/rng.hpp"

namespace xkde::data {

namespace {

enum class Quadrant { in_we = 0, in_wo = 1, out_we = 2, out_wo = 3 };

const char* quadrant_code(Quadrant q) {
    switch (q) {
        case Quadrant::in_we: return "is-we";
        case Quadrant::in_wo: return "is-wo";
        case Quadrant::out_we: return "os-we";
        case Quadrant::out_wo: return "os-wo";
    }
    return "?";
}

bool is_in_scope(Quadrant q) { return q == Quadrant::in_we || q == Quadrant::in_wo; }
bool has_edit(Quadrant q) { return q == Quadrant::in_we || q == Quadrant::out_we; }

std::size_t quota_of(const QuadrantQuota& quota, Quadrant q) {
    switch (q) {
        case Quadrant::in_we: return quota.in_scope_with_edit;
        case Quadrant::in_wo: return quota.in_scope_without_edit;
        case Quadrant::out_we: return quota.out_scope_with_edit;
        case Quadrant::out_wo: return quota.out_scope_without_edit;
    }
    return 0;
}

// One slot of the quota grid, fully determined by the configuration.
struct Slot {
    SourceTag tag = SourceTag::synthetic;
    LanguageCode lang;       // row (query/answer) language
    Quadrant quadrant = Quadrant::in_we;
    std::size_t index = 0;   // position within the row
    std::uint64_t seed = 0;  // derived per-slot seed, drop-invariant
};

struct SlotOutcome {
    std::optional<ParallelSample> sample;
    std::size_t qc_regenerated = 0;
    bool qc_dropped = false;
    bool shortfall = false;
};

std::string slot_id(const Slot& slot) {
    std::ostringstream out;
    out << to_string(slot.tag) << '-' << slot.lang.str() << '-' << quadrant_code(slot.quadrant)
        << '-' << std::setw(6) << std::setfill('0') << slot.index;
    return out.str();
}

// The edit-descriptor language for a slot: even slots are monolingual, odd
// slots carry the descriptor in the source language (or, when the row IS
// the source language, in the first other configured language).
LanguageCode edit_language(const BuildConfig& cfg, const Slot& slot) {
    if (slot.index % 2 == 0) return slot.lang;
    if (slot.lang != cfg.source_lang) return cfg.source_lang;
    for (const auto& lang : cfg.target_langs) {
        if (lang != slot.lang) return lang;
    }
    return slot.lang; // single-language config: parity collapses to mono
}

SlotOutcome fill_slot(const BuildConfig& cfg, const Slot& slot,
                      const std::vector<EvalCase>& cases, ChatClient& client,
                      const PromptLibrary& prompts) {
    SlotOutcome outcome;
    const EvalCase& c = cases[slot.index % cases.size()];
    const LanguageCode edit_lang = edit_language(cfg, slot);

    for (const auto& lang : {cfg.source_lang, slot.lang, edit_lang}) {
        if (c.edit.find(lang) == c.edit.end()) {
            log_warn("case " + c.id + " lacks language '" + lang.str() + "', slot " +
                     slot_id(slot) + " unfilled");
            outcome.shortfall = true;
            return outcome;
        }
    }
    const EditDescriptor& gen_edit = c.edit.at(cfg.source_lang);
    const EditDescriptor& row_edit = c.edit.at(slot.lang);

    std::string query;
    std::string answer;
    std::optional<QualityScore> quality;

    if (is_in_scope(slot.quadrant)) {
        bool accepted = false;
        for (int attempt = 0; attempt < cfg.regen_budget; ++attempt) {
            const std::uint64_t draw = derive_seed(slot.seed, static_cast<std::uint64_t>(attempt));
            const std::string q = generate_query(client, prompts, gen_edit, draw, cfg.ops);
            const std::string a = generate_answer(client, prompts, gen_edit, q, draw, cfg.ops);
            try {
                const bool ok = judge_sample(client, prompts, gen_edit, q, a, cfg.ops);
                const QualityScore score = score_sample(client, prompts, gen_edit, q, a, cfg.ops);
                if (ok && score.overall >= cfg.qc_threshold) {
                    query = q;
                    answer = a;
                    quality = score;
                    accepted = true;
                    break;
                }
                log_info("slot " + slot_id(slot) + " attempt " + std::to_string(attempt) +
                         " rejected by quality control");
            } catch (const JudgeAmbiguous& e) {
                log_warn("slot " + slot_id(slot) + " attempt " + std::to_string(attempt) +
                         " judged ambiguously: " + e.what());
            }
            ++outcome.qc_regenerated;
        }
        if (!accepted) {
            log_warn("slot " + slot_id(slot) + " dropped: no attempt passed quality control");
            outcome.qc_dropped = true;
            return outcome;
        }
        if (slot.quadrant == Quadrant::in_wo) {
            // Without the descriptor in context the right behavior is the
            // pre-edit fact, which the row-language descriptor carries.
            answer = row_edit.target_old.value_or("unknown");
            quality.reset();
            query = translate(client, prompts, query, cfg.source_lang, slot.lang, cfg.ops);
        } else {
            query = translate(client, prompts, query, cfg.source_lang, slot.lang, cfg.ops);
            answer = translate(client, prompts, answer, cfg.source_lang, slot.lang, cfg.ops);
        }
    } else {
        const auto [q, a] = generate_out_of_scope(client, prompts, gen_edit, slot.seed, cfg.ops);
        query = translate(client, prompts, q, cfg.source_lang, slot.lang, cfg.ops);
        answer = translate(client, prompts, a, cfg.source_lang, slot.lang, cfg.ops);
    }

    ParallelSample sample;
    sample.id = slot_id(slot);
    sample.source_tag = slot.tag;
    sample.edit_lang = edit_lang;
    sample.query_lang = slot.lang;
    sample.scope = is_in_scope(slot.quadrant) ? Scope::in_scope : Scope::out_of_scope;
    sample.with_edit = has_edit(slot.quadrant);
    if (sample.with_edit) sample.edit_text = serialize_edit(c.edit.at(edit_lang));
    sample.query = query;
    sample.answer = answer;
    sample.quality = quality;
    validate_sample(sample);
    outcome.sample = std::move(sample);
    return outcome;
}

} // namespace

BuildConfig default_build_config(std::size_t scale) {
    if (scale == 0) throw ConfigError("quota scale must be positive");
    static const std::pair<SourceTag, double> published[] = {
        {SourceTag::zsre, 20000.0},        {SourceTag::halluedit, 2000.0},
        {SourceTag::ripple, 2250.0},       {SourceTag::wikibio, 250.0},
        {SourceTag::mquake, 4000.0},       {SourceTag::counterfact, 7500.0},
    };
    BuildConfig cfg;
    for (const auto& [tag, count] : published) {
        const double scaled = count / static_cast<double>(scale);
        const auto n = static_cast<std::size_t>(
            std::max(1.0, std::nearbyint(scaled))); // half-even under default FP mode
        QuadrantQuota quota{n, n, n, n};
        for (const auto& lang : cfg.target_langs) cfg.quotas[tag][lang] = quota;
    }
    return cfg;
}

void validate_build_config(const BuildConfig& cfg) {
    if (cfg.qc_threshold < 1 || cfg.qc_threshold > 10) {
        throw ConfigError("quality threshold must lie in [1,10]");
    }
    if (cfg.quotas.empty()) throw ConfigError("quota grid is empty");
    if (cfg.target_langs.empty()) throw ConfigError("at least one language is required");
    validate_language(cfg.source_lang);
    for (const auto& lang : cfg.target_langs) validate_language(lang);
    if (cfg.regen_budget < 1) throw ConfigError("regeneration budget must be at least 1");
    if (cfg.max_in_flight < 1) throw ConfigError("max in-flight requests must be at least 1");
    for (const auto& [tag, row] : cfg.quotas) {
        if (tag == SourceTag::synthetic) continue;
        for (const auto& [lang, quota] : row) {
            (void)quota;
            if (std::find(cfg.target_langs.begin(), cfg.target_langs.end(), lang) ==
                cfg.target_langs.end()) {
                throw ConfigError("quota row for unconfigured language: " + lang.str());
            }
        }
    }
}

BuildResult assemble(const BuildConfig& cfg, const std::vector<EvalCase>& cases,
                     ChatClient& client, const PromptLibrary& prompts) {
    validate_build_config(cfg);
    if (cases.empty()) throw EmptyCases("dataset assembly needs at least one case");
    for (const auto& c : cases) validate_case(c);

    // Lay out every surviving slot first; generation is keyed by the slot's
    // own seed, so dropping a section never shifts another section's draws.
    std::vector<Slot> slots;
    std::size_t tag_index = 0;
    for (const auto& [tag, row] : cfg.quotas) {
        const std::uint64_t tag_seed = derive_seed(cfg.seed, tag_index++);
        const bool long_text = tag == SourceTag::mquake || tag == SourceTag::counterfact;
        std::size_t lang_index = 0;
        for (const auto& [lang, quota] : row) {
            const std::uint64_t lang_seed = derive_seed(tag_seed, lang_index++);
            for (const Quadrant q : {Quadrant::in_we, Quadrant::in_wo, Quadrant::out_we,
                                     Quadrant::out_wo}) {
                const std::uint64_t quad_seed =
                    derive_seed(lang_seed, static_cast<std::uint64_t>(q));
                for (std::size_t i = 0; i < quota_of(quota, q); ++i) {
                    if (cfg.drops.long_text && long_text) continue;
                    if (cfg.drops.in_scope && is_in_scope(q)) continue;
                    if (cfg.drops.out_of_scope && !is_in_scope(q)) continue;
                    if (cfg.drops.edit_descriptor && has_edit(q)) continue;
                    if (cfg.drops.mono && i % 2 == 0) continue;
                    if (cfg.drops.cross && i % 2 == 1) continue;
                    slots.push_back({tag, lang, q, i, derive_seed(quad_seed, i)});
                }
            }
        }
    }

    const auto outcomes = parallel_map<SlotOutcome>(
        slots.size(), cfg.max_in_flight,
        [&](std::size_t i) { return fill_slot(cfg, slots[i], cases, client, prompts); });

    BuildResult result;
    for (const auto& outcome : outcomes) {
        result.stats.qc_regenerated += outcome.qc_regenerated;
        if (outcome.qc_dropped) ++result.stats.qc_dropped;
        if (outcome.shortfall) ++result.stats.shortfall;
        if (outcome.sample) result.samples.push_back(*outcome.sample);
    }
    std::sort(result.samples.begin(), result.samples.end(),
              [](const ParallelSample& a, const ParallelSample& b) { return a.id < b.id; });
    result.stats.data = compute_stats(result.samples);
    result.stats.service = client.stats();
    if (result.stats.shortfall > 0 || result.stats.qc_dropped > 0) {
        log_warn("assembly shortfall: " + std::to_string(result.stats.shortfall) +
                 " unfillable slots, " + std::to_string(result.stats.qc_dropped) +
                 " dropped by quality control");
    }
    return result;
}

} // namespace xkde::data
