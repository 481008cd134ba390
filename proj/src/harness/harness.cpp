#include "harness/harness.hpp"

#include <algorithm>
#include <unordered_map>
#include <utility>

#include "common/errors.hpp"
#include "common/log.hpp"
#include "lm/prompted_decoder.hpp"
#include "train/format.hpp"

namespace xkde::harness {

// ---- run configuration -------------------------------------------------------

const char* to_string(RunMode mode) {
    switch (mode) {
        case RunMode::single: return "single";
        case RunMode::batch: return "batch";
        case RunMode::sequential: return "sequential";
    }
    return "?";
}

RunMode parse_run_mode(const std::string& s) {
    if (s == "single") return RunMode::single;
    if (s == "batch") return RunMode::batch;
    if (s == "sequential") return RunMode::sequential;
    throw ConfigError("unknown run mode '" + s + "' (expected single, batch or sequential)");
}

namespace {

void check_sizes(const std::vector<std::size_t>& sizes, const char* what) {
    if (sizes.empty()) throw ConfigError(std::string(what) + " must not be empty");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] == 0) throw ConfigError(std::string(what) + " must be positive");
        if (i > 0 && sizes[i] <= sizes[i - 1]) {
            throw ConfigError(std::string(what) + " must be strictly ascending");
        }
    }
}

} // namespace

void validate_run_config(const RunConfig& cfg) {
    check_sizes(cfg.batch_sizes, "batch sizes");
    check_sizes(cfg.stream_sizes, "stream sizes");
    validate_language(cfg.edit_lang);
    if (cfg.test_langs.empty()) throw ConfigError("at least one test language is required");
    for (const auto& lang : cfg.test_langs) validate_language(lang);
    if (cfg.top_k == 0) throw ConfigError("memory top-k must be positive");
    if (cfg.threads == 0) throw ConfigError("threads must be positive");
    if (cfg.max_new_tokens <= 0) throw ConfigError("max_new_tokens must be positive");
    if (cfg.output_dir.empty()) throw ConfigError("output directory must not be empty");
}

// ---- model surface ------------------------------------------------------------

DecoderFactory toy_decoder_factory(std::shared_ptr<const lm::ScoringModel> model,
                                   std::shared_ptr<const lm::ToyVocab> vocab,
                                   std::size_t top_k, int max_new_tokens) {
    return [model = std::move(model), vocab = std::move(vocab), top_k,
            max_new_tokens](std::shared_ptr<const lm::EditMemory> memory)
               -> std::shared_ptr<const metrics::Decoder> {
        return std::make_shared<lm::PromptedDecoder>(model, vocab, std::move(memory), top_k,
                                                     max_new_tokens);
    };
}

// ---- evaluation runs -----------------------------------------------------------

namespace {

const EditDescriptor& edit_in(const EvalCase& c, const LanguageCode& lang) {
    const auto it = c.edit.find(lang);
    if (it == c.edit.end()) {
        throw MissingLanguage("case '" + c.id + "' has no edit in '" + lang.str() + "'");
    }
    return it->second;
}

// All four metrics in every test language, through one provider. Threads are
// clamped to 1 unless the decoders declare concurrent-read safety.
metrics::ReportTable evaluate(const RunConfig& cfg, const std::vector<EvalCase>& cases,
                              const metrics::EditedModelProvider& provider,
                              const metrics::Decoder& base, bool concurrent_safe) {
    metrics::ScoreOptions opts;
    opts.exact_match = cfg.exact_match;
    opts.threads = concurrent_safe ? cfg.threads : 1;

    std::vector<metrics::MetricValue> values;
    for (const auto& test_lang : cfg.test_langs) {
        values.push_back(metrics::reliability(provider, cases, cfg.edit_lang, test_lang, opts));
        values.push_back(metrics::generality(provider, cases, cfg.edit_lang, test_lang, opts));
        values.push_back(metrics::locality(provider, base, cases, cfg.edit_lang, test_lang, opts));
        values.push_back(metrics::portability(provider, cases, cfg.edit_lang, test_lang, opts));
    }
    return metrics::aggregate(values);
}

// One decoder per case, each conditioned on exactly that case's edit.
metrics::EditedModelProvider per_case_provider(const RunConfig& cfg,
                                               const DecoderFactory& factory) {
    return [&cfg, &factory](const EvalCase& c) {
        auto memory = std::make_shared<lm::EditMemory>();
        memory->insert(edit_in(c, cfg.edit_lang));
        return factory(std::move(memory));
    };
}

std::size_t cap_size(std::size_t requested, std::size_t available, const char* what) {
    if (requested <= available) return requested;
    log_warn(std::string(what) + " " + std::to_string(requested) + " exceeds the " +
             std::to_string(available) + " available cases; capped");
    return available;
}

} // namespace

metrics::ReportTable run_single(const RunConfig& cfg, const std::vector<EvalCase>& cases,
                                const DecoderFactory& factory) {
    validate_run_config(cfg);
    if (cases.empty()) throw EmptyCases("run_single: no cases");
    const auto base = factory(nullptr);
    return evaluate(cfg, cases, per_case_provider(cfg, factory), *base,
                    base->concurrent_read_safe());
}

std::vector<SizedRun> run_batch(const RunConfig& cfg, const std::vector<EvalCase>& cases,
                                const DecoderFactory& factory) {
    validate_run_config(cfg);
    if (cases.empty()) throw EmptyCases("run_batch: no cases");
    const auto base = factory(nullptr);
    const bool safe = base->concurrent_read_safe();

    std::vector<SizedRun> runs;
    for (const std::size_t requested : cfg.batch_sizes) {
        const std::size_t b = cap_size(requested, cases.size(), "batch size");

        // Insert each group's edits up front, then hand out the frozen
        // decoders: every case in a group is evaluated against the memory
        // holding that whole group.
        std::unordered_map<std::string, std::shared_ptr<const metrics::Decoder>> by_case;
        for (std::size_t start = 0; start < cases.size(); start += b) {
            const std::size_t end = std::min(start + b, cases.size());
            auto memory = std::make_shared<lm::EditMemory>();
            for (std::size_t i = start; i < end; ++i) {
                memory->insert(edit_in(cases[i], cfg.edit_lang));
            }
            auto decoder = factory(std::move(memory));
            for (std::size_t i = start; i < end; ++i) by_case[cases[i].id] = decoder;
        }
        const metrics::EditedModelProvider provider = [&by_case](const EvalCase& c) {
            return by_case.at(c.id);
        };
        runs.push_back({requested, b, evaluate(cfg, cases, provider, *base, safe)});
    }
    return runs;
}

std::vector<SizedRun> run_sequential(const RunConfig& cfg, const std::vector<EvalCase>& cases,
                                     const DecoderFactory& factory) {
    validate_run_config(cfg);
    if (cases.empty()) throw EmptyCases("run_sequential: no cases");
    const auto base = factory(nullptr);
    const bool safe = base->concurrent_read_safe();

    std::vector<SizedRun> runs;
    for (const std::size_t requested : cfg.stream_sizes) {
        const std::size_t n = cap_size(requested, cases.size(), "stream size");

        // The whole stream accumulates into one memory; evaluation starts
        // only after the last insertion and covers every streamed case.
        auto memory = std::make_shared<lm::EditMemory>();
        for (std::size_t i = 0; i < n; ++i) memory->insert(edit_in(cases[i], cfg.edit_lang));
        const auto decoder = factory(std::move(memory));
        const metrics::EditedModelProvider provider = [&decoder](const EvalCase&) {
            return decoder;
        };
        const std::vector<EvalCase> streamed(cases.begin(),
                                             cases.begin() + static_cast<std::ptrdiff_t>(n));
        runs.push_back({requested, n, evaluate(cfg, streamed, provider, *base, safe)});
    }
    return runs;
}

// ---- ablation runs --------------------------------------------------------------

std::vector<ParallelSample> apply_drops(const std::vector<ParallelSample>& samples,
                                        const data::AblationDrops& drops) {
    std::vector<ParallelSample> kept;
    kept.reserve(samples.size());
    for (const auto& s : samples) {
        if (drops.mono && s.monolingual()) continue;
        if (drops.cross && !s.monolingual()) continue;
        if (drops.in_scope && s.scope == Scope::in_scope) continue;
        if (drops.out_of_scope && s.scope == Scope::out_of_scope) continue;
        if (drops.edit_descriptor && s.with_edit) continue;
        if (drops.long_text &&
            (s.source_tag == SourceTag::mquake || s.source_tag == SourceTag::counterfact)) {
            continue;
        }
        kept.push_back(s);
    }
    return kept;
}

metrics::ReportTable table_delta(const metrics::ReportTable& a, const metrics::ReportTable& b) {
    if (a.cells().size() != b.cells().size()) {
        throw DataError("table delta requires identical cell keys");
    }
    std::vector<metrics::CellValue> cells;
    for (const auto& [key, value] : a.cells()) {
        const auto& [edit_lang, test_lang, metric] = key;
        if (!b.has_cell(edit_lang, test_lang, metric)) {
            throw DataError("table delta requires identical cell keys; missing " + edit_lang +
                            "/" + test_lang + "/" + metric);
        }
        cells.push_back({LanguageCode(edit_lang), LanguageCode(test_lang), metric,
                         value - b.cell(edit_lang, test_lang, metric)});
    }
    return metrics::aggregate(cells);
}

namespace {

bool same_configuration(const AblationVariant& v, const AblationVariant& full) {
    const auto& d = v.drops;
    const auto& f = full.drops;
    return v.stages == full.stages && d.mono == f.mono && d.cross == f.cross &&
           d.in_scope == f.in_scope && d.out_of_scope == f.out_of_scope &&
           d.edit_descriptor == f.edit_descriptor && d.long_text == f.long_text;
}

// Train the variant's model from the shared base and evaluate it single-mode.
metrics::ReportTable run_variant(const RunConfig& cfg, const AblationInputs& inputs,
                                 const AblationVariant& variant) {
    lm::ToyLm model = inputs.base;
    if (variant.stages.xeit) {
        const auto kept = apply_drops(inputs.training, variant.drops);
        if (kept.empty()) throw EmptyBatch("ablation '" + variant.name + "': no training data");
        train::train_xeit(model, train::format_dataset(kept, *inputs.vocab,
                                                       inputs.train.max_length),
                          inputs.train);
    }
    if (variant.stages.tlpo) {
        const auto built =
            train::build_pairs(model, *inputs.vocab, inputs.cases, *inputs.aligner, inputs.tlpo);
        if (!built.pairs.empty()) {
            train::train_tlpo(model, built.pairs, *inputs.vocab, inputs.tlpo);
        } else {
            log_warn("ablation '" + variant.name + "': no preference pairs survived; "
                     "stage 2 skipped");
        }
    }
    const auto factory = toy_decoder_factory(std::make_shared<lm::ToyLm>(std::move(model)),
                                             inputs.vocab, cfg.top_k, cfg.max_new_tokens);
    return run_single(cfg, inputs.cases, factory);
}

} // namespace

std::vector<AblationRun> run_ablation(const RunConfig& cfg, const AblationInputs& inputs,
                                      const std::vector<AblationVariant>& variants) {
    validate_run_config(cfg);
    if (inputs.cases.empty()) throw EmptyCases("run_ablation: no cases");
    if (variants.empty()) throw ConfigError("run_ablation: no variants configured");

    const AblationVariant full{"full", StageFlags{true, true}, data::AblationDrops{}};
    log_info("ablation: training full configuration");
    const metrics::ReportTable full_table = run_variant(cfg, inputs, full);

    std::vector<AblationRun> runs;
    for (const auto& variant : variants) {
        log_info("ablation: variant '" + variant.name + "'");
        const metrics::ReportTable table = same_configuration(variant, full)
                                               ? full_table
                                               : run_variant(cfg, inputs, variant);
        runs.push_back({variant, table, table_delta(table, full_table)});
    }
    return runs;
}

} // namespace xkde::harness
