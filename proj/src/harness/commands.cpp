#include "harness/commands.hpp"

#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

#include <json.hpp>

#include "align/toy_translator.hpp"
#include "common/errors.hpp"
#include "common/log.hpp"
#include "common/sha256.hpp"
#include "core/record_io.hpp"
#include "core/stats.hpp"
#include "data/prompt_template.hpp"
#include "lm/remote_decoder.hpp"
#include "lm/toy_lm.hpp"
#include "metrics/report.hpp"
#include "train/format.hpp"

namespace xkde::harness {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---- small shared plumbing -----------------------------------------------------

void require_key(const std::string& value, const char* key) {
    if (value.empty()) {
        throw ConfigError(std::string("config key '") + key + "' is required for this command");
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());
}

void ensure_parent(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
}

// Records what a command consumed and produced; written last so the hashes
// cover the final artifact bytes.
class ManifestWriter {
public:
    ManifestWriter(std::string command, std::string dir)
        : command_(std::move(command)), dir_(std::move(dir)) {}

    void input(const std::string& path) {
        inputs_.push_back({{"path", path}, {"sha256", sha256_file(path)}});
    }
    void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
    void output(const std::string& rel) { output_at(rel, dir_ + "/" + rel); }
    void output_at(const std::string& recorded, const std::string& file) {
        outputs_.push_back({{"path", recorded}, {"sha256", sha256_file(file)}});
    }

    void write() const {
        ordered_json doc;
        doc["command"] = command_;
        doc["inputs"] = inputs_;
        doc["seeds"] = seeds_;
        doc["outputs"] = outputs_;
        atomic_write_file(dir_ + "/manifest_" + command_ + ".json", doc.dump(2) + "\n");
    }

private:
    std::string command_;
    std::string dir_;
    ordered_json inputs_ = ordered_json::array();
    ordered_json seeds_ = ordered_json::object();
    ordered_json outputs_ = ordered_json::array();
};

// Emits one table in all three formats (identical numbers by construction)
// after the defensive recomputation check.
std::vector<std::string> write_table(const std::string& dir, const std::string& stem,
                                     const metrics::ReportTable& table) {
    if (!table.verify()) {
        throw Error("internal: table '" + stem + "' failed its aggregate recomputation check");
    }
    atomic_write_file(dir + "/" + stem + ".txt", metrics::emit_text(table));
    atomic_write_file(dir + "/" + stem + ".csv", metrics::emit_csv(table));
    atomic_write_file(dir + "/" + stem + ".json", metrics::emit_json(table));
    return {stem + ".txt", stem + ".csv", stem + ".json"};
}

void log_table(const std::string& label, const metrics::ReportTable& table) {
    for (const auto& edit_lang : table.edit_langs()) {
        log_info(label + ": edit in " + edit_lang + ", average " +
                 metrics::format_fixed2(table.direction_average(edit_lang)));
    }
}

std::shared_ptr<data::ChatClient> make_chat_client(const ClientSpec& spec) {
    std::shared_ptr<data::ChatClient> inner;
    if (spec.kind == "mock") {
        inner = std::make_shared<data::MockChatClient>();
    } else if (spec.kind == "http") {
        require_key(spec.endpoint, "build.client.endpoint");
        data::HttpChatClient::Options options;
        options.endpoint = spec.endpoint;
        options.path = spec.path;
        options.timeout_s = spec.timeout_s;
        options.api_key_env = spec.api_key_env;
        inner = std::make_shared<data::HttpChatClient>(options);
    } else {
        throw ConfigError("unknown chat client kind '" + spec.kind + "'");
    }
    if (spec.cache_dir.empty()) return inner;
    return std::make_shared<data::CachingChatClient>(inner, spec.cache_dir);
}

// Toy alignment scorer over a stored vocabulary, with translation
// equivalences loaded from disk when configured.
std::shared_ptr<align::ToyTranslator> make_toy_aligner(const lm::ToyVocab& vocab,
                                                       const std::string& equivalences_path,
                                                       double beta) {
    std::vector<std::string> words;
    for (int i = lm::ToyVocab::kUnk + 1; i < vocab.size(); ++i) words.push_back(vocab.token(i));
    auto aligner = std::make_shared<align::ToyTranslator>(std::move(words), beta);
    if (!equivalences_path.empty()) {
        for (const auto& group : toyworld::read_equivalences(equivalences_path)) {
            aligner->add_equivalence(group);
        }
    }
    return aligner;
}

lm::ToyVocab load_vocab(const std::string& path) { return lm::ToyVocab::load(path); }

std::vector<EvalCase> load_cases(const std::string& path) {
    auto cases = read_cases(path);
    if (cases.empty()) throw EmptyCases("no cases in " + path);
    return cases;
}

void check_vocab_size(const lm::ToyVocab& vocab, const lm::ToyLm& model,
                      const std::string& checkpoint) {
    if (vocab.size() != model.vocab_size()) {
        throw ModelError("vocabulary has " + std::to_string(vocab.size()) +
                         " tokens but checkpoint '" + checkpoint + "' was trained with " +
                         std::to_string(model.vocab_size()));
    }
}

} // namespace

// ---- synth-cases -----------------------------------------------------------------

void command_synth_cases(const FileConfig& cfg) {
    const std::string dir = cfg.run.output_dir;
    ensure_dir(dir);
    const auto world = toyworld::make_world(cfg.world.config);

    write_cases(dir + "/cases.jsonl", world.cases);
    write_samples(dir + "/pretrain.jsonl", world.pretrain);
    write_samples(dir + "/training.jsonl", world.training);
    world.vocab.save(dir + "/vocab.txt");
    toyworld::write_equivalences(dir + "/equivalences.json", world.equivalences);

    ManifestWriter manifest("synth-cases", dir);
    manifest.seed("world_seed", cfg.world.config.seed);
    for (const char* name :
         {"cases.jsonl", "pretrain.jsonl", "training.jsonl", "vocab.txt", "equivalences.json"}) {
        manifest.output(name);
    }
    manifest.write();
    log_info("synthesized " + std::to_string(world.cases.size()) + " cases, " +
             std::to_string(world.pretrain.size()) + " pretraining and " +
             std::to_string(world.training.size()) + " tuning samples (vocabulary " +
             std::to_string(world.vocab.size()) + ")");
}

// ---- build-data --------------------------------------------------------------------

void command_build_data(const FileConfig& cfg) {
    const BuildSection& b = cfg.build;
    require_key(b.cases, "build.cases");
    const std::string dir = cfg.run.output_dir;
    ensure_dir(dir);

    const auto templates = data::load_templates(b.templates_dir);
    const auto cases = load_cases(b.cases);
    const auto client = make_chat_client(b.client);

    const auto result = data::assemble(b.config, cases, *client, templates);

    const std::string out = b.out.empty() ? dir + "/dataset.jsonl" : b.out;
    ensure_parent(out);
    write_samples(out, result.samples);

    std::string stats_text = render_stats(result.stats.data);
    stats_text += "\nqc_regenerated " + std::to_string(result.stats.qc_regenerated) +
                  "\nqc_dropped " + std::to_string(result.stats.qc_dropped) + "\nshortfall " +
                  std::to_string(result.stats.shortfall) + "\nservice_calls " +
                  std::to_string(result.stats.service.service_calls) + "\ncache_hits " +
                  std::to_string(result.stats.service.cache_hits) + "\nretries " +
                  std::to_string(result.stats.service.retries) + "\n";
    atomic_write_file(dir + "/build_stats.txt", stats_text);

    ManifestWriter manifest("build-data", dir);
    manifest.input(b.cases);
    for (const auto& [name, tpl] : templates) {
        (void)tpl;
        manifest.input(b.templates_dir + "/" + name + ".txt");
    }
    manifest.seed("seed", b.config.seed);
    manifest.output_at(out, out);
    manifest.output("build_stats.txt");
    manifest.write();
    log_info("built " + std::to_string(result.samples.size()) + " samples into " + out + " (" +
             std::to_string(result.stats.service.service_calls) + " service calls, " +
             std::to_string(result.stats.service.cache_hits) + " cache hits)");
}

// ---- train-xeit ---------------------------------------------------------------------

void command_train_xeit(const FileConfig& cfg) {
    const TrainSection& t = cfg.train;
    require_key(t.dataset, "train.dataset");
    require_key(t.vocab, "train.vocab");
    if (t.hidden <= 0 || t.hidden % 4 != 0) {
        throw ConfigError("train.hidden must be a positive multiple of 4");
    }
    const std::string dir = cfg.run.output_dir;
    ensure_dir(dir);

    const auto vocab = load_vocab(t.vocab);
    const auto samples = read_samples(t.dataset);

    lm::ToyLm model = t.model_in.empty() ? lm::ToyLm(vocab.size(), t.hidden, t.config.seed)
                                         : lm::ToyLm::load(t.model_in);
    if (!t.model_in.empty()) check_vocab_size(vocab, model, t.model_in);

    train::TrainConfig tc = t.config;
    if (tc.curve_path.empty()) tc.curve_path = dir + "/xeit_curve.txt";
    const auto result =
        train::train_xeit(model, train::format_dataset(samples, vocab, tc.max_length), tc);

    const std::string out = t.model_out.empty() ? dir + "/xeit.ckpt" : t.model_out;
    ensure_parent(out);
    model.save(out);

    ManifestWriter manifest("train-xeit", dir);
    manifest.input(t.dataset);
    manifest.input(t.vocab);
    if (!t.model_in.empty()) manifest.input(t.model_in);
    manifest.seed("seed", tc.seed);
    manifest.output_at(out, out);
    manifest.output_at(tc.curve_path, tc.curve_path);
    manifest.write();
    log_info("stage 1 finished: " + std::to_string(result.curve.size()) +
             " steps, final batch loss " +
             metrics::format_fixed2(result.curve.empty() ? 0.0 : result.curve.back().second) +
             ", model saved to " + out);
}

// ---- train-tlpo ----------------------------------------------------------------------

void command_train_tlpo(const FileConfig& cfg) {
    const TlpoSection& t = cfg.tlpo;
    require_key(t.cases, "tlpo.cases");
    require_key(t.vocab, "tlpo.vocab");
    require_key(t.model_in, "tlpo.model_in");
    const std::string dir = cfg.run.output_dir;
    ensure_dir(dir);

    const auto vocab = load_vocab(t.vocab);
    const auto cases = load_cases(t.cases);
    lm::ToyLm model = lm::ToyLm::load(t.model_in);
    check_vocab_size(vocab, model, t.model_in);
    const auto aligner = make_toy_aligner(vocab, t.equivalences, t.aligner_beta);

    train::TlpoConfig tc = t.config;
    if (tc.curve_path.empty()) tc.curve_path = dir + "/tlpo_curve.txt";

    const auto built = train::build_pairs(model, vocab, cases, *aligner, tc);
    const std::string pairs_out = t.pairs_out.empty() ? dir + "/pairs.jsonl" : t.pairs_out;
    ensure_parent(pairs_out);
    train::write_pairs(pairs_out, built.pairs);
    log_info("stage 2 pairs: " + std::to_string(built.pairs.size()) + " kept from " +
             std::to_string(built.queries_seen) + " queries (" +
             std::to_string(built.queries_skipped) + " skipped)");
    if (built.pairs.empty()) {
        throw EmptyBatch("no preference pairs cleared the alignment gap; nothing to train on");
    }

    const auto result = train::train_tlpo(model, built.pairs, vocab, tc);

    const std::string out = t.model_out.empty() ? dir + "/tlpo.ckpt" : t.model_out;
    ensure_parent(out);
    model.save(out);

    ManifestWriter manifest("train-tlpo", dir);
    manifest.input(t.cases);
    manifest.input(t.vocab);
    manifest.input(t.model_in);
    if (!t.equivalences.empty()) manifest.input(t.equivalences);
    manifest.seed("seed", tc.seed);
    manifest.output_at(pairs_out, pairs_out);
    manifest.output_at(out, out);
    manifest.output_at(tc.curve_path, tc.curve_path);
    manifest.write();
    log_info("stage 2 finished: " + std::to_string(result.curve.size()) +
             " steps, final mean log-odds " +
             metrics::format_fixed2(result.curve.empty() ? 0.0
                                                         : std::get<2>(result.curve.back())) +
             ", model saved to " + out);
}

// ---- eval ------------------------------------------------------------------------------

void command_eval(const FileConfig& cfg) {
    const RunConfig& run = cfg.run;
    validate_run_config(run);
    require_key(run.cases, "run.cases");
    ensure_dir(run.output_dir);

    const auto cases = load_cases(run.cases);

    ManifestWriter manifest("eval", run.output_dir);
    manifest.input(run.cases);

    DecoderFactory factory;
    if (!run.model.endpoint.empty()) {
        data::HttpChatClient::Options options;
        options.endpoint = run.model.endpoint;
        const auto client = std::make_shared<data::HttpChatClient>(options);
        const std::string name = run.model.name.empty() ? "default" : run.model.name;
        factory = [client, name, top_k = run.top_k, max_new = run.max_new_tokens](
                      std::shared_ptr<const lm::EditMemory> memory)
            -> std::shared_ptr<const metrics::Decoder> {
            return std::make_shared<lm::RemoteDecoder>(client, name, std::move(memory), top_k,
                                                       max_new);
        };
    } else {
        require_key(run.model.checkpoint, "run.model.checkpoint");
        require_key(run.model.vocab, "run.model.vocab");
        const auto model = std::make_shared<lm::ToyLm>(lm::ToyLm::load(run.model.checkpoint));
        std::shared_ptr<lm::ToyVocab> vocab;
        try {
            vocab = std::make_shared<lm::ToyVocab>(load_vocab(run.model.vocab));
        } catch (const Error& e) {
            throw ModelLoadError(run.model.vocab, e.what());
        }
        check_vocab_size(*vocab, *model, run.model.checkpoint);
        manifest.input(run.model.checkpoint);
        manifest.input(run.model.vocab);
        factory = toy_decoder_factory(model, vocab, run.top_k, run.max_new_tokens);
    }
    manifest.seed("seed", run.seed);

    std::vector<std::string> written;
    const auto emit = [&](const std::string& stem, const metrics::ReportTable& table,
                          const std::string& label) {
        for (auto& rel : write_table(run.output_dir, stem, table)) {
            written.push_back(std::move(rel));
        }
        log_table(label, table);
    };

    switch (run.mode) {
        case RunMode::single:
            emit("report_single", run_single(run, cases, factory), "single");
            break;
        case RunMode::batch:
            for (const auto& r : run_batch(run, cases, factory)) {
                emit("report_batch_" + std::to_string(r.requested), r.table,
                     "batch " + std::to_string(r.requested) + " (effective " +
                         std::to_string(r.effective) + ")");
            }
            break;
        case RunMode::sequential:
            for (const auto& r : run_sequential(run, cases, factory)) {
                emit("report_sequential_" + std::to_string(r.requested), r.table,
                     "stream " + std::to_string(r.requested) + " (effective " +
                         std::to_string(r.effective) + ")");
            }
            break;
    }

    for (const auto& rel : written) manifest.output(rel);
    manifest.write();
}

// ---- ablate ----------------------------------------------------------------------------

void command_ablate(const FileConfig& cfg) {
    const AblateSection& a = cfg.ablate;
    require_key(a.base_checkpoint, "ablate.base_checkpoint");
    require_key(a.vocab, "ablate.vocab");
    require_key(a.training, "ablate.training");
    require_key(a.cases, "ablate.cases");
    const std::string dir = cfg.run.output_dir;
    ensure_dir(dir);

    const auto vocab = std::make_shared<lm::ToyVocab>(load_vocab(a.vocab));
    lm::ToyLm base = lm::ToyLm::load(a.base_checkpoint);
    check_vocab_size(*vocab, base, a.base_checkpoint);

    // Per-variant curve or checkpoint files would overwrite each other, so
    // the shared training configs run without them here.
    train::TrainConfig train_cfg = cfg.train.config;
    train_cfg.checkpoint_dir.clear();
    train_cfg.curve_path.clear();
    train::TlpoConfig tlpo_cfg = cfg.tlpo.config;
    tlpo_cfg.checkpoint_dir.clear();
    tlpo_cfg.curve_path.clear();

    AblationInputs inputs{std::move(base),
                          vocab,
                          read_samples(a.training),
                          load_cases(a.cases),
                          make_toy_aligner(*vocab, a.equivalences, a.aligner_beta),
                          train_cfg,
                          tlpo_cfg};

    const auto runs = run_ablation(cfg.run, inputs, a.variants);

    ManifestWriter manifest("ablate", dir);
    manifest.input(a.base_checkpoint);
    manifest.input(a.vocab);
    manifest.input(a.training);
    manifest.input(a.cases);
    if (!a.equivalences.empty()) manifest.input(a.equivalences);
    manifest.seed("seed", cfg.run.seed);
    manifest.seed("train_seed", train_cfg.seed);
    manifest.seed("tlpo_seed", tlpo_cfg.seed);

    for (const auto& r : runs) {
        for (const auto& rel : write_table(dir, "report_ablation_" + r.variant.name, r.table)) {
            manifest.output(rel);
        }
        for (const auto& rel :
             write_table(dir, "report_ablation_" + r.variant.name + "_delta", r.delta)) {
            manifest.output(rel);
        }
        log_table("ablation " + r.variant.name, r.table);
    }
    manifest.write();
}

// ---- report ------------------------------------------------------------------------------

std::string render_report(const std::string& report_json_path, const std::string& format) {
    const auto table = metrics::parse_report_json(read_file(report_json_path));
    if (!table.verify()) {
        throw DataError("report failed its recomputation check: " + report_json_path);
    }
    if (format == "text") return metrics::emit_text(table);
    if (format == "csv") return metrics::emit_csv(table);
    if (format == "json") return metrics::emit_json(table);
    throw ConfigError("unknown report format '" + format + "' (expected text, csv or json)");
}

} // namespace xkde::harness
