#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "common/errors.hpp"
#include "common/rng.hpp"
#include "support/fake_models.hpp"
#include "train/format.hpp"
#include "train/xeit.hpp"

using namespace xkde;
using namespace xkde::train;

namespace {

ParallelSample mk(const std::string& id, bool with_edit, const std::string& edit,
                  const std::string& query, const std::string& answer,
                  const std::string& edit_lang = "en", const std::string& query_lang = "en",
                  Scope scope = Scope::in_scope) {
    ParallelSample s;
    s.id = id;
    s.source_tag = SourceTag::synthetic;
    s.edit_lang = LanguageCode(edit_lang);
    s.query_lang = LanguageCode(query_lang);
    s.scope = scope;
    s.with_edit = with_edit;
    if (with_edit) s.edit_text = edit;
    s.query = query;
    s.answer = answer;
    return s;
}

std::vector<ParallelSample> golden_samples() {
    return {
        mk("g0", true, "Where does Veyra Kole live now? Avorra",
           "Where does Veyra Kole live now?", "Avorra"),
        mk("g1", false, "", "Who founded Quillon?", "Mira Ashdown", "en", "en",
           Scope::out_of_scope),
        mk("g2", true, "Where does Tammin Oru live now? Ostvale",
           "Tammin Oru xianzai zhu zai nali ?", "⟨zh⟩ Ostvale", "en", "zh"),
        mk("g3", false, "", "Brinmore de qizhi shi shenme yanse ?", "⟨zh⟩ green", "en",
           "zh", Scope::out_of_scope),
        mk("g4", true, "The capital of Harlow is now. Delmira", "What is the capital of Harlow?",
           "Delmira"),
        mk("g5", true, "Shei shi Caruth de shizhang? Oda Brandt", "Who is the mayor of Caruth?",
           "Oda Brandt", "zh", "en"),
        mk("g6", false, "", "Kiva Solen de zhiye shi shenme ?", "⟨zh⟩ teacher", "zh",
           "zh", Scope::out_of_scope),
        mk("g7", true, "Where does Nera Voss work? Fennick Labs", "Name the employer of Nera Voss.",
           "Fennick Labs"),
        mk("g8", false, "", "What color is the flag of Ithmar?", "green", "en", "en",
           Scope::out_of_scope),
        mk("g9", true, "Who owns Galsey Harbor? Ruan Pelt", "Galsey Harbor de zhuren shi shei ?",
           "⟨zh⟩ Ruan Pelt", "en", "zh"),
    };
}

// A vocabulary covering a sample set (frame words included via the texts).
lm::ToyVocab cover_vocab(const std::vector<ParallelSample>& samples) {
    lm::ToyVocab v;
    for (const auto& s : samples) {
        if (s.edit_text) v.add_text("[Edit description]: " + *s.edit_text);
        v.add_text("[Query]: " + s.query);
        v.add_text("[Answer]: " + s.answer);
    }
    return v;
}

// Small learnable instruction set: each query has a one-token answer that is
// a pure function of the query.
struct QaSetup {
    lm::ToyVocab vocab;
    std::vector<ParallelSample> samples;
};

QaSetup make_qa_setup() {
    static const char* teams[] = {"amber", "birch", "cedar", "dune", "ember", "fjord"};
    static const char* names[] = {"nora", "pell", "quin", "rask", "sola", "tuck"};
    QaSetup setup;
    for (int i = 0; i < 6; ++i) {
        const std::string q = std::string("who leads team ") + teams[i] + " ?";
        const std::string a = names[i];
        setup.samples.push_back(mk("qa-" + std::to_string(i), true, q + " " + a, q, a));
        setup.samples.push_back(
            mk("qa-plain-" + std::to_string(i), false, "", q, a, "en", "en", Scope::in_scope));
    }
    setup.vocab = cover_vocab(setup.samples);
    return setup;
}

// Scoring double with probability 1 on every gold token.
class PerfectModel : public lm::ScoringModel {
public:
    explicit PerfectModel(int vocab) : vocab_(vocab) {}
    int vocab_size() const override { return vocab_; }
    int context_limit() const override { return 4096; }
    int eos_id() const override { return lm::ToyVocab::kEos; }
    std::vector<double> score_sequence(const std::vector<int>&,
                                       const std::vector<int>& target) const override {
        return std::vector<double>(target.size(), 0.0);
    }
    std::vector<int> greedy_decode(const std::vector<int>&, int) const override { return {}; }
    std::vector<std::vector<int>> sample(const std::vector<int>&, int, double, int,
                                         std::uint64_t) const override {
        return {};
    }

private:
    int vocab_;
};

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

} // namespace

TEST_CASE("format_example builds the frame, the mask, and the eos answer span") {
    lm::ToyVocab vocab;
    vocab.add_text("[Edit description]: [Query]: [Answer]: who leads team amber ? nora");

    const auto with_edit =
        format_example(mk("s0", true, "who leads team amber ? nora", "who leads team amber ?",
                          "nora"),
                       vocab);
    CHECK(with_edit.prompt_text ==
          "[Edit description]: who leads team amber ? nora\n"
          "[Query]: who leads team amber ?\n[Answer]: ");
    CHECK(with_edit.answer_len == 2); // answer token + eos
    CHECK(with_edit.tokens.size() == with_edit.prompt_len + with_edit.answer_len);
    CHECK(with_edit.tokens.back() == lm::ToyVocab::kEos);
    CHECK(with_edit.labels == with_edit.tokens);
    CHECK(std::accumulate(with_edit.mask.begin(), with_edit.mask.end(), 0.0) ==
          doctest::Approx(2.0));
    for (std::size_t t = 0; t < with_edit.prompt_len; ++t) CHECK(with_edit.mask[t] == 0.0);

    const auto plain = format_example(mk("s1", false, "", "who leads team amber ?", "nora"),
                                      vocab);
    CHECK(plain.prompt_text.find("[Edit description]") == std::string::npos);
    CHECK(plain.prompt_text == "[Query]: who leads team amber ?\n[Answer]: ");

    CHECK_THROWS_AS(format_example(mk("s2", false, "", "who leads team amber ?", "nora"), vocab,
                                   4),
                    OverLength);
}

TEST_CASE("format_dataset drops over-length samples with a log, keeping the rest") {
    lm::ToyVocab vocab;
    vocab.add_text("[Query]: [Answer]: a b c d e f g h");
    std::vector<ParallelSample> samples = {
        mk("ok", false, "", "a b", "c"),
        mk("long", false, "", "a b c d e f g h a b c d e f g h", "c"),
        mk("ok2", false, "", "d e", "f"),
    };
    const auto formatted = format_dataset(samples, vocab, 12);
    REQUIRE(formatted.size() == 2);
    CHECK(formatted[0].prompt_text.find("a b") != std::string::npos);
    CHECK(formatted[1].prompt_text.find("d e") != std::string::npos);
}

TEST_CASE("ten sample formats match the frozen golden file byte-for-byte") {
    const auto samples = golden_samples();
    const auto vocab = cover_vocab(samples);

    std::ifstream in("tests/golden/xeit_prompts.golden");
    REQUIRE_MESSAGE(in.good(), "run tests from the repository root");
    std::vector<std::string> golden;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) golden.push_back(nlohmann::json::parse(line).get<std::string>());
    }
    REQUIRE(golden.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CAPTURE(i);
        CHECK(format_example(samples[i], vocab).prompt_text == golden[i]);
    }
}

TEST_CASE("uniform and perfect models give the closed-form losses") {
    const auto samples = golden_samples();
    const auto vocab = cover_vocab(samples);
    const auto batch = format_dataset(samples, vocab);

    const int V = vocab.size();
    testsupport::UniformModel uniform(V);
    CHECK(xeit_loss(uniform, batch) == doctest::Approx(std::log(V)).epsilon(1e-12));

    PerfectModel perfect(V);
    CHECK(xeit_loss(perfect, batch) == 0.0);

    CHECK_THROWS_AS(xeit_loss(uniform, {}), EmptyBatch);
}

TEST_CASE("toy gradient path reproduces the scoring-path value") {
    const auto setup = make_qa_setup();
    const auto batch = format_dataset(setup.samples, setup.vocab);
    lm::ToyLm model(setup.vocab.size(), 16, 5);

    std::vector<double> grad(model.n_params(), 0.0);
    const double via_grad = xeit_loss_grad(model, batch, grad);
    const double via_score = xeit_loss(model, batch);
    CHECK(via_grad == doctest::Approx(via_score).epsilon(1e-12));
}

TEST_CASE("only answer-position labels influence the loss") {
    const auto setup = make_qa_setup();
    auto batch = format_dataset(setup.samples, setup.vocab);
    lm::ToyLm model(setup.vocab.size(), 16, 6);
    const double base = xeit_loss(model, batch);
    std::vector<double> g1(model.n_params(), 0.0);
    const double base_toy = xeit_loss_grad(model, batch, g1);

    // Perturb a prompt-position label: both paths must not move at all.
    auto prompt_perturbed = batch;
    prompt_perturbed[0].labels[1] = (prompt_perturbed[0].labels[1] + 1) % setup.vocab.size();
    CHECK(xeit_loss(model, prompt_perturbed) == base);
    std::vector<double> g2(model.n_params(), 0.0);
    CHECK(xeit_loss_grad(model, prompt_perturbed, g2) == base_toy);
    CHECK(g1 == g2);

    // Perturb an answer-position label: the loss must move.
    auto answer_perturbed = batch;
    const std::size_t slot = answer_perturbed[0].prompt_len;
    answer_perturbed[0].labels[slot] =
        (answer_perturbed[0].labels[slot] + 1) % setup.vocab.size();
    CHECK(xeit_loss(model, answer_perturbed) != base);
    std::vector<double> g3(model.n_params(), 0.0);
    CHECK(xeit_loss_grad(model, answer_perturbed, g3) != base_toy);
}

TEST_CASE("batch order does not change the loss") {
    const auto setup = make_qa_setup();
    auto batch = format_dataset(setup.samples, setup.vocab);
    lm::ToyLm model(setup.vocab.size(), 16, 7);
    const double forward = xeit_loss(model, batch);
    std::reverse(batch.begin(), batch.end());
    CHECK(xeit_loss(model, batch) == doctest::Approx(forward).epsilon(1e-12));
}

TEST_CASE("xeit loss gradient matches finite differences") {
    const auto setup = make_qa_setup();
    const auto all = format_dataset(setup.samples, setup.vocab);
    const std::vector<FormattedExample> batch(all.begin(), all.begin() + 3);
    lm::ToyLm model(setup.vocab.size(), 8, 31);

    std::vector<double> grad(model.n_params(), 0.0);
    xeit_loss_grad(model, batch, grad);

    Rng pick(99);
    const double h = 1e-5;
    for (int r = 0; r < 40; ++r) {
        const std::size_t i = pick.below(model.n_params());
        const double orig = model.params()[i];
        model.params()[i] = orig + h;
        const double lp = xeit_loss(model, batch);
        model.params()[i] = orig - h;
        const double lmnus = xeit_loss(model, batch);
        model.params()[i] = orig;
        const double fd = (lp - lmnus) / (2.0 * h);
        const double rel = std::abs(fd - grad[i]) / std::max({1e-3, std::abs(fd),
                                                              std::abs(grad[i])});
        CAPTURE(i);
        CHECK(rel <= 1e-5);
    }
}

TEST_CASE("training descends, overfits and stays deterministic") {
    const auto setup = make_qa_setup();
    const auto dataset = format_dataset(setup.samples, setup.vocab);

    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 150;
    cfg.batch_size = 4;
    cfg.warmup_steps = 10;
    cfg.weight_decay = 0.01;
    cfg.seed = 13;

    lm::ToyLm model(setup.vocab.size(), 24, 100);
    const auto result = train_xeit(model, dataset, cfg);
    REQUIRE(result.curve.size() == 150 * 3);

    // Window-10 smoothed curve decreases overall and never jumps back up.
    std::vector<double> bins;
    for (std::size_t start = 0; start + 10 <= result.curve.size(); start += 10) {
        double sum = 0.0;
        for (std::size_t i = start; i < start + 10; ++i) sum += result.curve[i].second;
        bins.push_back(sum / 10.0);
    }
    for (std::size_t k = 1; k < bins.size(); ++k) CHECK(bins[k] <= bins[k - 1] + 0.05);
    CHECK(bins.back() < 0.3 * bins.front());

    // Re-running from the same initialization reproduces the curve exactly.
    lm::ToyLm again(setup.vocab.size(), 24, 100);
    const auto rerun = train_xeit(again, dataset, cfg);
    CHECK(rerun.curve == result.curve);
    CHECK(again.params() == model.params());
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
    const auto setup = make_qa_setup();
    const auto dataset = format_dataset(setup.samples, setup.vocab);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.seed = 3;

    lm::ToyLm model(setup.vocab.size(), 16, 50);
    const std::vector<double> before = model.params();
    train_xeit(model, dataset, cfg);
    CHECK(model.params() == before);
}

TEST_CASE("a runaway learning rate raises DivergedLoss") {
    const auto setup = make_qa_setup();
    const auto dataset = format_dataset(setup.samples, setup.vocab);
    TrainConfig cfg;
    cfg.learning_rate = 1e4;
    cfg.warmup_steps = 0;
    cfg.epochs = 100;
    cfg.batch_size = dataset.size();
    cfg.seed = 4;

    lm::ToyLm model(setup.vocab.size(), 16, 51);
    CHECK_THROWS_AS(train_xeit(model, dataset, cfg), DivergedLoss);
}

TEST_CASE("checkpoints and the loss curve land on disk") {
    const auto setup = make_qa_setup();
    const auto dataset = format_dataset(setup.samples, setup.vocab);
    const std::string dir = temp_dir("xkde_xeit_artifacts");

    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 2;
    cfg.batch_size = 6;
    cfg.warmup_steps = 2;
    cfg.seed = 9;
    cfg.checkpoint_dir = dir;
    cfg.curve_path = dir + "/curve.txt";

    lm::ToyLm model(setup.vocab.size(), 16, 60);
    const auto result = train_xeit(model, dataset, cfg);

    CHECK(std::filesystem::exists(dir + "/xeit-epoch-1.bin"));
    CHECK(std::filesystem::exists(dir + "/xeit-epoch-2.bin"));
    const auto reloaded = lm::ToyLm::load(dir + "/xeit-epoch-2.bin");
    CHECK(reloaded.params() == model.params());

    std::ifstream in(dir + "/curve.txt");
    std::size_t rows = 0;
    std::size_t step = 0;
    double loss = 0.0;
    while (in >> step >> loss) {
        ++rows;
        CHECK(step == rows);
    }
    CHECK(rows == result.curve.size());
    std::filesystem::remove_all(dir);
}

TEST_CASE("learning-rate schedule: linear warmup then cosine decay to zero") {
    TrainConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.warmup_steps = 10;
    CHECK(lr_at(0, 110, cfg) == doctest::Approx(0.1));
    CHECK(lr_at(9, 110, cfg) == doctest::Approx(1.0));
    CHECK(lr_at(60, 110, cfg) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(lr_at(109, 110, cfg) < 0.001);

    CHECK_THROWS_AS(validate_train_config([] {
                        TrainConfig c;
                        c.batch_size = 0;
                        return c;
                    }()),
                    ConfigError);
    CHECK_THROWS_AS(validate_train_config([] {
                        TrainConfig c;
                        c.learning_rate = -1.0;
                        return c;
                    }()),
                    ConfigError);
}
