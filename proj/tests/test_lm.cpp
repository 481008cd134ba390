#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>

#include "common/errors.hpp"
#include "common/rng.hpp"
#include "lm/edit_memory.hpp"
#include "lm/prompted_decoder.hpp"
#include "lm/toy_lm.hpp"
#include "lm/vocab.hpp"
#include "support/fake_models.hpp"

using namespace xkde;
using namespace xkde::lm;

// ===========================================================================
// Independent forward-pass oracle: a from-scratch reimplementation of the
// documented architecture working on the flat parameter vector, written in a
// different style (vector-of-vectors, no caching) so a bug in the production
// forward cannot hide in a shared helper.
// ===========================================================================

namespace {

struct Layout {
    int V, d, dk, dm;
    std::size_t embed;
    struct Blk {
        std::size_t ln1_g, ln1_b, wq, wk, wv, wo, ln2_g, ln2_b, w1, b1, w2, b2;
    } blk[2];
    std::size_t lnf_g, lnf_b, total;

    Layout(int V_, int d_) : V(V_), d(d_), dk(d_ / 4), dm(d_ / 2) {
        std::size_t at = 0;
        auto take = [&at](std::size_t n) {
            const std::size_t h = at;
            at += n;
            return h;
        };
        embed = take(static_cast<std::size_t>(V) * d);
        for (auto& b : blk) {
            b.ln1_g = take(d);
            b.ln1_b = take(d);
            b.wq = take(static_cast<std::size_t>(dk) * d);
            b.wk = take(static_cast<std::size_t>(dk) * d);
            b.wv = take(static_cast<std::size_t>(d) * d);
            b.wo = take(static_cast<std::size_t>(d) * d);
            b.ln2_g = take(d);
            b.ln2_b = take(d);
            b.w1 = take(static_cast<std::size_t>(dm) * d);
            b.b1 = take(dm);
            b.w2 = take(static_cast<std::size_t>(d) * dm);
            b.b2 = take(d);
        }
        lnf_g = take(d);
        lnf_b = take(d);
        total = at;
    }
};

using Vec = std::vector<double>;

Vec oracle_ln(const Vec& x, const double* g, const double* b) {
    const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= static_cast<double>(x.size());
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    Vec out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = g[j] * ((x[j] - mu) * inv) + b[j];
    return out;
}

Vec oracle_matvec(const double* W, const Vec& x, int rows) {
    Vec y(static_cast<std::size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < x.size(); ++c) {
            y[static_cast<std::size_t>(r)] += W[static_cast<std::size_t>(r) * x.size() + c] * x[c];
        }
    }
    return y;
}

// Per-token log P(target | context) under the documented network.
std::vector<double> oracle_scores(const std::vector<double>& P, const Layout& L,
                                  const std::vector<int>& ctx, const std::vector<int>& tgt) {
    std::vector<int> z = {1}; // <bos>
    z.insert(z.end(), ctx.begin(), ctx.end());
    z.insert(z.end(), tgt.begin(), tgt.end());
    const int T = static_cast<int>(z.size());

    std::vector<Vec> x(static_cast<std::size_t>(T), Vec(static_cast<std::size_t>(L.d)));
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < L.d; ++j) {
            const double freq = std::exp(-std::log(10000.0) * (2.0 * (j / 2)) / L.d);
            const double pe = (j % 2 == 0) ? std::sin(t * freq) : std::cos(t * freq);
            x[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] =
                P[L.embed + static_cast<std::size_t>(z[static_cast<std::size_t>(t)]) * L.d + j] +
                pe;
        }
    }

    for (const auto& B : L.blk) {
        std::vector<Vec> a, q, k, v;
        for (int t = 0; t < T; ++t) {
            a.push_back(oracle_ln(x[static_cast<std::size_t>(t)], &P[B.ln1_g], &P[B.ln1_b]));
            q.push_back(oracle_matvec(&P[B.wq], a.back(), L.dk));
            k.push_back(oracle_matvec(&P[B.wk], a.back(), L.dk));
            v.push_back(oracle_matvec(&P[B.wv], a.back(), L.d));
        }
        std::vector<Vec> xnew = x;
        for (int i = 0; i < T; ++i) {
            Vec s;
            for (int j = 0; j <= i; ++j) {
                s.push_back(std::inner_product(q[static_cast<std::size_t>(i)].begin(),
                                               q[static_cast<std::size_t>(i)].end(),
                                               k[static_cast<std::size_t>(j)].begin(), 0.0) /
                            std::sqrt(static_cast<double>(L.dk)));
            }
            const double mx = *std::max_element(s.begin(), s.end());
            double denom = 0.0;
            for (double& e : s) {
                e = std::exp(e - mx);
                denom += e;
            }
            Vec mix(static_cast<std::size_t>(L.d), 0.0);
            for (int j = 0; j <= i; ++j) {
                for (int u = 0; u < L.d; ++u) {
                    mix[static_cast<std::size_t>(u)] +=
                        (s[static_cast<std::size_t>(j)] / denom) *
                        v[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)];
                }
            }
            const Vec out = oracle_matvec(&P[B.wo], mix, L.d);
            for (int u = 0; u < L.d; ++u) {
                xnew[static_cast<std::size_t>(i)][static_cast<std::size_t>(u)] +=
                    out[static_cast<std::size_t>(u)];
            }
        }
        x = xnew;
        for (int t = 0; t < T; ++t) {
            const Vec b = oracle_ln(x[static_cast<std::size_t>(t)], &P[B.ln2_g], &P[B.ln2_b]);
            Vec h = oracle_matvec(&P[B.w1], b, L.dm);
            for (int j = 0; j < L.dm; ++j) {
                h[static_cast<std::size_t>(j)] = std::tanh(h[static_cast<std::size_t>(j)] +
                                                           P[B.b1 + static_cast<std::size_t>(j)]);
            }
            const Vec m = oracle_matvec(&P[B.w2], h, L.d);
            for (int j = 0; j < L.d; ++j) {
                x[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] +=
                    m[static_cast<std::size_t>(j)] + P[B.b2 + static_cast<std::size_t>(j)];
            }
        }
    }

    std::vector<double> out;
    for (std::size_t t = 0; t < tgt.size(); ++t) {
        const int pos = static_cast<int>(ctx.size() + t);
        const Vec f = oracle_ln(x[static_cast<std::size_t>(pos)], &P[L.lnf_g], &P[L.lnf_b]);
        Vec logits(static_cast<std::size_t>(L.V), 0.0);
        for (int r = 0; r < L.V; ++r) {
            for (int j = 0; j < L.d; ++j) {
                logits[static_cast<std::size_t>(r)] +=
                    P[L.embed + static_cast<std::size_t>(r) * L.d + j] *
                    f[static_cast<std::size_t>(j)];
            }
        }
        const double mx = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (double l : logits) denom += std::exp(l - mx);
        out.push_back(logits[static_cast<std::size_t>(tgt[t])] - mx - std::log(denom));
    }
    return out;
}

std::string temp_path(const std::string& name) {
    return std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/" + name;
}

} // namespace

// ===========================================================================
// vocabulary
// ===========================================================================

TEST_CASE("vocabulary reserves specials and round-trips text") {
    ToyVocab v;
    CHECK(v.size() == 4);
    CHECK(v.id("<bos>") == ToyVocab::kBos);
    CHECK(v.id("<eos>") == ToyVocab::kEos);
    CHECK(v.id("nope") == ToyVocab::kUnk);

    v.add_text("Where does Veyra live now ?");
    const auto ids = v.encode("Where does Veyra live now ?");
    CHECK(ids.size() == 6);
    CHECK(v.decode(ids) == "Where does Veyra live now ?");
    // Unknown word comes back as the literal <unk> token.
    CHECK(v.decode(v.encode("Where is Quillon ?")) == "Where <unk> <unk> ?");

    CHECK(ToyVocab::marker(LanguageCode("en")) == "⟨en⟩");
    // The marker survives tokenization as a single piece.
    v.add_word(ToyVocab::marker(LanguageCode("zh")));
    CHECK(v.encode("⟨zh⟩ hello").size() == 2);

    const std::string path = temp_path("xkde_vocab_test.txt");
    v.save(path);
    const ToyVocab back = ToyVocab::load(path);
    CHECK(back == v);
    std::remove(path.c_str());
}

// ===========================================================================
// toy model
// ===========================================================================

TEST_CASE("identical seeds give identical parameters") {
    ToyLm a(20, 16, 7);
    ToyLm b(20, 16, 7);
    ToyLm c(20, 16, 8);
    CHECK(a.params() == b.params());
    CHECK(a.params() != c.params());
    CHECK(a.n_params() == Layout(20, 16).total);
}

TEST_CASE("hidden size must be a positive multiple of four") {
    CHECK_THROWS_AS(ToyLm(20, 10, 1), ModelError);
    CHECK_THROWS_AS(ToyLm(2, 16, 1), ModelError);
}

TEST_CASE("next-token distribution is a proper distribution") {
    ToyLm m(23, 16, 3);
    for (const std::vector<int> ctx :
         {std::vector<int>{}, std::vector<int>{5}, std::vector<int>{4, 9, 12, 7, 7}}) {
        const auto p = m.next_distribution(ctx);
        REQUIRE(p.size() == 23);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("scores match an independent forward-pass oracle") {
    const int V = 17, d = 8;
    ToyLm m(V, d, 42);
    const Layout L(V, d);
    REQUIRE(m.n_params() == L.total);

    const std::vector<int> ctx = {4, 11, 7};
    const std::vector<int> tgt = {9, 16, 5};
    const auto got = m.score_sequence(ctx, tgt);
    const auto want = oracle_scores(m.params(), L, ctx, tgt);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }

    // Empty context exercises the begin-token-only prefix.
    const auto got2 = m.score_sequence({}, tgt);
    const auto want2 = oracle_scores(m.params(), L, {}, tgt);
    for (std::size_t i = 0; i < got2.size(); ++i) {
        CHECK(got2[i] == doctest::Approx(want2[i]).epsilon(1e-12));
    }
}

TEST_CASE("score_sequence basics and bounds") {
    ToyLm m(19, 8, 5);
    CHECK(m.score_sequence({3, 4}, {}).empty());

    const auto lp = m.score_sequence({3}, {4, 5, 6, 7});
    double total = 0.0;
    for (double v : lp) {
        CHECK(std::exp(v) > 0.0);
        CHECK(std::exp(v) <= 1.0);
        total += v;
    }
    CHECK(total <= 0.0);

    CHECK_THROWS_AS(m.score_sequence(std::vector<int>(200, 4), std::vector<int>(200, 5)),
                    ContextOverflow);
    CHECK_THROWS_AS(m.score_sequence({19}, {4}), ModelError);
    CHECK_THROWS_AS(m.score_sequence({3}, {-1}), ModelError);
}

TEST_CASE("greedy decode is a step-wise argmax fixed point") {
    ToyLm m(19, 8, 9);
    CHECK(m.greedy_decode({4, 5}, 0).empty());

    const std::vector<int> ctx = {4, 5, 6};
    const auto out = m.greedy_decode(ctx, 8);
    REQUIRE(!out.empty());
    std::vector<int> prefix = ctx;
    for (int tok : out) {
        const auto p = m.next_distribution(prefix);
        int best = 0;
        for (int r = 1; r < 19; ++r) {
            if (p[static_cast<std::size_t>(r)] > p[static_cast<std::size_t>(best)]) best = r;
        }
        CHECK(tok == best);
        prefix.push_back(tok);
    }
    CHECK_THROWS_AS(m.greedy_decode(std::vector<int>(256, 4), 4), ContextOverflow);
}

TEST_CASE("sampling is seed-deterministic and near-zero temperature decodes greedily") {
    ToyLm m(19, 8, 13);
    const std::vector<int> ctx = {3, 8};
    const auto a = m.sample(ctx, 6, 1.0, 3, 99);
    const auto b = m.sample(ctx, 6, 1.0, 3, 99);
    CHECK(a == b);
    REQUIRE(a.size() == 3);
    CHECK(m.sample(ctx, 6, 1.0, 0, 99).empty());
    CHECK_THROWS_AS(m.sample(ctx, 6, 0.0, 2, 99), NonPositiveTemperature);
    CHECK_THROWS_AS(m.sample(ctx, 6, -1.0, 2, 99), NonPositiveTemperature);

    // Temperatures below the documented 1e-6 floor behave like greedy.
    const auto frozen = m.sample(ctx, 6, 1e-12, 2, 7);
    const auto greedy = m.greedy_decode(ctx, 6);
    CHECK(frozen[0] == greedy);
    CHECK(frozen[1] == greedy);
}

TEST_CASE("weighted nll composes per-token scores") {
    ToyLm m(19, 8, 21);
    const std::vector<int> seq = {4, 9, 2, 11, 5};
    const std::vector<double> weights = {0.0, 1.0, 0.5, 0.0, 2.0};
    const auto lp = m.score_sequence({}, seq);
    double want = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) want -= weights[i] * lp[i];
    CHECK(m.weighted_nll(seq, seq, weights) == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS(m.weighted_nll({}, {}, {}), ModelError);
    CHECK_THROWS_AS(m.weighted_nll({4}, {4, 5}, {1.0}), ModelError);
}

TEST_CASE("analytic gradient matches central finite differences") {
    const int V = 13, d = 8;
    const Layout L(V, d);
    Rng pick(505);
    for (std::uint64_t trial = 0; trial < 3; ++trial) {
        ToyLm m(V, d, 1000 + trial);
        std::vector<int> seq, labels;
        std::vector<double> weights;
        for (int i = 0; i < 6; ++i) {
            seq.push_back(static_cast<int>(pick.below(V)));
            labels.push_back(static_cast<int>(pick.below(V)));
            weights.push_back(i % 3 == 0 ? 0.0 : 0.25 * static_cast<double>(1 + pick.below(4)));
        }

        std::vector<double> grad(m.n_params(), 0.0);
        const double loss = m.weighted_nll_grad(seq, labels, weights, grad);
        CHECK(loss == doctest::Approx(m.weighted_nll(seq, labels, weights)).epsilon(1e-12));

        // A stratified index set: a few from every parameter group.
        std::vector<std::size_t> idx;
        for (std::size_t base :
             {L.embed + static_cast<std::size_t>(seq[0]) * d, L.blk[0].ln1_g, L.blk[0].wq,
              L.blk[0].wv, L.blk[0].wo, L.blk[0].w1, L.blk[0].b1, L.blk[0].w2, L.blk[0].b2,
              L.blk[1].ln1_b, L.blk[1].wk, L.blk[1].ln2_g, L.blk[1].w1, L.lnf_g, L.lnf_b}) {
            idx.push_back(base);
            idx.push_back(base + 1);
        }
        for (int r = 0; r < 20; ++r) idx.push_back(pick.below(m.n_params()));

        const double h = 1e-5;
        for (std::size_t i : idx) {
            const double orig = m.params()[i];
            m.params()[i] = orig + h;
            const double lp = m.weighted_nll(seq, labels, weights);
            m.params()[i] = orig - h;
            const double lmnus = m.weighted_nll(seq, labels, weights);
            m.params()[i] = orig;
            const double fd = (lp - lmnus) / (2.0 * h);
            const double an = grad[i];
            const double rel =
                std::abs(fd - an) / std::max({1e-3, std::abs(fd), std::abs(an)});
            CAPTURE(i);
            CHECK(rel <= 1e-5);
        }
    }
}

TEST_CASE("plain gradient descent can overfit one sequence") {
    ToyLm m(12, 8, 77);
    const std::vector<int> seq = {5, 9, 4, 2};
    const std::vector<double> weights(seq.size(), 1.0);
    std::vector<double> grad(m.n_params());
    const double initial = m.weighted_nll(seq, seq, weights);
    for (int step = 0; step < 150; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);
        m.weighted_nll_grad(seq, seq, weights, grad);
        for (std::size_t i = 0; i < grad.size(); ++i) m.params()[i] -= 0.05 * grad[i];
    }
    CHECK(m.weighted_nll(seq, seq, weights) < 0.5 * initial);
}

TEST_CASE("checkpoints round-trip and reject junk") {
    ToyLm m(21, 8, 1234);
    const std::string path = temp_path("xkde_ckpt_test.bin");
    m.save(path);

    const ToyLm back = ToyLm::load(path);
    CHECK(back.vocab_size() == 21);
    CHECK(back.hidden() == 8);
    CHECK(back.seed() == 1234);
    CHECK(back.params() == m.params());

    // Truncation.
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(path + ".trunc", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(ToyLm::load(path + ".trunc"), ModelLoadError);

    // Trailing garbage.
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out << "tail";
    }
    CHECK_THROWS_AS(ToyLm::load(path), ModelLoadError);

    // Wrong magic.
    {
        std::ofstream out(path + ".magic", std::ios::binary);
        out << "NOTATOYLMMODEL-------------------------------";
    }
    CHECK_THROWS_AS(ToyLm::load(path + ".magic"), ModelLoadError);
    CHECK_THROWS_AS(ToyLm::load(path + ".does-not-exist"), ModelLoadError);

    std::remove(path.c_str());
    std::remove((path + ".trunc").c_str());
    std::remove((path + ".magic").c_str());
}

TEST_CASE("parameter count stays inside the desk-scale budget") {
    // The synthetic-world vocabulary builder caps at 320 words; at that size
    // the full model must stay within 50k parameters.
    ToyLm m(320, 64, 1);
    CHECK(m.n_params() == 49984);
    CHECK(m.n_params() <= 50000);
}

// ===========================================================================
// edit memory
// ===========================================================================

namespace {

EditDescriptor make_edit(const std::string& id, const std::string& subject,
                         const std::string& prompt, const std::string& target) {
    EditDescriptor d;
    d.id = id;
    d.lang = LanguageCode("en");
    d.subject = subject;
    d.prompt = prompt;
    d.target_new = target;
    return d;
}

// Minimal from-scratch trigram cosine for cross-checking the retriever.
double hand_cosine(std::string a, std::string b) {
    for (auto& c : a) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto& c : b) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    auto grams = [](const std::string& s) {
        std::map<std::string, int> g;
        if (s.size() < 3) {
            if (!s.empty()) g[s] = 1;
            return g;
        }
        for (std::size_t i = 0; i + 3 <= s.size(); ++i) ++g[s.substr(i, 3)];
        return g;
    };
    const auto ga = grams(a), gb = grams(b);
    double dot = 0, na = 0, nb = 0;
    for (const auto& [k, v] : ga) {
        na += v * v;
        const auto it = gb.find(k);
        if (it != gb.end()) dot += v * it->second;
    }
    for (const auto& [k, v] : gb) nb += v * v;
    return dot == 0 ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace

TEST_CASE("a single stored edit is always retrieved") {
    EditMemory mem;
    mem.insert(make_edit("e0", "Veyra Kole", "Where does Veyra Kole live now?", "Avorra"));
    CHECK(mem.retrieve("anything at all", 1) == std::vector<std::size_t>{0});
    CHECK(mem.retrieve("Where does Veyra Kole live now?", 5) == std::vector<std::size_t>{0});
}

TEST_CASE("retrieval ranks the matching subject first and matches a hand computation") {
    EditMemory mem;
    mem.insert(make_edit("e0", "Veyra Kole", "Where does Veyra Kole live now?", "Avorra"));
    mem.insert(make_edit("e1", "Tammin Oru", "Where does Tammin Oru live now?", "Quillon"));
    mem.insert(make_edit("e2", "Basel Quint", "Who employs Basel Quint?", "Ostvale"));

    const std::string query = "In which town does Tammin Oru reside?";
    const auto order = mem.retrieve(query, 3);
    REQUIRE(order.size() == 3);
    CHECK(order[0] == 1);

    // The full ordering agrees with an independent cosine computation.
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < mem.size(); ++i) {
        scored.emplace_back(hand_cosine(query, serialize_edit(mem.at(i))), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;
    });
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == scored[i].second);
}

TEST_CASE("inserting unrelated edits never reorders existing results") {
    EditMemory mem;
    mem.insert(make_edit("e0", "Veyra Kole", "Where does Veyra Kole live now?", "Avorra"));
    mem.insert(make_edit("e1", "Tammin Oru", "Where does Tammin Oru live now?", "Quillon"));
    const std::string query = "home of Veyra Kole";
    const auto before = mem.retrieve(query, 2);
    mem.insert(make_edit("e2", "Zzx Qqw", "Zzx Qqw zzz qqq?", "Yyy"));
    mem.insert(make_edit("e3", "Jjk Vvb", "Jjk Vvb jjj vvv?", "Uuu"));
    const auto after = mem.retrieve(query, 4);
    // Relative order of the two originals is unchanged.
    std::vector<std::size_t> originals;
    for (std::size_t i : after) {
        if (i < 2) originals.push_back(i);
    }
    CHECK(originals == before);
}

TEST_CASE("ties fall back to insertion order and oversized k returns everything") {
    // A constant retriever makes every similarity tie.
    class Flat : public EditRetriever {
    public:
        double similarity(const std::string&, const EditDescriptor&) const override {
            return 0.5;
        }
    };
    EditMemory mem(std::make_shared<Flat>());
    for (int i = 0; i < 4; ++i) {
        mem.insert(make_edit("e" + std::to_string(i), "S", "Who is S?", "T"));
    }
    CHECK(mem.retrieve("q", 10) == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(mem.retrieve("q", 2) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("retrieve_and_prompt wraps the query in the training frame") {
    EditMemory mem;
    mem.insert(make_edit("e0", "Veyra Kole", "Where does Veyra Kole live now?", "Avorra"));
    mem.insert(make_edit("e1", "Tammin Oru", "Where does Tammin Oru live now?", "Quillon"));

    bool empty = true;
    const std::string p = retrieve_and_prompt(mem, "Where does Veyra Kole live now?", 1, &empty);
    CHECK(!empty);
    CHECK(p ==
          "[Edit description]: Where does Veyra Kole live now? Avorra\n"
          "[Query]: Where does Veyra Kole live now?\n"
          "[Answer]: ");

    const std::string p2 = retrieve_and_prompt(mem, "Where does Veyra Kole live now?", 2);
    CHECK(p2 ==
          "[Edit description]: Where does Veyra Kole live now? Avorra\n"
          "[Edit description]: Where does Tammin Oru live now? Quillon\n"
          "[Query]: Where does Veyra Kole live now?\n"
          "[Answer]: ");
}

TEST_CASE("an empty memory is flagged, not fatal, and keeps the bare frame") {
    EditMemory mem;
    bool empty = false;
    const std::string p = retrieve_and_prompt(mem, "Where is Avorra?", 3, &empty);
    CHECK(empty);
    CHECK(p == "[Query]: Where is Avorra?\n[Answer]: ");
}

// ===========================================================================
// prompted decoder
// ===========================================================================

TEST_CASE("prompted decoder frames, decodes and detokenizes") {
    auto vocab = std::make_shared<ToyVocab>();
    vocab->add_text("Avorra Quillon where does live");
    auto model = std::make_shared<testsupport::DeltaModel>(vocab->id("Avorra"), vocab->size());

    auto mem = std::make_shared<EditMemory>();
    mem->insert(make_edit("e0", "Veyra", "where does Veyra live", "Avorra"));

    PromptedDecoder dec(model, vocab, mem, 1, 3);
    CHECK(dec.prompt_for("where does Veyra live") ==
          "[Edit description]: where does Veyra live? Avorra\n"
          "[Query]: where does Veyra live\n[Answer]: ");
    CHECK(dec.decode("where does Veyra live") ==
          std::vector<std::string>{"Avorra", "Avorra", "Avorra"});
    CHECK(dec.concurrent_read_safe());

    // Null memory produces the plain frame (the pre-edit model's view).
    PromptedDecoder base(model, vocab, nullptr, 1, 2);
    CHECK(base.prompt_for("where does Veyra live") ==
          "[Query]: where does Veyra live\n[Answer]: ");
    CHECK(base.decode("where does Veyra live") ==
          std::vector<std::string>{"Avorra", "Avorra"});
}

TEST_CASE("uniform and delta stand-ins expose their closed forms") {
    testsupport::UniformModel u(32);
    const auto lp = u.score_sequence({1, 2}, {3, 4, 5});
    for (double v : lp) CHECK(v == doctest::Approx(-std::log(32.0)).epsilon(1e-12));
    CHECK(u.greedy_decode({1}, 3) == std::vector<int>{0, 0, 0});
    CHECK(u.sample({1}, 4, 1.0, 2, 5) == u.sample({1}, 4, 1.0, 2, 5));

    testsupport::DeltaModel delta(7, 32);
    CHECK(delta.score_sequence({}, {7, 7})[0] == 0.0);
    CHECK(delta.score_sequence({}, {6})[0] < -1e8);
    CHECK(delta.greedy_decode({}, 2) == std::vector<int>{7, 7});
}
