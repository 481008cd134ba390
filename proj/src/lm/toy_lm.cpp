#include "lm/toy_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "common/errors.hpp"
#include "common/rng.hpp"
#include "lm/vocab.hpp"

namespace xkde::lm {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.08;
constexpr char kMagic[8] = {'X', 'K', 'D', 'E', 'T', 'O', 'Y', '1'};
constexpr std::uint32_t kFormatVersion = 1;

// y (rows) = W (rows x cols, row-major) * x
void matvec(const double* W, const double* x, int rows, int cols, double* y) {
    for (int r = 0; r < rows; ++r) {
        const double* w = W + static_cast<std::size_t>(r) * cols;
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += w[c] * x[c];
        y[r] = acc;
    }
}

// Given dy for y = W x: dW += dy ⊗ x and dx += W^T dy.
void matvec_backward(const double* W, const double* x, const double* dy, int rows, int cols,
                     double* dW, double* dx) {
    for (int r = 0; r < rows; ++r) {
        const double g = dy[r];
        if (g == 0.0) continue;
        const double* w = W + static_cast<std::size_t>(r) * cols;
        double* dw = dW + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
            dw[c] += g * x[c];
            dx[c] += g * w[c];
        }
    }
}

void layer_norm_forward(const double* x, const double* g, const double* b, int d, double* out,
                        double* xhat, double* inv_std) {
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += x[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
        const double c = x[j] - mu;
        var += c * c;
    }
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    *inv_std = inv;
    for (int j = 0; j < d; ++j) {
        xhat[j] = (x[j] - mu) * inv;
        out[j] = g[j] * xhat[j] + b[j];
    }
}

// dx += backward of layer norm; dg/db accumulate the affine grads.
void layer_norm_backward(const double* dout, const double* g, const double* xhat, double inv_std,
                         int d, double* dx, double* dg, double* db) {
    double m1 = 0.0, m2 = 0.0;
    for (int j = 0; j < d; ++j) {
        dg[j] += dout[j] * xhat[j];
        db[j] += dout[j];
        const double dxh = dout[j] * g[j];
        m1 += dxh;
        m2 += dxh * xhat[j];
    }
    m1 /= d;
    m2 /= d;
    for (int j = 0; j < d; ++j) {
        const double dxh = dout[j] * g[j];
        dx[j] += inv_std * (dxh - m1 - xhat[j] * m2);
    }
}

double pos_enc(int t, int j, int d) {
    const int pair = j / 2;
    const double freq = std::exp(-std::log(10000.0) * (2.0 * pair) / d);
    const double ang = t * freq;
    return (j % 2 == 0) ? std::sin(ang) : std::cos(ang);
}

void softmax_in_place(std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

} // namespace

// ---------------------------------------------------------------------------
// construction / layout
// ---------------------------------------------------------------------------

void ToyLm::layout() {
    std::size_t at = 0;
    auto take = [&at](std::size_t n) {
        const std::size_t here = at;
        at += n;
        return here;
    };
    const std::size_t d = static_cast<std::size_t>(d_);
    const std::size_t dk = static_cast<std::size_t>(dk_);
    const std::size_t dm = static_cast<std::size_t>(dm_);
    off_embed_ = take(static_cast<std::size_t>(vocab_) * d);
    for (int b = 0; b < kBlocks; ++b) {
        BlockOffsets& o = off_block_[b];
        o.ln1_g = take(d);
        o.ln1_b = take(d);
        o.wq = take(dk * d);
        o.wk = take(dk * d);
        o.wv = take(d * d);
        o.wo = take(d * d);
        o.ln2_g = take(d);
        o.ln2_b = take(d);
        o.w1 = take(dm * d);
        o.b1 = take(dm);
        o.w2 = take(d * dm);
        o.b2 = take(d);
    }
    off_lnf_g_ = take(d);
    off_lnf_b_ = take(d);
    params_.assign(at, 0.0);
}

ToyLm::ToyLm(int vocab_size, int hidden, std::uint64_t seed)
    : vocab_(vocab_size), d_(hidden), dk_(hidden / 4), dm_(hidden / 2), seed_(seed) {
    if (vocab_size <= ToyVocab::kUnk) {
        throw ModelError("vocab size must cover the reserved special tokens");
    }
    if (hidden < 4 || hidden % 4 != 0) {
        throw ModelError("hidden size must be a positive multiple of 4");
    }
    layout();
    Rng rng(seed);
    for (double& p : params_) p = rng.normal() * kInitStd;
    // Layer norms start as identity maps, mlp biases at zero.
    auto fill = [this](std::size_t off, std::size_t n, double value) {
        std::fill(params_.begin() + static_cast<std::ptrdiff_t>(off),
                  params_.begin() + static_cast<std::ptrdiff_t>(off + n), value);
    };
    for (int b = 0; b < kBlocks; ++b) {
        const BlockOffsets& o = off_block_[b];
        fill(o.ln1_g, static_cast<std::size_t>(d_), 1.0);
        fill(o.ln1_b, static_cast<std::size_t>(d_), 0.0);
        fill(o.ln2_g, static_cast<std::size_t>(d_), 1.0);
        fill(o.ln2_b, static_cast<std::size_t>(d_), 0.0);
        fill(o.b1, static_cast<std::size_t>(dm_), 0.0);
        fill(o.b2, static_cast<std::size_t>(d_), 0.0);
    }
    fill(off_lnf_g_, static_cast<std::size_t>(d_), 1.0);
    fill(off_lnf_b_, static_cast<std::size_t>(d_), 0.0);
}

int ToyLm::eos_id() const { return ToyVocab::kEos; }

void ToyLm::check_ids(const std::vector<int>& ids) const {
    for (int id : ids) {
        if (id < 0 || id >= vocab_) {
            throw ModelError("token id " + std::to_string(id) + " outside vocabulary of " +
                             std::to_string(vocab_));
        }
    }
}

// ---------------------------------------------------------------------------
// forward pass
// ---------------------------------------------------------------------------

struct ToyLm::Cache {
    int T = 0;
    std::vector<int> z;
    struct Block {
        std::vector<double> xin;      // T*d block input
        std::vector<double> ln1_xhat; // T*d
        std::vector<double> ln1_inv;  // T
        std::vector<double> a;        // T*d normed input to attention
        std::vector<double> q, k;     // T*dk
        std::vector<double> v;        // T*d
        std::vector<double> att;      // T*T attention weights (row i, cols <= i)
        std::vector<double> ctx;      // T*d attention mix before the output proj
        std::vector<double> x_mid;    // T*d after attention residual
        std::vector<double> ln2_xhat; // T*d
        std::vector<double> ln2_inv;  // T
        std::vector<double> bvec;     // T*d normed input to the mlp
        std::vector<double> h;        // T*dm tanh activations
        std::vector<double> xout;     // T*d block output
    };
    Block blk[kBlocks];
    std::vector<double> lnf_xhat; // T*d
    std::vector<double> lnf_inv;  // T
    std::vector<double> f;        // T*d final representation
};

void ToyLm::forward(const std::vector<int>& z, Cache& c) const {
    const int T = static_cast<int>(z.size());
    const int d = d_, dk = dk_, dm = dm_;
    const std::size_t Td = static_cast<std::size_t>(T) * d;
    c.T = T;
    c.z = z;
    const double* P = params_.data();

    std::vector<double> x(Td);
    for (int t = 0; t < T; ++t) {
        const double* e = P + off_embed_ + static_cast<std::size_t>(z[t]) * d;
        for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(t) * d + j] = e[j] + pos_enc(t, j, d);
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    for (int b = 0; b < kBlocks; ++b) {
        const BlockOffsets& o = off_block_[b];
        Cache::Block& B = c.blk[b];
        B.xin = x;
        B.ln1_xhat.resize(Td);
        B.ln1_inv.resize(T);
        B.a.resize(Td);
        B.q.assign(static_cast<std::size_t>(T) * dk, 0.0);
        B.k.assign(static_cast<std::size_t>(T) * dk, 0.0);
        B.v.assign(Td, 0.0);
        B.att.assign(static_cast<std::size_t>(T) * T, 0.0);
        B.ctx.assign(Td, 0.0);
        B.x_mid.resize(Td);
        B.ln2_xhat.resize(Td);
        B.ln2_inv.resize(T);
        B.bvec.resize(Td);
        B.h.resize(static_cast<std::size_t>(T) * dm);
        B.xout.resize(Td);

        for (int t = 0; t < T; ++t) {
            layer_norm_forward(&B.xin[static_cast<std::size_t>(t) * d], P + o.ln1_g, P + o.ln1_b, d,
                               &B.a[static_cast<std::size_t>(t) * d],
                               &B.ln1_xhat[static_cast<std::size_t>(t) * d], &B.ln1_inv[t]);
            matvec(P + o.wq, &B.a[static_cast<std::size_t>(t) * d], dk, d,
                   &B.q[static_cast<std::size_t>(t) * dk]);
            matvec(P + o.wk, &B.a[static_cast<std::size_t>(t) * d], dk, d,
                   &B.k[static_cast<std::size_t>(t) * dk]);
            matvec(P + o.wv, &B.a[static_cast<std::size_t>(t) * d], d, d,
                   &B.v[static_cast<std::size_t>(t) * d]);
        }
        // causal attention (position i attends to 0..i)
        std::vector<double> row;
        for (int i = 0; i < T; ++i) {
            row.assign(static_cast<std::size_t>(i) + 1, 0.0);
            const double* qi = &B.q[static_cast<std::size_t>(i) * dk];
            for (int j = 0; j <= i; ++j) {
                const double* kj = &B.k[static_cast<std::size_t>(j) * dk];
                double s = 0.0;
                for (int u = 0; u < dk; ++u) s += qi[u] * kj[u];
                row[static_cast<std::size_t>(j)] = s * scale;
            }
            softmax_in_place(row);
            double* ci = &B.ctx[static_cast<std::size_t>(i) * d];
            for (int j = 0; j <= i; ++j) {
                const double w = row[static_cast<std::size_t>(j)];
                B.att[static_cast<std::size_t>(i) * T + j] = w;
                const double* vj = &B.v[static_cast<std::size_t>(j) * d];
                for (int u = 0; u < d; ++u) ci[u] += w * vj[u];
            }
        }
        std::vector<double> tmp(static_cast<std::size_t>(std::max(d, dm)));
        for (int t = 0; t < T; ++t) {
            matvec(P + o.wo, &B.ctx[static_cast<std::size_t>(t) * d], d, d, tmp.data());
            for (int j = 0; j < d; ++j) {
                B.x_mid[static_cast<std::size_t>(t) * d + j] =
                    B.xin[static_cast<std::size_t>(t) * d + j] + tmp[j];
            }
            layer_norm_forward(&B.x_mid[static_cast<std::size_t>(t) * d], P + o.ln2_g, P + o.ln2_b,
                               d, &B.bvec[static_cast<std::size_t>(t) * d],
                               &B.ln2_xhat[static_cast<std::size_t>(t) * d], &B.ln2_inv[t]);
            matvec(P + o.w1, &B.bvec[static_cast<std::size_t>(t) * d], dm, d, tmp.data());
            double* ht = &B.h[static_cast<std::size_t>(t) * dm];
            for (int j = 0; j < dm; ++j) ht[j] = std::tanh(tmp[j] + P[o.b1 + j]);
            matvec(P + o.w2, ht, d, dm, tmp.data());
            for (int j = 0; j < d; ++j) {
                B.xout[static_cast<std::size_t>(t) * d + j] =
                    B.x_mid[static_cast<std::size_t>(t) * d + j] + tmp[j] + P[o.b2 + j];
            }
        }
        x = B.xout;
    }

    c.lnf_xhat.resize(Td);
    c.lnf_inv.resize(T);
    c.f.resize(Td);
    for (int t = 0; t < T; ++t) {
        layer_norm_forward(&x[static_cast<std::size_t>(t) * d], P + off_lnf_g_, P + off_lnf_b_, d,
                           &c.f[static_cast<std::size_t>(t) * d],
                           &c.lnf_xhat[static_cast<std::size_t>(t) * d], &c.lnf_inv[t]);
    }
}

void ToyLm::logits_at(const Cache& cache, int pos, std::vector<double>& out) const {
    out.resize(static_cast<std::size_t>(vocab_));
    const double* f = &cache.f[static_cast<std::size_t>(pos) * d_];
    const double* E = params_.data() + off_embed_;
    for (int r = 0; r < vocab_; ++r) {
        const double* e = E + static_cast<std::size_t>(r) * d_;
        double acc = 0.0;
        for (int j = 0; j < d_; ++j) acc += e[j] * f[j];
        out[static_cast<std::size_t>(r)] = acc;
    }
}

// ---------------------------------------------------------------------------
// loss and gradients
// ---------------------------------------------------------------------------

double ToyLm::weighted_nll(const std::vector<int>& seq, const std::vector<int>& labels,
                           const std::vector<double>& weights) const {
    if (seq.empty()) throw ModelError("weighted nll over an empty sequence");
    if (labels.size() != seq.size() || weights.size() != seq.size()) {
        throw ModelError("labels/weights must match the sequence length");
    }
    if (static_cast<int>(seq.size()) > kContextLimit) {
        throw ContextOverflow(static_cast<int>(seq.size()), kContextLimit);
    }
    check_ids(seq);
    check_ids(labels);

    std::vector<int> z;
    z.reserve(seq.size() + 1);
    z.push_back(ToyVocab::kBos);
    z.insert(z.end(), seq.begin(), seq.end());

    Cache cache;
    forward(z, cache);

    double loss = 0.0;
    std::vector<double> logits;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const double w = weights[t];
        if (w == 0.0) continue;
        logits_at(cache, static_cast<int>(t), logits);
        const double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double v : logits) sum += std::exp(v - mx);
        const double logp = logits[static_cast<std::size_t>(labels[t])] - mx - std::log(sum);
        loss -= w * logp;
    }
    return loss;
}

double ToyLm::weighted_nll_grad(const std::vector<int>& seq, const std::vector<int>& labels,
                                const std::vector<double>& weights,
                                std::vector<double>& grad) const {
    if (seq.empty()) throw ModelError("weighted nll over an empty sequence");
    if (labels.size() != seq.size() || weights.size() != seq.size()) {
        throw ModelError("labels/weights must match the sequence length");
    }
    if (grad.size() != params_.size()) {
        throw ModelError("gradient buffer does not match the parameter count");
    }
    if (static_cast<int>(seq.size()) > kContextLimit) {
        throw ContextOverflow(static_cast<int>(seq.size()), kContextLimit);
    }
    check_ids(seq);
    check_ids(labels);

    std::vector<int> z;
    z.reserve(seq.size() + 1);
    z.push_back(ToyVocab::kBos);
    z.insert(z.end(), seq.begin(), seq.end());

    Cache cache;
    forward(z, cache);
    const int T = cache.T;
    const int d = d_, dk = dk_, dm = dm_;
    const std::size_t Td = static_cast<std::size_t>(T) * d;
    const double* P = params_.data();
    double* G = grad.data();

    // Head: softmax cross entropy into df plus tied-embedding grads.
    double loss = 0.0;
    std::vector<double> df(Td, 0.0);
    std::vector<double> logits;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const double w = weights[t];
        if (w == 0.0) continue;
        const int pos = static_cast<int>(t);
        logits_at(cache, pos, logits);
        const double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double v : logits) sum += std::exp(v - mx);
        const int label = labels[t];
        loss -= w * (logits[static_cast<std::size_t>(label)] - mx - std::log(sum));

        const double* f = &cache.f[static_cast<std::size_t>(pos) * d];
        double* dft = &df[static_cast<std::size_t>(pos) * d];
        const double* E = P + off_embed_;
        double* dE = G + off_embed_;
        for (int r = 0; r < vocab_; ++r) {
            double dl = w * std::exp(logits[static_cast<std::size_t>(r)] - mx) / sum;
            if (r == label) dl -= w;
            if (dl == 0.0) continue;
            const double* e = E + static_cast<std::size_t>(r) * d;
            double* de = dE + static_cast<std::size_t>(r) * d;
            for (int j = 0; j < d; ++j) {
                dft[j] += dl * e[j];
                de[j] += dl * f[j];
            }
        }
    }

    // Final layer norm.
    std::vector<double> dx(Td, 0.0);
    for (int t = 0; t < T; ++t) {
        layer_norm_backward(&df[static_cast<std::size_t>(t) * d], P + off_lnf_g_,
                            &cache.lnf_xhat[static_cast<std::size_t>(t) * d], cache.lnf_inv[t], d,
                            &dx[static_cast<std::size_t>(t) * d], G + off_lnf_g_, G + off_lnf_b_);
    }

    // Blocks in reverse. dx on entry is the grad wrt the block output.
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    for (int b = kBlocks - 1; b >= 0; --b) {
        const BlockOffsets& o = off_block_[b];
        const Cache::Block& B = cache.blk[b];

        // MLP: xout = x_mid + W2 tanh(W1 ln2(x_mid) + b1) + b2
        std::vector<double> dx_mid = dx; // residual path
        std::vector<double> dh(static_cast<std::size_t>(dm));
        std::vector<double> dpre(static_cast<std::size_t>(dm));
        std::vector<double> dbvec(static_cast<std::size_t>(d));
        for (int t = 0; t < T; ++t) {
            const double* dm_out = &dx[static_cast<std::size_t>(t) * d];
            const double* ht = &B.h[static_cast<std::size_t>(t) * dm];
            for (int j = 0; j < d; ++j) G[o.b2 + j] += dm_out[j];
            std::fill(dh.begin(), dh.end(), 0.0);
            matvec_backward(P + o.w2, ht, dm_out, d, dm, G + o.w2, dh.data());
            for (int j = 0; j < dm; ++j) dpre[static_cast<std::size_t>(j)] =
                dh[static_cast<std::size_t>(j)] * (1.0 - ht[j] * ht[j]);
            for (int j = 0; j < dm; ++j) G[o.b1 + j] += dpre[static_cast<std::size_t>(j)];
            std::fill(dbvec.begin(), dbvec.end(), 0.0);
            matvec_backward(P + o.w1, &B.bvec[static_cast<std::size_t>(t) * d], dpre.data(), dm, d,
                            G + o.w1, dbvec.data());
            layer_norm_backward(dbvec.data(), P + o.ln2_g,
                                &B.ln2_xhat[static_cast<std::size_t>(t) * d], B.ln2_inv[t], d,
                                &dx_mid[static_cast<std::size_t>(t) * d], G + o.ln2_g,
                                G + o.ln2_b);
        }

        // Attention: x_mid = xin + Wo ctx
        std::vector<double> dctx(Td, 0.0);
        std::vector<double> dq(static_cast<std::size_t>(T) * dk, 0.0);
        std::vector<double> dkv(static_cast<std::size_t>(T) * dk, 0.0);
        std::vector<double> dv(Td, 0.0);
        std::vector<double> da(Td, 0.0);
        for (int t = 0; t < T; ++t) {
            matvec_backward(P + o.wo, &B.ctx[static_cast<std::size_t>(t) * d],
                            &dx_mid[static_cast<std::size_t>(t) * d], d, d, G + o.wo,
                            &dctx[static_cast<std::size_t>(t) * d]);
        }
        std::vector<double> dalpha;
        for (int i = 0; i < T; ++i) {
            const double* dci = &dctx[static_cast<std::size_t>(i) * d];
            dalpha.assign(static_cast<std::size_t>(i) + 1, 0.0);
            double dot = 0.0;
            for (int j = 0; j <= i; ++j) {
                const double* vj = &B.v[static_cast<std::size_t>(j) * d];
                double acc = 0.0;
                for (int u = 0; u < d; ++u) acc += dci[u] * vj[u];
                dalpha[static_cast<std::size_t>(j)] = acc;
                const double w = B.att[static_cast<std::size_t>(i) * T + j];
                dot += w * acc;
                double* dvj = &dv[static_cast<std::size_t>(j) * d];
                for (int u = 0; u < d; ++u) dvj[u] += w * dci[u];
            }
            const double* qi = &B.q[static_cast<std::size_t>(i) * dk];
            double* dqi = &dq[static_cast<std::size_t>(i) * dk];
            for (int j = 0; j <= i; ++j) {
                const double w = B.att[static_cast<std::size_t>(i) * T + j];
                const double ds = w * (dalpha[static_cast<std::size_t>(j)] - dot) * scale;
                if (ds == 0.0) continue;
                const double* kj = &B.k[static_cast<std::size_t>(j) * dk];
                double* dkj = &dkv[static_cast<std::size_t>(j) * dk];
                for (int u = 0; u < dk; ++u) {
                    dqi[u] += ds * kj[u];
                    dkj[u] += ds * qi[u];
                }
            }
        }
        for (int t = 0; t < T; ++t) {
            const double* at = &B.a[static_cast<std::size_t>(t) * d];
            double* dat = &da[static_cast<std::size_t>(t) * d];
            matvec_backward(P + o.wq, at, &dq[static_cast<std::size_t>(t) * dk], dk, d, G + o.wq,
                            dat);
            matvec_backward(P + o.wk, at, &dkv[static_cast<std::size_t>(t) * dk], dk, d, G + o.wk,
                            dat);
            matvec_backward(P + o.wv, at, &dv[static_cast<std::size_t>(t) * d], d, d, G + o.wv,
                            dat);
        }
        std::vector<double> dxin = dx_mid; // residual path
        for (int t = 0; t < T; ++t) {
            layer_norm_backward(&da[static_cast<std::size_t>(t) * d], P + o.ln1_g,
                                &B.ln1_xhat[static_cast<std::size_t>(t) * d], B.ln1_inv[t], d,
                                &dxin[static_cast<std::size_t>(t) * d], G + o.ln1_g, G + o.ln1_b);
        }
        dx = std::move(dxin);
    }

    // Input embeddings (positions are constants).
    for (int t = 0; t < T; ++t) {
        double* de = G + off_embed_ + static_cast<std::size_t>(cache.z[static_cast<std::size_t>(t)]) * d;
        const double* dxt = &dx[static_cast<std::size_t>(t) * d];
        for (int j = 0; j < d; ++j) de[j] += dxt[j];
    }
    return loss;
}

// ---------------------------------------------------------------------------
// scoring and decoding
// ---------------------------------------------------------------------------

std::vector<double> ToyLm::score_sequence(const std::vector<int>& context,
                                          const std::vector<int>& target) const {
    if (target.empty()) return {};
    const int total = static_cast<int>(context.size() + target.size());
    if (total > kContextLimit) throw ContextOverflow(total, kContextLimit);
    check_ids(context);
    check_ids(target);

    std::vector<int> z;
    z.reserve(context.size() + target.size() + 1);
    z.push_back(ToyVocab::kBos);
    z.insert(z.end(), context.begin(), context.end());
    z.insert(z.end(), target.begin(), target.end());

    Cache cache;
    forward(z, cache);

    std::vector<double> out;
    out.reserve(target.size());
    std::vector<double> logits;
    for (std::size_t t = 0; t < target.size(); ++t) {
        const int pos = static_cast<int>(context.size() + t); // predicts z[pos + 1]
        logits_at(cache, pos, logits);
        const double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double v : logits) sum += std::exp(v - mx);
        out.push_back(logits[static_cast<std::size_t>(target[t])] - mx - std::log(sum));
    }
    return out;
}

std::vector<double> ToyLm::next_distribution(const std::vector<int>& context,
                                             double temperature) const {
    if (static_cast<int>(context.size()) >= kContextLimit) {
        throw ContextOverflow(static_cast<int>(context.size()) + 1, kContextLimit);
    }
    if (temperature <= 0.0) throw NonPositiveTemperature(temperature);
    temperature = std::max(temperature, 1e-6);
    check_ids(context);

    std::vector<int> z;
    z.reserve(context.size() + 1);
    z.push_back(ToyVocab::kBos);
    z.insert(z.end(), context.begin(), context.end());

    Cache cache;
    forward(z, cache);
    std::vector<double> logits;
    logits_at(cache, cache.T - 1, logits);
    for (double& v : logits) v /= temperature;
    softmax_in_place(logits);
    return logits;
}

std::vector<int> ToyLm::greedy_decode(const std::vector<int>& context, int max_new) const {
    if (static_cast<int>(context.size()) >= kContextLimit) {
        throw ContextOverflow(static_cast<int>(context.size()) + 1, kContextLimit);
    }
    check_ids(context);
    std::vector<int> seq = context;
    std::vector<int> out;
    while (static_cast<int>(out.size()) < max_new &&
           static_cast<int>(seq.size()) < kContextLimit) {
        const std::vector<double> p = next_distribution(seq);
        int best = 0;
        for (int r = 1; r < vocab_; ++r) {
            if (p[static_cast<std::size_t>(r)] > p[static_cast<std::size_t>(best)]) best = r;
        }
        if (best == eos_id()) break;
        out.push_back(best);
        seq.push_back(best);
    }
    return out;
}

std::vector<std::vector<int>> ToyLm::sample(const std::vector<int>& context, int max_new,
                                            double temperature, int k,
                                            std::uint64_t seed) const {
    if (temperature <= 0.0) throw NonPositiveTemperature(temperature);
    if (static_cast<int>(context.size()) >= kContextLimit) {
        throw ContextOverflow(static_cast<int>(context.size()) + 1, kContextLimit);
    }
    check_ids(context);
    std::vector<std::vector<int>> results;
    results.reserve(static_cast<std::size_t>(std::max(k, 0)));
    for (int c = 0; c < k; ++c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        std::vector<int> seq = context;
        std::vector<int> out;
        while (static_cast<int>(out.size()) < max_new &&
               static_cast<int>(seq.size()) < kContextLimit) {
            const std::vector<double> p = next_distribution(seq, temperature);
            const double u = rng.uniform01();
            double acc = 0.0;
            int pick = vocab_ - 1;
            for (int r = 0; r < vocab_; ++r) {
                acc += p[static_cast<std::size_t>(r)];
                if (u < acc) {
                    pick = r;
                    break;
                }
            }
            if (pick == eos_id()) break;
            out.push_back(pick);
            seq.push_back(pick);
        }
        results.push_back(std::move(out));
    }
    return results;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in.good()) throw ModelLoadError(path, "truncated checkpoint header");
    return value;
}

} // namespace

void ToyLm::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelLoadError(path, "cannot open for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kFormatVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(vocab_));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(d_));
    write_pod<std::uint64_t>(out, seed_);
    out.write(reinterpret_cast<const char*>(params_.data()),
              static_cast<std::streamsize>(params_.size() * sizeof(double)));
    if (!out.good()) throw ModelLoadError(path, "short write");
}

ToyLm ToyLm::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelLoadError(path, "cannot open for reading");
    char magic[sizeof(kMagic)] = {};
    in.read(magic, sizeof(magic));
    if (!in.good() || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ModelLoadError(path, "bad magic — not a toy checkpoint");
    }
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kFormatVersion) {
        throw ModelLoadError(path, "unsupported format version " + std::to_string(version));
    }
    const auto vocab = read_pod<std::uint32_t>(in, path);
    const auto hidden = read_pod<std::uint32_t>(in, path);
    const auto seed = read_pod<std::uint64_t>(in, path);
    if (vocab <= static_cast<std::uint32_t>(ToyVocab::kUnk) || hidden < 4 || hidden % 4 != 0) {
        throw ModelLoadError(path, "implausible header dimensions");
    }
    ToyLm model(static_cast<int>(vocab), static_cast<int>(hidden), seed);
    in.read(reinterpret_cast<char*>(model.params_.data()),
            static_cast<std::streamsize>(model.params_.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(model.params_.size() * sizeof(double))) {
        throw ModelLoadError(path, "truncated parameter block");
    }
    in.peek();
    if (!in.eof()) throw ModelLoadError(path, "trailing bytes after parameters");
    return model;
}

} // namespace xkde::lm
