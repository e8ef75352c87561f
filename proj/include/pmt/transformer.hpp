#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pmt/mat.hpp"
#include "pmt/model_config.hpp"
#include "pmt/rng.hpp"

namespace pmt {

// All learnable tensors of the model. Templated on the scalar so the same
// code runs in 32-bit for training and 64-bit for gradient checking. The
// block arrangement is post-layer-norm:
//   u = LN1(x + drop(Attn(x)));  y = LN2(u + drop(FFN(u)))
template <typename T>
struct TransformerParams {
    ModelConfig cfg;
    int vocab_rows = 0;  // V + 2 (regions plus MISSING and MASK)

    Mat<T> spatial_table;  // vocab_rows x D

    struct Block {
        Mat<T> wq, wk, wv, wo;  // D x D
        Mat<T> bq, bk, bv, bo;  // 1 x D
        Mat<T> ln1_gain, ln1_bias;
        Mat<T> w1;  // D x H
        Mat<T> b1;  // 1 x H
        Mat<T> w2;  // H x D
        Mat<T> b2;  // 1 x D
        Mat<T> ln2_gain, ln2_bias;
    };
    std::vector<Block> blocks;

    Mat<T> head_w;  // D x V_out
    Mat<T> head_b;  // 1 x V_out

    static TransformerParams make(const ModelConfig& cfg, int vocab_rows) {
        cfg.validate();
        TransformerParams p;
        p.cfg = cfg;
        p.vocab_rows = vocab_rows;
        p.spatial_table.resize(vocab_rows, cfg.d);
        p.blocks.resize(cfg.layers);
        for (auto& b : p.blocks) {
            b.wq.resize(cfg.d, cfg.d);
            b.wk.resize(cfg.d, cfg.d);
            b.wv.resize(cfg.d, cfg.d);
            b.wo.resize(cfg.d, cfg.d);
            b.bq.resize(1, cfg.d);
            b.bk.resize(1, cfg.d);
            b.bv.resize(1, cfg.d);
            b.bo.resize(1, cfg.d);
            b.ln1_gain.resize(1, cfg.d);
            b.ln1_bias.resize(1, cfg.d);
            b.w1.resize(cfg.d, cfg.h);
            b.b1.resize(1, cfg.h);
            b.w2.resize(cfg.h, cfg.d);
            b.b2.resize(1, cfg.d);
            b.ln2_gain.resize(1, cfg.d);
            b.ln2_bias.resize(1, cfg.d);
        }
        p.head_w.resize(cfg.d, cfg.v_out);
        p.head_b.resize(1, cfg.v_out);
        return p;
    }

    // Scaled uniform initialization, gain 1/sqrt(fan_in); norm gains start at
    // one, all biases at zero.
    static TransformerParams init(const ModelConfig& cfg, int vocab_rows, uint64_t seed) {
        TransformerParams p = make(cfg, vocab_rows);
        Rng rng(seed);
        auto fill = [&rng](Mat<T>& m, int fan_in) {
            const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (auto& v : m.data) v = static_cast<T>(a * (2.0 * rng.uniform() - 1.0));
        };
        fill(p.spatial_table, cfg.d);
        for (auto& b : p.blocks) {
            fill(b.wq, cfg.d);
            fill(b.wk, cfg.d);
            fill(b.wv, cfg.d);
            fill(b.wo, cfg.d);
            for (auto& v : b.ln1_gain.data) v = T(1);
            for (auto& v : b.ln2_gain.data) v = T(1);
            fill(b.w1, cfg.d);
            fill(b.w2, cfg.h);
        }
        fill(p.head_w, cfg.d);
        return p;
    }

    TransformerParams zeros_like() const { return make(cfg, vocab_rows); }

    template <typename Self, typename F>
    static void visit(Self& self, F&& f) {
        f("spatial_table", self.spatial_table);
        for (size_t i = 0; i < self.blocks.size(); ++i) {
            auto& b = self.blocks[i];
            const std::string pre = "block" + std::to_string(i) + ".";
            f(pre + "attn.wq", b.wq);
            f(pre + "attn.bq", b.bq);
            f(pre + "attn.wk", b.wk);
            f(pre + "attn.bk", b.bk);
            f(pre + "attn.wv", b.wv);
            f(pre + "attn.bv", b.bv);
            f(pre + "attn.wo", b.wo);
            f(pre + "attn.bo", b.bo);
            f(pre + "ln1.gain", b.ln1_gain);
            f(pre + "ln1.bias", b.ln1_bias);
            f(pre + "ffn.w1", b.w1);
            f(pre + "ffn.b1", b.b1);
            f(pre + "ffn.w2", b.w2);
            f(pre + "ffn.b2", b.b2);
            f(pre + "ln2.gain", b.ln2_gain);
            f(pre + "ln2.bias", b.ln2_bias);
        }
        f("head.w", self.head_w);
        f("head.b", self.head_b);
    }

    template <typename F>
    void for_each_tensor(F&& f) {
        visit(*this, f);
    }
    template <typename F>
    void for_each_tensor(F&& f) const {
        visit(*this, f);
    }

    size_t param_count() const {
        size_t n = 0;
        for_each_tensor([&n](const std::string&, const Mat<T>& m) { n += m.size(); });
        return n;
    }

    void accumulate(const TransformerParams& other) {
        auto add = [](Mat<T>& dst, const Mat<T>& src) {
            for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
        };
        add(spatial_table, other.spatial_table);
        for (size_t i = 0; i < blocks.size(); ++i) {
            add(blocks[i].wq, other.blocks[i].wq);
            add(blocks[i].bq, other.blocks[i].bq);
            add(blocks[i].wk, other.blocks[i].wk);
            add(blocks[i].bk, other.blocks[i].bk);
            add(blocks[i].wv, other.blocks[i].wv);
            add(blocks[i].bv, other.blocks[i].bv);
            add(blocks[i].wo, other.blocks[i].wo);
            add(blocks[i].bo, other.blocks[i].bo);
            add(blocks[i].ln1_gain, other.blocks[i].ln1_gain);
            add(blocks[i].ln1_bias, other.blocks[i].ln1_bias);
            add(blocks[i].w1, other.blocks[i].w1);
            add(blocks[i].b1, other.blocks[i].b1);
            add(blocks[i].w2, other.blocks[i].w2);
            add(blocks[i].b2, other.blocks[i].b2);
            add(blocks[i].ln2_gain, other.blocks[i].ln2_gain);
            add(blocks[i].ln2_bias, other.blocks[i].ln2_bias);
        }
        add(head_w, other.head_w);
        add(head_b, other.head_b);
    }

    void zero_all() {
        for_each_tensor([](const std::string&, Mat<T>& m) { m.zero(); });
    }
};

constexpr double kLayerNormEps = 1e-5;

template <typename T>
struct LnCache {
    Mat<T> mean;  // T x 1
    Mat<T> rstd;  // T x 1
};

// Activations one forward pass leaves behind for the backward pass.
template <typename T>
struct ForwardCache {
    bool causal = false;
    bool dropout_active = false;
    Mat<T> x0;          // embedded input after embedding dropout
    Mat<T> drop_mask0;  // embedding dropout scales (empty when inactive)

    struct BlockCache {
        Mat<T> x_in;
        Mat<T> q, k, v;            // T x D
        std::vector<Mat<T>> probs;  // per head, T x T softmax rows
        Mat<T> attn_concat;        // heads merged, pre-projection
        Mat<T> drop_mask1;
        Mat<T> res1;  // LN1 input
        LnCache<T> ln1;
        Mat<T> x_mid;  // LN1 output, FFN input
        Mat<T> h_act;  // ReLU output
        Mat<T> drop_mask2;
        Mat<T> res2;  // LN2 input
        LnCache<T> ln2;
    };
    std::vector<BlockCache> blocks;
    Mat<T> x_final;  // input to the output head
    Mat<T> logits;   // T x V_out
};

namespace nn_detail {

// y = x*w + b
template <typename T>
void linear_forward(const Mat<T>& x, const Mat<T>& w, const Mat<T>& b, Mat<T>& y) {
    matmul(x, w, y);
    add_row_vector(y, b);
}

// dx = dy*w^T; gw += x^T*dy; gb += colsum(dy)
template <typename T>
void linear_backward(const Mat<T>& x, const Mat<T>& w, const Mat<T>& dy, Mat<T>& dx, Mat<T>& gw,
                     Mat<T>& gb) {
    matmul_nt(dy, w, dx);
    matmul_tn_accum(x, dy, gw);
    accum_col_sums(dy, gb);
}

template <typename T>
void layer_norm_forward(const Mat<T>& x, const Mat<T>& gain, const Mat<T>& bias, Mat<T>& y,
                        LnCache<T>& cache) {
    const int rows = x.rows, cols = x.cols;
    y.resize(rows, cols);
    cache.mean.resize(rows, 1);
    cache.rstd.resize(rows, 1);
    const T* g = gain.row(0);
    const T* b = bias.row(0);
    for (int i = 0; i < rows; ++i) {
        const T* xr = x.row(i);
        T sum = T(0);
        for (int j = 0; j < cols; ++j) sum += xr[j];
        const T mu = sum / T(cols);
        T ss = T(0);
        for (int j = 0; j < cols; ++j) {
            const T d = xr[j] - mu;
            ss += d * d;
        }
        const T rstd = T(1) / std::sqrt(ss / T(cols) + T(kLayerNormEps));
        cache.mean.at(i, 0) = mu;
        cache.rstd.at(i, 0) = rstd;
        T* yr = y.row(i);
        for (int j = 0; j < cols; ++j) yr[j] = g[j] * ((xr[j] - mu) * rstd) + b[j];
    }
}

template <typename T>
void layer_norm_backward(const Mat<T>& x, const Mat<T>& gain, const LnCache<T>& cache,
                         const Mat<T>& dy, Mat<T>& dx, Mat<T>& ggain, Mat<T>& gbias) {
    const int rows = x.rows, cols = x.cols;
    dx.resize(rows, cols);
    const T* g = gain.row(0);
    T* gg = ggain.row(0);
    T* gb = gbias.row(0);
    for (int i = 0; i < rows; ++i) {
        const T* xr = x.row(i);
        const T* dyr = dy.row(i);
        T* dxr = dx.row(i);
        const T mu = cache.mean.at(i, 0);
        const T rstd = cache.rstd.at(i, 0);
        T sum_dxhat = T(0);
        T sum_dxhat_xhat = T(0);
        for (int j = 0; j < cols; ++j) {
            const T xhat = (xr[j] - mu) * rstd;
            const T dxhat = dyr[j] * g[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            gg[j] += dyr[j] * xhat;
            gb[j] += dyr[j];
        }
        const T inv_n = T(1) / T(cols);
        for (int j = 0; j < cols; ++j) {
            const T xhat = (xr[j] - mu) * rstd;
            const T dxhat = dyr[j] * g[j];
            dxr[j] = rstd * (dxhat - inv_n * sum_dxhat - xhat * inv_n * sum_dxhat_xhat);
        }
    }
}

// Inverted dropout: mask holds 0 or 1/(1-p).
template <typename T>
void dropout_forward(Mat<T>& x, double p, Rng& rng, Mat<T>& mask) {
    mask.resize(x.rows, x.cols);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    for (size_t i = 0; i < x.data.size(); ++i) {
        const T m = rng.uniform() < p ? T(0) : scale;
        mask.data[i] = m;
        x.data[i] *= m;
    }
}

template <typename T>
void apply_mask(Mat<T>& dx, const Mat<T>& mask) {
    for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= mask.data[i];
}

// Multi-head attention. For causal rows the loops stop at the query position,
// so later positions never enter the computation at all; that is what makes
// the causal-invariance guarantee exact rather than approximate.
template <typename T>
void attention_forward(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, int heads, bool causal,
                       std::vector<Mat<T>>& probs, Mat<T>& out) {
    const int tlen = q.rows, d = q.cols;
    const int dh = d / heads;
    const T inv_sqrt_dh = T(1) / std::sqrt(T(dh));
    out.resize(tlen, d);
    probs.resize(heads);
    for (int a = 0; a < heads; ++a) {
        Mat<T>& p = probs[a];
        p.resize(tlen, tlen);
        const int off = a * dh;
        for (int t = 0; t < tlen; ++t) {
            const int jmax = causal ? t : tlen - 1;
            const T* qr = q.row(t) + off;
            T* pr = p.row(t);
            T max_s = -std::numeric_limits<T>::infinity();
            for (int j = 0; j <= jmax; ++j) {
                const T* kr = k.row(j) + off;
                T s = T(0);
                for (int e = 0; e < dh; ++e) s += qr[e] * kr[e];
                s *= inv_sqrt_dh;
                pr[j] = s;
                if (s > max_s) max_s = s;
            }
            T denom = T(0);
            for (int j = 0; j <= jmax; ++j) {
                pr[j] = std::exp(pr[j] - max_s);
                denom += pr[j];
            }
            const T inv_denom = T(1) / denom;
            for (int j = 0; j <= jmax; ++j) pr[j] *= inv_denom;
            T* orow = out.row(t) + off;
            for (int e = 0; e < dh; ++e) orow[e] = T(0);
            for (int j = 0; j <= jmax; ++j) {
                const T w = pr[j];
                const T* vr = v.row(j) + off;
                for (int e = 0; e < dh; ++e) orow[e] += w * vr[e];
            }
        }
    }
}

template <typename T>
void attention_backward(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, int heads, bool causal,
                        const std::vector<Mat<T>>& probs, const Mat<T>& dout, Mat<T>& dq, Mat<T>& dk,
                        Mat<T>& dv) {
    const int tlen = q.rows, d = q.cols;
    const int dh = d / heads;
    const T inv_sqrt_dh = T(1) / std::sqrt(T(dh));
    dq.resize(tlen, d);
    dk.resize(tlen, d);
    dv.resize(tlen, d);
    std::vector<T> dp(tlen);
    for (int a = 0; a < heads; ++a) {
        const Mat<T>& p = probs[a];
        const int off = a * dh;
        for (int t = 0; t < tlen; ++t) {
            const int jmax = causal ? t : tlen - 1;
            const T* dor = dout.row(t) + off;
            const T* pr = p.row(t);
            // dV and dP
            T dot_pd = T(0);
            for (int j = 0; j <= jmax; ++j) {
                const T* vr = v.row(j) + off;
                T* dvr = dv.row(j) + off;
                T acc = T(0);
                const T w = pr[j];
                for (int e = 0; e < dh; ++e) {
                    acc += dor[e] * vr[e];
                    dvr[e] += w * dor[e];
                }
                dp[j] = acc;
                dot_pd += w * acc;
            }
            // softmax jacobian, then dQ and dK
            const T* qr = q.row(t) + off;
            T* dqr = dq.row(t) + off;
            for (int j = 0; j <= jmax; ++j) {
                const T ds = pr[j] * (dp[j] - dot_pd) * inv_sqrt_dh;
                const T* kr = k.row(j) + off;
                T* dkr = dk.row(j) + off;
                for (int e = 0; e < dh; ++e) {
                    dqr[e] += ds * kr[e];
                    dkr[e] += ds * qr[e];
                }
            }
        }
    }
}

}  // namespace nn_detail

// Runs the transformer stack over an embedded sequence. Logits land in
// cache.logits; everything the backward pass needs is captured in the cache.
// rng is only consulted when train_mode is set and dropout is positive.
template <typename T>
void transformer_forward(const TransformerParams<T>& p, const Mat<T>& embedded, bool causal,
                         bool train_mode, Rng* rng, ForwardCache<T>& cache) {
    using namespace nn_detail;
    const ModelConfig& cfg = p.cfg;
    if (embedded.cols != cfg.d) throw std::invalid_argument("embedded width must equal d");

    cache.causal = causal;
    cache.dropout_active = train_mode && cfg.dropout > 0.0;
    if (cache.dropout_active && rng == nullptr) {
        throw std::invalid_argument("dropout requires an rng in train mode");
    }

    cache.x0 = embedded;
    if (cache.dropout_active) dropout_forward(cache.x0, cfg.dropout, *rng, cache.drop_mask0);

    cache.blocks.resize(cfg.layers);
    const Mat<T>* x = &cache.x0;
    Mat<T> attn_proj, ffn_out;
    for (int l = 0; l < cfg.layers; ++l) {
        auto& bc = cache.blocks[l];
        const auto& bp = p.blocks[l];
        bc.x_in = *x;

        linear_forward(bc.x_in, bp.wq, bp.bq, bc.q);
        linear_forward(bc.x_in, bp.wk, bp.bk, bc.k);
        linear_forward(bc.x_in, bp.wv, bp.bv, bc.v);
        attention_forward(bc.q, bc.k, bc.v, cfg.heads, causal, bc.probs, bc.attn_concat);
        linear_forward(bc.attn_concat, bp.wo, bp.bo, attn_proj);
        if (cache.dropout_active) dropout_forward(attn_proj, cfg.dropout, *rng, bc.drop_mask1);

        bc.res1 = bc.x_in;
        for (size_t i = 0; i < bc.res1.data.size(); ++i) bc.res1.data[i] += attn_proj.data[i];
        layer_norm_forward(bc.res1, bp.ln1_gain, bp.ln1_bias, bc.x_mid, bc.ln1);

        linear_forward(bc.x_mid, bp.w1, bp.b1, bc.h_act);
        for (auto& v : bc.h_act.data) {
            if (v < T(0)) v = T(0);
        }
        linear_forward(bc.h_act, bp.w2, bp.b2, ffn_out);
        if (cache.dropout_active) dropout_forward(ffn_out, cfg.dropout, *rng, bc.drop_mask2);

        bc.res2 = bc.x_mid;
        for (size_t i = 0; i < bc.res2.data.size(); ++i) bc.res2.data[i] += ffn_out.data[i];
        Mat<T>& x_out = (l + 1 < cfg.layers) ? cache.blocks[l + 1].x_in : cache.x_final;
        layer_norm_forward(bc.res2, bp.ln2_gain, bp.ln2_bias, x_out, bc.ln2);
        x = &x_out;
    }
    linear_forward(cache.x_final, p.head_w, p.head_b, cache.logits);
}

// Convenience wrapper when only logits are wanted.
template <typename T>
Mat<T> transformer_logits(const TransformerParams<T>& p, const Mat<T>& embedded, bool causal,
                          bool train_mode = false, Rng* rng = nullptr) {
    ForwardCache<T> cache;
    transformer_forward(p, embedded, causal, train_mode, rng, cache);
    return std::move(cache.logits);
}

// Accumulates parameter gradients into `grads` and returns the gradient with
// respect to the embedded input (embedding dropout already applied).
template <typename T>
Mat<T> transformer_backward(const TransformerParams<T>& p, const ForwardCache<T>& cache,
                            const Mat<T>& dlogits, TransformerParams<T>& grads) {
    using namespace nn_detail;
    const ModelConfig& cfg = p.cfg;

    Mat<T> dx;
    linear_backward(cache.x_final, p.head_w, dlogits, dx, grads.head_w, grads.head_b);

    Mat<T> dres, dff, dh, dmid, dattn_concat, dq, dk, dv, dtmp;
    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& bc = cache.blocks[l];
        const auto& bp = p.blocks[l];
        auto& bg = grads.blocks[l];

        layer_norm_backward(bc.res2, bp.ln2_gain, bc.ln2, dx, dres, bg.ln2_gain, bg.ln2_bias);

        // res2 = x_mid + drop(ffn_out)
        dff = dres;
        if (cache.dropout_active) apply_mask(dff, bc.drop_mask2);
        linear_backward(bc.h_act, bp.w2, dff, dh, bg.w2, bg.b2);
        for (size_t i = 0; i < dh.data.size(); ++i) {
            if (bc.h_act.data[i] <= T(0)) dh.data[i] = T(0);
        }
        linear_backward(bc.x_mid, bp.w1, dh, dmid, bg.w1, bg.b1);
        for (size_t i = 0; i < dmid.data.size(); ++i) dmid.data[i] += dres.data[i];

        layer_norm_backward(bc.res1, bp.ln1_gain, bc.ln1, dmid, dres, bg.ln1_gain, bg.ln1_bias);

        // res1 = x_in + drop(attn_proj)
        dtmp = dres;
        if (cache.dropout_active) apply_mask(dtmp, bc.drop_mask1);
        linear_backward(bc.attn_concat, bp.wo, dtmp, dattn_concat, bg.wo, bg.bo);
        attention_backward(bc.q, bc.k, bc.v, cfg.heads, cache.causal, bc.probs, dattn_concat, dq, dk,
                           dv);

        dx = dres;  // residual path
        linear_backward(bc.x_in, bp.wq, dq, dtmp, bg.wq, bg.bq);
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dtmp.data[i];
        linear_backward(bc.x_in, bp.wk, dk, dtmp, bg.wk, bg.bk);
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dtmp.data[i];
        linear_backward(bc.x_in, bp.wv, dv, dtmp, bg.wv, bg.bv);
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dtmp.data[i];
    }
    if (cache.dropout_active) apply_mask(dx, cache.drop_mask0);
    return dx;
}

struct LossResult {
    double value = 0.0;
    double sum = 0.0;      // un-normalized, for batch-level averaging
    int masked_count = 0;  // positions contributing to the loss
    bool empty_mask = false;
};

// Mean label-smoothed cross-entropy over mask-true positions. Targets at
// mask-false positions are never read, so changing them cannot change the
// result, bit for bit. smoothing = 0 recovers plain cross-entropy. When
// dlogits is given it receives d(mean loss)/d(logits); pass scale to override
// the 1/masked_count normalization (batch averaging).
template <typename T>
LossResult smoothed_ce_loss(const Mat<T>& logits, const std::vector<int32_t>& targets,
                            const std::vector<uint8_t>& loss_mask, double smoothing,
                            Mat<T>* dlogits = nullptr, double scale = 0.0) {
    const int tlen = logits.rows, vout = logits.cols;
    if (static_cast<int>(targets.size()) != tlen || static_cast<int>(loss_mask.size()) != tlen) {
        throw std::invalid_argument("targets/loss_mask length must match logits rows");
    }
    LossResult res;
    for (int t = 0; t < tlen; ++t) {
        if (loss_mask[t]) ++res.masked_count;
    }
    if (dlogits) dlogits->resize(tlen, vout);
    if (res.masked_count == 0) {
        res.empty_mask = true;
        return res;
    }
    const double norm = scale > 0.0 ? scale : 1.0 / res.masked_count;
    const double eps_unif = smoothing / vout;

    std::vector<double> prob(vout);
    for (int t = 0; t < tlen; ++t) {
        if (!loss_mask[t]) continue;
        const int32_t y = targets[t];
        if (y < 0 || y >= vout) throw std::invalid_argument("target out of output range");
        const T* zr = logits.row(t);
        double max_z = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < vout; ++c) max_z = std::max(max_z, static_cast<double>(zr[c]));
        double denom = 0.0;
        double sum_z = 0.0;
        for (int c = 0; c < vout; ++c) {
            const double z = static_cast<double>(zr[c]);
            prob[c] = std::exp(z - max_z);
            denom += prob[c];
            sum_z += z;
        }
        const double log_z = max_z + std::log(denom);
        // loss_t = logZ - (1-eps) z_y - (eps/V) sum_c z_c
        res.sum += log_z - (1.0 - smoothing) * static_cast<double>(zr[y]) - eps_unif * sum_z;
        if (dlogits) {
            T* dr = dlogits->row(t);
            const double inv_denom = 1.0 / denom;
            for (int c = 0; c < vout; ++c) {
                double g = prob[c] * inv_denom - eps_unif;
                if (c == y) g -= 1.0 - smoothing;
                dr[c] = static_cast<T>(g * norm);
            }
        }
    }
    res.value = res.sum / res.masked_count;
    return res;
}

}  // namespace pmt
