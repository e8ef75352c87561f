#pragma once

#include <cstdint>
#include <vector>

#include "pmt/temporal_encoding.hpp"
#include "pmt/transformer.hpp"

namespace pmt {

// Token-level forward: spatial embedding + temporal encoding, then the
// transformer stack. Logits are in cache.logits.
template <typename T>
void model_forward(const TransformerParams<T>& p, const TemporalEncoder& enc,
                   const std::vector<int32_t>& tokens, const std::vector<int64_t>& windows,
                   bool causal, bool train_mode, Rng* rng, ForwardCache<T>& cache) {
    Mat<T> embedded = embed_sequence(tokens, windows, p.spatial_table, enc);
    transformer_forward(p, embedded, causal, train_mode, rng, cache);
}

// Backward through the stack and the embedding lookup; gradients for the
// spatial table rows are routed by token id.
template <typename T>
void model_backward(const TransformerParams<T>& p, const ForwardCache<T>& cache,
                    const std::vector<int32_t>& tokens, const Mat<T>& dlogits,
                    TransformerParams<T>& grads) {
    Mat<T> d_embedded = transformer_backward(p, cache, dlogits, grads);
    for (int t = 0; t < d_embedded.rows; ++t) {
        const T* dr = d_embedded.row(t);
        T* gr = grads.spatial_table.row(tokens[t]);
        for (int j = 0; j < d_embedded.cols; ++j) gr[j] += dr[j];
    }
}

// Incremental decoding cache: per-layer key/value rows of everything decoded
// so far. Feeding positions one at a time through decode_step produces
// logits bitwise identical to a full causal forward pass.
template <typename T>
struct DecodeState {
    std::vector<Mat<T>> k, v;  // per layer, filled x D
    int filled = 0;

    explicit DecodeState(const ModelConfig& cfg) : k(cfg.layers), v(cfg.layers) {}
};

template <typename T>
std::vector<T> decode_step(const TransformerParams<T>& p, const TemporalEncoder& enc,
                           int32_t token, int64_t window, DecodeState<T>& state) {
    using namespace nn_detail;
    const ModelConfig& cfg = p.cfg;
    const int d = cfg.d;
    const int dh = d / cfg.heads;
    const T inv_sqrt_dh = T(1) / std::sqrt(T(dh));
    const int pos = state.filled;

    std::vector<int32_t> toks{token};
    std::vector<int64_t> wins{window};
    Mat<T> x = embed_sequence(toks, wins, p.spatial_table, enc);

    Mat<T> q, attn, proj, mid, h, ffn, out;
    LnCache<T> ln;
    for (int l = 0; l < cfg.layers; ++l) {
        const auto& bp = p.blocks[l];
        Mat<T>& kc = state.k[l];
        Mat<T>& vc = state.v[l];
        if (kc.rows <= pos) {
            Mat<T> grown(pos + 64, d);
            for (int r = 0; r < kc.rows; ++r) {
                for (int c = 0; c < d; ++c) grown.at(r, c) = kc.at(r, c);
            }
            std::swap(kc, grown);
            Mat<T> grown_v(pos + 64, d);
            for (int r = 0; r < vc.rows; ++r) {
                for (int c = 0; c < d; ++c) grown_v.at(r, c) = vc.at(r, c);
            }
            std::swap(vc, grown_v);
        }

        linear_forward(x, bp.wq, bp.bq, q);
        {
            Mat<T> krow, vrow;
            linear_forward(x, bp.wk, bp.bk, krow);
            linear_forward(x, bp.wv, bp.bv, vrow);
            for (int c = 0; c < d; ++c) {
                kc.at(pos, c) = krow.at(0, c);
                vc.at(pos, c) = vrow.at(0, c);
            }
        }

        // Same loop order as attention_forward, restricted to one query row.
        attn.resize(1, d);
        std::vector<T> scores(pos + 1);
        for (int a = 0; a < cfg.heads; ++a) {
            const int off = a * dh;
            const T* qr = q.row(0) + off;
            T max_s = -std::numeric_limits<T>::infinity();
            for (int j = 0; j <= pos; ++j) {
                const T* kr = kc.row(j) + off;
                T s = T(0);
                for (int e = 0; e < dh; ++e) s += qr[e] * kr[e];
                s *= inv_sqrt_dh;
                scores[j] = s;
                if (s > max_s) max_s = s;
            }
            T denom = T(0);
            for (int j = 0; j <= pos; ++j) {
                scores[j] = std::exp(scores[j] - max_s);
                denom += scores[j];
            }
            const T inv_denom = T(1) / denom;
            for (int j = 0; j <= pos; ++j) scores[j] *= inv_denom;
            T* orow = attn.row(0) + off;
            for (int e = 0; e < dh; ++e) orow[e] = T(0);
            for (int j = 0; j <= pos; ++j) {
                const T w = scores[j];
                const T* vr = vc.row(j) + off;
                for (int e = 0; e < dh; ++e) orow[e] += w * vr[e];
            }
        }

        linear_forward(attn, bp.wo, bp.bo, proj);
        for (int c = 0; c < d; ++c) proj.at(0, c) += x.at(0, c);
        layer_norm_forward(proj, bp.ln1_gain, bp.ln1_bias, mid, ln);

        linear_forward(mid, bp.w1, bp.b1, h);
        for (auto& hv : h.data) {
            if (hv < T(0)) hv = T(0);
        }
        linear_forward(h, bp.w2, bp.b2, ffn);
        for (int c = 0; c < d; ++c) ffn.at(0, c) += mid.at(0, c);
        layer_norm_forward(ffn, bp.ln2_gain, bp.ln2_bias, x, ln);
    }

    linear_forward(x, p.head_w, p.head_b, out);
    ++state.filled;
    return std::vector<T>(out.data.begin(), out.data.end());
}

}  // namespace pmt
