#include "pmt/grad_check.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pmt/pmt_model.hpp"

namespace pmt {

namespace {

template <typename T>
GradCheckReport run_check(const ModelConfig& cfg, const GradCheckSettings& s, T fd_step,
                          double guard) {
    cfg.validate();
    if (cfg.d > 16 || cfg.layers > 2 || s.seq_len > 8) {
        throw std::invalid_argument("grad_check accepts only tiny models (D<=16, L<=2, T<=8)");
    }

    const int vocab_rows = cfg.v_out + 2;
    TransformerParams<T> params =
        s.zero_params ? TransformerParams<T>::make(cfg, vocab_rows)
                      : TransformerParams<T>::init(cfg, vocab_rows, sub_seed(s.seed, "params"));

    EncodingSpec enc_spec;
    enc_spec.d = cfg.d;
    TemporalEncoder encoder(enc_spec);

    Rng rng(sub_seed(s.seed, "data"));
    std::vector<int32_t> tokens(s.seq_len), targets(s.seq_len);
    std::vector<int64_t> windows(s.seq_len);
    std::vector<uint8_t> mask(s.seq_len);
    for (int t = 0; t < s.seq_len; ++t) {
        tokens[t] = rng.uniform_int(vocab_rows);  // includes MISSING and MASK rows
        targets[t] = rng.uniform_int(cfg.v_out);
        windows[t] = 100 + t;
        mask[t] = rng.uniform() < 0.7 ? 1 : 0;
    }
    mask[s.seq_len - 1] = 1;  // at least one scored position

    auto loss_of = [&]() {
        ForwardCache<T> cache;
        model_forward(params, encoder, tokens, windows, s.causal, false, nullptr, cache);
        return smoothed_ce_loss(cache.logits, targets, mask, s.smoothing).value;
    };

    // Analytic gradients.
    TransformerParams<T> grads = params.zeros_like();
    {
        ForwardCache<T> cache;
        model_forward(params, encoder, tokens, windows, s.causal, false, nullptr, cache);
        Mat<T> dlogits;
        smoothed_ce_loss(cache.logits, targets, mask, s.smoothing, &dlogits);
        model_backward(params, cache, tokens, dlogits, grads);
    }

    GradCheckReport report;
    std::vector<Mat<T>*> param_mats;
    std::vector<const Mat<T>*> grad_mats;
    std::vector<std::string> names;
    params.for_each_tensor([&](const std::string& name, Mat<T>& m) {
        param_mats.push_back(&m);
        names.push_back(name);
    });
    grads.for_each_tensor(
        [&](const std::string&, const Mat<T>& m) { grad_mats.push_back(&m); });

    for (size_t ti = 0; ti < param_mats.size(); ++ti) {
        Mat<T>& pm = *param_mats[ti];
        const Mat<T>& gm = *grad_mats[ti];
        for (size_t i = 0; i < pm.data.size(); ++i) {
            const T saved = pm.data[i];
            pm.data[i] = saved + fd_step;
            const double lp = loss_of();
            pm.data[i] = saved - fd_step;
            const double lm = loss_of();
            pm.data[i] = saved;
            const double gn = (lp - lm) / (2.0 * static_cast<double>(fd_step));
            const double ga = static_cast<double>(gm.data[i]);
            const double rel = std::abs(ga - gn) / std::max(guard, std::abs(ga) + std::abs(gn));
            ++report.params_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_tensor = names[ti];
                report.worst_index = static_cast<int>(i);
            }
        }
    }
    return report;
}

}  // namespace

GradCheckReport grad_check64(const ModelConfig& cfg, const GradCheckSettings& settings) {
    return run_check<double>(cfg, settings, 1e-5, 1e-3);
}

GradCheckReport grad_check32(const ModelConfig& cfg, const GradCheckSettings& settings) {
    return run_check<float>(cfg, settings, 1e-2f, 5e-2);
}

}  // namespace pmt
