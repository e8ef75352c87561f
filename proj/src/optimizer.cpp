#include "pmt/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pmt {

double lr_at(int64_t step, int warmup_steps, int d, double c, double lr_cap, LrSchedule schedule) {
    if (step < 1) throw std::invalid_argument("step must be >= 1");
    if (warmup_steps < 1) throw std::invalid_argument("warmup_steps must be >= 1");
    const double s = static_cast<double>(step);
    const double w = static_cast<double>(warmup_steps);
    double ramp;
    switch (schedule) {
        case LrSchedule::Paper:
            ramp = s * std::pow(w, -1.5) / std::sqrt(w);
            break;
        case LrSchedule::Standard:
        default:
            ramp = s * std::pow(w, -1.5);
            break;
    }
    const double base = (1.0 / std::sqrt(static_cast<double>(d))) * std::min(1.0 / std::sqrt(s), ramp) * c;
    return std::min(lr_cap, base);
}

namespace {

template <typename F>
void zip_tensors(TransformerParams<float>& params, const TransformerParams<float>& grads,
                 AdamState& state, F&& f) {
    std::vector<Mat<float>*> ps, ms, vs;
    std::vector<const Mat<float>*> gs;
    params.for_each_tensor([&](const std::string&, Mat<float>& m) { ps.push_back(&m); });
    grads.for_each_tensor([&](const std::string&, const Mat<float>& m) { gs.push_back(&m); });
    state.m.for_each_tensor([&](const std::string&, Mat<float>& m) { ms.push_back(&m); });
    state.v.for_each_tensor([&](const std::string&, Mat<float>& m) { vs.push_back(&m); });
    for (size_t i = 0; i < ps.size(); ++i) f(*ps[i], *gs[i], *ms[i], *vs[i]);
}

}  // namespace

AdamOutcome adam_step(TransformerParams<float>& params, const TransformerParams<float>& grads,
                      AdamState& state, double lr, const AdamConfig& cfg) {
    AdamOutcome outcome;
    grads.for_each_tensor([&](const std::string& name, const Mat<float>& g) {
        if (!outcome.applied) return;
        for (float v : g.data) {
            if (!std::isfinite(v)) {
                outcome.applied = false;
                outcome.reason = "non-finite gradient in " + name;
                return;
            }
        }
    });
    if (!outcome.applied) return outcome;

    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    zip_tensors(params, grads, state, [&](Mat<float>& p, const Mat<float>& g, Mat<float>& m,
                                          Mat<float>& v) {
        for (size_t i = 0; i < p.data.size(); ++i) {
            const double gi = g.data[i];
            const double mi = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * gi * gi;
            m.data[i] = static_cast<float>(mi);
            v.data[i] = static_cast<float>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            p.data[i] = static_cast<float>(p.data[i] - lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
        }
    });
    return outcome;
}

}  // namespace pmt
