#pragma once

#include <cstdint>
#include <string>

#include "pmt/model_config.hpp"
#include "pmt/transformer.hpp"

namespace pmt {

// Warmup/decay schedule. `Paper` evaluates the published formula exactly as
// printed (its two branches do not meet at step == warmup); `Standard` is the
// familiar inverse-sqrt variant. Both are clamped to lr_cap.
double lr_at(int64_t step, int warmup_steps, int d, double c, double lr_cap,
             LrSchedule schedule = LrSchedule::Paper);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 1e-9;
};

struct AdamState {
    TransformerParams<float> m;
    TransformerParams<float> v;
    int64_t t = 0;

    static AdamState make(const TransformerParams<float>& like) {
        AdamState s;
        s.m = like.zeros_like();
        s.v = like.zeros_like();
        return s;
    }
};

struct AdamOutcome {
    bool applied = true;
    std::string reason;
};

// Standard Adam with bias correction. A non-finite gradient anywhere aborts
// the step and reports which tensor tripped it; parameters and moments are
// left untouched in that case.
AdamOutcome adam_step(TransformerParams<float>& params, const TransformerParams<float>& grads,
                      AdamState& state, double lr, const AdamConfig& cfg);

}  // namespace pmt
