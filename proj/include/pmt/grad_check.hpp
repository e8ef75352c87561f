#pragma once

#include <cstdint>
#include <string>

#include "pmt/model_config.hpp"

namespace pmt {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_tensor;
    int worst_index = -1;
    size_t params_checked = 0;
};

struct GradCheckSettings {
    int seq_len = 4;
    bool causal = true;
    double smoothing = 0.1;
    uint64_t seed = 7;
    bool zero_params = false;  // degenerate all-zero model, guard exercise
};

// Compares analytic gradients of the full token->loss pipeline against
// central finite differences for every parameter. Relative error is guarded:
// |ga - gn| / max(guard, |ga| + |gn|), with guard 1e-3 in 64-bit mode and
// 5e-2 in 32-bit mode (float forward noise makes tiny gradients unresolvable
// by finite differences). Only tiny models are accepted (D <= 16, L <= 2,
// T <= 8).
GradCheckReport grad_check64(const ModelConfig& cfg, const GradCheckSettings& settings);
GradCheckReport grad_check32(const ModelConfig& cfg, const GradCheckSettings& settings);

}  // namespace pmt
