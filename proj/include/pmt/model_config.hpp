#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pmt {

// Transformer dimensions. The reference sizes are 1.6M (D=128,H=256,L=4,A=4),
// 21M (D=512,H=1024,L=8,A=8) and 550M (D=1024,H=2048,L=16,A=16); desk-scale
// runs use far smaller settings.
struct ModelConfig {
    int d = 128;        // embedding size
    int h = 256;        // feed-forward hidden size
    int layers = 4;     // transformer layers
    int heads = 4;      // attention heads
    int v_out = 0;      // output vocabulary: region tokens only
    double dropout = 0.1;

    void validate() const {
        if (d <= 0 || h <= 0 || layers <= 0 || heads <= 0 || v_out <= 0) {
            throw std::invalid_argument("model dimensions must be positive");
        }
        if (d % heads != 0) throw std::invalid_argument("d must be divisible by heads");
        if (d % 8 != 0) throw std::invalid_argument("d must be divisible by 8");
        if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0,1)");
    }

    bool operator==(const ModelConfig&) const = default;
};

enum class LrSchedule { Paper, Standard };

struct TrainingConfig {
    double label_smoothing = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 1e-9;
    int warmup_steps = 1000;
    double c = 1.0;  // schedule multiplier
    double lr_cap = 1e-4;
    int batch_size = 32;
    int epochs = 20;
    uint64_t seed = 42;
    LrSchedule schedule = LrSchedule::Paper;
    int context_length = 0;    // 0 = full sequence
    int eval_every = 25;       // steps between eval-loss probes (0 = never)
    double eval_fraction = 0.1;  // train users reserved for the eval-loss slice
    int checkpoint_every = 0;  // 0 = final checkpoint only

    void validate() const {
        if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
            throw std::invalid_argument("label_smoothing must be in [0,1)");
        }
        if (warmup_steps < 1) throw std::invalid_argument("warmup_steps must be >= 1");
        if (lr_cap <= 0.0) throw std::invalid_argument("lr_cap must be positive");
        if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
            throw std::invalid_argument("betas must be in [0,1)");
        }
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
        if (context_length < 0) throw std::invalid_argument("context_length must be >= 0");
        if (eval_fraction < 0.0 || eval_fraction >= 1.0) {
            throw std::invalid_argument("eval_fraction must be in [0,1)");
        }
    }
};

}  // namespace pmt
