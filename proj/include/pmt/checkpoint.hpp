#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pmt/mat.hpp"
#include "pmt/model_config.hpp"
#include "pmt/temporal_encoding.hpp"
#include "pmt/transformer.hpp"

namespace pmt {

struct CheckpointMeta {
    std::string task;  // "next", "mask" or empty
    int64_t step = 0;
    std::string init_scheme = "uniform_inv_sqrt_fan_in";
    uint64_t seed = 0;
};

// Versioned binary snapshot: magic "PMT1", a JSON header with the configs and
// metadata, then named float32 tensors (row-major, little-endian). Save/load
// round-trips bit-exactly.
struct Checkpoint {
    ModelConfig model;
    EncodingSpec encoding;
    CheckpointMeta meta;
    std::vector<std::pair<std::string, Mat<float>>> tensors;

    bool has_optimizer = false;
    int64_t adam_t = 0;
    std::vector<std::pair<std::string, Mat<float>>> opt_m;
    std::vector<std::pair<std::string, Mat<float>>> opt_v;

    const Mat<float>* find_tensor(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from_params(const TransformerParams<float>& params,
                                  const EncodingSpec& encoding, const CheckpointMeta& meta);

// Rebuilds model parameters from a checkpoint. Every tensor named by the
// architecture must be present with the right shape.
TransformerParams<float> params_from_checkpoint(const Checkpoint& ckpt);

// Copies all shared tensors (matching name and shape) from `ckpt` into
// `params`; returns the names that were loaded. Used for cross-task
// initialization.
std::vector<std::string> load_shared_tensors(const Checkpoint& ckpt,
                                             TransformerParams<float>& params);

std::string checkpoint_summary(const Checkpoint& ckpt);

}  // namespace pmt
