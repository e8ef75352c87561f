#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pmt/mat.hpp"

namespace pmt {

// Layout of the predefined temporal encoding: absolute encoding in
// dims [0, D/2), daily encoding in [D/2, 3D/4), weekly encoding in [3D/4, D).
// Window index 0 is local midnight on a Monday; phase_offset_windows shifts
// the clock origin when data uses a different anchor.
struct EncodingSpec {
    int d = 128;
    int windows_per_day = 48;
    int windows_per_week = 336;
    int64_t phase_offset_windows = 0;

    int ae_dims() const { return d / 2; }
    int de_dims() const { return d / 4; }
    int we_dims() const { return d / 4; }
    int de_offset() const { return d / 2; }
    int we_offset() const { return 3 * d / 4; }

    void validate() const {
        if (d <= 0 || d % 8 != 0) {
            throw std::invalid_argument("embedding dimension must be a positive multiple of 8");
        }
        if (windows_per_day <= 0 || windows_per_week != 7 * windows_per_day) {
            throw std::invalid_argument("windows_per_week must be 7 * windows_per_day");
        }
    }
};

// Precomputed per-pair divisors, shared between the one-shot operation and
// the training hot path so both produce bit-identical rows.
struct TemporalEncoder {
    explicit TemporalEncoder(const EncodingSpec& spec);

    // Writes the D-dim encoding of one absolute window index.
    void encode_row(int64_t window_index, double* out) const;

    // T x D matrix, row per requested window index.
    Mat<double> encode(const std::vector<int64_t>& window_indices) const;

    const EncodingSpec& spec() const { return spec_; }

private:
    EncodingSpec spec_;
    std::vector<double> ae_div_;  // 10000^(4i/D), i = pair index in the AE block
    std::vector<double> de_div_;  // 10000^(8i/D)
    std::vector<double> we_div_;  // 10000^(8i/D)
};

inline Mat<double> temporal_encoding(const std::vector<int64_t>& window_indices,
                                     const EncodingSpec& spec) {
    return TemporalEncoder(spec).encode(window_indices);
}

// Final model input: spatial_table[token_t] + TE(window_index_t). The table
// has V+2 rows; MISSING and MASK are ordinary learnable rows.
template <typename T>
Mat<T> embed_sequence(const std::vector<int32_t>& tokens,
                      const std::vector<int64_t>& window_indices, const Mat<T>& spatial_table,
                      const TemporalEncoder& encoder) {
    if (tokens.size() != window_indices.size()) {
        throw std::invalid_argument("tokens and window_indices must have equal length");
    }
    const int d = encoder.spec().d;
    if (spatial_table.cols != d) {
        throw std::invalid_argument("spatial table width must equal encoding dimension");
    }
    Mat<T> out(static_cast<int>(tokens.size()), d);
    std::vector<double> te(d);
    for (size_t t = 0; t < tokens.size(); ++t) {
        const int32_t tok = tokens[t];
        if (tok < 0 || tok >= spatial_table.rows) {
            throw std::invalid_argument("token id out of range");
        }
        encoder.encode_row(window_indices[t], te.data());
        const T* srow = spatial_table.row(tok);
        T* orow = out.row(static_cast<int>(t));
        for (int j = 0; j < d; ++j) orow[j] = srow[j] + static_cast<T>(te[j]);
    }
    return out;
}

}  // namespace pmt
