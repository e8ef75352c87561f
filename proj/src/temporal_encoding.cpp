#include "pmt/temporal_encoding.hpp"

#include <cmath>

namespace pmt {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

int64_t positive_mod(int64_t v, int64_t m) {
    int64_t r = v % m;
    return r < 0 ? r + m : r;
}
}  // namespace

TemporalEncoder::TemporalEncoder(const EncodingSpec& spec) : spec_(spec) {
    spec_.validate();
    const double d = static_cast<double>(spec_.d);
    ae_div_.resize(spec_.ae_dims() / 2);
    for (size_t i = 0; i < ae_div_.size(); ++i) {
        ae_div_[i] = std::pow(10000.0, 4.0 * static_cast<double>(i) / d);
    }
    de_div_.resize(spec_.de_dims() / 2);
    for (size_t i = 0; i < de_div_.size(); ++i) {
        de_div_[i] = std::pow(10000.0, 8.0 * static_cast<double>(i) / d);
    }
    we_div_ = de_div_;  // same exponent law, same block width
}

void TemporalEncoder::encode_row(int64_t window_index, double* out) const {
    const int64_t t = window_index + spec_.phase_offset_windows;

    const double tf = static_cast<double>(t);
    for (size_t i = 0; i < ae_div_.size(); ++i) {
        const double arg = tf / ae_div_[i];
        out[2 * i] = std::sin(arg);
        out[2 * i + 1] = std::cos(arg);
    }

    // Angles are reduced modulo the period before any trig, so daily and
    // weekly blocks repeat bitwise and large t loses no precision.
    const double theta_d =
        kTwoPi * static_cast<double>(positive_mod(t, spec_.windows_per_day)) /
        static_cast<double>(spec_.windows_per_day);
    double* de = out + spec_.de_offset();
    for (size_t i = 0; i < de_div_.size(); ++i) {
        const double arg = theta_d / de_div_[i];
        de[2 * i] = std::sin(arg);
        de[2 * i + 1] = std::cos(arg);
    }

    const double theta_w =
        kTwoPi * static_cast<double>(positive_mod(t, spec_.windows_per_week)) /
        static_cast<double>(spec_.windows_per_week);
    double* we = out + spec_.we_offset();
    for (size_t i = 0; i < we_div_.size(); ++i) {
        const double arg = theta_w / we_div_[i];
        we[2 * i] = std::sin(arg);
        we[2 * i + 1] = std::cos(arg);
    }
}

Mat<double> TemporalEncoder::encode(const std::vector<int64_t>& window_indices) const {
    Mat<double> out(static_cast<int>(window_indices.size()), spec_.d);
    for (size_t t = 0; t < window_indices.size(); ++t) {
        encode_row(window_indices[t], out.row(static_cast<int>(t)));
    }
    return out;
}

}  // namespace pmt
