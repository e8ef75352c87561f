#pragma once

#include <json.hpp>

#include "pmt/model_config.hpp"
#include "pmt/temporal_encoding.hpp"

namespace pmt {

inline void to_json(nlohmann::json& j, const ModelConfig& m) {
    j = {{"d", m.d},         {"h", m.h},           {"layers", m.layers},
         {"heads", m.heads}, {"v_out", m.v_out},   {"dropout", m.dropout}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& m) {
    j.at("d").get_to(m.d);
    j.at("h").get_to(m.h);
    j.at("layers").get_to(m.layers);
    j.at("heads").get_to(m.heads);
    j.at("v_out").get_to(m.v_out);
    j.at("dropout").get_to(m.dropout);
}

inline void to_json(nlohmann::json& j, const EncodingSpec& e) {
    j = {{"d", e.d},
         {"windows_per_day", e.windows_per_day},
         {"windows_per_week", e.windows_per_week},
         {"phase_offset_windows", e.phase_offset_windows}};
}

inline void from_json(const nlohmann::json& j, EncodingSpec& e) {
    j.at("d").get_to(e.d);
    j.at("windows_per_day").get_to(e.windows_per_day);
    j.at("windows_per_week").get_to(e.windows_per_week);
    j.at("phase_offset_windows").get_to(e.phase_offset_windows);
}

}  // namespace pmt
