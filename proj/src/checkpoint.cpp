#include "pmt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pmt/json_serialization.hpp"

namespace pmt {

namespace {

constexpr char kMagic[4] = {'P', 'M', 'T', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("truncated checkpoint");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32_array(std::ostream& out, const std::vector<float>& data) {
    for (float v : data) write_u32(out, std::bit_cast<uint32_t>(v));
}

void read_f32_array(std::istream& in, std::vector<float>& data) {
    for (auto& v : data) v = std::bit_cast<float>(read_u32(in));
}

void write_tensor(std::ostream& out, const std::string& name, const Mat<float>& m) {
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<uint32_t>(m.rows));
    write_u32(out, static_cast<uint32_t>(m.cols));
    write_f32_array(out, m.data);
}

std::pair<std::string, Mat<float>> read_tensor(std::istream& in) {
    const uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t rows = read_u32(in);
    const uint32_t cols = read_u32(in);
    Mat<float> m(static_cast<int>(rows), static_cast<int>(cols));
    read_f32_array(in, m.data);
    if (!in) throw std::runtime_error("truncated checkpoint tensor: " + name);
    return {std::move(name), std::move(m)};
}

}  // namespace

const Mat<float>* Checkpoint::find_tensor(const std::string& name) const {
    for (const auto& [n, m] : tensors) {
        if (n == name) return &m;
    }
    return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);

    nlohmann::json header = {
        {"model", ckpt.model},
        {"encoding", ckpt.encoding},
        {"meta",
         {{"task", ckpt.meta.task},
          {"step", ckpt.meta.step},
          {"init_scheme", ckpt.meta.init_scheme},
          {"seed", ckpt.meta.seed}}},
        {"tensor_count", ckpt.tensors.size()},
        {"has_optimizer", ckpt.has_optimizer},
        {"adam_t", ckpt.adam_t},
    };
    const std::string hs = header.dump();

    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, m] : ckpt.tensors) write_tensor(out, name, m);
    if (ckpt.has_optimizer) {
        for (const auto& [name, m] : ckpt.opt_m) write_tensor(out, name, m);
        for (const auto& [name, m] : ckpt.opt_v) write_tensor(out, name, m);
    }
    if (!out) throw std::runtime_error("write failure: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::invalid_argument("not a PMT checkpoint: " + path);
    }
    const uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw std::invalid_argument("unsupported checkpoint version " + std::to_string(version));
    }
    const uint32_t hs_len = read_u32(in);
    std::string hs(hs_len, '\0');
    in.read(hs.data(), hs_len);
    if (!in) throw std::runtime_error("truncated checkpoint header");
    const nlohmann::json header = nlohmann::json::parse(hs);

    Checkpoint ckpt;
    header.at("model").get_to(ckpt.model);
    header.at("encoding").get_to(ckpt.encoding);
    const auto& meta = header.at("meta");
    meta.at("task").get_to(ckpt.meta.task);
    meta.at("step").get_to(ckpt.meta.step);
    meta.at("init_scheme").get_to(ckpt.meta.init_scheme);
    meta.at("seed").get_to(ckpt.meta.seed);
    const size_t tensor_count = header.at("tensor_count").get<size_t>();
    header.at("has_optimizer").get_to(ckpt.has_optimizer);
    header.at("adam_t").get_to(ckpt.adam_t);

    for (size_t i = 0; i < tensor_count; ++i) ckpt.tensors.push_back(read_tensor(in));
    if (ckpt.has_optimizer) {
        for (size_t i = 0; i < tensor_count; ++i) ckpt.opt_m.push_back(read_tensor(in));
        for (size_t i = 0; i < tensor_count; ++i) ckpt.opt_v.push_back(read_tensor(in));
    }

    std::set<std::string> seen;
    for (const auto& [name, m] : ckpt.tensors) {
        (void)m;
        if (!seen.insert(name).second) {
            throw std::invalid_argument("duplicate tensor name: " + name);
        }
    }
    return ckpt;
}

Checkpoint checkpoint_from_params(const TransformerParams<float>& params,
                                  const EncodingSpec& encoding, const CheckpointMeta& meta) {
    Checkpoint ckpt;
    ckpt.model = params.cfg;
    ckpt.encoding = encoding;
    ckpt.meta = meta;
    params.for_each_tensor(
        [&](const std::string& name, const Mat<float>& m) { ckpt.tensors.emplace_back(name, m); });
    return ckpt;
}

TransformerParams<float> params_from_checkpoint(const Checkpoint& ckpt) {
    const Mat<float>* table = ckpt.find_tensor("spatial_table");
    if (!table) throw std::invalid_argument("checkpoint lacks spatial_table");
    TransformerParams<float> params = TransformerParams<float>::make(ckpt.model, table->rows);
    params.for_each_tensor([&](const std::string& name, Mat<float>& m) {
        const Mat<float>* src = ckpt.find_tensor(name);
        if (!src) throw std::invalid_argument("checkpoint lacks tensor: " + name);
        if (!src->same_shape(m)) throw std::invalid_argument("tensor shape mismatch: " + name);
        m = *src;
    });
    return params;
}

std::vector<std::string> load_shared_tensors(const Checkpoint& ckpt,
                                             TransformerParams<float>& params) {
    std::vector<std::string> loaded;
    params.for_each_tensor([&](const std::string& name, Mat<float>& m) {
        const Mat<float>* src = ckpt.find_tensor(name);
        if (src && src->same_shape(m)) {
            m = *src;
            loaded.push_back(name);
        }
    });
    return loaded;
}

std::string checkpoint_summary(const Checkpoint& ckpt) {
    std::ostringstream os;
    os << "format PMT1 v" << kVersion << "\n";
    os << "task: " << (ckpt.meta.task.empty() ? "(none)" : ckpt.meta.task)
       << "  step: " << ckpt.meta.step << "  seed: " << ckpt.meta.seed << "\n";
    os << "init: " << ckpt.meta.init_scheme << "\n";
    os << "model: D=" << ckpt.model.d << " H=" << ckpt.model.h << " L=" << ckpt.model.layers
       << " A=" << ckpt.model.heads << " V_out=" << ckpt.model.v_out
       << " dropout=" << ckpt.model.dropout << "\n";
    os << "encoding: D=" << ckpt.encoding.d << " wpd=" << ckpt.encoding.windows_per_day
       << " wpw=" << ckpt.encoding.windows_per_week
       << " phase_offset=" << ckpt.encoding.phase_offset_windows << "\n";
    os << "optimizer state: " << (ckpt.has_optimizer ? "yes" : "no") << "\n";
    size_t total = 0;
    os << "tensors:\n";
    for (const auto& [name, m] : ckpt.tensors) {
        os << "  " << name << "  [" << m.rows << " x " << m.cols << "]\n";
        total += m.size();
    }
    os << "total parameters: " << total << "\n";
    return os.str();
}

}  // namespace pmt
