#include "pmt/grid_world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pmt/rng.hpp"

namespace pmt {

RegionVocabulary::RegionVocabulary(std::vector<RegionMeta> regions, BBox bbox, double cell_size,
                                   int nx, int ny)
    : regions_(std::move(regions)), bbox_(bbox), cell_size_(cell_size), nx_(nx), ny_(ny) {
    for (size_t i = 0; i < regions_.size(); ++i) {
        token_of_[regions_[i].region_id] = static_cast<TokenId>(i);
    }
    if (token_of_.size() != regions_.size()) {
        throw std::invalid_argument("duplicate region ids");
    }
}

TokenId RegionVocabulary::token_of(const std::string& region_id) const {
    auto it = token_of_.find(region_id);
    if (it == token_of_.end()) throw std::invalid_argument("unknown region id: " + region_id);
    return it->second;
}

double RegionVocabulary::centroid_distance(TokenId a, TokenId b) const {
    const Point& pa = regions_.at(a).centroid;
    const Point& pb = regions_.at(b).centroid;
    return std::hypot(pa.x - pb.x, pa.y - pb.y);
}

RegionVocabulary build_grid_vocab(const BBox& bbox, double cell_size, uint64_t seed) {
    if (!(bbox.width() > 0.0) || !(bbox.height() > 0.0)) {
        throw std::invalid_argument("degenerate bbox");
    }
    if (!(cell_size > 0.0)) {
        throw std::invalid_argument("cell_size must be positive");
    }
    const int nx = static_cast<int>(std::ceil(bbox.width() / cell_size - 1e-9));
    const int ny = static_cast<int>(std::ceil(bbox.height() / cell_size - 1e-9));

    Rng rng(sub_seed(seed, "grid_world"));

    // Field parameters shared by all cells: a "downtown" pole for population
    // and income, plus a low-frequency wave so attributes are not radially
    // symmetric.
    const double cx0 = bbox.min_x + (0.25 + 0.5 * rng.uniform()) * bbox.width();
    const double cy0 = bbox.min_y + (0.25 + 0.5 * rng.uniform()) * bbox.height();
    const double wave_phase = rng.uniform() * 6.283185307179586;
    const double diag = std::hypot(bbox.width(), bbox.height());

    std::vector<RegionMeta> regions;
    regions.reserve(static_cast<size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            RegionMeta r;
            r.region_id = "r" + std::to_string(ix) + "_" + std::to_string(iy);
            r.centroid.x = bbox.min_x + (ix + 0.5) * cell_size;
            r.centroid.y = bbox.min_y + (iy + 0.5) * cell_size;

            const double d = std::hypot(r.centroid.x - cx0, r.centroid.y - cy0) / diag;
            const double gx = (r.centroid.x - bbox.min_x) / bbox.width();
            const double gy = (r.centroid.y - bbox.min_y) / bbox.height();
            const double wave = std::sin(3.0 * gx + wave_phase) * std::cos(2.0 * gy);

            // Population peaks downtown; income rises away from it.
            const double pop_field = std::exp(-3.0 * d) + 0.15 * (1.0 + wave);
            r.population = std::floor(600.0 + 2400.0 * pop_field * (0.8 + 0.4 * rng.uniform()));
            r.attributes["income"] =
                30000.0 + 90000.0 * (0.6 * d + 0.2 * (1.0 + wave) + 0.2 * rng.uniform());
            r.attributes["bachelor_share"] = std::clamp(
                0.15 + 0.55 * (0.7 * (1.0 - d) + 0.3 * (0.5 + 0.5 * wave)) + 0.08 * rng.normal(),
                0.0, 1.0);

            // Two contiguous communities along a smooth latent.
            const double latent = 0.6 * gx + 0.4 * gy + 0.15 * wave;
            r.group_label = latent < 0.5 ? "west" : "east";
            regions.push_back(std::move(r));
        }
    }
    return RegionVocabulary(std::move(regions), bbox, cell_size, nx, ny);
}

std::optional<TokenId> assign_region(const Point& point, const RegionVocabulary& vocab) {
    const BBox& b = vocab.bbox();
    if (point.x < b.min_x || point.x >= b.max_x || point.y < b.min_y || point.y >= b.max_y) {
        return std::nullopt;
    }
    int ix = static_cast<int>(std::floor((point.x - b.min_x) / vocab.cell_size()));
    int iy = static_cast<int>(std::floor((point.y - b.min_y) / vocab.cell_size()));
    ix = std::min(ix, vocab.grid_nx() - 1);
    iy = std::min(iy, vocab.grid_ny() - 1);
    return static_cast<TokenId>(iy * vocab.grid_nx() + ix);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_regions_csv(const RegionVocabulary& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);

    std::vector<std::string> attr_names;
    if (vocab.region_count() > 0) {
        for (const auto& [k, _] : vocab.region(0).attributes) attr_names.push_back(k);
    }
    out << "region_id,cx,cy,population,group_label";
    for (const auto& a : attr_names) out << "," << a;
    out << "\n";
    for (const auto& r : vocab.regions()) {
        out << r.region_id << "," << fmt_double(r.centroid.x) << "," << fmt_double(r.centroid.y)
            << "," << fmt_double(r.population) << "," << r.group_label;
        for (const auto& a : attr_names) out << "," << fmt_double(r.attributes.at(a));
        out << "\n";
    }
}

RegionVocabulary load_regions_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty region file: " + path);
    auto header = split_csv_line(line);
    if (header.size() < 5 || header[0] != "region_id") {
        throw std::invalid_argument("bad region csv header in " + path);
    }
    std::vector<std::string> attr_names(header.begin() + 5, header.end());

    std::vector<RegionMeta> regions;
    BBox bbox;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != header.size()) {
            throw std::invalid_argument("bad region csv row in " + path);
        }
        RegionMeta r;
        r.region_id = f[0];
        r.centroid.x = std::stod(f[1]);
        r.centroid.y = std::stod(f[2]);
        r.population = std::stod(f[3]);
        r.group_label = f[4];
        for (size_t i = 0; i < attr_names.size(); ++i) r.attributes[attr_names[i]] = std::stod(f[5 + i]);
        if (first) {
            bbox = {r.centroid.x, r.centroid.y, r.centroid.x, r.centroid.y};
            first = false;
        }
        bbox.min_x = std::min(bbox.min_x, r.centroid.x);
        bbox.min_y = std::min(bbox.min_y, r.centroid.y);
        bbox.max_x = std::max(bbox.max_x, r.centroid.x);
        bbox.max_y = std::max(bbox.max_y, r.centroid.y);
        regions.push_back(std::move(r));
    }
    // Geometry (cell size, grid shape) is not part of the interchange format;
    // a vocabulary loaded from CSV supports token/metadata lookups only.
    return RegionVocabulary(std::move(regions), bbox, 0.0, 0, 0);
}

}  // namespace pmt
