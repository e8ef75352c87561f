#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pmt {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct BBox {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
};

// One region of the study area. Grid cells stand in for census polygons:
// stable id, centroid, population and a few synthesized demographic
// attributes are all the downstream analyses need.
struct RegionMeta {
    std::string region_id;
    Point centroid;
    double population = 0.0;
    std::map<std::string, double> attributes;
    std::string group_label;
};

using TokenId = int32_t;

// Region universe plus the token vocabulary. Real regions occupy tokens
// 0..V-1; MISSING = V and MASK = V+1 round out the vocabulary.
class RegionVocabulary {
public:
    RegionVocabulary() = default;
    RegionVocabulary(std::vector<RegionMeta> regions, BBox bbox, double cell_size, int nx, int ny);

    int region_count() const { return static_cast<int>(regions_.size()); }
    int vocab_size() const { return region_count() + 2; }
    TokenId missing_token() const { return region_count(); }
    TokenId mask_token() const { return region_count() + 1; }

    const RegionMeta& region(TokenId token) const { return regions_.at(token); }
    const std::vector<RegionMeta>& regions() const { return regions_; }
    const BBox& bbox() const { return bbox_; }
    double cell_size() const { return cell_size_; }
    int grid_nx() const { return nx_; }
    int grid_ny() const { return ny_; }

    bool is_region_token(TokenId t) const { return t >= 0 && t < region_count(); }

    TokenId token_of(const std::string& region_id) const;
    const std::string& decode(TokenId token) const { return regions_.at(token).region_id; }

    double centroid_distance(TokenId a, TokenId b) const;

private:
    std::vector<RegionMeta> regions_;
    std::map<std::string, TokenId> token_of_;
    BBox bbox_;
    double cell_size_ = 0.0;
    int nx_ = 0;
    int ny_ = 0;
};

// Builds a uniform grid over bbox. Populations and the attribute fields
// (income, bachelor_share) are smooth spatial fields plus seeded noise, and
// group labels split the world along a smooth latent, so geography-aware
// embeddings have something real to recover.
RegionVocabulary build_grid_vocab(const BBox& bbox, double cell_size, uint64_t seed);

// Token of the cell containing `point`, or nullopt when the point lies
// outside the bbox. Cells are half-open ([x0,x1) x [y0,y1)); points on an
// interior boundary belong to the higher-index cell.
std::optional<TokenId> assign_region(const Point& point, const RegionVocabulary& vocab);

// CSV export/import: region_id,cx,cy,population,group_label,<attr...>.
// Token ids are implicit from row order.
void save_regions_csv(const RegionVocabulary& vocab, const std::string& path);
RegionVocabulary load_regions_csv(const std::string& path);

}  // namespace pmt
