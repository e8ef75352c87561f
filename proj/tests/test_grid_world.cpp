#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pmt/grid_world.hpp"
#include "pmt/rng.hpp"

using namespace pmt;

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("2x2 grid: four regions plus special tokens") {
    auto vocab = build_grid_vocab({0, 0, 1000, 1000}, 500, 1);
    CHECK(vocab.region_count() == 4);
    CHECK(vocab.vocab_size() == 6);
    CHECK(vocab.missing_token() == 4);
    CHECK(vocab.mask_token() == 5);
    for (TokenId t = 0; t < 4; ++t) {
        CHECK(vocab.token_of(vocab.decode(t)) == t);  // decode(encode) round trip
        CHECK(vocab.is_region_token(t));
    }
    CHECK_FALSE(vocab.is_region_token(vocab.missing_token()));
    CHECK_FALSE(vocab.is_region_token(vocab.mask_token()));
}

TEST_CASE("10x10 grid: centroid geometry") {
    auto vocab = build_grid_vocab({0, 0, 5000, 5000}, 500, 3);
    CHECK(vocab.region_count() == 100);
    const auto& r0 = vocab.region(0);
    CHECK(r0.centroid.x == doctest::Approx(250.0));
    CHECK(r0.centroid.y == doctest::Approx(250.0));
    for (const auto& r : vocab.regions()) {
        CHECK(std::isfinite(r.centroid.x));
        CHECK(r.population >= 0.0);
        for (const auto& [k, v] : r.attributes) {
            (void)k;
            CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("same inputs twice give byte-identical vocabularies") {
    auto a = build_grid_vocab({0, 0, 3000, 2000}, 500, 42);
    auto b = build_grid_vocab({0, 0, 3000, 2000}, 500, 42);
    save_regions_csv(a, "gw_a.csv");
    save_regions_csv(b, "gw_b.csv");
    CHECK(file_bytes("gw_a.csv") == file_bytes("gw_b.csv"));
    auto c = build_grid_vocab({0, 0, 3000, 2000}, 500, 43);
    save_regions_csv(c, "gw_c.csv");
    CHECK(file_bytes("gw_a.csv") != file_bytes("gw_c.csv"));
    std::remove("gw_a.csv");
    std::remove("gw_b.csv");
    std::remove("gw_c.csv");
}

TEST_CASE("degenerate inputs rejected") {
    CHECK_THROWS_AS(build_grid_vocab({0, 0, 0, 1000}, 500, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_grid_vocab({0, 0, 1000, 1000}, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_grid_vocab({0, 0, 1000, 1000}, -5, 1), std::invalid_argument);
}

TEST_CASE("assign_region basics and half-open boundaries") {
    auto vocab = build_grid_vocab({0, 0, 1000, 1000}, 500, 1);
    CHECK(assign_region({10, 10}, vocab).value() == 0);
    // interior boundary goes to the higher-index cell
    CHECK(assign_region({500, 10}, vocab).value() == 1);
    CHECK(assign_region({10, 500}, vocab).value() == 2);
    CHECK(assign_region({500, 500}, vocab).value() == 3);
    CHECK_FALSE(assign_region({-1, 10}, vocab).has_value());
    CHECK_FALSE(assign_region({10, 1000}, vocab).has_value());
}

TEST_CASE("interior points partition into exactly one cell") {
    auto vocab = build_grid_vocab({0, 0, 3000, 2000}, 500, 7);
    Rng rng(99);
    for (int i = 0; i < 2000; ++i) {
        Point p{rng.uniform() * 3000.0, rng.uniform() * 2000.0};
        auto tok = assign_region(p, vocab);
        REQUIRE(tok.has_value());
        // the point must lie inside the half-open cell of the returned region
        const auto& c = vocab.region(*tok).centroid;
        CHECK(p.x >= c.x - 250.0);
        CHECK(p.x < c.x + 250.0);
        CHECK(p.y >= c.y - 250.0);
        CHECK(p.y < c.y + 250.0);
    }
}

TEST_CASE("region csv round trip preserves metadata") {
    auto vocab = build_grid_vocab({0, 0, 2000, 1500}, 500, 11);
    save_regions_csv(vocab, "gw_rt.csv");
    auto loaded = load_regions_csv("gw_rt.csv");
    REQUIRE(loaded.region_count() == vocab.region_count());
    for (TokenId t = 0; t < vocab.region_count(); ++t) {
        const auto& a = vocab.region(t);
        const auto& b = loaded.region(t);
        CHECK(a.region_id == b.region_id);
        CHECK(a.centroid.x == b.centroid.x);
        CHECK(a.centroid.y == b.centroid.y);
        CHECK(a.population == b.population);
        CHECK(a.group_label == b.group_label);
        REQUIRE(a.attributes.size() == b.attributes.size());
        for (const auto& [k, v] : a.attributes) CHECK(b.attributes.at(k) == v);
    }
    std::remove("gw_rt.csv");
}
