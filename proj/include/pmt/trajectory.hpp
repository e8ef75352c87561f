#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pmt/grid_world.hpp"

namespace pmt {

constexpr int kWindowSeconds = 30 * 60;
constexpr int kWindowsPerDay = 48;
constexpr int kWindowsPerWeek = 7 * 48;

// Sentinel used in the text interchange format for windows with no
// observation. In-memory sequences store the vocabulary's MISSING token.
constexpr TokenId kMissingFileToken = -1;

struct LbsRecord {
    std::string user_id;
    int64_t timestamp = 0;  // seconds since epoch
    Point position;
};

// One user's token per 30-minute window over [start_epoch, start_epoch + T*30min).
struct TrajectorySequence {
    std::string user_id;
    int64_t start_epoch = 0;  // aligned to a window boundary
    std::vector<TokenId> tokens;

    int length() const { return static_cast<int>(tokens.size()); }
    int64_t window_index(int t) const { return start_epoch / kWindowSeconds + t; }
};

struct TimeSpan {
    int64_t start = 0;  // inclusive, seconds
    int64_t end = 0;    // exclusive, seconds
};

// Buckets records into 30-minute windows, one sequence per user. Within a
// window the record with the latest timestamp wins (input order breaks
// timestamp ties); windows with no record hold MISSING. Records outside the
// span or outside the grid are dropped.
std::vector<TrajectorySequence> windowize(const std::vector<LbsRecord>& records,
                                          const TimeSpan& span, const RegionVocabulary& vocab);

// Fraction of windows holding a real region token.
double temporal_occupancy(const TrajectorySequence& seq, const RegionVocabulary& vocab);

// Keeps sequences with occupancy strictly greater than min_occ.
std::vector<TrajectorySequence> filter_by_occupancy(const std::vector<TrajectorySequence>& seqs,
                                                    const RegionVocabulary& vocab,
                                                    double min_occ = 0.5);

// User-disjoint pretrain/test split, deterministic given seed.
std::pair<std::vector<TrajectorySequence>, std::vector<TrajectorySequence>> split_users(
    const std::vector<TrajectorySequence>& seqs, double train_fraction, uint64_t seed);

// Text interchange: one line per user, `user_id|start_epoch|t0,t1,...` with
// -1 encoding MISSING.
void save_sequences(const std::vector<TrajectorySequence>& seqs, const RegionVocabulary& vocab,
                    const std::string& path);
std::vector<TrajectorySequence> load_sequences(const std::string& path,
                                               const RegionVocabulary& vocab);

// LBS input CSV: header `user_id,timestamp,x,y`.
void save_lbs_csv(const std::vector<LbsRecord>& records, const std::string& path);
std::vector<LbsRecord> load_lbs_csv(const std::string& path);

}  // namespace pmt
