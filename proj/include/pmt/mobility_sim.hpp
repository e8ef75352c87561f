#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pmt/grid_world.hpp"
#include "pmt/rng.hpp"
#include "pmt/trajectory.hpp"

namespace pmt {

// Window-of-day boundaries (48 windows per day). Weekday nights and work
// hours are anchored; everything else is explore/return territory.
struct DailySchedule {
    int weekday_night_end = 14;    // 07:00
    int weekday_night_start = 44;  // 22:00
    int work_start = 18;           // 09:00
    int work_end = 34;             // 17:00
    int weekend_night_end = 16;    // 08:00
    int weekend_night_start = 46;  // 23:00
};

struct EprParams {
    double rho = 0.6;     // exploration scale
    double gamma = 0.21;  // exploration exponent
    double alpha = 2.0;   // distance-decay exponent for exploration targets
    double mean_dwell_windows = 3.0;
    DailySchedule schedule;

    void validate() const;
};

struct AgentState {
    TokenId home = 0;
    TokenId work = 0;
    TokenId current = 0;
    std::map<TokenId, int> visit_counts;

    int distinct_visited() const { return static_cast<int>(visit_counts.size()); }

    // Registers presence in a region (block entry, not per window).
    void arrive(TokenId region) {
        if (visit_counts.empty() || region != current) visit_counts[region] += 1;
        current = region;
    }
};

// One explore/return step. With probability rho * S^(-gamma) the agent
// explores an unvisited region chosen proportionally to distance^(-alpha)
// from its current region; otherwise it returns to a visited region chosen
// proportionally to visit count. Falls back to a return when the world is
// exhausted. Updates the state.
TokenId epr_next(AgentState& state, const EprParams& params, const RegionVocabulary& world,
                 Rng& rng);

// Fully observed trajectory for one agent: weekday nights at home, weekday
// work hours at work, remaining windows driven by explore/return dynamics
// with geometric dwell times.
TrajectorySequence simulate_agent(const RegionVocabulary& world, const EprParams& params,
                                  const TimeSpan& span, const std::string& user_id, uint64_t seed);

// Removes observations in geometric-length bursts until realized occupancy is
// approximately `target_occupancy`. Returns (thinned, original); the original
// travels to disk as the .truth sidecar. With correlate_gaps the bursts snap
// forward to the next arrival window.
std::pair<TrajectorySequence, TrajectorySequence> thin_observations(
    const TrajectorySequence& seq, const RegionVocabulary& world, double target_occupancy,
    int burst_length, uint64_t seed, bool correlate_gaps = false);

}  // namespace pmt
