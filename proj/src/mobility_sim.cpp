#include "pmt/mobility_sim.hpp"

#include <cmath>
#include <stdexcept>

namespace pmt {

void EprParams::validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must be in [0,1]");
    if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    if (mean_dwell_windows < 1.0) throw std::invalid_argument("mean_dwell_windows must be >= 1");
}

namespace {

// Index into `weights` drawn proportionally to weight.
int weighted_pick(const std::vector<double>& weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = rng.uniform() * total;
    for (size_t i = 0; i < weights.size(); ++i) {
        r -= weights[i];
        if (r < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

TokenId preferential_return(const AgentState& state, Rng& rng) {
    std::vector<double> weights;
    std::vector<TokenId> tokens;
    weights.reserve(state.visit_counts.size());
    for (const auto& [tok, count] : state.visit_counts) {
        tokens.push_back(tok);
        weights.push_back(static_cast<double>(count));
    }
    return tokens[weighted_pick(weights, rng)];
}

enum class Slot { Home, Work, Free };

Slot slot_for_window(int64_t abs_window, const DailySchedule& s) {
    const int day = static_cast<int>(abs_window / kWindowsPerDay);
    const int wod = static_cast<int>(abs_window % kWindowsPerDay);
    const bool weekend = (day % 7) >= 5;  // window 0 anchored to Monday 00:00
    if (weekend) {
        if (wod < s.weekend_night_end || wod >= s.weekend_night_start) return Slot::Home;
        return Slot::Free;
    }
    if (wod < s.weekday_night_end || wod >= s.weekday_night_start) return Slot::Home;
    if (wod >= s.work_start && wod < s.work_end) return Slot::Work;
    return Slot::Free;
}

}  // namespace

TokenId epr_next(AgentState& state, const EprParams& params, const RegionVocabulary& world,
                 Rng& rng) {
    if (state.visit_counts.empty()) throw std::invalid_argument("agent state not initialized");

    const int S = state.distinct_visited();
    const double p_new = params.rho * std::pow(static_cast<double>(S), -params.gamma);
    const bool world_left = S < world.region_count();

    TokenId chosen;
    if (world_left && rng.uniform() < p_new) {
        std::vector<TokenId> candidates;
        std::vector<double> weights;
        candidates.reserve(world.region_count() - S);
        for (TokenId t = 0; t < world.region_count(); ++t) {
            if (state.visit_counts.count(t)) continue;
            candidates.push_back(t);
            const double d = world.centroid_distance(state.current, t);
            weights.push_back(std::pow(d, -params.alpha));
        }
        chosen = candidates[weighted_pick(weights, rng)];
    } else {
        chosen = preferential_return(state, rng);
    }

    state.visit_counts[chosen] += 1;
    state.current = chosen;
    return chosen;
}

TrajectorySequence simulate_agent(const RegionVocabulary& world, const EprParams& params,
                                  const TimeSpan& span, const std::string& user_id, uint64_t seed) {
    params.validate();
    if (span.end <= span.start || (span.end - span.start) % kWindowSeconds != 0) {
        throw std::invalid_argument("span must be a positive multiple of 30 minutes");
    }
    if (span.start % kWindowSeconds != 0) {
        throw std::invalid_argument("span start must be window-aligned");
    }
    Rng rng(seed);

    // Home follows population; work follows population with commute-distance
    // decay from home.
    std::vector<double> weights(world.region_count());
    for (TokenId t = 0; t < world.region_count(); ++t) weights[t] = world.region(t).population;
    const TokenId home = static_cast<TokenId>(weighted_pick(weights, rng));
    for (TokenId t = 0; t < world.region_count(); ++t) {
        const double d = world.centroid_distance(home, t);
        weights[t] = world.region(t).population * std::pow(d + world.cell_size(), -1.5);
    }
    const TokenId work = static_cast<TokenId>(weighted_pick(weights, rng));

    AgentState state;
    state.home = home;
    state.work = work;
    state.current = home;
    state.visit_counts[home] = 1;

    TrajectorySequence seq;
    seq.user_id = user_id;
    seq.start_epoch = span.start;
    const int T = static_cast<int>((span.end - span.start) / kWindowSeconds);
    seq.tokens.reserve(T);

    int dwell_left = 0;
    for (int t = 0; t < T; ++t) {
        const Slot slot = slot_for_window(seq.window_index(t), params.schedule);
        switch (slot) {
            case Slot::Home:
                state.arrive(home);
                dwell_left = 0;
                break;
            case Slot::Work:
                state.arrive(work);
                dwell_left = 0;
                break;
            case Slot::Free:
                if (dwell_left > 0) {
                    --dwell_left;
                } else {
                    epr_next(state, params, world, rng);
                    dwell_left = rng.geometric(1.0 / params.mean_dwell_windows) - 1;
                }
                break;
        }
        seq.tokens.push_back(state.current);
    }
    return seq;
}

std::pair<TrajectorySequence, TrajectorySequence> thin_observations(
    const TrajectorySequence& seq, const RegionVocabulary& world, double target_occupancy,
    int burst_length, uint64_t seed, bool correlate_gaps) {
    if (!(target_occupancy > 0.0 && target_occupancy <= 1.0)) {
        throw std::invalid_argument("target_occupancy must be in (0,1]");
    }
    if (burst_length < 1) throw std::invalid_argument("burst_length must be >= 1");

    TrajectorySequence thinned = seq;
    if (target_occupancy >= 1.0) return {thinned, seq};

    Rng rng(seed);
    const int T = seq.length();
    const double lm = static_cast<double>(burst_length);
    const double lo = lm * target_occupancy / (1.0 - target_occupancy);

    // Alternating renewal chain: observed runs are geometric on {0,1,...}
    // with mean lo, missing bursts geometric on {1,2,...} with mean lm, so the
    // observed fraction converges to the target.
    std::vector<bool> drop(T, false);
    int pos = 0;
    while (pos < T) {
        int observed = rng.geometric(1.0 / (lo + 1.0)) - 1;  // {0,1,...}, mean lo
        int burst = rng.geometric(1.0 / lm);                 // {1,2,...}, mean lm
        int start = pos + observed;
        if (correlate_gaps) {
            // Gaps begin when the user arrives somewhere: snap the burst
            // start forward to the next token change.
            int s = start;
            while (s < T && (s == 0 || seq.tokens[s] == seq.tokens[s - 1])) ++s;
            if (s < T) start = s;
        }
        for (int i = start; i < std::min(T, start + burst); ++i) drop[i] = true;
        pos = start + burst;
    }
    for (int i = 0; i < T; ++i) {
        if (drop[i]) thinned.tokens[i] = world.missing_token();
    }
    return {thinned, seq};
}

}  // namespace pmt
