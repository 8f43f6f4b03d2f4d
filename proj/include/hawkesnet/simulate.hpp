#pragma once

#include "hawkesnet/model.hpp"
#include "hawkesnet/rng.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace hawkes {

struct Event {
    double time;
    int component;  // 1-based
};

struct EventStream {
    int d = 0;
    double horizon = 0.0;
    std::vector<Event> events;  // sorted by (time, component)

    void validate() const;  // throws InvalidConfig on violated invariants
};

struct SimConfig {
    double horizon = 0.0;
    double burn_in = -1.0;  // negative requests the default (20 x largest 99.9% kernel quantile)
    std::uint64_t seed = 0;
    long generation_cap = 1'000'000;
    long long family_event_cap = 10'000'000;
};

struct TruncationCounters {
    long generation_capped = 0;   // families cut at generation_cap
    long event_capped = 0;        // families cut at family_event_cap

    long total() const noexcept { return generation_capped + event_capped; }
};

double default_burn_in(const HawkesModel& m);

// Root event plus all descendants by the branching construction: each type-i
// event spawns Poisson(a_{i,j}) type-j children displaced by w_{i,j} draws.
// Descendants beyond time_cap are pruned (displacements are nonnegative, so
// nothing after time_cap can produce events before it). Hitting a cap is
// recorded, not thrown.
std::vector<Event> simulate_family(const HawkesModel& m, int root_type, double root_time,
                                   const SimConfig& cfg, Rng& rng,
                                   TruncationCounters* truncation = nullptr,
                                   double time_cap = std::numeric_limits<double>::infinity());

struct SimResult {
    EventStream stream;
    TruncationCounters truncation;
    double burn_in_used = 0.0;
    long immigrants = 0;
};

// Immigrants of type i arrive as a Poisson process with rate eta_i on
// (-burn_in, T]; each seeds an independent family; events in (0, T] are kept.
// Deterministic given (m, cfg): every family draws from a substream keyed by
// (seed, component, immigrant index), so simulation order cannot matter.
SimResult simulate(const HawkesModel& m, const SimConfig& cfg);

} // namespace hawkes
