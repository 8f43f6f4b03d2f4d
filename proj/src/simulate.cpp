#include "hawkesnet/simulate.hpp"

#include "hawkesnet/errors.hpp"
#include "hawkesnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace hawkes {

namespace {
constexpr std::uint64_t kTagImmigrants = 0x494d4d;  // per-component immigrant clocks
constexpr std::uint64_t kTagFamily = 0x46414d;      // per-family offspring cascades
} // namespace

void EventStream::validate() const {
    if (d < 1) throw InvalidConfig("stream: d must be positive");
    if (!(horizon > 0.0)) throw InvalidConfig("stream: horizon must be positive");
    const Event* prev = nullptr;
    for (const auto& e : events) {
        if (!(e.time > 0.0) || e.time > horizon)
            throw InvalidConfig("stream: event time outside (0, T]");
        if (e.component < 1 || e.component > d)
            throw InvalidConfig("stream: component outside [d]");
        if (prev && (e.time < prev->time ||
                     (e.time == prev->time && e.component < prev->component)))
            throw InvalidConfig("stream: events not sorted by (time, component)");
        prev = &e;
    }
}

double default_burn_in(const HawkesModel& m) {
    double support = 0.0;
    for (const auto& [key, rk] : m.kernels()) {
        support = std::max(support, kernel_quantile(rk.w, 0.999));
    }
    return 20.0 * support;
}

std::vector<Event> simulate_family(const HawkesModel& m, int root_type, double root_time,
                                   const SimConfig& cfg, Rng& rng,
                                   TruncationCounters* truncation, double time_cap) {
    if (root_type < 1 || root_type > m.dim())
        throw InvalidConfig("simulate_family: root type outside [d]");
    if (cfg.generation_cap < 1 || cfg.family_event_cap < 1)
        throw InvalidConfig("simulate_family: caps must be >= 1");

    std::vector<Event> events{{root_time, root_type}};
    if (root_time > time_cap) return events;

    struct Pending {
        double time;
        int type;
        long generation;
    };
    std::deque<Pending> queue{{root_time, root_type, 0}};
    long long count = 1;

    while (!queue.empty()) {
        Pending parent = queue.front();
        queue.pop_front();
        if (parent.generation == cfg.generation_cap) {
            if (truncation) ++truncation->generation_capped;
            break;
        }
        // map iteration order is fixed, so draws are reproducible
        for (const auto& [key, rk] : m.kernels()) {
            if (key.first != parent.type) continue;
            long n_children = rng.poisson(rk.a);
            for (long c = 0; c < n_children; ++c) {
                double t = parent.time + kernel_sample(rk.w, rng);
                if (t > time_cap) continue;
                if (count == cfg.family_event_cap) {
                    if (truncation) ++truncation->event_capped;
                    return events;
                }
                ++count;
                events.push_back({t, key.second});
                queue.push_back({t, key.second, parent.generation + 1});
            }
        }
    }
    return events;
}

SimResult simulate(const HawkesModel& m, const SimConfig& cfg) {
    if (!(cfg.horizon > 0.0)) throw InvalidConfig("simulate: horizon must be positive");
    double rho = spectral_radius(branching_matrix(m));
    if (rho >= 1.0 - kSubcriticalTol) throw NotSubcritical(rho);

    SimResult result;
    result.burn_in_used = cfg.burn_in >= 0.0 ? cfg.burn_in : default_burn_in(m);
    const double T = cfg.horizon;

    Rng master(cfg.seed);
    std::vector<Event> all;
    for (int i0 = 1; i0 <= m.dim(); ++i0) {
        double eta = m.eta()[static_cast<std::size_t>(i0 - 1)];
        if (eta <= 0.0) continue;
        Rng clock = master.substream(kTagImmigrants, static_cast<std::uint64_t>(i0));
        double t = -result.burn_in_used;
        for (std::uint64_t index = 0;; ++index) {
            t += clock.exponential(eta);
            if (t > T) break;
            ++result.immigrants;
            Rng family_rng =
                master.substream(kTagFamily, static_cast<std::uint64_t>(i0), index);
            auto family = simulate_family(m, i0, t, cfg, family_rng, &result.truncation, T);
            for (const auto& e : family) {
                if (e.time > 0.0 && e.time <= T) all.push_back(e);
            }
        }
    }

    std::stable_sort(all.begin(), all.end(), [](const Event& a, const Event& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.component < b.component;
    });

    result.stream.d = m.dim();
    result.stream.horizon = T;
    result.stream.events = std::move(all);
    return result;
}

} // namespace hawkes
