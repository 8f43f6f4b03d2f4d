#pragma once

#include "hawkesnet/estimate.hpp"
#include "hawkesnet/kernelfit.hpp"
#include "hawkesnet/model.hpp"
#include "hawkesnet/simulate.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hawkes {

// Replication study: simulate -> skeleton (per delta/alpha pair) -> graph
// coverage (true skeleton plus estimated skeletons), aggregated into the
// paper-style report columns.
struct StudyConfig {
    int nsim = 50;
    double horizon = 500.0;
    double support = 5.0;
    std::vector<double> delta_skel{1.0};
    std::vector<double> alpha_skel{0.05};
    double delta_graph = 0.25;
    double alpha_graph = 0.05;
    double alpha_vertex = 0.05;
    std::uint64_t seed = 1;
    int jobs = 1;
    double burn_in = -1.0;             // negative: simulate() default
    bool coverage = true;              // graph-estimation coverage section
    bool coverage_estimated_skeletons = false;  // also rows per alpha_skel (first delta_skel)
    // edge classes by true weight: heavy a >= heavy_min, super-light a < light_min
    double heavy_min = 1.0;
    double light_min = 0.25;
};

struct SkeletonRow {
    double delta_skel = 0.0;
    double alpha_skel = 0.0;
    double nedges = 0.0;
    double total = 0.0;
    double heavy = 0.0;
    double light = 0.0;
    double super_light = 0.0;
    double zero = 0.0;
};

struct CoverageRow {
    std::string applied_skeleton;
    double vertex_weight_coverage = 0.0;
    double edge_weight_coverage = 0.0;
};

struct StudyReport {
    int nsim = 0;
    int failures = 0;
    std::vector<SkeletonRow> skeleton_rows;
    std::vector<CoverageRow> coverage_rows;

    std::string to_csv() const;
};

StudyReport run_study(const HawkesModel& model, const StudyConfig& cfg);

} // namespace hawkes
