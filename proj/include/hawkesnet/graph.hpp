#pragma once

#include "hawkesnet/model.hpp"

#include <Eigen/Dense>

#include <map>
#include <set>
#include <vector>

namespace hawkes {

inline constexpr double kSubcriticalTol = 1e-9;

struct Skeleton {
    int d = 0;
    std::set<EdgeKey> edges;   // 1-based, self-loops permitted
};

// Hawkes graph: vertex weights eta_j, edge weights a_{i,j} > 0.
struct WeightedGraph {
    int d = 0;
    std::vector<double> vertex_weights;
    std::map<EdgeKey, double> edge_weights;
};

WeightedGraph graph_of(const HawkesModel& m);
Skeleton skeleton_of(const WeightedGraph& g);
Eigen::MatrixXd adjacency_matrix(const WeightedGraph& g);

std::set<int> parents(const Skeleton& g, int j);
std::set<int> parents(const WeightedGraph& g, int j);

// i is an ancestor of j iff a walk of length >= 1 leads from i to j.
std::set<int> ancestors(const Skeleton& g, int j);
std::set<int> ancestors(const WeightedGraph& g, int j);

struct Connectivity {
    std::vector<std::vector<int>> weak_components;  // sorted vertices, sorted by minimum
    bool strongly_connected = false;                // every vertex strongly connected to itself
    bool fully_connected = false;                   // all d^2 ordered pairs present
};

Connectivity classify_connectivity(const Skeleton& g);
Connectivity classify_connectivity(const WeightedGraph& g);

struct VertexClasses {
    std::set<int> sources;     // PA(i) \ {i} empty
    std::set<int> sinks;       // out-neighbours \ {i} empty
    std::set<int> redundant;   // eta_j = 0 and eta_i = 0 for every ancestor i
};

VertexClasses sources_sinks_redundant(const WeightedGraph& g);

// Largest eigenvalue modulus of a square nonnegative matrix.
double spectral_radius(const Eigen::MatrixXd& A);

bool is_subcritical(const WeightedGraph& g);
bool is_subcritical(const HawkesModel& m);

struct Walk {
    std::vector<int> vertices;  // (k_0, ..., k_g)
    double weight = 1.0;        // product of edge weights; 1 for g = 0
};

// All walks from i to j of length 0..max_len. Throws
// EnumerationBudgetExceeded once more than `budget` walks are produced.
std::vector<Walk> enumerate_walks(const WeightedGraph& g, int i, int j, int max_len,
                                  std::size_t budget = 10'000'000);

// E = (I - A)^{-1}, the expected-offspring matrix. Requires subcriticality;
// solved column-wise with a residual check, never by explicit inversion.
Eigen::MatrixXd offspring_matrix(const Eigen::MatrixXd& A);

struct CascadeFeedback {
    Eigen::VectorXd cascade;              // sums to 1
    Eigen::VectorXd feedback;             // in [0,1]; 0 where undefined
    std::vector<int> undefined_feedback;  // vertices with zero stationary intensity
};

CascadeFeedback cascade_feedback(const WeightedGraph& g);

struct GraphAnalytics {
    double spectral_radius = 0.0;
    bool subcritical = false;
    Eigen::MatrixXd offspring;            // empty unless subcritical
    Eigen::VectorXd cascade;              // empty unless subcritical and sum(eta) > 0
    Eigen::VectorXd feedback;
    std::vector<int> undefined_feedback;
    std::vector<std::vector<int>> weak_components;
    bool strongly_connected = false;
    bool fully_connected = false;
    std::set<int> sources, sinks, redundant;
};

GraphAnalytics analyze(const WeightedGraph& g);

} // namespace hawkes
