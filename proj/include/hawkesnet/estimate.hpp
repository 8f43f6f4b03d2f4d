#pragma once

#include "hawkesnet/graph.hpp"
#include "hawkesnet/simulate.hpp"
#include "hawkesnet/special.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace hawkes {

struct BinCounts {
    double delta = 0.0;
    int d = 0;
    long n = 0;               // floor(T / delta)
    Eigen::MatrixXi counts;   // n x d, row k = X^(delta)_{k+1}
    long discarded = 0;       // events in (n*delta, T]
};

BinCounts bin_counts(const EventStream& s, double delta);

// Multivariate conditional-least-squares estimator: regress each bin count on
// the p previous bin vectors plus an intercept, rescale by 1/delta. Row block
// k of H holds (h_hat_{i,j}(k*delta))_{i,j}; the last row is eta_hat.
struct CLSFit {
    double delta = 0.0;
    double support = 0.0;
    int d = 0;
    int p = 0;                // ceil(support / delta)
    Eigen::MatrixXd H;        // (d*p + 1) x d
    bool ridge_applied = false;

    double h_hat(int i, int j, int k) const {  // 1-based i, j, k
        return H((k - 1) * d + (i - 1), j - 1);
    }
    Eigen::VectorXd eta_hat() const { return H.row(d * p).transpose(); }
    // a_hat(i,j) = delta * sum_k h_hat_{i,j}(k delta)
    Eigen::MatrixXd a_hat() const;
};

struct CLSOptions {
    bool ridge_fallback = false;  // opt-in; rank deficiency otherwise throws
};

CLSFit cls_fit(const BinCounts& b, double support, const CLSOptions& opt = {});

// Full covariance estimate of the H entries (row-major vectorization),
// evaluated exactly as displayed: guard d*(d*p+1) <= 2000.
Eigen::MatrixXd covariance_naive(const BinCounts& b, const CLSFit& fit);

// Standard errors sigma_hat_{i,j} of the edge-weight estimates a_hat_{i,j},
// computed without materializing the full covariance matrix.
Eigen::MatrixXd skeleton_sigmas(const BinCounts& b, const CLSFit& fit);

struct SkeletonEstimate {
    double delta = 0.0;
    double support = 0.0;
    double alpha_skel = 0.0;
    Eigen::MatrixXd a_hat;      // d x d
    Eigen::MatrixXd sigma_hat;  // d x d
    Skeleton skeleton;          // edges with a_hat > sigma_hat * z_{1-alpha}
};

// alpha_skel in (0, 1]; alpha_skel = 1 yields the fully connected skeleton.
SkeletonEstimate estimate_skeleton(const EventStream& s, double delta_skel, double support,
                                   double alpha_skel);

struct EdgeEstimate {
    int from = 0, to = 0;
    double a_hat = 0.0;
    double sigma = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;   // a_hat -+ sigma * z_{1-alpha/2}
    bool significant = false;          // a_hat > sigma * z_{1-alpha}
    std::vector<double> h_grid;        // h_hat(k*delta), k = 1..p
};

struct VertexEstimate {
    int j = 0;
    double eta_hat = 0.0;
    double sigma = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    bool significant = false;
    bool rank_deficient = false;  // regression for this component failed; others still fit
};

struct GraphEstimate {
    int d = 0;
    double delta = 0.0;
    double support = 0.0;
    int p = 0;
    double alpha_graph = 0.0;
    double alpha_vertex = 0.0;
    double horizon = 0.0;
    Skeleton skeleton;                   // parent sets used
    std::vector<VertexEstimate> vertices;
    std::vector<EdgeEstimate> edges;
    Eigen::VectorXd lambda_emp;          // N((0,T]) / T per component
};

// Parent-restricted per-component regression with sandwich standard errors.
// Components with empty parent sets are fit intercept-only (pure Poisson).
GraphEstimate estimate_graph(const EventStream& s, const Skeleton& skel, double delta_graph,
                             double support, double alpha_graph,
                             std::optional<double> alpha_vertex = std::nullopt);

} // namespace hawkes
