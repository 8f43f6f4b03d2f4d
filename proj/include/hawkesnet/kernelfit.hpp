#pragma once

#include "hawkesnet/estimate.hpp"
#include "hawkesnet/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hawkes {

enum class KernelFamily { gamma, uniform, exp, grid };

std::string family_name(KernelFamily f);
KernelFamily family_from_name(const std::string& name);

struct KernelFit {
    EdgeKey edge{0, 0};
    KernelFamily family = KernelFamily::gamma;
    double a_hat = 0.0;
    std::vector<double> theta;  // gamma: {shape, rate}; uniform: {lo, hi}; exp: {rate}; grid: values
    double sse = 0.0;
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;
};

struct FitOptions {
    std::optional<std::vector<double>> init;     // theta start; single start when present
    std::optional<std::vector<double>> weights;  // per-point weights for weighted least squares
    int max_iterations = 200;
    std::vector<double>* objective_trace = nullptr;  // accepted objective values, best start
};

// Nonlinear least squares of a * w_theta(k*delta) against the grid estimates.
// Gamma and exponential families run damped Gauss-Newton on log-transformed
// parameters with a moment-matching start plus four perturbed starts; the
// uniform window is minimized exactly over contiguous grid supports (the
// objective is piecewise constant in (lo, hi)). NoConvergence is a status,
// never an exception: the best iterate is always returned.
KernelFit fit_kernel(const std::vector<double>& grid, double delta, KernelFamily family,
                     const FitOptions& options = {});

KernelSpec to_kernel_spec(const KernelFit& fit);

struct FamilySuggestion {
    KernelFamily family;
    KernelFit fit;
    double score;  // small-sample-corrected; lower is better
};

struct SuggestResult {
    std::vector<FamilySuggestion> ranked;
    bool low_signal = false;
};

SuggestResult suggest_family(const std::vector<double>& grid, double delta);

// Squared-error objective and its gradient in (log a, log theta...) space for
// the smooth families; the analytic gradient is cross-checked against finite
// differences in the tests.
double fit_objective(const std::vector<double>& grid, double delta, KernelFamily family, double a,
                     const std::vector<double>& theta);
std::vector<double> fit_objective_gradient(const std::vector<double>& grid, double delta,
                                           KernelFamily family, double a,
                                           const std::vector<double>& theta);

struct ParametricModel {
    // absent only in the degenerate case where every immigration intensity
    // clamps to zero (a model violating the eta != 0 invariant)
    std::optional<HawkesModel> model;
    Eigen::VectorXd lambda_emp;
    Eigen::VectorXd eta_par;            // unclamped values stay visible here
    bool clamped = false;
    std::vector<int> clamped_components;
    bool supercritical = false;         // flagged, not thrown
    double rho = 0.0;
};

// eta_par = lambda_emp (I - A_par), negative entries clamped to zero with a
// warning flag; requires a fit for every significant edge of the estimate.
ParametricModel assemble_parametric(const GraphEstimate& graph_est,
                                    const std::vector<KernelFit>& fits, const EventStream& stream);
ParametricModel assemble_parametric(const GraphEstimate& graph_est,
                                    const std::vector<KernelFit>& fits);

} // namespace hawkes
