#pragma once

#include "hawkesnet/rng.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hawkes {

// Displacement-density families. Each evaluates to a probability density on
// t >= 0 (integral 1); the branching coefficient a scales it into a
// reproduction intensity h = a*w.
struct GammaDensity {
    double shape;
    double rate;
};

struct UniformWindow {
    double lo;
    double hi;
};

struct ExponentialDecay {
    double rate;
};

// Piecewise-constant density: values[k-1] on ((k-1)*delta, k*delta].
struct GridKernel {
    double delta;
    std::vector<double> values;
};

using KernelSpec = std::variant<GammaDensity, UniformWindow, ExponentialDecay, GridKernel>;

// Throws InvalidConfig if parameters violate the family constraints or the
// density does not integrate to 1 within 1e-9 (grid kernels).
void validate_kernel(const KernelSpec& w);

double kernel_eval(const KernelSpec& w, double t);
double kernel_sample(const KernelSpec& w, Rng& rng);
// Smallest t with CDF(t) >= q.
double kernel_quantile(const KernelSpec& w, double q);
std::string kernel_family_name(const KernelSpec& w);

struct ReproductionKernel {
    double a = 0.0;   // branching coefficient, strictly positive when stored
    KernelSpec w;
};

using EdgeKey = std::pair<int, int>;  // (from, to), 1-based components

// Generative specification: immigration intensities eta_j plus a sparse map
// of reproduction kernels a_{i,j} * w_{i,j}. Immutable after construction.
class HawkesModel {
public:
    HawkesModel(int d, std::vector<double> eta, std::map<EdgeKey, ReproductionKernel> kernels);

    int dim() const noexcept { return d_; }
    const std::vector<double>& eta() const noexcept { return eta_; }
    const std::map<EdgeKey, ReproductionKernel>& kernels() const noexcept { return kernels_; }
    const ReproductionKernel* kernel(int from, int to) const;

private:
    int d_;
    std::vector<double> eta_;
    std::map<EdgeKey, ReproductionKernel> kernels_;
};

using BranchingMatrix = Eigen::MatrixXd;  // entry (i,j) = a_{i,j}, row = source type

BranchingMatrix branching_matrix(const HawkesModel& m);

// lambda = eta (I - A)^{-1}; requires spectral radius of A below 1 - 1e-9.
Eigen::VectorXd stationary_intensity(const HawkesModel& m);

// The reference 10-type model used throughout the tests and the study:
// three Gamma(6,4) edges with weight 1.5, nine uniform-window edges with
// weight 0.5, one with weight 0.1, immigration 1 at components 1, 7, 10.
HawkesModel example10_model();

} // namespace hawkes
