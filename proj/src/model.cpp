#include "hawkesnet/model.hpp"

#include "hawkesnet/errors.hpp"
#include "hawkesnet/graph.hpp"
#include "hawkesnet/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hawkes {

void validate_kernel(const KernelSpec& w) {
    std::visit(
        [](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GammaDensity>) {
                if (!(k.shape > 0.0) || !std::isfinite(k.shape))
                    throw InvalidConfig("gamma kernel: shape must be positive");
                if (!(k.rate > 0.0) || !std::isfinite(k.rate))
                    throw InvalidConfig("gamma kernel: rate must be positive");
            } else if constexpr (std::is_same_v<T, UniformWindow>) {
                if (!(k.lo >= 0.0) || !std::isfinite(k.lo))
                    throw InvalidConfig("uniform kernel: lo must be >= 0");
                if (!(k.hi > k.lo) || !std::isfinite(k.hi))
                    throw InvalidConfig("uniform kernel: hi must exceed lo");
            } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
                if (!(k.rate > 0.0) || !std::isfinite(k.rate))
                    throw InvalidConfig("exponential kernel: rate must be positive");
            } else {
                if (!(k.delta > 0.0) || !std::isfinite(k.delta))
                    throw InvalidConfig("grid kernel: delta must be positive");
                if (k.values.empty()) throw InvalidConfig("grid kernel: values must be nonempty");
                double mass = 0.0;
                for (double v : k.values) {
                    if (!(v >= 0.0) || !std::isfinite(v))
                        throw InvalidConfig("grid kernel: values must be nonnegative");
                    mass += v;
                }
                if (std::fabs(k.delta * mass - 1.0) > 1e-9)
                    throw InvalidConfig("grid kernel: delta * sum(values) must equal 1");
            }
        },
        w);
}

double kernel_eval(const KernelSpec& w, double t) {
    return std::visit(
        [t](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GammaDensity>) {
                if (t <= 0.0) return (t == 0.0 && k.shape == 1.0) ? k.rate : 0.0;
                return std::exp(k.shape * std::log(k.rate) + (k.shape - 1.0) * std::log(t) -
                                k.rate * t - std::lgamma(k.shape));
            } else if constexpr (std::is_same_v<T, UniformWindow>) {
                return (t >= k.lo && t <= k.hi) ? 1.0 / (k.hi - k.lo) : 0.0;
            } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
                return (t >= 0.0) ? k.rate * std::exp(-k.rate * t) : 0.0;
            } else {
                if (t <= 0.0) return 0.0;
                // bin k covers ((k-1)delta, k delta]; values within 1e-12*delta
                // of a boundary snap downward
                double q = t / k.delta;
                auto bin = static_cast<long>(std::ceil(q - 1e-12));
                if (bin < 1 || bin > static_cast<long>(k.values.size())) return 0.0;
                return k.values[static_cast<std::size_t>(bin - 1)];
            }
        },
        w);
}

double kernel_sample(const KernelSpec& w, Rng& rng) {
    return std::visit(
        [&rng](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GammaDensity>) {
                return rng.gamma(k.shape, k.rate);
            } else if constexpr (std::is_same_v<T, UniformWindow>) {
                return k.lo + rng.uniform() * (k.hi - k.lo);
            } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
                return rng.exponential(k.rate);
            } else {
                std::size_t bin = rng.categorical(k.values);
                return (static_cast<double>(bin) + rng.uniform()) * k.delta;
            }
        },
        w);
}

double kernel_quantile(const KernelSpec& w, double q) {
    if (!(q >= 0.0 && q < 1.0)) throw OutOfRange("kernel_quantile: q must lie in [0,1)");
    return std::visit(
        [q](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GammaDensity>) {
                // bisection on the regularized incomplete gamma CDF
                double hi = (k.shape + 10.0 * std::sqrt(k.shape) + 10.0) / k.rate;
                while (gamma_p(k.shape, k.rate * hi) < q) hi *= 2.0;
                double lo = 0.0;
                for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
                    double mid = 0.5 * (lo + hi);
                    (gamma_p(k.shape, k.rate * mid) < q ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            } else if constexpr (std::is_same_v<T, UniformWindow>) {
                return k.lo + q * (k.hi - k.lo);
            } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
                return -std::log1p(-q) / k.rate;
            } else {
                double target = q / k.delta;  // cumulative density height
                double cum = 0.0;
                for (std::size_t i = 0; i < k.values.size(); ++i) {
                    double next = cum + k.values[i];
                    if (next >= target && k.values[i] > 0.0) {
                        return (static_cast<double>(i) + (target - cum) / k.values[i]) * k.delta;
                    }
                    cum = next;
                }
                return k.delta * static_cast<double>(k.values.size());
            }
        },
        w);
}

std::string kernel_family_name(const KernelSpec& w) {
    return std::visit(
        [](const auto& k) -> std::string {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GammaDensity>) return "gamma";
            else if constexpr (std::is_same_v<T, UniformWindow>) return "uniform";
            else if constexpr (std::is_same_v<T, ExponentialDecay>) return "exp";
            else return "grid";
        },
        w);
}

HawkesModel::HawkesModel(int d, std::vector<double> eta, std::map<EdgeKey, ReproductionKernel> kernels)
    : d_(d), eta_(std::move(eta)), kernels_(std::move(kernels)) {
    if (d_ < 1) throw InvalidConfig("model: d must be positive");
    if (static_cast<int>(eta_.size()) != d_)
        throw InvalidConfig("model: eta must have length d");
    bool any_positive = false;
    for (double e : eta_) {
        if (!(e >= 0.0) || !std::isfinite(e))
            throw InvalidConfig("model: immigration intensities must be finite and nonnegative");
        any_positive = any_positive || e > 0.0;
    }
    if (!any_positive) throw AllImmigrationZero();
    for (const auto& [key, rk] : kernels_) {
        if (key.first < 1 || key.first > d_ || key.second < 1 || key.second > d_)
            throw InvalidConfig("model: kernel pair outside [d]^2");
        if (!(rk.a > 0.0) || !std::isfinite(rk.a))
            throw InvalidConfig("model: stored branching coefficients must be strictly positive");
        validate_kernel(rk.w);
    }
}

const ReproductionKernel* HawkesModel::kernel(int from, int to) const {
    auto it = kernels_.find({from, to});
    return it == kernels_.end() ? nullptr : &it->second;
}

BranchingMatrix branching_matrix(const HawkesModel& m) {
    BranchingMatrix A = BranchingMatrix::Zero(m.dim(), m.dim());
    for (const auto& [key, rk] : m.kernels()) {
        A(key.first - 1, key.second - 1) = rk.a;
    }
    return A;
}

Eigen::VectorXd stationary_intensity(const HawkesModel& m) {
    BranchingMatrix A = branching_matrix(m);
    double rho = spectral_radius(A);
    if (rho >= 1.0 - kSubcriticalTol) throw NotSubcritical(rho);
    const int d = m.dim();
    Eigen::VectorXd eta(d);
    for (int j = 0; j < d; ++j) eta(j) = m.eta()[static_cast<std::size_t>(j)];
    // lambda (I - A) = eta  <=>  (I - A)^T lambda^T = eta^T
    Eigen::MatrixXd M = (Eigen::MatrixXd::Identity(d, d) - A).transpose();
    return M.partialPivLu().solve(eta);
}

HawkesModel example10_model() {
    std::map<EdgeKey, ReproductionKernel> kernels;
    const KernelSpec gamma64 = GammaDensity{6.0, 4.0};
    const KernelSpec window12 = UniformWindow{1.0, 2.0};
    for (EdgeKey e : {EdgeKey{1, 2}, EdgeKey{4, 6}, EdgeKey{8, 9}}) {
        kernels[e] = ReproductionKernel{1.5, gamma64};
    }
    for (EdgeKey e : {EdgeKey{1, 1}, EdgeKey{2, 3}, EdgeKey{2, 4}, EdgeKey{3, 5}, EdgeKey{4, 5},
                      EdgeKey{5, 3}, EdgeKey{6, 2}, EdgeKey{7, 8}, EdgeKey{9, 7}}) {
        kernels[e] = ReproductionKernel{0.5, window12};
    }
    kernels[{5, 7}] = ReproductionKernel{0.1, window12};
    std::vector<double> eta(10, 0.0);
    eta[0] = eta[6] = eta[9] = 1.0;
    return HawkesModel(10, std::move(eta), std::move(kernels));
}

} // namespace hawkes
