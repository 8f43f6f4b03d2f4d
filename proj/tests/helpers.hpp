#pragma once

#include "hawkesnet/estimate.hpp"
#include "hawkesnet/model.hpp"
#include "hawkesnet/rng.hpp"
#include "hawkesnet/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace testutil {

// Independent spectral-radius oracle via Neumann-series convergence: (A/s)^g
// vanishes under repeated squaring iff s > rho. Bisection on s is immune to
// the defective/periodic spectra that break naive power iteration (branching
// matrices of chained equal-weight cycles have Jordan blocks at the Perron
// root).
inline double power_iteration_radius(const Eigen::MatrixXd& A, int /*restarts*/ = 5) {
    const auto d = A.rows();
    if (d == 0 || A.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    auto vanishes = [&](double s) {
        Eigen::MatrixXd B = A / s;
        for (int k = 0; k < 70; ++k) {
            B = B * B;
            double m = B.cwiseAbs().maxCoeff();
            if (!std::isfinite(m) || m > 1e100) return false;
            if (m < 1e-100) return true;
        }
        return B.cwiseAbs().maxCoeff() < 1.0;
    };
    double hi = A.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;  // > rho
    double lo = 0.0;
    for (int it = 0; it < 120 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        (vanishes(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// Kolmogorov-Smirnov test against Exp(rate): returns the p-value from the
// asymptotic Kolmogorov distribution.
inline double ks_exponential_pvalue(std::vector<double> xs, double rate) {
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double cdf = 1.0 - std::exp(-rate * xs[i]);
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        dmax = std::max({dmax, std::fabs(cdf - lo), std::fabs(cdf - hi)});
    }
    double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * dmax;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    }
    return std::clamp(p, 0.0, 1.0);
}

// Deterministic random bin counts for small estimator instances.
inline hawkes::BinCounts random_bins(int d, long n, hawkes::Rng& rng, double mean = 2.0) {
    hawkes::BinCounts b;
    b.delta = 0.5;
    b.d = d;
    b.n = n;
    b.counts.resize(n, d);
    for (long k = 0; k < n; ++k) {
        for (int j = 0; j < d; ++j) b.counts(k, j) = static_cast<int>(rng.poisson(mean));
    }
    return b;
}

// Naive extraction of sigma_hat_{i,j} from the full covariance matrix via the
// selector rows (1s at (k-1)d^2 + (i-1)d + (j-1), 0-based).
inline Eigen::MatrixXd sigmas_from_naive(const Eigen::MatrixXd& S2, int d, int p, double delta) {
    Eigen::MatrixXd sigma(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd sel = Eigen::VectorXd::Zero(S2.rows());
            for (int k = 0; k < p; ++k) sel(k * d * d + i * d + j) = 1.0;
            sigma(i, j) = delta * std::sqrt(sel.dot(S2 * sel));
        }
    }
    return sigma;
}

inline hawkes::HawkesModel univariate_model(double eta, double a, hawkes::KernelSpec w) {
    std::map<hawkes::EdgeKey, hawkes::ReproductionKernel> kernels;
    if (a > 0.0) kernels[{1, 1}] = hawkes::ReproductionKernel{a, std::move(w)};
    return hawkes::HawkesModel(1, {eta}, std::move(kernels));
}

} // namespace testutil
