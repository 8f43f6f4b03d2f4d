#include "hawkesnet/kernelfit.hpp"

#include "hawkesnet/errors.hpp"
#include "hawkesnet/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hawkes {

std::string family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::gamma: return "gamma";
        case KernelFamily::uniform: return "uniform";
        case KernelFamily::exp: return "exp";
        case KernelFamily::grid: return "grid";
    }
    return "?";
}

KernelFamily family_from_name(const std::string& name) {
    if (name == "gamma") return KernelFamily::gamma;
    if (name == "uniform") return KernelFamily::uniform;
    if (name == "exp") return KernelFamily::exp;
    if (name == "grid") return KernelFamily::grid;
    throw InvalidConfig("unknown kernel family '" + name + "'");
}

namespace {

struct Problem {
    const std::vector<double>& h;
    std::vector<double> t;       // grid abscissae k*delta
    std::vector<double> sqrt_w;  // least-squares weights (1 when unweighted)
};

// density value and its partials w.r.t. the log-parameters
struct Eval {
    double w;
    double d_dlog1;  // gamma: shape; exp: rate
    double d_dlog2;  // gamma: rate
};

Eval eval_gamma(double shape, double rate, double t) {
    if (t <= 0.0) return {0.0, 0.0, 0.0};
    double w = std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(t) - rate * t -
                        std::lgamma(shape));
    double dshape = w * (std::log(rate) + std::log(t) - digamma(shape));
    double drate = w * (shape / rate - t);
    return {w, shape * dshape, rate * drate};
}

Eval eval_exp(double rate, double t) {
    if (t < 0.0) return {0.0, 0.0, 0.0};
    double w = rate * std::exp(-rate * t);
    return {w, rate * (w / rate - t * w), 0.0};
}

double objective(const Problem& pr, KernelFamily fam, double a, const double* theta) {
    double sse = 0.0;
    for (std::size_t k = 0; k < pr.h.size(); ++k) {
        double w = fam == KernelFamily::gamma ? eval_gamma(theta[0], theta[1], pr.t[k]).w
                                              : eval_exp(theta[0], pr.t[k]).w;
        double r = pr.sqrt_w[k] * (a * w - pr.h[k]);
        sse += r * r;
    }
    return sse;
}

// Levenberg-Marquardt over u = (log a, log theta...). Accepted objective
// values are nonincreasing by construction.
KernelFit lm_fit(const Problem& pr, KernelFamily fam, double a0, std::vector<double> theta0,
                 int max_iterations, std::vector<double>* trace = nullptr) {
    const int ntheta = fam == KernelFamily::gamma ? 2 : 1;
    const int n = ntheta + 1;
    const auto npts = static_cast<long>(pr.h.size());

    Eigen::VectorXd u(n);
    u(0) = std::log(std::max(a0, 1e-12));
    for (int i = 0; i < ntheta; ++i) u(i + 1) = std::log(theta0[static_cast<std::size_t>(i)]);

    auto residuals = [&](const Eigen::VectorXd& uu, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        double a = std::exp(uu(0));
        double t1 = std::exp(uu(1));
        double t2 = ntheta > 1 ? std::exp(uu(2)) : 0.0;
        for (long k = 0; k < npts; ++k) {
            Eval e = fam == KernelFamily::gamma
                         ? eval_gamma(t1, t2, pr.t[static_cast<std::size_t>(k)])
                         : eval_exp(t1, pr.t[static_cast<std::size_t>(k)]);
            double sw = pr.sqrt_w[static_cast<std::size_t>(k)];
            r(k) = sw * (a * e.w - pr.h[static_cast<std::size_t>(k)]);
            if (J) {
                (*J)(k, 0) = sw * a * e.w;  // d/d(log a)
                (*J)(k, 1) = sw * a * e.d_dlog1;
                if (ntheta > 1) (*J)(k, 2) = sw * a * e.d_dlog2;
            }
        }
    };

    Eigen::VectorXd r(npts);
    Eigen::MatrixXd J(npts, n);
    residuals(u, r, &J);
    double sse = r.squaredNorm();
    if (trace) trace->push_back(sse);

    double mu = 1e-3;
    KernelFit fit;
    fit.family = fam;
    fit.iterations = 0;
    double grad_norm = (2.0 * J.transpose() * r).norm();

    for (int it = 0; it < max_iterations; ++it) {
        grad_norm = (2.0 * J.transpose() * r).norm();
        if (grad_norm < 1e-6 * (1.0 + sse)) {
            fit.converged = true;
            break;
        }
        Eigen::MatrixXd JtJ = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * r;
        Eigen::MatrixXd damped = JtJ;
        for (int i = 0; i < n; ++i) damped(i, i) += mu * std::max(JtJ(i, i), 1e-12);
        Eigen::VectorXd step = damped.ldlt().solve(-g);
        Eigen::VectorXd u_try = u + step;
        // keep exp() in range
        bool sane = u_try.allFinite() && u_try.maxCoeff() < 50.0 && u_try.minCoeff() > -50.0;
        double sse_try = std::numeric_limits<double>::infinity();
        if (sane) {
            residuals(u_try, r, nullptr);
            sse_try = r.squaredNorm();
        }
        ++fit.iterations;
        if (sse_try < sse) {
            u = u_try;
            sse = sse_try;
            if (trace) trace->push_back(sse);
            mu = std::max(mu * 0.3, 1e-12);
            residuals(u, r, &J);
        } else {
            mu *= 4.0;
            residuals(u, r, nullptr);  // restore r for current u
            if (mu > 1e12) break;
        }
    }

    fit.a_hat = std::exp(u(0));
    fit.theta.resize(static_cast<std::size_t>(ntheta));
    for (int i = 0; i < ntheta; ++i) fit.theta[static_cast<std::size_t>(i)] = std::exp(u(i + 1));
    fit.sse = sse;
    fit.grad_norm = grad_norm;
    return fit;
}

// Fraction of the fitted density's mass that the grid actually sees. Fits
// whose mass escapes between or beyond the grid points (degenerate spikes on
// a noise grid) explain nothing and are discarded in the start selection.
double grid_mass_coverage(const Problem& pr, KernelFamily fam, const KernelFit& fit) {
    double delta = pr.t.size() > 1 ? pr.t[1] - pr.t[0] : pr.t[0];
    double mass = 0.0;
    for (double t : pr.t) {
        mass += delta * (fam == KernelFamily::gamma
                             ? eval_gamma(fit.theta[0], fit.theta[1], t).w
                             : eval_exp(fit.theta[0], t).w);
    }
    return mass;
}

// moment-matching start from the positive part of the grid
void moment_start(const Problem& pr, double& mass, double& mean, double& var) {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    double delta = pr.t.size() > 1 ? pr.t[1] - pr.t[0] : pr.t[0];
    for (std::size_t k = 0; k < pr.h.size(); ++k) {
        double w = std::max(pr.h[k], 0.0) * delta;
        m0 += w;
        m1 += w * pr.t[k];
        m2 += w * pr.t[k] * pr.t[k];
    }
    mass = m0;
    mean = m0 > 0.0 ? m1 / m0 : pr.t[pr.t.size() / 2];
    var = m0 > 0.0 ? std::max(m2 / m0 - mean * mean, 1e-6) : 1.0;
}

KernelFit fit_uniform_window(const Problem& pr, double delta) {
    const auto p = pr.h.size();
    // prefix sums of h and h^2 over the (weighted) grid
    std::vector<double> s1(p + 1, 0.0), s2(p + 1, 0.0), sw(p + 1, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
        double wgt = pr.sqrt_w[k] * pr.sqrt_w[k];
        s1[k + 1] = s1[k] + wgt * pr.h[k];
        s2[k + 1] = s2[k] + wgt * pr.h[k] * pr.h[k];
        sw[k + 1] = sw[k] + wgt;
    }
    const double total_sq = s2[p];

    KernelFit best;
    best.family = KernelFamily::uniform;
    best.a_hat = 0.0;
    best.theta = {delta, 2.0 * delta};
    best.sse = total_sq;  // a = 0 candidate
    best.converged = true;

    int scanned = 0;
    // support runs {k1..k2} correspond to the canonical window [k1*delta, k2*delta]
    for (std::size_t k1 = 1; k1 < p; ++k1) {
        for (std::size_t k2 = k1 + 1; k2 <= p; ++k2) {
            ++scanned;
            double wsum = sw[k2] - sw[k1 - 1];
            if (wsum <= 0.0) continue;
            double c = (s1[k2] - s1[k1 - 1]) / wsum;  // optimal height
            if (c < 0.0) c = 0.0;
            double run_sq = s2[k2] - s2[k1 - 1];
            double run_s1 = s1[k2] - s1[k1 - 1];
            double sse = (total_sq - run_sq) + run_sq - 2.0 * c * run_s1 + c * c * wsum;
            if (sse < best.sse - 1e-15 * (1.0 + total_sq)) {
                best.sse = sse;
                double lo = static_cast<double>(k1) * delta;
                double hi = static_cast<double>(k2) * delta;
                best.theta = {lo, hi};
                best.a_hat = c * (hi - lo);
            }
        }
    }
    best.iterations = scanned;
    return best;
}

KernelFit fit_grid(const std::vector<double>& h, double delta) {
    KernelFit fit;
    fit.family = KernelFamily::grid;
    fit.converged = true;
    double mass = 0.0;
    for (double v : h) mass += std::max(v, 0.0) * delta;
    fit.a_hat = mass;
    fit.theta.resize(h.size());
    double sse = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (mass > 0.0 && h[k] > 0.0) {
            fit.theta[k] = h[k] / mass;
        } else {
            fit.theta[k] = 0.0;
            sse += h[k] * h[k];
        }
    }
    fit.sse = sse;
    return fit;
}

} // namespace

KernelFit fit_kernel(const std::vector<double>& grid, double delta, KernelFamily family,
                     const FitOptions& options) {
    const int dim_theta = family == KernelFamily::gamma ? 2
                          : family == KernelFamily::uniform ? 2
                          : family == KernelFamily::exp ? 1
                                                        : 0;
    if (static_cast<long>(grid.size()) < dim_theta + 3)
        throw TooFewPoints("fit_kernel: need at least " + std::to_string(dim_theta + 3) +
                           " grid points");
    if (!(delta > 0.0)) throw InvalidDelta("fit_kernel: delta must be positive");

    Problem pr{grid, {}, {}};
    pr.t.resize(grid.size());
    pr.sqrt_w.assign(grid.size(), 1.0);
    for (std::size_t k = 0; k < grid.size(); ++k) pr.t[k] = static_cast<double>(k + 1) * delta;
    if (options.weights) {
        if (options.weights->size() != grid.size())
            throw InvalidConfig("fit_kernel: weight length mismatch");
        for (std::size_t k = 0; k < grid.size(); ++k)
            pr.sqrt_w[k] = std::sqrt(std::max((*options.weights)[k], 0.0));
    }

    if (family == KernelFamily::grid) {
        auto fit = fit_grid(grid, delta);
        fit.edge = {0, 0};
        return fit;
    }
    if (family == KernelFamily::uniform) return fit_uniform_window(pr, delta);

    // zero grid: the boundary minimizer is exact
    double mass, mean, var;
    moment_start(pr, mass, mean, var);
    bool any_positive = std::any_of(grid.begin(), grid.end(), [](double v) { return v > 0.0; });

    std::vector<std::vector<double>> starts;
    if (options.init) {
        if (static_cast<int>(options.init->size()) != dim_theta)
            throw InvalidConfig("fit_kernel: init has wrong length for family");
        starts.push_back(*options.init);
    } else if (family == KernelFamily::gamma) {
        double shape0 = std::min(std::max(mean * mean / var, 1e-2), 1e4);
        double rate0 = std::min(std::max(mean / var, 1e-3), 1e4);
        starts = {{shape0, rate0},
                  {shape0 * 2.0, rate0 * 2.0},
                  {shape0 * 0.5, rate0 * 0.5},
                  {shape0 * 4.0, rate0},
                  {1.0, 1.0 / std::max(mean, 1e-3)}};
    } else {
        double rate0 = 1.0 / std::max(mean, 1e-6);
        starts = {{rate0}, {rate0 * 4.0}, {rate0 * 0.25}, {rate0 * 16.0}, {rate0 * 0.0625}};
    }

    KernelFit best;
    best.family = family;
    best.sse = std::numeric_limits<double>::infinity();
    std::vector<double> best_trace;
    for (auto& th : starts) {
        // profile-optimal a at the start, clamped away from the log boundary
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            double w = family == KernelFamily::gamma ? eval_gamma(th[0], th[1], pr.t[k]).w
                                                     : eval_exp(th[0], pr.t[k]).w;
            double wgt = pr.sqrt_w[k] * pr.sqrt_w[k];
            num += wgt * w * grid[k];
            den += wgt * w * w;
        }
        double a0 = den > 0.0 ? std::max(num / den, 1e-8) : std::max(mass, 1e-8);
        std::vector<double> trace;
        KernelFit fit = lm_fit(pr, family, a0, th, options.max_iterations,
                               options.objective_trace ? &trace : nullptr);
        if (grid_mass_coverage(pr, family, fit) < 0.5) continue;
        if (fit.sse < best.sse) {
            best = fit;
            best_trace = std::move(trace);
        }
    }
    if (options.objective_trace) *options.objective_trace = std::move(best_trace);

    // boundary candidate a = 0
    double sse0 = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double r = pr.sqrt_w[k] * grid[k];
        sse0 += r * r;
    }
    if (!any_positive || sse0 <= best.sse) {
        best.a_hat = 0.0;
        best.sse = sse0;
        best.converged = true;
        best.grad_norm = 0.0;
        if (best.theta.empty())
            best.theta.assign(static_cast<std::size_t>(dim_theta), 1.0);
    }
    return best;
}

double fit_objective(const std::vector<double>& grid, double delta, KernelFamily family, double a,
                     const std::vector<double>& theta) {
    if (family != KernelFamily::gamma && family != KernelFamily::exp)
        throw InvalidConfig("fit_objective: smooth families only");
    Problem pr{grid, {}, {}};
    pr.t.resize(grid.size());
    pr.sqrt_w.assign(grid.size(), 1.0);
    for (std::size_t k = 0; k < grid.size(); ++k) pr.t[k] = static_cast<double>(k + 1) * delta;
    return objective(pr, family, a, theta.data());
}

std::vector<double> fit_objective_gradient(const std::vector<double>& grid, double delta,
                                           KernelFamily family, double a,
                                           const std::vector<double>& theta) {
    if (family != KernelFamily::gamma && family != KernelFamily::exp)
        throw InvalidConfig("fit_objective_gradient: smooth families only");
    const int ntheta = family == KernelFamily::gamma ? 2 : 1;
    std::vector<double> grad(static_cast<std::size_t>(ntheta) + 1, 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double t = static_cast<double>(k + 1) * delta;
        Eval e = family == KernelFamily::gamma ? eval_gamma(theta[0], theta[1], t)
                                               : eval_exp(theta[0], t);
        double r = a * e.w - grid[k];
        grad[0] += 2.0 * r * a * e.w;            // d/d(log a)
        grad[1] += 2.0 * r * a * e.d_dlog1;
        if (ntheta > 1) grad[2] += 2.0 * r * a * e.d_dlog2;
    }
    return grad;
}

KernelSpec to_kernel_spec(const KernelFit& fit) {
    switch (fit.family) {
        case KernelFamily::gamma: return GammaDensity{fit.theta.at(0), fit.theta.at(1)};
        case KernelFamily::uniform: return UniformWindow{fit.theta.at(0), fit.theta.at(1)};
        case KernelFamily::exp: return ExponentialDecay{fit.theta.at(0)};
        case KernelFamily::grid: return GridKernel{0.0, fit.theta};  // delta filled by caller
    }
    throw InvalidConfig("to_kernel_spec: bad family");
}

SuggestResult suggest_family(const std::vector<double>& grid, double delta) {
    const auto n = static_cast<double>(grid.size());
    double scale = 0.0;
    for (double v : grid) scale += v * v;

    SuggestResult out;
    for (KernelFamily fam :
         {KernelFamily::gamma, KernelFamily::uniform, KernelFamily::exp, KernelFamily::grid}) {
        KernelFit fit = fit_kernel(grid, delta, fam);
        double k = fam == KernelFamily::gamma ? 3.0
                   : fam == KernelFamily::uniform ? 3.0
                   : fam == KernelFamily::exp ? 2.0
                                              : n;  // a plus p-1 free grid values
        double sse_eff = std::max(fit.sse, 1e-12 * (scale + 1e-300));
        double score = n * std::log(sse_eff / n) + 2.0 * k +
                       2.0 * k * (k + 1.0) / std::max(n - k - 1.0, 1.0);
        out.ranked.push_back({fam, std::move(fit), score});
    }
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const FamilySuggestion& a, const FamilySuggestion& b) {
                         return a.score < b.score;
                     });

    // positive mass below the best smooth fit's residual level means the grid
    // carries no usable excitement signal
    double mass = 0.0;
    for (double v : grid) mass += std::max(v, 0.0) * delta;
    double best_smooth_sse = std::numeric_limits<double>::infinity();
    for (const auto& r : out.ranked) {
        if (r.family != KernelFamily::grid) best_smooth_sse = std::min(best_smooth_sse, r.fit.sse);
    }
    double residual_sd = std::sqrt(best_smooth_sse / n);
    out.low_signal = mass <= delta * n * residual_sd;
    return out;
}

namespace {

ParametricModel assemble_impl(const GraphEstimate& graph_est, const std::vector<KernelFit>& fits,
                              const Eigen::VectorXd& lambda_emp) {
    const int d = graph_est.d;
    std::map<EdgeKey, const KernelFit*> by_edge;
    for (const auto& f : fits) by_edge[f.edge] = &f;
    for (const auto& e : graph_est.edges) {
        if (e.significant && !by_edge.count({e.from, e.to}))
            throw MissingFit("assemble_parametric: no fit for significant edge (" +
                             std::to_string(e.from) + "," + std::to_string(e.to) + ")");
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
    std::map<EdgeKey, ReproductionKernel> kernels;
    for (const auto& [key, fit] : by_edge) {
        if (fit->a_hat <= 0.0) continue;
        A(key.first - 1, key.second - 1) = fit->a_hat;
        KernelSpec spec = to_kernel_spec(*fit);
        if (auto* g = std::get_if<GridKernel>(&spec)) g->delta = graph_est.delta;
        kernels[key] = ReproductionKernel{fit->a_hat, std::move(spec)};
    }

    ParametricModel out;
    out.lambda_emp = lambda_emp;
    out.rho = spectral_radius(A);
    out.supercritical = out.rho >= 1.0 - kSubcriticalTol;

    // eta_par = lambda_emp (I - A), chosen so the assembled model's
    // stationary intensity reproduces the observed rates exactly
    Eigen::VectorXd eta_par =
        (Eigen::MatrixXd::Identity(d, d) - A).transpose() * lambda_emp;
    out.eta_par = eta_par;
    std::vector<double> eta(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        if (eta_par(j) < 0.0) {
            out.clamped = true;
            out.clamped_components.push_back(j + 1);
            eta[static_cast<std::size_t>(j)] = 0.0;
        } else {
            eta[static_cast<std::size_t>(j)] = eta_par(j);
        }
    }
    bool any = std::any_of(eta.begin(), eta.end(), [](double e) { return e > 0.0; });
    if (any) out.model = HawkesModel(d, std::move(eta), std::move(kernels));
    return out;
}

} // namespace

ParametricModel assemble_parametric(const GraphEstimate& graph_est,
                                    const std::vector<KernelFit>& fits,
                                    const EventStream& stream) {
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(graph_est.d);
    for (const auto& e : stream.events) lambda(e.component - 1) += 1.0;
    lambda /= stream.horizon;
    return assemble_impl(graph_est, fits, lambda);
}

ParametricModel assemble_parametric(const GraphEstimate& graph_est,
                                    const std::vector<KernelFit>& fits) {
    return assemble_impl(graph_est, fits, graph_est.lambda_emp);
}

} // namespace hawkes
