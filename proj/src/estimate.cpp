#include "hawkesnet/estimate.hpp"

#include "hawkesnet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hawkes {

BinCounts bin_counts(const EventStream& s, double delta) {
    if (!(delta > 0.0)) throw InvalidDelta("bin width must be positive");
    if (delta > s.horizon) throw InvalidDelta("bin width exceeds the horizon");
    BinCounts b;
    b.delta = delta;
    b.d = s.d;
    b.n = static_cast<long>(std::floor(s.horizon / delta + 1e-9));
    b.counts = Eigen::MatrixXi::Zero(b.n, s.d);
    for (const auto& e : s.events) {
        auto k = static_cast<long>(std::ceil(e.time / delta - 1e-12));
        if (k < 1) k = 1;
        if (k > b.n) {
            ++b.discarded;
            continue;
        }
        b.counts(k - 1, e.component - 1) += 1;
    }
    return b;
}

namespace {

int lag_order(double support, double delta) {
    return static_cast<int>(std::ceil(support / delta - 1e-9));
}

// Design matrix (8): row m = [(X_{p+m-1})^T, ..., (X_m)^T, 1], m = 1..n-p.
Eigen::MatrixXd design_matrix(const BinCounts& b, int p) {
    const long rows = b.n - p;
    const int d = b.d;
    Eigen::MatrixXd Z(rows, d * p + 1);
    for (long m = 0; m < rows; ++m) {
        for (int k = 1; k <= p; ++k) {
            for (int i = 0; i < d; ++i) {
                Z(m, (k - 1) * d + i) = static_cast<double>(b.counts(p + m - k, i));
            }
        }
        Z(m, d * p) = 1.0;
    }
    return Z;
}

Eigen::MatrixXd response_matrix(const BinCounts& b, int p) {
    const long rows = b.n - p;
    Eigen::MatrixXd Y(rows, b.d);
    for (long m = 0; m < rows; ++m) {
        for (int j = 0; j < b.d; ++j) Y(m, j) = static_cast<double>(b.counts(p + m, j));
    }
    return Y;
}

// Least-squares coefficients via column-pivoted QR; opt-in ridge fallback.
Eigen::MatrixXd solve_ols(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y, bool ridge_fallback,
                          bool* ridge_applied) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    if (qr.rank() < Z.cols()) {
        if (!ridge_fallback) {
            throw RankDeficientDesign("design matrix is rank deficient (rank " +
                                      std::to_string(qr.rank()) + " of " +
                                      std::to_string(Z.cols()) + " columns)");
        }
        Eigen::MatrixXd ZtZ = Z.transpose() * Z;
        double lambda = 1e-10 * ZtZ.trace() / static_cast<double>(Z.cols());
        ZtZ.diagonal().array() += lambda;
        if (ridge_applied) *ridge_applied = true;
        return ZtZ.ldlt().solve(Z.transpose() * Y);
    }
    return qr.solve(Y);
}

} // namespace

Eigen::MatrixXd CLSFit::a_hat() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double sum = 0.0;
            for (int k = 1; k <= p; ++k) sum += H((k - 1) * d + i, j);
            a(i, j) = delta * sum;
        }
    }
    return a;
}

CLSFit cls_fit(const BinCounts& b, double support, const CLSOptions& opt) {
    if (!(support >= b.delta))
        throw InvalidConfig("cls_fit: support must be at least the bin width");
    const int p = lag_order(support, b.delta);
    const int cols = b.d * p + 1;
    if (b.n - p <= cols)
        throw InsufficientData("cls_fit: need more than d*p+1 usable bins, have " +
                               std::to_string(b.n - p));
    Eigen::MatrixXd Z = design_matrix(b, p);
    Eigen::MatrixXd Y = response_matrix(b, p);

    CLSFit fit;
    fit.delta = b.delta;
    fit.support = support;
    fit.d = b.d;
    fit.p = p;
    Eigen::MatrixXd beta = solve_ols(Z, Y, opt.ridge_fallback, &fit.ridge_applied);
    fit.H = beta / b.delta;
    return fit;
}

Eigen::MatrixXd covariance_naive(const BinCounts& b, const CLSFit& fit) {
    const int d = fit.d;
    const int p = fit.p;
    const long q = static_cast<long>(d) * (static_cast<long>(d) * p + 1);
    if (q > 2000)
        throw DimensionGuardExceeded("covariance_naive: d(dp+1) = " + std::to_string(q));

    Eigen::MatrixXd Z = design_matrix(b, p);
    Eigen::MatrixXd Y = response_matrix(b, p);
    Eigen::MatrixXd U = Y - Z * (fit.delta * fit.H);  // residual rows U_k
    Eigen::MatrixXd Q = (Z.transpose() * Z).ldlt().solve(
        Eigen::MatrixXd::Identity(d * p + 1, d * p + 1));

    // W = sum_k w_k w_k^T with w_k = z_k (x) U_k
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd w(q);
    for (long m = 0; m < Z.rows(); ++m) {
        for (int r = 0; r < d * p + 1; ++r) {
            for (int c = 0; c < d; ++c) w(static_cast<long>(r) * d + c) = Z(m, r) * U(m, c);
        }
        W.selfadjointView<Eigen::Lower>().rankUpdate(w);
    }
    W = W.selfadjointView<Eigen::Lower>();

    // (Q (x) I_d) W (Q (x) I_d) / delta^2
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(q, q);
    for (int r = 0; r < d * p + 1; ++r) {
        for (int c = 0; c < d * p + 1; ++c) {
            for (int e = 0; e < d; ++e)
                K(static_cast<long>(r) * d + e, static_cast<long>(c) * d + e) = Q(r, c);
        }
    }
    return (K * W * K) / (fit.delta * fit.delta);
}

Eigen::MatrixXd skeleton_sigmas(const BinCounts& b, const CLSFit& fit) {
    const int d = fit.d;
    const int p = fit.p;
    Eigen::MatrixXd Z = design_matrix(b, p);
    Eigen::MatrixXd Y = response_matrix(b, p);
    Eigen::MatrixXd U = Y - Z * (fit.delta * fit.H);
    Eigen::LDLT<Eigen::MatrixXd> ZtZ((Z.transpose() * Z));

    // a_hat_{i,j} selects the p coefficients of source i in equation j; its
    // sandwich variance needs only the combined projection row
    //   g_i = Z (Z^T Z)^{-1} sel_i,   sigma^2_{i,j} = sum_m (g_i[m] U[m,j])^2
    Eigen::MatrixXd sigma(d, d);
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd sel = Eigen::VectorXd::Zero(d * p + 1);
        for (int k = 1; k <= p; ++k) sel((k - 1) * d + i) = 1.0;
        Eigen::VectorXd g = Z * ZtZ.solve(sel);
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (long m = 0; m < g.size(); ++m) {
                double t = g(m) * U(m, j);
                acc += t * t;
            }
            sigma(i, j) = std::sqrt(acc);
        }
    }
    return sigma;
}

SkeletonEstimate estimate_skeleton(const EventStream& s, double delta_skel, double support,
                                   double alpha_skel) {
    if (!(delta_skel > 0.0) || !(delta_skel <= support) || !(support < s.horizon))
        throw InvalidConfig("estimate_skeleton: need 0 < delta_skel <= support < T");
    if (!(alpha_skel > 0.0 && alpha_skel <= 1.0))
        throw InvalidConfig("estimate_skeleton: alpha_skel must lie in (0,1]");

    BinCounts b = bin_counts(s, delta_skel);
    CLSFit fit = cls_fit(b, support);

    SkeletonEstimate est;
    est.delta = delta_skel;
    est.support = support;
    est.alpha_skel = alpha_skel;
    est.a_hat = fit.a_hat();
    est.sigma_hat = skeleton_sigmas(b, fit);
    est.skeleton.d = s.d;
    const bool all_edges = alpha_skel == 1.0;
    const double z = all_edges ? 0.0 : normal_quantile(1.0 - alpha_skel);
    for (int i = 1; i <= s.d; ++i) {
        for (int j = 1; j <= s.d; ++j) {
            if (all_edges || est.a_hat(i - 1, j - 1) > est.sigma_hat(i - 1, j - 1) * z) {
                est.skeleton.edges.insert({i, j});
            }
        }
    }
    return est;
}

GraphEstimate estimate_graph(const EventStream& s, const Skeleton& skel, double delta_graph,
                             double support, double alpha_graph,
                             std::optional<double> alpha_vertex_opt) {
    if (skel.d != s.d) throw InvalidConfig("estimate_graph: skeleton dimension mismatch");
    if (!(delta_graph > 0.0) || !(delta_graph <= support) || !(support < s.horizon))
        throw InvalidConfig("estimate_graph: need 0 < delta_graph <= support < T");
    if (!(alpha_graph > 0.0 && alpha_graph < 1.0))
        throw InvalidConfig("estimate_graph: alpha_graph must lie in (0,1)");
    const double alpha_vertex = alpha_vertex_opt.value_or(alpha_graph);
    if (!(alpha_vertex > 0.0 && alpha_vertex < 1.0))
        throw InvalidConfig("estimate_graph: alpha_vertex must lie in (0,1)");

    BinCounts b = bin_counts(s, delta_graph);
    const int d = s.d;
    const int p = lag_order(support, delta_graph);
    const long rows = b.n - p;

    GraphEstimate est;
    est.d = d;
    est.delta = delta_graph;
    est.support = support;
    est.p = p;
    est.alpha_graph = alpha_graph;
    est.alpha_vertex = alpha_vertex;
    est.horizon = s.horizon;
    est.skeleton = skel;
    est.vertices.resize(static_cast<std::size_t>(d));
    est.lambda_emp = Eigen::VectorXd::Zero(d);
    for (const auto& e : s.events) est.lambda_emp(e.component - 1) += 1.0;
    est.lambda_emp /= s.horizon;

    const double z_edge = normal_quantile(1.0 - alpha_graph);
    const double z_vertex = normal_quantile(1.0 - alpha_vertex);
    const double z_ci_edge = normal_quantile(1.0 - alpha_graph / 2.0);
    const double z_ci_vertex = normal_quantile(1.0 - alpha_vertex / 2.0);

    for (int j = 1; j <= d; ++j) {
        VertexEstimate& vx = est.vertices[static_cast<std::size_t>(j - 1)];
        vx.j = j;
        std::set<int> pa_set = parents(skel, j);
        std::vector<int> pa(pa_set.begin(), pa_set.end());  // ascending
        const int dj = static_cast<int>(pa.size());
        const int cols = p * dj + 1;
        if (rows <= cols) {
            vx.rank_deficient = true;  // too few bins for this parent set; others still fit
            continue;
        }

        // parent-restricted design (15): lag-k block holds X_{.,PA(j)}
        Eigen::MatrixXd Zj(rows, cols);
        Eigen::VectorXd Yj(rows);
        for (long m = 0; m < rows; ++m) {
            for (int k = 1; k <= p; ++k) {
                for (int l = 0; l < dj; ++l) {
                    Zj(m, (k - 1) * dj + l) =
                        static_cast<double>(b.counts(p + m - k, pa[static_cast<std::size_t>(l)] - 1));
                }
            }
            Zj(m, p * dj) = 1.0;
            Yj(m) = static_cast<double>(b.counts(p + m, j - 1));
        }

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Zj);
        if (qr.rank() < cols) {
            vx.rank_deficient = true;  // leave this component unfit, keep going
            continue;
        }
        Eigen::VectorXd beta = qr.solve(Yj);
        Eigen::VectorXd U = Yj - Zj * beta;
        Eigen::LDLT<Eigen::MatrixXd> ZtZ((Zj.transpose() * Zj));

        vx.eta_hat = beta(p * dj) / delta_graph;
        {
            Eigen::VectorXd sel = Eigen::VectorXd::Zero(cols);
            sel(p * dj) = 1.0;
            Eigen::VectorXd g = Zj * ZtZ.solve(sel);
            double acc = 0.0;
            for (long m = 0; m < rows; ++m) {
                double t = g(m) * U(m);
                acc += t * t;
            }
            vx.sigma = std::sqrt(acc) / delta_graph;
        }
        vx.ci_lo = vx.eta_hat - vx.sigma * z_ci_vertex;
        vx.ci_hi = vx.eta_hat + vx.sigma * z_ci_vertex;
        vx.significant = vx.eta_hat > vx.sigma * z_vertex;

        for (int l = 0; l < dj; ++l) {
            EdgeEstimate edge;
            edge.from = pa[static_cast<std::size_t>(l)];
            edge.to = j;
            Eigen::VectorXd sel = Eigen::VectorXd::Zero(cols);
            double a = 0.0;
            edge.h_grid.resize(static_cast<std::size_t>(p));
            for (int k = 1; k <= p; ++k) {
                double coeff = beta((k - 1) * dj + l);
                a += coeff;
                edge.h_grid[static_cast<std::size_t>(k - 1)] = coeff / delta_graph;
                sel((k - 1) * dj + l) = 1.0;
            }
            edge.a_hat = a;
            Eigen::VectorXd g = Zj * ZtZ.solve(sel);
            double acc = 0.0;
            for (long m = 0; m < rows; ++m) {
                double t = g(m) * U(m);
                acc += t * t;
            }
            edge.sigma = std::sqrt(acc);
            edge.ci_lo = edge.a_hat - edge.sigma * z_ci_edge;
            edge.ci_hi = edge.a_hat + edge.sigma * z_ci_edge;
            edge.significant = edge.a_hat > edge.sigma * z_edge;
            est.edges.push_back(std::move(edge));
        }
    }
    return est;
}

} // namespace hawkes
