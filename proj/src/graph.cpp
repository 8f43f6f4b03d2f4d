#include "hawkesnet/graph.hpp"

#include "hawkesnet/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hawkes {

WeightedGraph graph_of(const HawkesModel& m) {
    WeightedGraph g;
    g.d = m.dim();
    g.vertex_weights = m.eta();
    for (const auto& [key, rk] : m.kernels()) g.edge_weights[key] = rk.a;
    return g;
}

Skeleton skeleton_of(const WeightedGraph& g) {
    Skeleton s;
    s.d = g.d;
    for (const auto& [key, w] : g.edge_weights) s.edges.insert(key);
    return s;
}

Eigen::MatrixXd adjacency_matrix(const WeightedGraph& g) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.d, g.d);
    for (const auto& [key, w] : g.edge_weights) A(key.first - 1, key.second - 1) = w;
    return A;
}

namespace {

std::vector<std::vector<int>> out_lists(const Skeleton& g) {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(g.d) + 1);
    for (const auto& [i, j] : g.edges) out[static_cast<std::size_t>(i)].push_back(j);
    return out;
}

std::vector<std::vector<int>> in_lists(const Skeleton& g) {
    std::vector<std::vector<int>> in(static_cast<std::size_t>(g.d) + 1);
    for (const auto& [i, j] : g.edges) in[static_cast<std::size_t>(j)].push_back(i);
    return in;
}

// Vertices with a walk of length >= 1 to j (BFS over reversed edges).
std::set<int> ancestors_impl(const Skeleton& g, int j) {
    auto in = in_lists(g);
    std::set<int> seen;
    std::vector<int> stack = in[static_cast<std::size_t>(j)];
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (!seen.insert(v).second) continue;
        for (int u : in[static_cast<std::size_t>(v)]) {
            if (!seen.count(u)) stack.push_back(u);
        }
    }
    return seen;
}

std::set<int> reachable_from(const std::vector<std::vector<int>>& out, int i) {
    std::set<int> seen;
    std::vector<int> stack = out[static_cast<std::size_t>(i)];
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (!seen.insert(v).second) continue;
        for (int u : out[static_cast<std::size_t>(v)]) {
            if (!seen.count(u)) stack.push_back(u);
        }
    }
    return seen;
}

} // namespace

std::set<int> parents(const Skeleton& g, int j) {
    std::set<int> pa;
    for (const auto& [i, to] : g.edges) {
        if (to == j) pa.insert(i);
    }
    return pa;
}

std::set<int> parents(const WeightedGraph& g, int j) { return parents(skeleton_of(g), j); }

std::set<int> ancestors(const Skeleton& g, int j) { return ancestors_impl(g, j); }
std::set<int> ancestors(const WeightedGraph& g, int j) { return ancestors_impl(skeleton_of(g), j); }

Connectivity classify_connectivity(const Skeleton& g) {
    Connectivity c;
    const int d = g.d;

    // weak components: union-find over the symmetrized edge set
    std::vector<int> root(static_cast<std::size_t>(d) + 1);
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](int v) {
        while (root[static_cast<std::size_t>(v)] != v) {
            root[static_cast<std::size_t>(v)] = root[static_cast<std::size_t>(root[static_cast<std::size_t>(v)])];
            v = root[static_cast<std::size_t>(v)];
        }
        return v;
    };
    for (const auto& [i, j] : g.edges) root[static_cast<std::size_t>(find(i))] = find(j);
    std::map<int, std::vector<int>> groups;
    for (int v = 1; v <= d; ++v) groups[find(v)].push_back(v);
    for (auto& [r, members] : groups) c.weak_components.push_back(members);
    std::sort(c.weak_components.begin(), c.weak_components.end());

    // strong connectivity: mutual reachability, every vertex strongly
    // connected to itself by convention (length-0 walk)
    auto out = out_lists(g);
    c.strongly_connected = true;
    for (int i = 1; i <= d && c.strongly_connected; ++i) {
        auto reach = reachable_from(out, i);
        for (int j = 1; j <= d; ++j) {
            if (j != i && !reach.count(j)) {
                c.strongly_connected = false;
                break;
            }
        }
    }

    c.fully_connected = static_cast<long>(g.edges.size()) == static_cast<long>(d) * d;
    return c;
}

Connectivity classify_connectivity(const WeightedGraph& g) {
    return classify_connectivity(skeleton_of(g));
}

VertexClasses sources_sinks_redundant(const WeightedGraph& g) {
    VertexClasses out;
    Skeleton s = skeleton_of(g);
    for (int v = 1; v <= g.d; ++v) {
        auto pa = parents(s, v);
        pa.erase(v);
        if (pa.empty()) out.sources.insert(v);
        bool has_other_child = false;
        for (const auto& [i, j] : s.edges) {
            if (i == v && j != v) {
                has_other_child = true;
                break;
            }
        }
        if (!has_other_child) out.sinks.insert(v);
        if (g.vertex_weights[static_cast<std::size_t>(v - 1)] == 0.0) {
            bool silent_lineage = true;
            for (int anc : ancestors(s, v)) {
                if (g.vertex_weights[static_cast<std::size_t>(anc - 1)] > 0.0) {
                    silent_lineage = false;
                    break;
                }
            }
            if (silent_lineage) out.redundant.insert(v);
        }
    }
    return out;
}

double spectral_radius(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw InvalidConfig("spectral_radius: matrix must be square");
    if (!A.allFinite()) throw NonFinite("spectral_radius: matrix has non-finite entries");
    if (A.rows() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_subcritical(const WeightedGraph& g) {
    return spectral_radius(adjacency_matrix(g)) < 1.0 - kSubcriticalTol;
}

bool is_subcritical(const HawkesModel& m) {
    return spectral_radius(branching_matrix(m)) < 1.0 - kSubcriticalTol;
}

std::vector<Walk> enumerate_walks(const WeightedGraph& g, int i, int j, int max_len,
                                  std::size_t budget) {
    if (i < 1 || i > g.d || j < 1 || j > g.d)
        throw InvalidConfig("enumerate_walks: vertex outside [d]");
    if (max_len < 0) throw InvalidConfig("enumerate_walks: max_len must be >= 0");

    std::vector<std::vector<std::pair<int, double>>> out(static_cast<std::size_t>(g.d) + 1);
    for (const auto& [key, w] : g.edge_weights)
        out[static_cast<std::size_t>(key.first)].push_back({key.second, w});

    std::vector<Walk> result;
    if (i == j) result.push_back(Walk{{i}, 1.0});  // W_0^{(i,i)} = {(i)}

    std::vector<int> path{i};
    std::size_t produced = result.size();
    auto dfs = [&](auto&& self, int v, double weight, int len) -> void {
        if (len == max_len) return;
        for (const auto& [u, w] : out[static_cast<std::size_t>(v)]) {
            path.push_back(u);
            double wt = weight * w;
            if (u == j) {
                if (++produced > budget)
                    throw EnumerationBudgetExceeded("enumerate_walks: budget exceeded");
                result.push_back(Walk{path, wt});
            }
            self(self, u, wt, len + 1);
            path.pop_back();
        }
    };
    dfs(dfs, i, 1.0, 0);

    std::stable_sort(result.begin(), result.end(), [](const Walk& a, const Walk& b) {
        return a.vertices.size() < b.vertices.size();
    });
    return result;
}

Eigen::MatrixXd offspring_matrix(const Eigen::MatrixXd& A) {
    double rho = spectral_radius(A);
    if (rho >= 1.0 - kSubcriticalTol) throw NotSubcritical(rho);
    const auto d = A.rows();
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d) - A;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    Eigen::MatrixXd E = lu.solve(Eigen::MatrixXd::Identity(d, d));
    double residual = (M * E - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
    if (residual >= 1e-8)
        throw NonFinite("offspring_matrix: (I-A) solve residual " + std::to_string(residual));
    return E;
}

CascadeFeedback cascade_feedback(const WeightedGraph& g) {
    Eigen::MatrixXd A = adjacency_matrix(g);
    Eigen::MatrixXd E = offspring_matrix(A);  // throws NotSubcritical if needed
    const int d = g.d;
    Eigen::VectorXd eta(d);
    for (int v = 0; v < d; ++v) eta(v) = g.vertex_weights[static_cast<std::size_t>(v)];
    if (!(eta.sum() > 0.0)) throw AllImmigrationZero();

    CascadeFeedback out;
    Eigen::VectorXd family_size = E.rowwise().sum();
    double total = eta.dot(family_size);
    out.cascade = eta.cwiseProduct(family_size) / total;

    out.feedback = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd lambda = E.transpose() * eta;  // stationary intensity
    for (int j = 0; j < d; ++j) {
        if (lambda(j) > 0.0) {
            out.feedback(j) = eta(j) * E(j, j) / lambda(j);
        } else {
            out.undefined_feedback.push_back(j + 1);
        }
    }
    return out;
}

GraphAnalytics analyze(const WeightedGraph& g) {
    GraphAnalytics a;
    Eigen::MatrixXd A = adjacency_matrix(g);
    a.spectral_radius = spectral_radius(A);
    a.subcritical = a.spectral_radius < 1.0 - kSubcriticalTol;
    auto conn = classify_connectivity(g);
    a.weak_components = std::move(conn.weak_components);
    a.strongly_connected = conn.strongly_connected;
    a.fully_connected = conn.fully_connected;
    auto cls = sources_sinks_redundant(g);
    a.sources = std::move(cls.sources);
    a.sinks = std::move(cls.sinks);
    a.redundant = std::move(cls.redundant);
    if (a.subcritical) {
        a.offspring = offspring_matrix(A);
        double eta_sum = std::accumulate(g.vertex_weights.begin(), g.vertex_weights.end(), 0.0);
        if (eta_sum > 0.0) {
            auto cf = cascade_feedback(g);
            a.cascade = std::move(cf.cascade);
            a.feedback = std::move(cf.feedback);
            a.undefined_feedback = std::move(cf.undefined_feedback);
        }
    }
    return a;
}

} // namespace hawkes
