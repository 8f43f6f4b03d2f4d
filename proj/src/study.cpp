#include "hawkesnet/study.hpp"

#include "hawkesnet/errors.hpp"
#include "hawkesnet/graph.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

namespace hawkes {

namespace {

constexpr std::uint64_t kTagRep = 0x524550;

enum class EdgeClass { heavy, light, super_light };

struct PairStats {
    long nedges = 0;
    long included_heavy = 0, included_light = 0, included_super = 0;
    long excluded_zero = 0;
};

struct RepResult {
    bool ok = false;
    std::vector<PairStats> pairs;                 // per (delta, alpha), row-major
    std::vector<long> covered_edges, covered_vertices;  // per coverage skeleton
};

struct Truth {
    Skeleton skeleton;
    std::map<EdgeKey, double> a;
    std::map<EdgeKey, EdgeClass> cls;
    std::vector<double> eta;
    long n_heavy = 0, n_light = 0, n_super = 0;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt_param(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

std::string StudyReport::to_csv() const {
    std::ostringstream os;
    os << "delta.skel,alpha.skel,nedges,total,heavy,light,super.light,zero\n";
    for (const auto& r : skeleton_rows) {
        os << fmt_param(r.delta_skel) << "," << fmt_param(r.alpha_skel) << "," << fmt(r.nedges)
           << "," << fmt(r.total) << "," << fmt(r.heavy) << "," << fmt(r.light) << ","
           << fmt(r.super_light) << "," << fmt(r.zero) << "\n";
    }
    if (!coverage_rows.empty()) {
        os << "\napplied.skeleton,vertex.weight.coverage,edge.weight.coverage\n";
        for (const auto& r : coverage_rows) {
            os << r.applied_skeleton << "," << fmt(r.vertex_weight_coverage) << ","
               << fmt(r.edge_weight_coverage) << "\n";
        }
    }
    os << "\n# nsim=" << nsim << " failures=" << failures << "\n";
    return os.str();
}

StudyReport run_study(const HawkesModel& model, const StudyConfig& cfg) {
    if (cfg.nsim < 1) throw InvalidConfig("study: nsim must be >= 1");
    if (cfg.jobs < 1) throw InvalidConfig("study: jobs must be >= 1");
    if (cfg.delta_skel.empty() || cfg.alpha_skel.empty())
        throw InvalidConfig("study: need at least one delta_skel and alpha_skel");

    Truth truth;
    truth.skeleton = skeleton_of(graph_of(model));
    truth.eta = model.eta();
    for (const auto& [key, rk] : model.kernels()) {
        truth.a[key] = rk.a;
        EdgeClass c = rk.a >= cfg.heavy_min ? EdgeClass::heavy
                      : rk.a < cfg.light_min ? EdgeClass::super_light
                                             : EdgeClass::light;
        truth.cls[key] = c;
        if (c == EdgeClass::heavy) ++truth.n_heavy;
        else if (c == EdgeClass::light) ++truth.n_light;
        else ++truth.n_super;
    }
    const int d = model.dim();
    const long n_edges_true = static_cast<long>(truth.a.size());
    const long n_zero_true = static_cast<long>(d) * d - n_edges_true;

    std::vector<std::string> coverage_names;
    if (cfg.coverage) {
        coverage_names.push_back("true skeleton");
        if (cfg.coverage_estimated_skeletons) {
            for (double a : cfg.alpha_skel) coverage_names.push_back("alpha.skel = " + fmt_param(a));
        }
    }

    const std::size_t n_pairs = cfg.delta_skel.size() * cfg.alpha_skel.size();
    std::vector<RepResult> reps(static_cast<std::size_t>(cfg.nsim));
    Rng master(cfg.seed);

    auto run_rep = [&](int r) {
        RepResult& out = reps[static_cast<std::size_t>(r)];
        out.pairs.assign(n_pairs, PairStats{});
        out.covered_edges.assign(coverage_names.size(), 0);
        out.covered_vertices.assign(coverage_names.size(), 0);

        SimConfig sim_cfg;
        sim_cfg.horizon = cfg.horizon;
        sim_cfg.burn_in = cfg.burn_in;
        sim_cfg.seed = master.substream(kTagRep, static_cast<std::uint64_t>(r)).key();
        EventStream stream = simulate(model, sim_cfg).stream;

        std::map<double, Skeleton> first_delta_skeletons;  // alpha -> skeleton, for coverage

        std::size_t pair_idx = 0;
        for (double delta : cfg.delta_skel) {
            // a_hat and sigma_hat do not depend on alpha; threshold per alpha
            BinCounts bins = bin_counts(stream, delta);
            CLSFit fit = cls_fit(bins, cfg.support);
            Eigen::MatrixXd a_hat = fit.a_hat();
            Eigen::MatrixXd sigma = skeleton_sigmas(bins, fit);
            for (double alpha : cfg.alpha_skel) {
                const double z = alpha == 1.0 ? 0.0 : normal_quantile(1.0 - alpha);
                Skeleton est;
                est.d = d;
                for (int i = 1; i <= d; ++i) {
                    for (int j = 1; j <= d; ++j) {
                        if (alpha == 1.0 || a_hat(i - 1, j - 1) > sigma(i - 1, j - 1) * z)
                            est.edges.insert({i, j});
                    }
                }
                PairStats& ps = out.pairs[pair_idx++];
                ps.nedges = static_cast<long>(est.edges.size());
                for (const auto& [key, c] : truth.cls) {
                    if (!est.edges.count(key)) continue;
                    if (c == EdgeClass::heavy) ++ps.included_heavy;
                    else if (c == EdgeClass::light) ++ps.included_light;
                    else ++ps.included_super;
                }
                long wrong_included = ps.nedges - ps.included_heavy - ps.included_light -
                                      ps.included_super;
                ps.excluded_zero = n_zero_true - wrong_included;
                if (cfg.coverage && cfg.coverage_estimated_skeletons &&
                    delta == cfg.delta_skel.front()) {
                    first_delta_skeletons[alpha] = std::move(est);
                }
            }
        }

        if (cfg.coverage) {
            for (std::size_t ci = 0; ci < coverage_names.size(); ++ci) {
                const Skeleton& skel =
                    ci == 0 ? truth.skeleton
                            : first_delta_skeletons.at(cfg.alpha_skel[ci - 1]);
                GraphEstimate g = estimate_graph(stream, skel, cfg.delta_graph, cfg.support,
                                                 cfg.alpha_graph, cfg.alpha_vertex);
                std::map<EdgeKey, const EdgeEstimate*> by_edge;
                for (const auto& e : g.edges) by_edge[{e.from, e.to}] = &e;
                long cov_e = 0;
                for (const auto& [key, a_true] : truth.a) {
                    auto it = by_edge.find(key);
                    if (it != by_edge.end() && it->second->ci_lo <= a_true &&
                        a_true <= it->second->ci_hi)
                        ++cov_e;
                }
                long cov_v = 0;
                for (int j = 0; j < d; ++j) {
                    const auto& vx = g.vertices[static_cast<std::size_t>(j)];
                    double eta_true = truth.eta[static_cast<std::size_t>(j)];
                    if (!vx.rank_deficient && vx.ci_lo <= eta_true && eta_true <= vx.ci_hi)
                        ++cov_v;
                }
                out.covered_edges[ci] = cov_e;
                out.covered_vertices[ci] = cov_v;
            }
        }
        out.ok = true;
    };

    auto guarded_rep = [&](int r) {
        try {
            run_rep(r);
        } catch (const std::exception& e) {
            reps[static_cast<std::size_t>(r)].ok = false;
            std::fprintf(stderr, "study: replication %d failed: %s\n", r, e.what());
        }
    };
    const int workers = std::min(cfg.jobs, cfg.nsim);
    if (workers <= 1) {
        for (int r = 0; r < cfg.nsim; ++r) guarded_rep(r);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (;;) {
                int r = next.fetch_add(1);
                if (r >= cfg.nsim) return;
                guarded_rep(r);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // aggregation is a fixed-order reduction over the replication index, so
    // the report is identical for any jobs value
    StudyReport report;
    report.nsim = cfg.nsim;
    long ok = 0;
    for (const auto& r : reps) ok += r.ok ? 1 : 0;
    report.failures = cfg.nsim - static_cast<int>(ok);
    if (ok == 0) throw Error("study: every replication failed");

    std::size_t pair_idx = 0;
    for (double delta : cfg.delta_skel) {
        for (double alpha : cfg.alpha_skel) {
            SkeletonRow row;
            row.delta_skel = delta;
            row.alpha_skel = alpha;
            long ne = 0, ih = 0, il = 0, is = 0, ez = 0;
            for (const auto& r : reps) {
                if (!r.ok) continue;
                const PairStats& ps = r.pairs[pair_idx];
                ne += ps.nedges;
                ih += ps.included_heavy;
                il += ps.included_light;
                is += ps.included_super;
                ez += ps.excluded_zero;
            }
            auto dok = static_cast<double>(ok);
            row.nedges = static_cast<double>(ne) / dok;
            row.heavy = truth.n_heavy ? static_cast<double>(ih) / (dok * truth.n_heavy) : 1.0;
            row.light = truth.n_light ? static_cast<double>(il) / (dok * truth.n_light) : 1.0;
            row.super_light = truth.n_super ? static_cast<double>(is) / (dok * truth.n_super) : 1.0;
            row.total = n_edges_true
                            ? static_cast<double>(ih + il + is) / (dok * n_edges_true)
                            : 1.0;
            row.zero = n_zero_true ? static_cast<double>(ez) / (dok * n_zero_true) : 1.0;
            report.skeleton_rows.push_back(row);
            ++pair_idx;
        }
    }

    for (std::size_t ci = 0; ci < coverage_names.size(); ++ci) {
        CoverageRow row;
        row.applied_skeleton = coverage_names[ci];
        long ce = 0, cv = 0;
        for (const auto& r : reps) {
            if (!r.ok) continue;
            ce += r.covered_edges[ci];
            cv += r.covered_vertices[ci];
        }
        auto dok = static_cast<double>(ok);
        row.edge_weight_coverage =
            n_edges_true ? static_cast<double>(ce) / (dok * n_edges_true) : 1.0;
        row.vertex_weight_coverage = static_cast<double>(cv) / (dok * d);
        report.coverage_rows.push_back(row);
    }
    return report;
}

} // namespace hawkes
