#include "hawkesnet/errors.hpp"
#include "hawkesnet/estimate.hpp"
#include "hawkesnet/graph.hpp"
#include "hawkesnet/io.hpp"
#include "hawkesnet/kernelfit.hpp"
#include "hawkesnet/model.hpp"
#include "hawkesnet/simulate.hpp"
#include "hawkesnet/study.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace hawkes;

std::uint64_t seed_or_env(std::optional<std::uint64_t> seed_flag) {
    if (seed_flag) return *seed_flag;
    if (const char* env = std::getenv("HAWKESNET_SEED")) {
        return static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
    }
    return 1;
}

nlohmann::json parse_json_file(const std::string& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path, e.what());
    }
}

WeightedGraph significant_subgraph(const GraphEstimate& est) {
    WeightedGraph g;
    g.d = est.d;
    g.vertex_weights.assign(static_cast<std::size_t>(est.d), 0.0);
    for (const auto& v : est.vertices) {
        if (v.significant && v.eta_hat > 0.0)
            g.vertex_weights[static_cast<std::size_t>(v.j - 1)] = v.eta_hat;
    }
    for (const auto& e : est.edges) {
        if (e.significant && e.a_hat > 0.0) g.edge_weights[{e.from, e.to}] = e.a_hat;
    }
    return g;
}

void print_analytics(const WeightedGraph& g) {
    GraphAnalytics a = analyze(g);
    std::printf("spectral radius: %.6f\n", a.spectral_radius);
    std::printf("subcritical: %s\n", a.subcritical ? "yes" : "no");
    std::printf("weak components:");
    for (const auto& comp : a.weak_components) {
        std::printf(" {");
        for (std::size_t i = 0; i < comp.size(); ++i)
            std::printf("%s%d", i ? "," : "", comp[i]);
        std::printf("}");
    }
    std::printf("\nstrongly connected: %s, fully connected: %s\n",
                a.strongly_connected ? "yes" : "no", a.fully_connected ? "yes" : "no");
    auto print_set = [](const char* name, const std::set<int>& s) {
        std::printf("%s:", name);
        for (int v : s) std::printf(" %d", v);
        std::printf("\n");
    };
    print_set("sources", a.sources);
    print_set("sinks", a.sinks);
    print_set("redundant", a.redundant);
    if (a.subcritical && a.cascade.size() > 0) {
        std::printf("%-22s", "vertex");
        for (int j = 1; j <= g.d; ++j) std::printf("%8d", j);
        std::printf("\n%-22s", "cascade.coefficients");
        for (int j = 0; j < g.d; ++j) std::printf("%8.2f", a.cascade(j));
        std::printf("\n%-22s", "feedback.coefficients");
        for (int j = 0; j < g.d; ++j) std::printf("%8.2f", a.feedback(j));
        std::printf("\n");
        if (!a.undefined_feedback.empty()) {
            std::printf("feedback undefined (zero stationary intensity) at:");
            for (int v : a.undefined_feedback) std::printf(" %d", v);
            std::printf("\n");
        }
    } else if (!a.subcritical) {
        std::printf("cascade/feedback coefficients unavailable (not subcritical)\n");
    }
}

int cmd_simulate(const std::string& model_path, double horizon, double burn_in,
                 std::optional<std::uint64_t> seed, const std::string& out_path) {
    HawkesModel model = read_model(model_path);
    SimConfig cfg;
    cfg.horizon = horizon;
    cfg.burn_in = burn_in;
    cfg.seed = seed_or_env(seed);
    SimResult res = simulate(model, cfg);
    write_stream(res.stream, out_path);

    std::vector<long> counts(static_cast<std::size_t>(model.dim()), 0);
    for (const auto& e : res.stream.events) ++counts[static_cast<std::size_t>(e.component - 1)];
    std::printf("%zu events on (0,%g], %ld immigrant families, burn-in %g\n",
                res.stream.events.size(), horizon, res.immigrants, res.burn_in_used);
    for (int j = 1; j <= model.dim(); ++j)
        std::printf("  component %2d: %ld\n", j, counts[static_cast<std::size_t>(j - 1)]);
    std::printf("truncation: %ld generation-capped, %ld event-capped families\n",
                res.truncation.generation_capped, res.truncation.event_capped);
    return 0;
}

int cmd_skeleton(const std::string& in_path, double delta_skel, double support, double alpha_skel,
                 const std::string& out_path, const std::string& dot_path) {
    EventStream stream = read_stream(in_path);
    SkeletonEstimate est = estimate_skeleton(stream, delta_skel, support, alpha_skel);
    write_text_file(out_path, skeleton_estimate_to_json(est).dump(2) + "\n");
    if (!dot_path.empty()) write_text_file(dot_path, export_dot(est.skeleton));

    std::printf("estimated skeleton: %zu edges (d=%d, delta.skel=%g, s=%g, alpha.skel=%g)\n",
                est.skeleton.edges.size(), stream.d, delta_skel, support, alpha_skel);
    std::printf("%4s %4s %12s %12s %s\n", "from", "to", "a.hat", "sigma.hat", "edge");
    for (int i = 1; i <= stream.d; ++i) {
        for (int j = 1; j <= stream.d; ++j) {
            bool edge = est.skeleton.edges.count({i, j}) > 0;
            double a = est.a_hat(i - 1, j - 1);
            double s = est.sigma_hat(i - 1, j - 1);
            if (edge || std::fabs(a) > 2.0 * s) {
                std::printf("%4d %4d %12.4f %12.4f %s\n", i, j, a, s, edge ? "yes" : "");
            }
        }
    }
    return 0;
}

Skeleton load_skeleton(const std::string& path) {
    auto j = parse_json_file(path);
    if (j.contains("kernels")) {  // a model file: use its true skeleton
        return skeleton_of(graph_of(model_from_json(j)));
    }
    return skeleton_estimate_from_json(j).skeleton;
}

int cmd_graph(const std::string& in_path, const std::string& skeleton_path, double delta_graph,
              double support, double alpha_graph, std::optional<double> alpha_vertex,
              const std::string& out_path, const std::string& dot_path,
              const std::string& grid_csv_path) {
    EventStream stream = read_stream(in_path);
    Skeleton skel = load_skeleton(skeleton_path);
    GraphEstimate est =
        estimate_graph(stream, skel, delta_graph, support, alpha_graph, alpha_vertex);
    write_text_file(out_path, graph_estimate_to_json(est).dump(2) + "\n");
    if (!dot_path.empty()) write_text_file(dot_path, export_dot(est));
    if (!grid_csv_path.empty()) {
        std::ostringstream os;
        os << "from,to,k,t,h_hat\n";
        for (const auto& e : est.edges) {
            for (std::size_t k = 0; k < e.h_grid.size(); ++k) {
                os << e.from << "," << e.to << "," << k + 1 << ","
                   << static_cast<double>(k + 1) * est.delta << "," << e.h_grid[k] << "\n";
            }
        }
        write_text_file(grid_csv_path, os.str());
    }

    std::printf("graph estimate over %zu skeleton edges (delta.graph=%g, s=%g)\n",
                skel.edges.size(), delta_graph, support);
    std::printf("%4s %12s %12s %5s\n", "j", "eta.hat", "sigma", "sig");
    for (const auto& v : est.vertices) {
        std::printf("%4d %12.4f %12.4f %5s%s\n", v.j, v.eta_hat, v.sigma,
                    v.significant ? "yes" : "", v.rank_deficient ? " (rank deficient)" : "");
    }
    std::printf("%4s %4s %12s %12s %5s\n", "from", "to", "a.hat", "sigma", "sig");
    for (const auto& e : est.edges) {
        std::printf("%4d %4d %12.4f %12.4f %5s\n", e.from, e.to, e.a_hat, e.sigma,
                    e.significant ? "yes" : "");
    }

    auto redundant = sources_sinks_redundant(significant_subgraph(est)).redundant;
    if (!redundant.empty()) {
        std::fprintf(stderr,
                     "warning: estimate has redundant vertices (");
        bool first = true;
        for (int v : redundant) {
            std::fprintf(stderr, "%s%d", first ? "" : ",", v);
            first = false;
        }
        std::fprintf(stderr,
                     "); consider raising --alpha-skel/--alpha-graph/--alpha-vertex\n");
    }
    return 0;
}

int cmd_fit(const std::string& graph_path, const std::string& family_arg,
            const std::string& out_path, const std::string& fits_csv_path) {
    GraphEstimate est = graph_estimate_from_json(parse_json_file(graph_path));

    std::vector<KernelFit> fits;
    std::printf("%4s %4s %8s %10s %18s %12s %5s\n", "from", "to", "family", "a.hat", "theta.hat",
                "sse", "conv");
    for (const auto& e : est.edges) {
        if (!e.significant) continue;
        KernelFit fit;
        if (family_arg == "auto") {
            fit = suggest_family(e.h_grid, est.delta).ranked.front().fit;
        } else {
            fit = fit_kernel(e.h_grid, est.delta, family_from_name(family_arg));
        }
        fit.edge = {e.from, e.to};
        std::ostringstream th;
        for (std::size_t i = 0; i < fit.theta.size() && i < 4; ++i)
            th << (i ? " " : "") << fit.theta[i];
        std::printf("%4d %4d %8s %10.4f %18s %12.3e %5s\n", e.from, e.to,
                    family_name(fit.family).c_str(), fit.a_hat, th.str().c_str(), fit.sse,
                    fit.converged ? "yes" : "no");
        fits.push_back(std::move(fit));
    }

    ParametricModel par = assemble_parametric(est, fits);
    if (par.supercritical) {
        std::fprintf(stderr, "warning: fitted branching matrix is supercritical (rho=%.4f)\n",
                     par.rho);
    }
    if (par.clamped) {
        std::fprintf(stderr, "warning: negative parametric immigration intensities clamped at:");
        for (int v : par.clamped_components) std::fprintf(stderr, " %d", v);
        std::fprintf(stderr, "\n");
    }
    if (!par.model) {
        std::fprintf(stderr,
                     "error: every immigration intensity clamped to zero; no valid model "
                     "(branching-matrix spectral radius %.4f)\n",
                     par.rho);
        return 2;
    }
    write_model(*par.model, out_path);
    if (!fits_csv_path.empty()) {
        std::ostringstream os;
        os << "from,to,family,a_hat,theta,sse,converged,iterations\n";
        for (const auto& f : fits) {
            os << f.edge.first << "," << f.edge.second << "," << family_name(f.family) << ","
               << f.a_hat << ",\"";
            for (std::size_t i = 0; i < f.theta.size(); ++i) os << (i ? " " : "") << f.theta[i];
            os << "\"," << f.sse << "," << (f.converged ? 1 : 0) << "," << f.iterations << "\n";
        }
        write_text_file(fits_csv_path, os.str());
    }
    return 0;
}

int cmd_analyze(const std::string& model_path, const std::string& graph_path) {
    if (!model_path.empty()) {
        print_analytics(graph_of(read_model(model_path)));
    } else {
        auto j = parse_json_file(graph_path);
        if (j.contains("vertices")) {
            print_analytics(significant_subgraph(graph_estimate_from_json(j)));
        } else {
            print_analytics(graph_from_json(j));
        }
    }
    return 0;
}

int cmd_study(const std::string& model_path, int nsim, double horizon,
              const std::vector<double>& delta_skel, const std::vector<double>& alpha_skel,
              double delta_graph, double alpha_graph, std::optional<double> alpha_vertex,
              double support, std::optional<std::uint64_t> seed, int jobs, bool with_estimated,
              const std::string& out_path) {
    HawkesModel model = read_model(model_path);
    StudyConfig cfg;
    cfg.nsim = nsim;
    cfg.horizon = horizon;
    cfg.support = support;
    cfg.delta_skel = delta_skel;
    cfg.alpha_skel = alpha_skel;
    cfg.delta_graph = delta_graph;
    cfg.alpha_graph = alpha_graph;
    cfg.alpha_vertex = alpha_vertex.value_or(alpha_graph);
    cfg.seed = seed_or_env(seed);
    cfg.jobs = jobs;
    cfg.coverage_estimated_skeletons = with_estimated;
    StudyReport report = run_study(model, cfg);
    write_text_file(out_path, report.to_csv());
    std::printf("%s", report.to_csv().c_str());
    if (report.failures > 0) {
        std::fprintf(stderr, "warning: %d of %d replications failed\n", report.failures,
                     report.nsim);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multitype Hawkes process toolkit: simulation, graph analytics, "
                 "conditional-least-squares estimation, parametric kernel fits"};
    app.require_subcommand(1);

    // simulate
    std::string model_path, out_path;
    double horizon = 0.0, burn_in = -1.0;
    std::optional<std::uint64_t> seed;
    auto* sim = app.add_subcommand("simulate", "simulate a model by the branching construction");
    sim->add_option("--model", model_path, "model JSON file")->required();
    sim->add_option("--horizon", horizon, "time window length T")
        ->required()
        ->check(CLI::PositiveNumber);
    sim->add_option("--burn-in", burn_in, "burn-in length (default: 20x kernel support)")
        ->check(CLI::NonNegativeNumber);
    sim->add_option("--seed", seed, "RNG seed (fallback: HAWKESNET_SEED, then 1)");
    sim->add_option("--out", out_path, "output stream CSV")->required();

    // skeleton
    std::string in_path, dot_path, skeleton_path, grid_csv;
    double delta_skel = 1.0, support = 5.0, alpha_skel = 0.05;
    auto* skel = app.add_subcommand("skeleton", "estimate the skeleton from an event stream");
    skel->add_option("--in", in_path, "input stream CSV")->required();
    skel->add_option("--delta-skel", delta_skel, "bin width")->required();
    skel->add_option("--support", support, "kernel support bound s")->required();
    skel->add_option("--alpha-skel", alpha_skel, "edge-test level in (0,1]")->required();
    skel->add_option("--out", out_path, "output skeleton JSON")->required();
    skel->add_option("--dot", dot_path, "optional DOT output");

    // graph
    double delta_graph = 0.25, alpha_graph = 0.05;
    std::optional<double> alpha_vertex;
    auto* graph = app.add_subcommand("graph", "estimate vertex/edge weights given a skeleton");
    graph->add_option("--in", in_path, "input stream CSV")->required();
    graph->add_option("--skeleton", skeleton_path, "skeleton JSON (or model JSON for its true skeleton)")
        ->required();
    graph->add_option("--delta-graph", delta_graph, "bin width")->required();
    graph->add_option("--support", support, "kernel support bound s")->required();
    graph->add_option("--alpha-graph", alpha_graph, "edge significance level")->required();
    graph->add_option("--alpha-vertex", alpha_vertex, "vertex significance level (default: alpha-graph)");
    graph->add_option("--out", out_path, "output graph-estimate JSON")->required();
    graph->add_option("--dot", dot_path, "optional DOT output");
    graph->add_option("--grid-csv", grid_csv, "optional kernel grid-estimate CSV");

    // fit
    std::string graph_in, family = "auto", fits_csv;
    auto* fit = app.add_subcommand("fit", "fit parametric kernels to a graph estimate");
    fit->add_option("--graph", graph_in, "graph-estimate JSON")->required();
    fit->add_option("--family", family, "auto|gamma|uniform|exp")
        ->check(CLI::IsMember({"auto", "gamma", "uniform", "exp"}));
    fit->add_option("--out", out_path, "assembled model JSON")->required();
    fit->add_option("--fits-csv", fits_csv, "optional per-edge fit table CSV");

    // analyze
    std::string analyze_model, analyze_graph;
    auto* analyze = app.add_subcommand("analyze", "graph analytics of a model or estimate");
    auto* opt_m = analyze->add_option("--model", analyze_model, "model JSON");
    analyze->add_option("--graph", analyze_graph, "graph JSON (estimate or weighted graph)")
        ->excludes(opt_m);

    // study
    int nsim = 50, jobs = 1;
    bool with_estimated = false;
    std::vector<double> delta_skel_list{1.0}, alpha_skel_list{0.05};
    auto* study = app.add_subcommand("study", "replication study: simulate/estimate/report");
    study->add_option("--model", model_path, "model JSON")->required();
    study->add_option("--nsim", nsim, "number of replications")->check(CLI::PositiveNumber);
    study->add_option("--horizon", horizon, "window length per replication")
        ->required()
        ->check(CLI::PositiveNumber);
    study->add_option("--delta-skel", delta_skel_list, "skeleton bin widths");
    study->add_option("--alpha-skel", alpha_skel_list, "skeleton test levels");
    study->add_option("--delta-graph", delta_graph, "graph bin width (default 0.25)");
    study->add_option("--alpha-graph", alpha_graph, "graph significance level");
    study->add_option("--alpha-vertex", alpha_vertex, "vertex significance level");
    study->add_option("--support", support, "kernel support bound s");
    study->add_option("--seed", seed, "RNG seed (fallback: HAWKESNET_SEED, then 1)");
    study->add_option("--jobs", jobs, "parallel replications");
    study->add_flag("--coverage-estimated", with_estimated,
                    "also report coverage under estimated skeletons");
    study->add_option("--out", out_path, "report CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(model_path, horizon, burn_in, seed, out_path);
        if (skel->parsed())
            return cmd_skeleton(in_path, delta_skel, support, alpha_skel, out_path, dot_path);
        if (graph->parsed())
            return cmd_graph(in_path, skeleton_path, delta_graph, support, alpha_graph,
                             alpha_vertex, out_path, dot_path, grid_csv);
        if (fit->parsed()) return cmd_fit(graph_in, family, out_path, fits_csv);
        if (analyze->parsed()) {
            if (analyze_model.empty() && analyze_graph.empty()) {
                std::fprintf(stderr, "analyze: need --model or --graph\n");
                return 2;
            }
            return cmd_analyze(analyze_model, analyze_graph);
        }
        if (study->parsed())
            return cmd_study(model_path, nsim, horizon, delta_skel_list, alpha_skel_list,
                             delta_graph, alpha_graph, alpha_vertex, support, seed, jobs,
                             with_estimated, out_path);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return 0;
}
