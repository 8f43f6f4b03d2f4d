#include "hawkesnet/io.hpp"

#include "hawkesnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hawkes {

using nlohmann::json;

namespace {

std::string format_time(double t) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", t);
    return buf;
}

void require_keys(const json& j, const std::string& where,
                  std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {}) {
    for (const char* key : required) {
        if (!j.contains(key)) throw SchemaError(where, std::string("missing field '") + key + "'");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = std::any_of(required.begin(), required.end(),
                                 [&](const char* k) { return it.key() == k; }) ||
                     std::any_of(optional.begin(), optional.end(),
                                 [&](const char* k) { return it.key() == k; });
        if (!known) throw SchemaError(where, "unknown field '" + it.key() + "'");
    }
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError(path, e.what());
    }
    return j;
}

void dump_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidConfig("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

} // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw InvalidConfig("cannot write file: " + path);
    out << content;
}

EventStream read_stream(const std::string& path, int declared_d) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open file: " + path);

    EventStream s;
    s.d = declared_d;
    long line_no = 0;
    std::string line;
    bool header_seen = false;
    double meta_horizon = 0.0;
    double prev_time = -std::numeric_limits<double>::infinity();

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string tok;
            while (meta >> tok) {
                if (tok.rfind("d=", 0) == 0 && declared_d == 0) s.d = std::stoi(tok.substr(2));
                if (tok.rfind("horizon=", 0) == 0) meta_horizon = std::stod(tok.substr(8));
            }
            continue;
        }
        if (!header_seen) {
            std::string squashed;
            for (char c : line) {
                if (!std::isspace(static_cast<unsigned char>(c))) squashed += c;
            }
            if (squashed != "time,component")
                throw ParseError(line_no, "expected header 'time,component'");
            header_seen = true;
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(line_no, "expected 'time,component'");
        double t;
        long comp;
        try {
            t = std::stod(line.substr(0, comma));
            comp = std::stol(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw ParseError(line_no, "cannot parse row '" + line + "'");
        }
        if (!std::isfinite(t) || t <= 0.0) throw ParseError(line_no, "time must be positive");
        if (t < prev_time) throw UnsortedEvents(line_no);
        prev_time = t;
        if (comp < 1) throw BadComponent(line_no, "component must be >= 1");
        if (declared_d > 0 && comp > declared_d)
            throw BadComponent(line_no, "component " + std::to_string(comp) + " exceeds d=" +
                                            std::to_string(declared_d));
        s.events.push_back({t, static_cast<int>(comp)});
        if (declared_d == 0) s.d = std::max(s.d, static_cast<int>(comp));
    }
    if (!header_seen) throw ParseError(1, "missing 'time,component' header");
    s.horizon = meta_horizon > 0.0 ? meta_horizon
                                   : (s.events.empty() ? 0.0 : s.events.back().time);
    return s;
}

void write_stream(const EventStream& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidConfig("cannot write file: " + path);
    out << "# d=" << s.d << " horizon=" << format_time(s.horizon) << "\n";
    out << "time,component\n";
    for (const auto& e : s.events) out << format_time(e.time) << "," << e.component << "\n";
}

namespace {

json kernel_params_json(const KernelSpec& w) {
    return std::visit(
        [](const auto& k) -> json {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GammaDensity>)
                return json{{"shape", k.shape}, {"rate", k.rate}};
            else if constexpr (std::is_same_v<T, UniformWindow>)
                return json{{"lo", k.lo}, {"hi", k.hi}};
            else if constexpr (std::is_same_v<T, ExponentialDecay>)
                return json{{"rate", k.rate}};
            else
                return json{{"delta", k.delta}, {"values", k.values}};
        },
        w);
}

KernelSpec kernel_from_json(const std::string& family, const json& params, const std::string& where) {
    if (family == "gamma") {
        require_keys(params, where, {"shape", "rate"});
        return GammaDensity{params.at("shape").get<double>(), params.at("rate").get<double>()};
    }
    if (family == "uniform") {
        require_keys(params, where, {"lo", "hi"});
        return UniformWindow{params.at("lo").get<double>(), params.at("hi").get<double>()};
    }
    if (family == "exp") {
        require_keys(params, where, {"rate"});
        return ExponentialDecay{params.at("rate").get<double>()};
    }
    if (family == "grid") {
        require_keys(params, where, {"delta", "values"});
        return GridKernel{params.at("delta").get<double>(),
                          params.at("values").get<std::vector<double>>()};
    }
    throw SchemaError(where, "unknown kernel family '" + family + "'");
}

} // namespace

json model_to_json(const HawkesModel& m) {
    json kernels = json::array();
    for (const auto& [key, rk] : m.kernels()) {
        kernels.push_back(json{{"from", key.first},
                               {"to", key.second},
                               {"a", rk.a},
                               {"family", kernel_family_name(rk.w)},
                               {"params", kernel_params_json(rk.w)}});
    }
    return json{{"d", m.dim()}, {"eta", m.eta()}, {"kernels", kernels}};
}

HawkesModel model_from_json(const json& j) {
    require_keys(j, "$", {"d", "eta", "kernels"});
    if (!j.at("d").is_number_integer()) throw SchemaError("$.d", "must be an integer");
    int d = j.at("d").get<int>();
    if (!j.at("eta").is_array()) throw SchemaError("$.eta", "must be an array");
    auto eta = j.at("eta").get<std::vector<double>>();
    std::map<EdgeKey, ReproductionKernel> kernels;
    int idx = 0;
    for (const auto& k : j.at("kernels")) {
        std::string where = "$.kernels[" + std::to_string(idx++) + "]";
        require_keys(k, where, {"from", "to", "a", "family", "params"});
        double a = k.at("a").get<double>();
        if (!(a > 0.0)) throw SchemaError(where + ".a", "branching coefficient must be positive");
        EdgeKey key{k.at("from").get<int>(), k.at("to").get<int>()};
        if (kernels.count(key)) throw SchemaError(where, "duplicate kernel pair");
        kernels[key] = ReproductionKernel{
            a, kernel_from_json(k.at("family").get<std::string>(), k.at("params"), where + ".params")};
    }
    try {
        return HawkesModel(d, std::move(eta), std::move(kernels));
    } catch (const Error& e) {
        throw SchemaError("$", e.what());
    }
}

HawkesModel read_model(const std::string& path) { return model_from_json(load_json(path)); }

void write_model(const HawkesModel& m, const std::string& path) {
    dump_json(model_to_json(m), path);
}

json skeleton_estimate_to_json(const SkeletonEstimate& est) {
    const auto d = est.a_hat.rows();
    json a = json::array(), s = json::array(), edges = json::array();
    for (long i = 0; i < d; ++i) {
        json arow = json::array(), srow = json::array();
        for (long j = 0; j < d; ++j) {
            arow.push_back(est.a_hat(i, j));
            srow.push_back(est.sigma_hat(i, j));
        }
        a.push_back(arow);
        s.push_back(srow);
    }
    for (const auto& [i, j] : est.skeleton.edges) edges.push_back(json::array({i, j}));
    return json{{"d", est.skeleton.d},         {"delta_skel", est.delta},
                {"support", est.support},      {"alpha_skel", est.alpha_skel},
                {"a_hat", a},                  {"sigma_hat", s},
                {"edges", edges}};
}

SkeletonEstimate skeleton_estimate_from_json(const json& j) {
    require_keys(j, "$", {"d", "delta_skel", "support", "alpha_skel", "a_hat", "sigma_hat", "edges"});
    SkeletonEstimate est;
    est.skeleton.d = j.at("d").get<int>();
    est.delta = j.at("delta_skel").get<double>();
    est.support = j.at("support").get<double>();
    est.alpha_skel = j.at("alpha_skel").get<double>();
    const int d = est.skeleton.d;
    est.a_hat.resize(d, d);
    est.sigma_hat.resize(d, d);
    for (int i = 0; i < d; ++i) {
        for (int jj = 0; jj < d; ++jj) {
            est.a_hat(i, jj) = j.at("a_hat").at(i).at(jj).get<double>();
            est.sigma_hat(i, jj) = j.at("sigma_hat").at(i).at(jj).get<double>();
        }
    }
    for (const auto& e : j.at("edges")) {
        est.skeleton.edges.insert({e.at(0).get<int>(), e.at(1).get<int>()});
    }
    return est;
}

json graph_estimate_to_json(const GraphEstimate& est) {
    json vertices = json::array();
    for (const auto& v : est.vertices) {
        vertices.push_back(json{{"j", v.j},
                                {"eta_hat", v.eta_hat},
                                {"sigma", v.sigma},
                                {"ci_lo", v.ci_lo},
                                {"ci_hi", v.ci_hi},
                                {"significant", v.significant},
                                {"rank_deficient", v.rank_deficient}});
    }
    json edges = json::array();
    for (const auto& e : est.edges) {
        edges.push_back(json{{"from", e.from},
                             {"to", e.to},
                             {"a_hat", e.a_hat},
                             {"sigma", e.sigma},
                             {"ci_lo", e.ci_lo},
                             {"ci_hi", e.ci_hi},
                             {"significant", e.significant},
                             {"h_grid", e.h_grid}});
    }
    std::vector<double> lambda(est.lambda_emp.data(), est.lambda_emp.data() + est.lambda_emp.size());
    return json{{"d", est.d},
                {"delta_graph", est.delta},
                {"support", est.support},
                {"p", est.p},
                {"alpha_graph", est.alpha_graph},
                {"alpha_vertex", est.alpha_vertex},
                {"horizon", est.horizon},
                {"lambda_emp", lambda},
                {"vertices", vertices},
                {"edges", edges}};
}

GraphEstimate graph_estimate_from_json(const json& j) {
    require_keys(j, "$",
                 {"d", "delta_graph", "support", "p", "alpha_graph", "alpha_vertex", "horizon",
                  "lambda_emp", "vertices", "edges"});
    GraphEstimate est;
    est.d = j.at("d").get<int>();
    est.delta = j.at("delta_graph").get<double>();
    est.support = j.at("support").get<double>();
    est.p = j.at("p").get<int>();
    est.alpha_graph = j.at("alpha_graph").get<double>();
    est.alpha_vertex = j.at("alpha_vertex").get<double>();
    est.horizon = j.at("horizon").get<double>();
    auto lambda = j.at("lambda_emp").get<std::vector<double>>();
    est.lambda_emp = Eigen::Map<Eigen::VectorXd>(lambda.data(), static_cast<long>(lambda.size()));
    est.skeleton.d = est.d;
    for (const auto& v : j.at("vertices")) {
        require_keys(v, "$.vertices[]",
                     {"j", "eta_hat", "sigma", "ci_lo", "ci_hi", "significant", "rank_deficient"});
        VertexEstimate vx;
        vx.j = v.at("j").get<int>();
        vx.eta_hat = v.at("eta_hat").get<double>();
        vx.sigma = v.at("sigma").get<double>();
        vx.ci_lo = v.at("ci_lo").get<double>();
        vx.ci_hi = v.at("ci_hi").get<double>();
        vx.significant = v.at("significant").get<bool>();
        vx.rank_deficient = v.at("rank_deficient").get<bool>();
        est.vertices.push_back(vx);
    }
    for (const auto& e : j.at("edges")) {
        require_keys(e, "$.edges[]",
                     {"from", "to", "a_hat", "sigma", "ci_lo", "ci_hi", "significant", "h_grid"});
        EdgeEstimate ed;
        ed.from = e.at("from").get<int>();
        ed.to = e.at("to").get<int>();
        ed.a_hat = e.at("a_hat").get<double>();
        ed.sigma = e.at("sigma").get<double>();
        ed.ci_lo = e.at("ci_lo").get<double>();
        ed.ci_hi = e.at("ci_hi").get<double>();
        ed.significant = e.at("significant").get<bool>();
        ed.h_grid = e.at("h_grid").get<std::vector<double>>();
        est.edges.push_back(std::move(ed));
        est.skeleton.edges.insert({est.edges.back().from, est.edges.back().to});
    }
    return est;
}

json graph_to_json(const WeightedGraph& g) {
    json edges = json::array();
    for (const auto& [key, w] : g.edge_weights)
        edges.push_back(json{{"from", key.first}, {"to", key.second}, {"a", w}});
    return json{{"d", g.d}, {"eta", g.vertex_weights}, {"edges", edges}};
}

WeightedGraph graph_from_json(const json& j) {
    require_keys(j, "$", {"d", "eta", "edges"});
    WeightedGraph g;
    g.d = j.at("d").get<int>();
    g.vertex_weights = j.at("eta").get<std::vector<double>>();
    for (const auto& e : j.at("edges")) {
        require_keys(e, "$.edges[]", {"from", "to", "a"});
        g.edge_weights[{e.at("from").get<int>(), e.at("to").get<int>()}] = e.at("a").get<double>();
    }
    return g;
}

namespace {

double max_abs_weight(const std::map<EdgeKey, double>& edges) {
    double m = 0.0;
    for (const auto& [k, w] : edges) m = std::max(m, std::fabs(w));
    return m > 0.0 ? m : 1.0;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

std::string export_dot(const Skeleton& g) {
    std::ostringstream os;
    os << "digraph hawkes_skeleton {\n  rankdir=LR;\n";
    for (int v = 1; v <= g.d; ++v) os << "  " << v << " [shape=circle];\n";
    for (const auto& [i, j] : g.edges) os << "  " << i << " -> " << j << ";\n";
    os << "}\n";
    return os.str();
}

std::string export_dot(const WeightedGraph& g) {
    std::ostringstream os;
    os << "digraph hawkes_graph {\n  rankdir=LR;\n";
    for (int v = 1; v <= g.d; ++v) {
        double eta = g.vertex_weights[static_cast<std::size_t>(v - 1)];
        os << "  " << v << " [shape=circle, width=" << (eta > 0.0 ? "0.9" : "0.4")
           << ", label=\"" << v << "\\neta=" << fmt2(eta) << "\"];\n";
    }
    double scale = max_abs_weight(g.edge_weights);
    for (const auto& [key, w] : g.edge_weights) {
        os << "  " << key.first << " -> " << key.second << " [penwidth="
           << fmt2(0.5 + 4.0 * std::fabs(w) / scale) << ", label=\"" << fmt2(w) << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

std::string export_dot(const GraphEstimate& est) {
    std::ostringstream os;
    os << "digraph hawkes_graph_estimate {\n  rankdir=LR;\n";
    for (const auto& v : est.vertices) {
        os << "  " << v.j << " [shape=circle, width=" << (v.significant ? "0.9" : "0.4")
           << ", label=\"" << v.j << "\\neta=" << fmt2(v.eta_hat) << "\"];\n";
    }
    double scale = 1.0;
    for (const auto& e : est.edges) scale = std::max(scale, std::fabs(e.a_hat));
    for (const auto& e : est.edges) {
        os << "  " << e.from << " -> " << e.to << " [penwidth="
           << fmt2(0.5 + 4.0 * std::fabs(e.a_hat) / scale) << ", label=\"" << fmt2(e.a_hat) << "\"";
        if (!e.significant) os << ", style=dashed";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace hawkes
