#include "iscm/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace iscm {

json to_json(const Dag& dag) {
    json edges = json::array();
    for (const auto& [a, b] : dag.edges()) edges.push_back({a + 1, b + 1});
    return json{{"d", dag.vertex_count()}, {"edges", edges}};
}

Dag dag_from_json(const json& j) {
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges"))
        edges.emplace_back(e.at(0).get<int>() - 1, e.at(1).get<int>() - 1);
    return Dag(j.at("d").get<int>(), std::move(edges));
}

json to_json(const Cpdag& cpdag) {
    json directed = json::array();
    for (const auto& [a, b] : cpdag.directed) directed.push_back({a + 1, b + 1});
    json undirected = json::array();
    for (const auto& [a, b] : cpdag.undirected) undirected.push_back({a + 1, b + 1});
    return json{{"d", cpdag.d}, {"directed", directed}, {"undirected", undirected}};
}

Cpdag cpdag_from_json(const json& j) {
    Cpdag out;
    out.d = j.at("d").get<int>();
    for (const auto& e : j.at("directed"))
        out.directed.emplace_back(e.at(0).get<int>() - 1, e.at(1).get<int>() - 1);
    for (const auto& e : j.at("undirected"))
        out.undirected.emplace_back(e.at(0).get<int>() - 1, e.at(1).get<int>() - 1);
    return out;
}

json weights_to_json(const WeightMatrix& w) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < w.cols(); ++j) row.push_back(w(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

WeightMatrix weights_from_json(const json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) throw std::invalid_argument("weights_from_json: empty matrix");
    const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
    WeightMatrix w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    return w;
}

json to_json(const ImpliedLinearModel& m) {
    json noise = json::array();
    json marginal = json::array();
    for (Eigen::Index i = 0; i < m.noise_var.size(); ++i) {
        noise.push_back(m.noise_var(i));
        marginal.push_back(m.marginal_var(i));
    }
    return json{{"weights", weights_to_json(m.weights)},
                {"noise_var", noise},
                {"marginal_var", marginal}};
}

json to_json(const NoiseSpec& spec) {
    return json{{"law", spec.law == NoiseSpec::Law::Gaussian ? "gaussian" : "uniform_symmetric"},
                {"param", spec.param}};
}

NoiseSpec noise_from_json(const json& j) {
    const std::string law = j.at("law").get<std::string>();
    const double param = j.at("param").get<double>();
    if (law == "gaussian") return NoiseSpec::gaussian(param);
    if (law == "uniform_symmetric") return NoiseSpec::uniform_symmetric(param);
    throw std::invalid_argument("noise_from_json: unknown law " + law);
}

json to_json(const SortabilityReport& report) {
    json per_node = json::array();
    for (Eigen::Index i = 0; i < report.per_node.size(); ++i) per_node.push_back(report.per_node(i));
    return json{{"criterion", report.criterion}, {"value", report.value}, {"per_node", per_node}};
}

json dataset_sidecar(const GenerativeSpec& spec, const Dataset& ds) {
    json j{{"seed", ds.seed},
           {"regime", ds.regime},
           {"graph", to_json(spec.dag)},
           {"noise", to_json(spec.noise.front())},
           {"n", ds.n()}};
    if (spec.linear) {
        j["weights"] = weights_to_json(*spec.linear);
    } else {
        json rff = json::object();
        for (const auto& [node, m] : *spec.rff) {
            json parents = json::array();
            for (int p : m.parent_ids) parents.push_back(p + 1);
            rff[std::to_string(node + 1)] = json{{"length_scale", m.length_scale},
                                                 {"output_scale", m.output_scale},
                                                 {"features", static_cast<int>(m.alpha.size())},
                                                 {"parents", parents}};
        }
        j["rff"] = rff;
    }
    return j;
}

namespace {

void append_value(std::string& out, double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    out += buffer;
}

}  // namespace

std::string dataset_to_csv(const Dataset& ds) {
    std::string out;
    for (int c = 0; c < ds.d(); ++c) {
        if (c) out += ',';
        out += 'x';
        out += std::to_string(c + 1);
    }
    out += '\n';
    out.reserve(out.size() + static_cast<std::size_t>(ds.n()) * static_cast<std::size_t>(ds.d()) * 20);
    for (int r = 0; r < ds.n(); ++r) {
        for (int c = 0; c < ds.d(); ++c) {
            if (c) out += ',';
            append_value(out, ds.values(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
    std::string out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            append_value(out, m(r, c));
        }
        out += '\n';
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
    file << contents;
    if (!file) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace iscm
