#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "iscm/analytic.hpp"
#include "iscm/generate.hpp"
#include "iscm/graphs.hpp"
#include "iscm/metrics.hpp"

namespace iscm {

using json = nlohmann::json;

// Graphs: {"d": int, "edges": [[i, j], ...]} with 1-based vertex indices.
json to_json(const Dag& dag);
Dag dag_from_json(const json& j);

// {"d", "directed": [[i, j], ...], "undirected": [[i, j], ...]}, 1-based.
json to_json(const Cpdag& cpdag);
Cpdag cpdag_from_json(const json& j);

// Dense array of arrays; row i = source, column j = target.
json weights_to_json(const WeightMatrix& w);
WeightMatrix weights_from_json(const json& j);

// {"weights", "noise_var", "marginal_var"}.
json to_json(const ImpliedLinearModel& m);

json to_json(const NoiseSpec& spec);
NoiseSpec noise_from_json(const json& j);

json to_json(const SortabilityReport& report);

// Dataset sidecar: {"seed", "regime", "graph", "weights"|"rff", "noise", "n"}.
json dataset_sidecar(const GenerativeSpec& spec, const Dataset& ds);

// CSV with header x1,...,xd and 17 significant digits per value.
std::string dataset_to_csv(const Dataset& ds);
std::string matrix_to_csv(const Eigen::MatrixXd& m);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace iscm
