#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "iscm/analytic.hpp"
#include "iscm/graphs.hpp"
#include "iscm/mechanisms.hpp"
#include "iscm/random.hpp"

namespace iscm {

enum class Regime { Raw, PostHocStandardized, InternallyStandardized };
enum class Standardization { Population, Empirical };

std::string to_string(Regime regime);

// Replacement assignment for one node; parents stay those of the original
// graph. Constant ignores parents and noise, Linear keeps additive noise.
struct Intervention {
    enum class Kind { Constant, Linear };
    Kind kind = Kind::Constant;
    double value = 0.0;              // Constant
    Eigen::VectorXd parent_weights;  // Linear, one weight per parent (dag order)
};

// Everything needed to draw a dataset: graph, mechanism family, per-node
// noise, regime, and how standardization statistics are obtained.
// Population statistics exist in closed form only for linear mechanisms.
struct GenerativeSpec {
    Dag dag;
    std::optional<WeightMatrix> linear;          // exactly one of linear/rff is set
    std::optional<std::map<int, RffMechanism>> rff;
    std::vector<NoiseSpec> noise;                // size d
    Regime regime = Regime::Raw;
    Standardization standardization = Standardization::Empirical;

    // Interventions with the standardization constants frozen at their
    // observational values (filled by apply_intervention).
    std::map<int, Intervention> interventions;
    std::optional<Eigen::VectorXd> frozen_mean;
    std::optional<Eigen::VectorXd> frozen_scale;

    static GenerativeSpec make_linear(Dag dag, WeightMatrix weights, NoiseSpec noise,
                                      Regime regime,
                                      Standardization standardization = Standardization::Empirical);
    static GenerativeSpec make_rff(Dag dag, std::map<int, RffMechanism> mechanisms,
                                   NoiseSpec noise, Regime regime);

    bool is_linear() const { return linear.has_value(); }
    Eigen::VectorXd noise_variances() const;
    LinearScm to_linear_scm() const;  // linear mechanisms only
    void validate() const;
};

struct Dataset {
    Eigen::MatrixXd values;  // n rows, d columns in vertex order
    std::uint64_t seed = 0;
    std::string regime;
    std::string spec_fingerprint;

    int n() const { return static_cast<int>(values.rows()); }
    int d() const { return static_cast<int>(values.cols()); }
};

// Forward sampling in topological order; noise for each node drawn as one
// contiguous block so all regimes consume identical noise under one seed.
Dataset sample_raw(const GenerativeSpec& spec, int n, RandomStream& rng);

// Column-wise z-scoring with the divide-by-n variance estimator.
Dataset standardize_posthoc(const Dataset& ds);

// Algorithm-style iSCM sampling: each node standardized right after it is
// generated. Population mode forward-samples the exact implied model;
// Empirical mode standardizes with the batch statistics of the n samples.
Dataset sample_iscm(const GenerativeSpec& spec, int n, RandomStream& rng);

// sample_raw composed with post-hoc standardization (Population mode scales
// by the analytic standard deviations instead).
Dataset sample_standardized_scm(const GenerativeSpec& spec, int n, RandomStream& rng);

// Dispatch on spec.regime.
Dataset sample_dataset(const GenerativeSpec& spec, int n, RandomStream& rng);

// Spec with f_node replaced and all standardization constants pinned to the
// observational ones. Population statistics are computed analytically
// (linear mechanisms); Empirical mode estimates them from a pilot sample of
// pilot_n observational draws and requires a stream.
GenerativeSpec apply_intervention(const GenerativeSpec& spec, int node, Intervention intervention,
                                  int pilot_n = 10000, RandomStream* pilot_rng = nullptr);

std::string spec_fingerprint(const GenerativeSpec& spec);

}  // namespace iscm
