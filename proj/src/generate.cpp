#include "iscm/generate.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace iscm {

std::string to_string(Regime regime) {
    switch (regime) {
        case Regime::Raw: return "raw";
        case Regime::PostHocStandardized: return "standardized";
        case Regime::InternallyStandardized: return "iscm";
    }
    return "unknown";
}

GenerativeSpec GenerativeSpec::make_linear(Dag dag, WeightMatrix weights, NoiseSpec noise,
                                           Regime regime, Standardization standardization) {
    GenerativeSpec spec;
    spec.dag = std::move(dag);
    spec.linear = std::move(weights);
    spec.noise.assign(static_cast<std::size_t>(spec.dag.vertex_count()), noise);
    spec.regime = regime;
    spec.standardization = standardization;
    spec.validate();
    return spec;
}

GenerativeSpec GenerativeSpec::make_rff(Dag dag, std::map<int, RffMechanism> mechanisms,
                                        NoiseSpec noise, Regime regime) {
    GenerativeSpec spec;
    spec.dag = std::move(dag);
    spec.rff = std::move(mechanisms);
    spec.noise.assign(static_cast<std::size_t>(spec.dag.vertex_count()), noise);
    spec.regime = regime;
    spec.standardization = Standardization::Empirical;
    spec.validate();
    return spec;
}

Eigen::VectorXd GenerativeSpec::noise_variances() const {
    Eigen::VectorXd v(dag.vertex_count());
    for (int i = 0; i < dag.vertex_count(); ++i) v(i) = noise[static_cast<std::size_t>(i)].variance();
    return v;
}

LinearScm GenerativeSpec::to_linear_scm() const {
    if (!linear) throw std::logic_error("GenerativeSpec: not a linear mechanism");
    return LinearScm(dag, *linear, noise_variances());
}

void GenerativeSpec::validate() const {
    if (linear.has_value() == rff.has_value())
        throw std::invalid_argument("GenerativeSpec: exactly one mechanism family must be set");
    if (static_cast<int>(noise.size()) != dag.vertex_count())
        throw std::invalid_argument("GenerativeSpec: one noise spec per node required");
    if (linear) validate_weights(dag, *linear);
    if (rff) {
        for (int v = 0; v < dag.vertex_count(); ++v) {
            const bool has_parents = !dag.parents(v).empty();
            if (has_parents != (rff->count(v) > 0))
                throw std::invalid_argument("GenerativeSpec: RFF mechanisms must cover exactly the non-root nodes");
        }
    }
    if (standardization == Standardization::Population && rff)
        throw std::invalid_argument("GenerativeSpec: population standardization unavailable for RFF mechanisms");
    for (const auto& [node, intervention] : interventions) {
        if (node < 0 || node >= dag.vertex_count())
            throw std::invalid_argument("GenerativeSpec: intervened node out of range");
        if (intervention.kind == Intervention::Kind::Linear &&
            intervention.parent_weights.size() != static_cast<Eigen::Index>(dag.parents(node).size()))
            throw std::invalid_argument("GenerativeSpec: intervention weight count mismatch");
    }
}

namespace {

// Mechanism value for one node given the (possibly standardized) parent
// columns; interventions replace the assignment.
Eigen::VectorXd node_assignment(const GenerativeSpec& spec, int v, const Eigen::MatrixXd& inputs,
                                const Eigen::VectorXd& noise) {
    const int n = static_cast<int>(inputs.rows());
    if (auto it = spec.interventions.find(v); it != spec.interventions.end()) {
        const Intervention& intervention = it->second;
        if (intervention.kind == Intervention::Kind::Constant)
            return Eigen::VectorXd::Constant(n, intervention.value);
        Eigen::VectorXd out = noise;
        const auto& parents = spec.dag.parents(v);
        for (std::size_t k = 0; k < parents.size(); ++k)
            out += intervention.parent_weights(static_cast<Eigen::Index>(k)) * inputs.col(parents[k]);
        return out;
    }
    Eigen::VectorXd out = noise;
    if (spec.linear) {
        for (int p : spec.dag.parents(v)) out += (*spec.linear)(p, v) * inputs.col(p);
    } else if (!spec.dag.parents(v).empty()) {
        const RffMechanism& m = spec.rff->at(v);
        Eigen::VectorXd parent_values(static_cast<Eigen::Index>(m.parent_ids.size()));
        for (int i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < m.parent_ids.size(); ++k)
                parent_values(static_cast<Eigen::Index>(k)) = inputs(i, m.parent_ids[k]);
            out(i) += m.eval(parent_values);
        }
    }
    return out;
}

void require_frozen_stats(const GenerativeSpec& spec) {
    if (!spec.interventions.empty() && (!spec.frozen_mean || !spec.frozen_scale))
        throw std::invalid_argument("missing standardization statistics; use apply_intervention");
}

std::pair<double, double> column_moments(const Eigen::VectorXd& col) {
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(col.size());
    return {mean, var};
}

}  // namespace

Dataset sample_raw(const GenerativeSpec& spec, int n, RandomStream& rng) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("sample_raw: need n >= 1");
    const int d = spec.dag.vertex_count();
    Eigen::MatrixXd values(n, d);
    for (int v : topological_order(spec.dag)) {
        const Eigen::VectorXd noise = sample_noise(spec.noise[static_cast<std::size_t>(v)], n, rng);
        values.col(v) = node_assignment(spec, v, values, noise);
    }
    Dataset ds;
    ds.values = std::move(values);
    ds.seed = rng.seed();
    ds.regime = to_string(Regime::Raw);
    ds.spec_fingerprint = spec_fingerprint(spec);
    return ds;
}

Dataset standardize_posthoc(const Dataset& ds) {
    Dataset out = ds;
    for (int c = 0; c < ds.d(); ++c) {
        const auto [mean, var] = column_moments(ds.values.col(c));
        if (!(var > 0.0)) throw std::runtime_error("standardize_posthoc: zero-variance column");
        out.values.col(c) = (ds.values.col(c).array() - mean) / std::sqrt(var);
    }
    out.regime = to_string(Regime::PostHocStandardized);
    return out;
}

Dataset sample_iscm(const GenerativeSpec& spec, int n, RandomStream& rng) {
    spec.validate();
    require_frozen_stats(spec);
    const int d = spec.dag.vertex_count();
    Dataset ds;
    ds.seed = rng.seed();
    ds.regime = to_string(Regime::InternallyStandardized);
    ds.spec_fingerprint = spec_fingerprint(spec);

    if (spec.standardization == Standardization::Population) {
        if (!spec.linear)
            throw std::invalid_argument("sample_iscm: population standardization requires linear mechanisms");
        if (n < 1) throw std::invalid_argument("sample_iscm: need n >= 1");
        if (spec.interventions.empty()) {
            // Exact implied model of the linear iSCM, sampled forward. Shares
            // the raw sampler's noise protocol: noise variance sigma^2/Var
            // means each node consumes the same standard normal draws.
            const ImpliedLinearModel implied = implied_iscm(spec.to_linear_scm());
            Eigen::MatrixXd values(n, d);
            for (int v : topological_order(spec.dag)) {
                const NoiseSpec& law = spec.noise[static_cast<std::size_t>(v)];
                const NoiseSpec implied_law =
                    law.law == NoiseSpec::Law::Gaussian
                        ? NoiseSpec::gaussian(implied.noise_var(v))
                        : NoiseSpec::uniform_symmetric(law.param / std::sqrt(implied.marginal_var(v)));
                Eigen::VectorXd col = sample_noise(implied_law, n, rng);
                for (int p : spec.dag.parents(v)) col += implied.weights(p, v) * values.col(p);
                values.col(v) = col;
            }
            ds.values = std::move(values);
            return ds;
        }
        // Intervened system: standardize every latent value with the frozen
        // observational statistics.
        Eigen::MatrixXd standardized(n, d);
        for (int v : topological_order(spec.dag)) {
            const Eigen::VectorXd noise = sample_noise(spec.noise[static_cast<std::size_t>(v)], n, rng);
            const Eigen::VectorXd latent = node_assignment(spec, v, standardized, noise);
            standardized.col(v) =
                (latent.array() - (*spec.frozen_mean)(v)) / (*spec.frozen_scale)(v);
        }
        ds.values = std::move(standardized);
        return ds;
    }

    if (n < 2) throw std::invalid_argument("sample_iscm: empirical standardization needs n >= 2");
    Eigen::MatrixXd standardized(n, d);
    for (int v : topological_order(spec.dag)) {
        const Eigen::VectorXd noise = sample_noise(spec.noise[static_cast<std::size_t>(v)], n, rng);
        const Eigen::VectorXd latent = node_assignment(spec, v, standardized, noise);
        double mean;
        double scale;
        if (spec.interventions.empty()) {
            const auto [m, var] = column_moments(latent);
            if (!(var > 0.0)) throw std::runtime_error("sample_iscm: zero-variance latent column");
            mean = m;
            scale = std::sqrt(var);
        } else {
            mean = (*spec.frozen_mean)(v);
            scale = (*spec.frozen_scale)(v);
        }
        standardized.col(v) = (latent.array() - mean) / scale;
    }
    ds.values = std::move(standardized);
    return ds;
}

Dataset sample_standardized_scm(const GenerativeSpec& spec, int n, RandomStream& rng) {
    spec.validate();
    require_frozen_stats(spec);
    GenerativeSpec raw_spec = spec;
    raw_spec.regime = Regime::Raw;
    Dataset raw = sample_raw(raw_spec, n, rng);
    Dataset out;
    if (!spec.interventions.empty()) {
        out = raw;
        for (int c = 0; c < out.d(); ++c)
            out.values.col(c) =
                (raw.values.col(c).array() - (*spec.frozen_mean)(c)) / (*spec.frozen_scale)(c);
    } else if (spec.standardization == Standardization::Population) {
        const ImpliedLinearModel implied = implied_standardized_scm(spec.to_linear_scm());
        out = raw;
        for (int c = 0; c < out.d(); ++c)
            out.values.col(c) = raw.values.col(c) / std::sqrt(implied.marginal_var(c));
    } else {
        out = standardize_posthoc(raw);
    }
    out.regime = to_string(Regime::PostHocStandardized);
    out.spec_fingerprint = spec_fingerprint(spec);
    return out;
}

Dataset sample_dataset(const GenerativeSpec& spec, int n, RandomStream& rng) {
    switch (spec.regime) {
        case Regime::Raw: return sample_raw(spec, n, rng);
        case Regime::PostHocStandardized: return sample_standardized_scm(spec, n, rng);
        case Regime::InternallyStandardized: return sample_iscm(spec, n, rng);
    }
    throw std::logic_error("sample_dataset: unknown regime");
}

GenerativeSpec apply_intervention(const GenerativeSpec& spec, int node, Intervention intervention,
                                  int pilot_n, RandomStream* pilot_rng) {
    GenerativeSpec out = spec;
    if (node < 0 || node >= spec.dag.vertex_count())
        throw std::invalid_argument("apply_intervention: node out of range");
    if (intervention.kind == Intervention::Kind::Linear &&
        intervention.parent_weights.size() != static_cast<Eigen::Index>(spec.dag.parents(node).size()))
        throw std::invalid_argument("apply_intervention: intervention weight count mismatch");

    if (!out.frozen_mean && spec.regime != Regime::Raw) {
        const int d = spec.dag.vertex_count();
        GenerativeSpec observational = spec;
        observational.interventions.clear();
        if (spec.standardization == Standardization::Population) {
            const ImpliedLinearModel implied = spec.regime == Regime::InternallyStandardized
                                                   ? implied_iscm(spec.to_linear_scm())
                                                   : implied_standardized_scm(spec.to_linear_scm());
            out.frozen_mean = Eigen::VectorXd::Zero(d);
            out.frozen_scale = implied.marginal_var.cwiseSqrt();
        } else {
            if (pilot_rng == nullptr)
                throw std::invalid_argument(
                    "apply_intervention: empirical standardization statistics need a pilot stream");
            if (pilot_n < 2) throw std::invalid_argument("apply_intervention: need pilot_n >= 2");
            // Track the standardization constants an observational run uses.
            Eigen::VectorXd mean(d);
            Eigen::VectorXd scale(d);
            Eigen::MatrixXd standardized(pilot_n, d);
            for (int v : topological_order(spec.dag)) {
                const Eigen::VectorXd noise =
                    sample_noise(spec.noise[static_cast<std::size_t>(v)], pilot_n, *pilot_rng);
                const Eigen::VectorXd latent = node_assignment(observational, v, standardized, noise);
                const auto [m, var] = column_moments(latent);
                if (!(var > 0.0)) throw std::runtime_error("apply_intervention: zero-variance pilot column");
                mean(v) = m;
                scale(v) = std::sqrt(var);
                if (spec.regime == Regime::InternallyStandardized) {
                    standardized.col(v) = (latent.array() - mean(v)) / scale(v);
                } else {
                    standardized.col(v) = latent;  // raw parents feed raw children
                }
            }
            out.frozen_mean = std::move(mean);
            out.frozen_scale = std::move(scale);
        }
    }
    out.interventions[node] = std::move(intervention);
    out.validate();
    return out;
}

std::string spec_fingerprint(const GenerativeSpec& spec) {
    std::ostringstream os;
    os << spec.dag.vertex_count() << '|';
    for (const auto& [a, b] : spec.dag.edges()) os << a << '>' << b << ';';
    os << '|' << static_cast<int>(spec.regime) << '|' << static_cast<int>(spec.standardization) << '|';
    if (spec.linear) {
        for (const auto& [a, b] : spec.dag.edges()) os << (*spec.linear)(a, b) << ',';
    } else {
        os << "rff:" << spec.rff->size();
        for (const auto& [v, m] : *spec.rff)
            os << '#' << v << ':' << m.length_scale << ':' << m.output_scale << ':' << m.alpha.sum();
    }
    os << '|';
    for (const auto& noise : spec.noise) os << static_cast<int>(noise.law) << ':' << noise.param << ',';
    for (const auto& [node, intervention] : spec.interventions)
        os << "|do" << node << ':' << static_cast<int>(intervention.kind) << ':' << intervention.value;
    const std::size_t h = std::hash<std::string>{}(os.str());
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

}  // namespace iscm
