#include "iscm/mechanisms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace iscm {

NoiseSpec NoiseSpec::gaussian(double variance) {
    if (!(variance > 0.0)) throw std::invalid_argument("NoiseSpec: variance must be positive");
    return NoiseSpec{Law::Gaussian, variance};
}

NoiseSpec NoiseSpec::uniform_symmetric(double half_width) {
    if (!(half_width > 0.0)) throw std::invalid_argument("NoiseSpec: half-width must be positive");
    return NoiseSpec{Law::UniformSymmetric, half_width};
}

double RffMechanism::eval(const Eigen::VectorXd& parent_values) const {
    if (parent_values.size() != omega.cols())
        throw std::invalid_argument("RffMechanism: parent dimension mismatch");
    const Eigen::ArrayXd angles = (omega * parent_values / length_scale + phase).array();
    const double m = static_cast<double>(alpha.size());
    return output_scale * std::sqrt(2.0 / m) * (angles.cos() * alpha.array()).sum();
}

double eval_rff(const RffMechanism& m, const Eigen::VectorXd& parent_values) {
    return m.eval(parent_values);
}

void validate_weights(const Dag& dag, const WeightMatrix& w) {
    const int d = dag.vertex_count();
    if (w.rows() != d || w.cols() != d)
        throw std::invalid_argument("weight matrix shape does not match vertex count");
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            const bool edge = dag.has_edge(i, j);
            const bool nonzero = w(i, j) != 0.0;
            if (edge != nonzero)
                throw std::invalid_argument("weight support does not match edge set");
        }
    }
}

WeightMatrix sample_linear_weights(const Dag& dag, double lo, double hi, RandomStream& rng) {
    if (!(lo > 0.0) || lo > hi)
        throw std::invalid_argument("sample_linear_weights: need 0 < lo <= hi");
    WeightMatrix w = WeightMatrix::Zero(dag.vertex_count(), dag.vertex_count());
    for (const auto& [from, to] : dag.edges()) {
        const double sign = rng.sign();
        w(from, to) = sign * rng.uniform(lo, hi);
    }
    return w;
}

std::map<int, RffMechanism> sample_rff_mechanisms(const Dag& dag, double l_lo, double l_hi,
                                                  double c_lo, double c_hi, int feature_count,
                                                  RandomStream& rng) {
    if (!(l_lo > 0.0) || l_lo > l_hi || !(c_lo > 0.0) || c_lo > c_hi)
        throw std::invalid_argument("sample_rff_mechanisms: invalid scale range");
    if (feature_count < 1) throw std::invalid_argument("sample_rff_mechanisms: need feature_count >= 1");
    std::map<int, RffMechanism> mechanisms;
    for (int v = 0; v < dag.vertex_count(); ++v) {
        const auto& parents = dag.parents(v);
        if (parents.empty()) continue;
        RffMechanism m;
        m.length_scale = rng.uniform(l_lo, l_hi);
        m.output_scale = rng.uniform(c_lo, c_hi);
        m.parent_ids = parents;
        m.alpha.resize(feature_count);
        for (int j = 0; j < feature_count; ++j) m.alpha(j) = rng.normal();
        m.omega.resize(feature_count, static_cast<Eigen::Index>(parents.size()));
        for (int j = 0; j < feature_count; ++j)
            for (Eigen::Index p = 0; p < m.omega.cols(); ++p) m.omega(j, p) = rng.normal();
        m.phase.resize(feature_count);
        for (int j = 0; j < feature_count; ++j) m.phase(j) = rng.uniform(0.0, 2.0 * std::numbers::pi);
        mechanisms.emplace(v, std::move(m));
    }
    return mechanisms;
}

Eigen::VectorXd sample_noise(const NoiseSpec& spec, int n, RandomStream& rng) {
    if (n < 0) throw std::invalid_argument("sample_noise: n must be nonnegative");
    Eigen::VectorXd out(n);
    if (spec.law == NoiseSpec::Law::Gaussian) {
        const double sd = std::sqrt(spec.param);
        for (int i = 0; i < n; ++i) out(i) = sd * rng.normal();
    } else {
        for (int i = 0; i < n; ++i) out(i) = rng.uniform(-spec.param, spec.param);
    }
    return out;
}

WeightMatrix mooij_rescale(const WeightMatrix& w, const Dag& dag) {
    validate_weights(dag, w);
    WeightMatrix out = w;
    for (int v = 0; v < dag.vertex_count(); ++v) {
        const auto& parents = dag.parents(v);
        if (parents.empty()) continue;
        double sum_sq = 0.0;
        for (int p : parents) sum_sq += w(p, v) * w(p, v);
        const double scale = std::sqrt(1.0 + sum_sq);
        for (int p : parents) out(p, v) = w(p, v) / scale;
    }
    return out;
}

std::pair<WeightMatrix, NoiseSpec> squires_rescale(const WeightMatrix& w, const Dag& dag,
                                                   int n_cal, RandomStream& rng) {
    validate_weights(dag, w);
    if (n_cal < 2) throw std::invalid_argument("squires_rescale: need n_cal >= 2");
    const int d = dag.vertex_count();
    WeightMatrix out = w;
    Eigen::MatrixXd calibration(n_cal, d);
    for (int v : topological_order(dag)) {
        const auto& parents = dag.parents(v);
        Eigen::VectorXd noise = sample_noise(NoiseSpec::gaussian(1.0), n_cal, rng);
        if (parents.empty()) {
            calibration.col(v) = noise;
            continue;
        }
        Eigen::VectorXd contribution = Eigen::VectorXd::Zero(n_cal);
        for (int p : parents) contribution += out(p, v) * calibration.col(p);
        const double mean = contribution.mean();
        const double est = (contribution.array() - mean).square().sum() / static_cast<double>(n_cal);
        if (est <= 0.0) throw std::runtime_error("squires_rescale: degenerate calibration variance");
        const double scale = std::sqrt(2.0 * est);
        for (int p : parents) out(p, v) /= scale;
        calibration.col(v) = contribution / scale + noise;
    }
    return {out, NoiseSpec::gaussian(0.5)};
}

}  // namespace iscm
