#include "iscm/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace iscm {

LinearScm::LinearScm(Dag dag_, WeightMatrix weights_, Eigen::VectorXd noise_var_)
    : dag(std::move(dag_)), weights(std::move(weights_)), noise_var(std::move(noise_var_)) {
    validate_weights(dag, weights);
    if (noise_var.size() != dag.vertex_count())
        throw std::invalid_argument("LinearScm: noise variance count mismatch");
    for (Eigen::Index i = 0; i < noise_var.size(); ++i)
        if (!(noise_var(i) > 0.0)) throw std::invalid_argument("LinearScm: noise variances must be positive");
}

Eigen::MatrixXd covariance_of(const Dag& dag, const WeightMatrix& weights,
                              const Eigen::VectorXd& noise_var) {
    const int d = dag.vertex_count();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
    for (int v : topological_order(dag)) {
        const Eigen::VectorXd w = weights.col(v);
        const double var_v = w.dot(sigma * w) + noise_var(v);
        const Eigen::VectorXd cross = sigma * w;
        sigma.col(v) = cross;
        sigma.row(v) = cross.transpose();
        sigma(v, v) = var_v;
    }
    return sigma;
}

Eigen::MatrixXd covariance_of(const LinearScm& m) {
    return covariance_of(m.dag, m.weights, m.noise_var);
}

Eigen::MatrixXd covariance_of(const Dag& dag, const ImpliedLinearModel& m) {
    return covariance_of(dag, m.weights, m.noise_var);
}

ImpliedLinearModel implied_iscm(const LinearScm& m) {
    const int d = m.dag.vertex_count();
    ImpliedLinearModel out;
    out.weights = WeightMatrix::Zero(d, d);
    out.noise_var.resize(d);
    out.marginal_var.resize(d);
    // Observed covariance; unit diagonal throughout since every observed
    // variable is standardized.
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
    for (int v : topological_order(m.dag)) {
        const Eigen::VectorXd w = m.weights.col(v);
        const double var_v = w.dot(sigma * w) + m.noise_var(v);
        out.marginal_var(v) = var_v;
        const double scale = std::sqrt(var_v);
        out.weights.col(v) = w / scale;
        out.noise_var(v) = m.noise_var(v) / var_v;
        const Eigen::VectorXd cross = sigma * out.weights.col(v);
        sigma.col(v) = cross;
        sigma.row(v) = cross.transpose();
        sigma(v, v) = 1.0;
    }
    return out;
}

ImpliedLinearModel implied_standardized_scm(const LinearScm& m) {
    const int d = m.dag.vertex_count();
    const Eigen::MatrixXd raw = covariance_of(m);
    ImpliedLinearModel out;
    out.weights = WeightMatrix::Zero(d, d);
    out.noise_var.resize(d);
    out.marginal_var = raw.diagonal();
    for (int v = 0; v < d; ++v) {
        const double s_v = std::sqrt(out.marginal_var(v));
        for (int p : m.dag.parents(v))
            out.weights(p, v) = m.weights(p, v) * std::sqrt(out.marginal_var(p)) / s_v;
        out.noise_var(v) = m.noise_var(v) / out.marginal_var(v);
    }
    return out;
}

namespace {

// Sum over unblocked skeleton paths between `from` and `to` of the products
// of edge weights. A collider blocks: the previous and next edge both point
// into the current vertex.
struct TrekEnumerator {
    const Dag& dag;
    const WeightMatrix& weights;
    int target;
    std::vector<char> visited;
    double total = 0.0;

    // arrived_into: the edge we used to reach v points into v.
    void walk(int v, bool arrived_into, double product) {
        if (v == target) {
            total += product;
            return;
        }
        visited[static_cast<std::size_t>(v)] = 1;
        for (int c : dag.children(v)) {  // leave v along v -> c
            if (!visited[static_cast<std::size_t>(c)]) walk(c, true, product * weights(v, c));
        }
        if (!arrived_into) {
            for (int p : dag.parents(v)) {  // leave v along p -> v, traversed backwards
                if (!visited[static_cast<std::size_t>(p)]) walk(p, false, product * weights(p, v));
            }
        }
        visited[static_cast<std::size_t>(v)] = 0;
    }
};

}  // namespace

Eigen::MatrixXd covariance_trek_rule(const Dag& dag, const WeightMatrix& weights) {
    const int d = dag.vertex_count();
    if (d > 12) throw std::invalid_argument("covariance_trek_rule: path enumeration limited to d <= 12");
    validate_weights(dag, weights);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            TrekEnumerator enumerator{dag, weights, j, std::vector<char>(static_cast<std::size_t>(d), 0), 0.0};
            // First step out of i: any edge direction is allowed.
            enumerator.visited[static_cast<std::size_t>(i)] = 1;
            for (int c : dag.children(i)) enumerator.walk(c, true, weights(i, c));
            for (int p : dag.parents(i)) enumerator.walk(p, false, weights(p, i));
            sigma(i, j) = enumerator.total;
            sigma(j, i) = enumerator.total;
        }
    }
    return sigma;
}

double cev_fraction(const LinearScm& m, int node) {
    const Eigen::MatrixXd sigma = covariance_of(m);
    return 1.0 - m.noise_var(node) / sigma(node, node);
}

double cev_fraction(const ImpliedLinearModel& m, int node) {
    return 1.0 - m.noise_var(node);  // observed variables have unit variance
}

double cev_bound(int max_parents, double max_abs_weight, double noise_var) {
    if (max_parents <= 0 || !(max_abs_weight > 0.0) || !(noise_var > 0.0))
        throw std::invalid_argument("cev_bound: arguments must be positive");
    const double mw = static_cast<double>(max_parents) * max_abs_weight;
    return 1.0 - noise_var / (mw * mw + noise_var);
}

namespace {

LinearScm noise_transfer_impl(const LinearScm& a, const LinearScm& b,
                              const Eigen::VectorXd& var_a, bool empirical, int n,
                              RandomStream* rng) {
    if (!(a.dag == b.dag)) throw std::invalid_argument("noise_transfer: DAGs differ");
    const int d = a.dag.vertex_count();
    for (int v = 0; v < d; ++v) {
        if (a.dag.parents(v).empty() && std::abs(a.noise_var(v) - b.noise_var(v)) > 1e-12 * std::max(a.noise_var(v), b.noise_var(v)))
            throw std::invalid_argument("noise_transfer: root noise variances differ");
    }
    WeightMatrix weights = WeightMatrix::Zero(d, d);
    Eigen::VectorXd noise_var = b.noise_var;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);  // covariance of the system being built
    Eigen::MatrixXd samples;                              // empirical mode only
    if (empirical) samples.resize(n, d);
    for (int v : topological_order(a.dag)) {
        if (a.dag.parents(v).empty()) {
            sigma(v, v) = noise_var(v);
            if (empirical) samples.col(v) = sample_noise(NoiseSpec::gaussian(noise_var(v)), n, *rng);
            continue;
        }
        const Eigen::VectorXd w = a.weights.col(v);
        const double target = var_a(v) - b.noise_var(v);
        if (!(target > 0.0))
            throw std::invalid_argument("noise_transfer: target variance not positive");
        double denom;
        Eigen::VectorXd contribution;
        if (empirical) {
            contribution = samples * w;
            const double mean = contribution.mean();
            denom = (contribution.array() - mean).square().sum() / static_cast<double>(n);
        } else {
            denom = w.dot(sigma * w);
        }
        if (!(denom > 0.0)) throw std::runtime_error("noise_transfer: degenerate parent contribution");
        const double scale = std::sqrt(target / denom);
        weights.col(v) = w * scale;
        const Eigen::VectorXd cross = sigma * weights.col(v);
        sigma.col(v) = cross;
        sigma.row(v) = cross.transpose();
        sigma(v, v) = target + noise_var(v);
        if (empirical)
            samples.col(v) = contribution * scale + sample_noise(NoiseSpec::gaussian(noise_var(v)), n, *rng);
    }
    return LinearScm(a.dag, std::move(weights), std::move(noise_var));
}

}  // namespace

LinearScm noise_transfer(const LinearScm& a, const LinearScm& b) {
    const Eigen::VectorXd var_a = covariance_of(a).diagonal();
    return noise_transfer_impl(a, b, var_a, false, 0, nullptr);
}

LinearScm noise_transfer_empirical(const LinearScm& a, const LinearScm& b, int n,
                                   RandomStream& rng) {
    if (n < 2) throw std::invalid_argument("noise_transfer_empirical: need n >= 2");
    Eigen::MatrixXd data(n, a.dag.vertex_count());
    for (int v : topological_order(a.dag)) {
        Eigen::VectorXd col = sample_noise(NoiseSpec::gaussian(a.noise_var(v)), n, rng);
        for (int p : a.dag.parents(v)) col += a.weights(p, v) * data.col(p);
        data.col(v) = col;
    }
    Eigen::VectorXd var_a(a.dag.vertex_count());
    for (int v = 0; v < a.dag.vertex_count(); ++v) {
        const double mean = data.col(v).mean();
        var_a(v) = (data.col(v).array() - mean).square().sum() / static_cast<double>(n);
    }
    return noise_transfer_impl(a, b, var_a, true, n, &rng);
}

}  // namespace iscm
