#include "iscm/metrics.hpp"

#include <bit>
#include <stdexcept>
#include <vector>

namespace iscm {

namespace {

// Row-major bit matrix for boolean reachability products.
struct BitMatrix {
    int d = 0;
    int words = 0;
    std::vector<std::uint64_t> bits;

    explicit BitMatrix(int d_) : d(d_), words((d_ + 63) / 64), bits(static_cast<std::size_t>(d_) * static_cast<std::size_t>((d_ + 63) / 64), 0) {}

    void set(int r, int c) { bits[static_cast<std::size_t>(r) * static_cast<std::size_t>(words) + static_cast<std::size_t>(c / 64)] |= 1ULL << (c % 64); }
    bool any() const {
        for (std::uint64_t w : bits)
            if (w) return true;
        return false;
    }
    const std::uint64_t* row(int r) const { return bits.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(words); }
    std::uint64_t* row(int r) { return bits.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(words); }

    // this x other, boolean.
    BitMatrix multiply(const BitMatrix& other) const {
        BitMatrix out(d);
        for (int r = 0; r < d; ++r) {
            const std::uint64_t* src = row(r);
            std::uint64_t* dst = out.row(r);
            for (int w = 0; w < words; ++w) {
                std::uint64_t chunk = src[w];
                while (chunk) {
                    const int bit = std::countr_zero(chunk);
                    chunk &= chunk - 1;
                    const std::uint64_t* mid = other.row(w * 64 + bit);
                    for (int k = 0; k < words; ++k) dst[k] |= mid[k];
                }
            }
        }
        return out;
    }
};

double incr(double a, double b) {
    if (a < b) return 1.0;
    if (a == b) return 0.5;
    return 0.0;
}

}  // namespace

double tau_sortability(const Eigen::VectorXd& node_values, const Dag& dag) {
    const int d = dag.vertex_count();
    if (d < 2) throw std::invalid_argument("tau_sortability: need at least two vertices");
    if (node_values.size() != d) throw std::invalid_argument("tau_sortability: value count mismatch");
    if (dag.edge_count() == 0) throw std::invalid_argument("tau_sortability: no directed paths");
    BitMatrix adjacency(d);
    for (const auto& [a, b] : dag.edges()) adjacency.set(a, b);
    double numerator = 0.0;
    double denominator = 0.0;
    BitMatrix reach = adjacency;  // length-1 paths
    for (int length = 1; length <= d; ++length) {
        if (!reach.any()) break;
        for (int s = 0; s < d; ++s) {
            const std::uint64_t* r = reach.row(s);
            for (int w = 0; w < reach.words; ++w) {
                std::uint64_t chunk = r[w];
                while (chunk) {
                    const int t = w * 64 + std::countr_zero(chunk);
                    chunk &= chunk - 1;
                    numerator += incr(node_values(s), node_values(t));
                    denominator += 1.0;
                }
            }
        }
        reach = reach.multiply(adjacency);
    }
    return numerator / denominator;
}

SortabilityReport var_sortability(const Dataset& ds, const Dag& dag) {
    Eigen::VectorXd variances(ds.d());
    for (int c = 0; c < ds.d(); ++c) {
        const double mean = ds.values.col(c).mean();
        variances(c) = (ds.values.col(c).array() - mean).square().sum() / static_cast<double>(ds.n());
    }
    SortabilityReport report;
    report.criterion = "var";
    report.per_node = variances;
    report.value = tau_sortability(variances, dag);
    return report;
}

Eigen::VectorXd r2_coefficients_from_covariance(const Eigen::MatrixXd& sigma) {
    const Eigen::Index d = sigma.rows();
    if (sigma.cols() != d) throw std::invalid_argument("r2_coefficients: covariance must be square");
    for (Eigen::Index t = 0; t < d; ++t)
        if (!(sigma(t, t) > 0.0)) throw std::runtime_error("r2_coefficients: zero-variance column");
    // Work on the correlation matrix so the scale-free R2 stays exactly
    // invariant under column rescaling; trace/d is then 1 and the damping
    // constant reduces to 1e-8.
    const Eigen::VectorXd inv_sd = sigma.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd corr = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
    const double ridge = 1e-8 * corr.trace() / static_cast<double>(d);
    corr += ridge * Eigen::MatrixXd::Identity(d, d);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(corr);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("r2_coefficients: singular covariance");
    const Eigen::MatrixXd precision = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    Eigen::VectorXd r2(d);
    for (Eigen::Index t = 0; t < d; ++t) {
        if (!(precision(t, t) > 0.0)) throw std::runtime_error("r2_coefficients: singular covariance");
        const double residual = 1.0 / precision(t, t);
        r2(t) = 1.0 - residual / corr(t, t);
    }
    return r2;
}

Eigen::VectorXd r2_coefficients(const Dataset& ds) {
    if (ds.n() <= ds.d()) throw std::invalid_argument("r2_coefficients: need n > d");
    const Eigen::MatrixXd centered = ds.values.rowwise() - ds.values.colwise().mean();
    const Eigen::MatrixXd sigma = centered.transpose() * centered / static_cast<double>(ds.n());
    return r2_coefficients_from_covariance(sigma);
}

SortabilityReport r2_sortability(const Dataset& ds, const Dag& dag) {
    SortabilityReport report;
    report.criterion = "r2";
    report.per_node = r2_coefficients(ds);
    report.value = tau_sortability(report.per_node, dag);
    return report;
}

double f1_score(const Dag& pred, const Dag& truth) {
    if (pred.vertex_count() != truth.vertex_count())
        throw std::invalid_argument("f1_score: vertex counts differ");
    int true_positive = 0;
    for (const auto& [a, b] : pred.edges())
        if (truth.has_edge(a, b)) ++true_positive;
    const int predicted = pred.edge_count();
    const int actual = truth.edge_count();
    if (predicted == 0 && actual == 0) return 1.0;
    if (true_positive == 0) return 0.0;
    const double precision = static_cast<double>(true_positive) / predicted;
    const double recall = static_cast<double>(true_positive) / actual;
    return 2.0 * precision * recall / (precision + recall);
}

int shd(const Dag& pred, const Dag& truth) {
    if (pred.vertex_count() != truth.vertex_count())
        throw std::invalid_argument("shd: vertex counts differ");
    // Per unordered pair: 0 when both graphs agree (absent or same
    // direction), 1 otherwise (missing, extra, or reversed edge).
    int distance = 0;
    for (int a = 0; a < pred.vertex_count(); ++a) {
        for (int b = a + 1; b < pred.vertex_count(); ++b) {
            const bool p_ab = pred.has_edge(a, b);
            const bool p_ba = pred.has_edge(b, a);
            const bool t_ab = truth.has_edge(a, b);
            const bool t_ba = truth.has_edge(b, a);
            const bool p_any = p_ab || p_ba;
            const bool t_any = t_ab || t_ba;
            if (p_any != t_any)
                ++distance;  // insertion or deletion
            else if (p_any && (p_ab != t_ab))
                ++distance;  // reversal
        }
    }
    return distance;
}

}  // namespace iscm
