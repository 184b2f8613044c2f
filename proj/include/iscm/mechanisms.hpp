#pragma once

#include <Eigen/Dense>
#include <map>
#include <utility>
#include <vector>

#include "iscm/graphs.hpp"
#include "iscm/random.hpp"

namespace iscm {

// Dense weight matrix; entry (i, j) is the weight of edge i -> j, zero off
// the edge set.
using WeightMatrix = Eigen::MatrixXd;

// Zero-mean exogenous noise law.
struct NoiseSpec {
    enum class Law { Gaussian, UniformSymmetric };

    Law law = Law::Gaussian;
    double param = 1.0;  // variance for Gaussian, half-width for UniformSymmetric

    static NoiseSpec gaussian(double variance);
    static NoiseSpec uniform_symmetric(double half_width);

    double variance() const {
        return law == Law::Gaussian ? param : param * param / 3.0;
    }

    bool operator==(const NoiseSpec&) const = default;
};

// Random Fourier feature approximation of a squared-exponential GP sample:
//   h(x) = c * sqrt(2/M) * sum_j alpha_j * cos(omega_j . x / l + phase_j)
struct RffMechanism {
    double output_scale = 1.0;  // c
    double length_scale = 1.0;  // l
    Eigen::VectorXd alpha;      // M
    Eigen::MatrixXd omega;      // M x |parents|
    Eigen::VectorXd phase;      // M, in [0, 2*pi)
    std::vector<int> parent_ids;  // column order of omega

    double eval(const Eigen::VectorXd& parent_values) const;
};

// Throws unless the nonzero support of w equals the dag's edge set.
void validate_weights(const Dag& dag, const WeightMatrix& w);

// Each edge weight s * u with s uniform on {-1, +1} and u uniform on [lo, hi];
// edges visited in sorted order, sign drawn before magnitude.
WeightMatrix sample_linear_weights(const Dag& dag, double lo, double hi, RandomStream& rng);

// One mechanism per non-root node (ascending index): l ~ U[l_lo, l_hi],
// c ~ U[c_lo, c_hi], alpha ~ N(0,1), omega ~ N(0,I), phase ~ U[0, 2*pi).
std::map<int, RffMechanism> sample_rff_mechanisms(const Dag& dag, double l_lo, double l_hi,
                                                  double c_lo, double c_hi, int feature_count,
                                                  RandomStream& rng);

double eval_rff(const RffMechanism& m, const Eigen::VectorXd& parent_values);

Eigen::VectorXd sample_noise(const NoiseSpec& spec, int n, RandomStream& rng);

// Divides each node's incoming weights by sqrt(1 + sum of their squares),
// bounding the incoming squared weight mass below 1.
WeightMatrix mooij_rescale(const WeightMatrix& w, const Dag& dag);

// Along the topological order, estimates each node's parent-contributed
// variance from a unit-noise calibration sample and divides the incoming
// weights by sqrt(2 * estimate); data generation then uses noise variance
// 0.5.
std::pair<WeightMatrix, NoiseSpec> squires_rescale(const WeightMatrix& w, const Dag& dag,
                                                   int n_cal, RandomStream& rng);

}  // namespace iscm
