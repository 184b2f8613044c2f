#pragma once

#include <Eigen/Dense>

#include "iscm/graphs.hpp"
#include "iscm/mechanisms.hpp"

namespace iscm {

// Linear SCM with additive zero-mean noise: x_i = w_i^T pa_i + eps_i.
struct LinearScm {
    Dag dag;
    WeightMatrix weights;       // (i, j) = weight of i -> j
    Eigen::VectorXd noise_var;  // one positive variance per node

    LinearScm(Dag dag_, WeightMatrix weights_, Eigen::VectorXd noise_var_);
};

// Plain-SCM form of a standardized SCM or iSCM: rescaled weights, rescaled
// noise variances, and the marginal variances of the variables before
// standardization. The model (weights, noise_var) has unit marginal
// variances by construction.
struct ImpliedLinearModel {
    WeightMatrix weights;
    Eigen::VectorXd noise_var;
    Eigen::VectorXd marginal_var;  // Var[x_i] of the unstandardized/latent variable
};

// Bottom-up dynamic program over the topological order: per node,
// Var[x_i] = w^T Sigma w + sigma^2_i, implied weights w / sqrt(Var),
// implied noise sigma^2 / Var, then one covariance row update.
ImpliedLinearModel implied_iscm(const LinearScm& m);

// Raw marginal variances by covariance propagation on the unstandardized
// SCM, then w~[j][i] = w[j][i] * s_j / s_i and sigma~^2_i = sigma^2_i / s_i^2.
ImpliedLinearModel implied_standardized_scm(const LinearScm& m);

// Exact population covariance by forward propagation.
Eigen::MatrixXd covariance_of(const LinearScm& m);
Eigen::MatrixXd covariance_of(const Dag& dag, const WeightMatrix& weights,
                              const Eigen::VectorXd& noise_var);
Eigen::MatrixXd covariance_of(const Dag& dag, const ImpliedLinearModel& m);

// Covariance of a unit-marginal-variance linear SCM as the sum over
// unblocked paths of the products of edge weights. Exponential-time
// cross-check oracle, guarded to d <= 12.
Eigen::MatrixXd covariance_trek_rule(const Dag& dag, const WeightMatrix& weights);

// Fraction of cause-explained variance, 1 - sigma^2_i / Var[x_i].
double cev_fraction(const LinearScm& m, int node);
double cev_fraction(const ImpliedLinearModel& m, int node);

// Upper bound 1 - sigma^2 / (m^2 w^2 + sigma^2) on the CEV fraction of any
// variable of a linear iSCM with at most max_parents parents, max absolute
// weight max_abs_weight, and equal noise variances.
double cev_bound(int max_parents, double max_abs_weight, double noise_var);

// System with the marginal variances of `a` and the noise variances of `b`
// (same DAG, equal root noise), built by rescaling a's incoming weight
// vectors along the topological order.
LinearScm noise_transfer(const LinearScm& a, const LinearScm& b);

// Same construction with variances estimated from n simulated samples.
LinearScm noise_transfer_empirical(const LinearScm& a, const LinearScm& b, int n,
                                   RandomStream& rng);

}  // namespace iscm
