#pragma once

#include <Eigen/Dense>
#include <string>

#include "iscm/generate.hpp"
#include "iscm/graphs.hpp"

namespace iscm {

struct SortabilityReport {
    std::string criterion;   // "var" or "r2"
    double value = 0.5;      // in [0, 1]; 0.5 means no sortable pattern
    Eigen::VectorXd per_node;
};

// Fraction of directed-path-connected comparisons where the node statistic
// increases. A pair (s, t) contributes once per path length at which it is
// connected; ties count one half.
double tau_sortability(const Eigen::VectorXd& node_values, const Dag& dag);

// tau_sortability of the empirical column variances.
SortabilityReport var_sortability(const Dataset& ds, const Dag& dag);

// R^2 of regressing each column on all others, via the inverse of the
// (ridge-damped) empirical covariance: residual variance 1 / (Sigma^-1)_tt.
Eigen::VectorXd r2_coefficients(const Dataset& ds);
Eigen::VectorXd r2_coefficients_from_covariance(const Eigen::MatrixXd& sigma);

SortabilityReport r2_sortability(const Dataset& ds, const Dag& dag);

// Precision/recall over directed edge sets; 1 when both graphs are empty.
double f1_score(const Dag& pred, const Dag& truth);

// Skeleton insertions + deletions + orientation flips; a reversal costs 1.
int shd(const Dag& pred, const Dag& truth);

}  // namespace iscm
