#pragma once

#include <Eigen/Dense>
#include <vector>

#include "iscm/analytic.hpp"
#include "iscm/generate.hpp"
#include "iscm/graphs.hpp"
#include "iscm/random.hpp"

namespace iscm {

// Lasso solutions along a decreasing lambda grid with their BIC scores.
struct SparsePath {
    Eigen::VectorXd lambdas;        // decreasing
    Eigen::MatrixXd coefficients;   // p x grid size
    Eigen::VectorXd bic;            // n * ln(RSS / n) + k * ln(n)
};

struct LassoSelection {
    std::vector<int> active;
    Eigen::VectorXd coefficients;  // full p vector
    double lambda = 0.0;
    double bic = 0.0;
};

// Cyclic coordinate descent over 100 log-spaced lambdas spanning three
// decades below lambda_max = max_j |X_j^T y| / n, warm-started; inputs are
// centered internally and no intercept is fit.
SparsePath lasso_path(const Eigen::VectorXd& y, const Eigen::MatrixXd& x);

// Active set of the BIC-minimizing point on the lasso path.
LassoSelection lasso_bic_select(const Eigen::VectorXd& y, const Eigen::MatrixXd& x);

enum class SortCriterion { Var, R2, Random };

std::string to_string(SortCriterion criterion);

// Orders variables ascending by the criterion (ties by index), then selects
// each variable's parents among its predecessors with lasso_bic_select.
Dag sort_n_regress(const Dataset& ds, SortCriterion criterion, RandomStream& rng);

// Orientation of a forest CPDAG from the population covariance of a
// standardized linear SCM with all |w| > min_abs_weight > 1 and equal noise:
// repeatedly orient a longest undirected chain away from its minimum
// |covariance| pair (a tie pins the shared node as root), close under the
// first Meek rule, and recurse. Leaves at most one undirected edge per
// undirected component of the input.
Cpdag orient_forest_from_covariance(const Cpdag& cpdag, const Eigen::MatrixXd& sigma,
                                    double min_abs_weight, double tie_tolerance = 1e-9);

// iSCM on `target` (a member of the model's MEC) with the model's skeleton
// weights and noise variances; has the same observational covariance.
LinearScm nonident_witness(const LinearScm& model, const Dag& target);

}  // namespace iscm
