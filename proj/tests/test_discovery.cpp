#include <doctest.h>

#include <cmath>
#include <vector>

#include "iscm/discovery.hpp"
#include "iscm/experiments.hpp"
#include "iscm/metrics.hpp"

using namespace iscm;

namespace {

// Exhaustive best-subset-by-BIC oracle for small p.
std::vector<int> best_subset_bic(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    const Eigen::Index n = y.size();
    const Eigen::Index p = x.cols();
    const Eigen::VectorXd yc = y.array() - y.mean();
    Eigen::MatrixXd xc = x;
    for (Eigen::Index j = 0; j < p; ++j) xc.col(j).array() -= x.col(j).mean();
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_set;
    for (std::uint32_t mask = 0; mask < (1u << p); ++mask) {
        std::vector<int> subset;
        for (Eigen::Index j = 0; j < p; ++j)
            if (mask & (1u << j)) subset.push_back(static_cast<int>(j));
        double rss;
        if (subset.empty()) {
            rss = yc.squaredNorm();
        } else {
            Eigen::MatrixXd xs(n, static_cast<Eigen::Index>(subset.size()));
            for (std::size_t k = 0; k < subset.size(); ++k) xs.col(static_cast<Eigen::Index>(k)) = xc.col(subset[k]);
            const Eigen::VectorXd beta = (xs.transpose() * xs).ldlt().solve(xs.transpose() * yc);
            rss = (yc - xs * beta).squaredNorm();
        }
        const double bic = static_cast<double>(n) * std::log(std::max(rss / static_cast<double>(n), 1e-300)) +
                           static_cast<double>(subset.size()) * std::log(static_cast<double>(n));
        if (bic < best) {
            best = bic;
            best_set = subset;
        }
    }
    return best_set;
}

}  // namespace

TEST_CASE("lasso path shape and degenerate inputs") {
    RandomStream rng(211);
    const int n = 100;
    Eigen::MatrixXd x(n, 2);
    x.col(0) = sample_noise(NoiseSpec::gaussian(1.0), n, rng);
    x.col(1) = sample_noise(NoiseSpec::gaussian(1.0), n, rng);
    const Eigen::VectorXd y = 2.0 * x.col(0) + sample_noise(NoiseSpec::gaussian(0.01), n, rng);

    const SparsePath path = lasso_path(y, x);
    CHECK(path.lambdas.size() == 100);
    CHECK(path.coefficients.col(0).isZero());  // all zero at lambda_max
    for (int g = 1; g < 100; ++g) CHECK(path.lambdas(g) < path.lambdas(g - 1));

    const LassoSelection empty_p = lasso_bic_select(y, Eigen::MatrixXd(n, 0));
    CHECK(empty_p.active.empty());

    Eigen::MatrixXd bad = x;
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(lasso_bic_select(y, bad), std::invalid_argument);
}

TEST_CASE("lasso bic selects the true single predictor") {
    RandomStream rng(223);
    const int n = 10000;
    Eigen::MatrixXd x(n, 2);
    x.col(0) = sample_noise(NoiseSpec::gaussian(1.0), n, rng);
    x.col(1) = sample_noise(NoiseSpec::gaussian(1.0), n, rng);
    const Eigen::VectorXd y = 3.0 * x.col(0) + sample_noise(NoiseSpec::gaussian(0.0001), n, rng);
    const LassoSelection selection = lasso_bic_select(y, x);
    CHECK(selection.active == std::vector<int>{0});
    CHECK(selection.coefficients(0) == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("lasso bic rejects pure-noise predictors") {
    RandomStream rng(227);
    int empty = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 10000;
        Eigen::MatrixXd x(n, 3);
        for (int j = 0; j < 3; ++j) x.col(j) = sample_noise(NoiseSpec::gaussian(1.0), n, rng);
        const Eigen::VectorXd y = sample_noise(NoiseSpec::gaussian(1.0), n, rng);
        if (lasso_bic_select(y, x).active.empty()) ++empty;
    }
    CHECK(empty >= 95);
}

TEST_CASE("lasso bic matches exhaustive best-subset selection") {
    RandomStream rng(229);
    int agree = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 10000;
        const int p = rng.uniform_int(1, 3);
        Eigen::MatrixXd x(n, p);
        for (int j = 0; j < p; ++j) x.col(j) = sample_noise(NoiseSpec::gaussian(1.0), n, rng);
        Eigen::VectorXd y = sample_noise(NoiseSpec::gaussian(1.0), n, rng);
        for (int j = 0; j < p; ++j) {
            if (rng.uniform(0.0, 1.0) < 0.5) {
                const double coef = rng.sign() * rng.uniform(0.5, 2.0);
                y += coef * x.col(j);
            }
        }
        if (lasso_bic_select(y, x).active == best_subset_bic(y, x)) ++agree;
    }
    CHECK(agree >= 95);
}

TEST_CASE("sort_n_regress recovers a raw chain by variance") {
    RandomStream rng(233);
    const Dag truth = chain(3);
    WeightMatrix w = WeightMatrix::Zero(3, 3);
    w(0, 1) = 2.0;
    w(1, 2) = 2.0;
    const GenerativeSpec spec =
        GenerativeSpec::make_linear(truth, w, NoiseSpec::gaussian(1.0), Regime::Raw);
    int exact = 0;
    for (int trial = 0; trial < 100; ++trial) {
        RandomStream data_rng = rng.derive(static_cast<std::uint64_t>(trial));
        const Dataset ds = sample_raw(spec, 10000, data_rng);
        RandomStream sr_rng(1);
        if (f1_score(sort_n_regress(ds, SortCriterion::Var, sr_rng), truth) == 1.0) ++exact;
    }
    CHECK(exact >= 95);
}

TEST_CASE("sort_n_regress output is acyclic and respects the order") {
    RandomStream rng(239);
    for (int trial = 0; trial < 10; ++trial) {
        const Dag g = sample_er(10, 2.0, rng);
        const WeightMatrix w = sample_linear_weights(g, 0.5, 2.0, rng);
        const GenerativeSpec spec = GenerativeSpec::make_linear(
            g, w, NoiseSpec::gaussian(1.0), Regime::InternallyStandardized, Standardization::Population);
        const Dataset ds = sample_iscm(spec, 500, rng);
        for (const SortCriterion criterion :
             {SortCriterion::Var, SortCriterion::R2, SortCriterion::Random}) {
            RandomStream sr_rng = rng.derive(static_cast<std::uint64_t>(trial * 10 + static_cast<int>(criterion)));
            CHECK_NOTHROW(topological_order(sort_n_regress(ds, criterion, sr_rng)));
        }
    }
}

TEST_CASE("sort_n_regress breaks criterion ties by index") {
    // Two perfectly anti-correlated unit-variance columns: equal variance, so
    // column 0 precedes column 1 and the regression decides the edge.
    Dataset ds;
    const int n = 1000;
    RandomStream rng(241);
    ds.values.resize(n, 2);
    ds.values.col(0) = sample_noise(NoiseSpec::gaussian(1.0), n, rng);
    ds.values.col(1) = -ds.values.col(0);
    RandomStream sr_rng(1);
    const Dag result = sort_n_regress(ds, SortCriterion::Var, sr_rng);
    CHECK(result.has_edge(0, 1));
    CHECK_FALSE(result.has_edge(1, 0));
}

TEST_CASE("orient_forest_from_covariance on the worked 3-chain") {
    WeightMatrix w = WeightMatrix::Zero(3, 3);
    w(0, 1) = 2.0;
    w(1, 2) = 2.0;
    const LinearScm scm(chain(3), w, Eigen::VectorXd::Ones(3));
    const Eigen::MatrixXd sigma = covariance_of(chain(3), implied_standardized_scm(scm));
    CHECK(std::abs(sigma(0, 1)) == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-9));
    CHECK(std::abs(sigma(1, 2)) == doctest::Approx(2.0 * std::sqrt(5.0 / 21.0)).epsilon(1e-9));

    const Cpdag oriented = orient_forest_from_covariance(cpdag_of_forest(chain(3)), sigma, 2.0);
    CHECK(oriented.directed == std::vector<Edge>{{1, 2}});
    CHECK(oriented.undirected == std::vector<Edge>{{0, 1}});
}

TEST_CASE("orient_forest_from_covariance resolves the equal-weight fork") {
    const Dag fork(3, {{1, 0}, {1, 2}});
    WeightMatrix w = WeightMatrix::Zero(3, 3);
    w(1, 0) = 1.5;
    w(1, 2) = 1.5;
    const LinearScm scm(fork, w, Eigen::VectorXd::Ones(3));
    const Eigen::MatrixXd sigma = covariance_of(fork, implied_standardized_scm(scm));
    const Cpdag oriented = orient_forest_from_covariance(cpdag_of_forest(fork), sigma, 1.5);
    CHECK(oriented.undirected.empty());
    CHECK(oriented.directed == std::vector<Edge>{{1, 0}, {1, 2}});
}

TEST_CASE("orient_forest_from_covariance leaves fully directed inputs unchanged") {
    const Dag collider(3, {{0, 2}, {1, 2}});
    WeightMatrix w = WeightMatrix::Zero(3, 3);
    w(0, 2) = 1.5;
    w(1, 2) = 1.5;
    const LinearScm scm(collider, w, Eigen::VectorXd::Ones(3));
    const Eigen::MatrixXd sigma = covariance_of(collider, implied_standardized_scm(scm));
    const Cpdag mec = cpdag_of_forest(collider);
    const Cpdag oriented = orient_forest_from_covariance(mec, sigma, 1.5);
    CHECK(oriented == mec);
}

TEST_CASE("orient_forest_from_covariance input validation") {
    Cpdag triangle;
    triangle.d = 3;
    triangle.undirected = {{0, 1}, {0, 2}, {1, 2}};
    CHECK_THROWS_AS(orient_forest_from_covariance(triangle, Eigen::MatrixXd::Identity(3, 3), 1.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        orient_forest_from_covariance(cpdag_of_forest(chain(3)), Eigen::MatrixXd::Identity(3, 3), 0.9),
        std::invalid_argument);
    // Zero covariance on a skeleton edge is inconsistent with |w| > 1.
    CHECK_THROWS_AS(
        orient_forest_from_covariance(cpdag_of_forest(chain(3)), Eigen::MatrixXd::Identity(3, 3), 1.5),
        std::invalid_argument);
}

TEST_CASE("forest orientation never contradicts the truth") {
    RandomStream rng(251);
    for (int trial = 0; trial < 60; ++trial) {
        const int d = rng.uniform_int(3, 15);
        const Dag dag = sample_forest(d, 0.9, rng);
        const WeightMatrix w = sample_linear_weights(dag, 1.3, 3.0, rng);
        const LinearScm scm(dag, w, Eigen::VectorXd::Ones(d));
        const Eigen::MatrixXd sigma = covariance_of(dag, implied_standardized_scm(scm));
        const Cpdag mec = cpdag_of_forest(dag);
        if (mec.undirected.empty()) continue;
        const Cpdag oriented = orient_forest_from_covariance(mec, sigma, 1.3);
        for (const auto& [a, b] : oriented.directed) CHECK(dag.has_edge(a, b));
    }
}

TEST_CASE("nonident_witness identity and validation") {
    const Dag tree(6, {{1, 0}, {2, 1}, {2, 3}, {2, 4}, {5, 4}});
    WeightMatrix w = WeightMatrix::Zero(6, 6);
    w(1, 0) = 1.0;
    w(2, 1) = 2.0;
    w(2, 3) = 3.0;
    w(2, 4) = 4.0;
    w(5, 4) = 5.0;
    const LinearScm model(tree, w, Eigen::VectorXd::Ones(6));

    const LinearScm same = nonident_witness(model, tree);
    CHECK(same.weights == model.weights);

    const Dag triangle(3, {{0, 1}, {1, 2}, {0, 2}});
    WeightMatrix wt = WeightMatrix::Zero(3, 3);
    wt(0, 1) = 1.0;
    wt(1, 2) = 1.0;
    wt(0, 2) = 1.0;
    const LinearScm cyclic_model(triangle, wt, Eigen::VectorXd::Ones(3));
    CHECK_THROWS_AS(nonident_witness(cyclic_model, triangle), std::invalid_argument);

    const Dag other_mec(6, {{0, 1}, {1, 2}, {3, 2}, {2, 4}, {5, 4}});
    CHECK_THROWS_AS(nonident_witness(model, other_mec), std::invalid_argument);

    Eigen::VectorXd unequal = Eigen::VectorXd::Ones(6);
    unequal(3) = 2.0;
    const LinearScm unequal_model(tree, w, unequal);
    CHECK_THROWS_AS(nonident_witness(unequal_model, tree), std::invalid_argument);
}

TEST_CASE("nonident_witness reproduces the covariance across the five-edge tree MEC") {
    const Dag tree1(6, {{1, 0}, {2, 1}, {2, 3}, {2, 4}, {5, 4}});
    const Dag tree2(6, {{1, 0}, {1, 2}, {2, 3}, {2, 4}, {5, 4}});
    WeightMatrix w = WeightMatrix::Zero(6, 6);
    w(1, 0) = 1.0;
    w(2, 1) = 2.0;
    w(2, 3) = 3.0;
    w(2, 4) = 4.0;
    w(5, 4) = 5.0;
    const LinearScm model(tree1, w, Eigen::VectorXd::Ones(6));
    const Eigen::MatrixXd sigma = covariance_of(tree1, implied_iscm(model));

    const auto members = enumerate_forest_mec(cpdag_of_forest(tree1));
    CHECK(std::count(members.begin(), members.end(), tree2) == 1);
    for (const Dag& target : members) {
        const LinearScm witness = nonident_witness(model, target);
        const Eigen::MatrixXd sigma_w = covariance_of(target, implied_iscm(witness));
        CHECK((sigma_w - sigma).cwiseAbs().maxCoeff() < 1e-9);
    }
}
