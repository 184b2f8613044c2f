#include <doctest.h>

#include <cmath>

#include "iscm/generate.hpp"
#include "iscm/serialize.hpp"

using namespace iscm;

namespace {

double column_variance(const Eigen::VectorXd& col) {
    const double mean = col.mean();
    return (col.array() - mean).square().sum() / static_cast<double>(col.size());
}

GenerativeSpec chain_spec(int d, double weight, Regime regime,
                          Standardization standardization = Standardization::Empirical) {
    const Dag g = chain(d);
    WeightMatrix w = WeightMatrix::Zero(d, d);
    for (int v = 0; v + 1 < d; ++v) w(v, v + 1) = weight;
    return GenerativeSpec::make_linear(g, w, NoiseSpec::gaussian(1.0), regime, standardization);
}

}  // namespace

TEST_CASE("sample_raw matches analytic variances") {
    RandomStream rng(61);
    const Dag single(1, {});
    const GenerativeSpec root_spec = GenerativeSpec::make_linear(
        single, WeightMatrix::Zero(1, 1), NoiseSpec::gaussian(1.0), Regime::Raw);
    const Dataset root_ds = sample_raw(root_spec, 1000000, rng);
    CHECK(column_variance(root_ds.values.col(0)) == doctest::Approx(1.0).epsilon(0.01));

    const GenerativeSpec pair = chain_spec(2, 1.0, Regime::Raw);
    const Dataset pair_ds = sample_raw(pair, 1000000, rng);
    CHECK(column_variance(pair_ds.values.col(1)) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("raw chain variance grows with depth") {
    RandomStream rng(67);
    const Dag g = chain(10);
    std::vector<double> var2, var10;
    for (int i = 0; i < 1000; ++i) {
        const WeightMatrix w = sample_linear_weights(g, 0.5, 2.0, rng);
        const GenerativeSpec spec =
            GenerativeSpec::make_linear(g, w, NoiseSpec::gaussian(1.0), Regime::Raw);
        const Dataset ds = sample_raw(spec, 200, rng);
        var2.push_back(column_variance(ds.values.col(1)));
        var10.push_back(column_variance(ds.values.col(9)));
    }
    std::sort(var2.begin(), var2.end());
    std::sort(var10.begin(), var10.end());
    CHECK(var10[500] > var2[500]);
}

TEST_CASE("standardize_posthoc") {
    RandomStream rng(71);
    const Dataset raw = sample_raw(chain_spec(4, 1.5, Regime::Raw), 5000, rng);
    const Dataset standardized = standardize_posthoc(raw);
    for (int c = 0; c < 4; ++c) {
        CHECK(std::abs(standardized.values.col(c).mean()) < 1e-10);
        CHECK(std::abs(column_variance(standardized.values.col(c)) - 1.0) < 1e-10);
    }

    // Idempotence.
    const Dataset twice = standardize_posthoc(standardized);
    CHECK((twice.values - standardized.values).cwiseAbs().maxCoeff() < 1e-10);

    // Pearson correlations unchanged.
    auto corr = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        const Eigen::ArrayXd ac = a.array() - a.mean();
        const Eigen::ArrayXd bc = b.array() - b.mean();
        return (ac * bc).sum() / std::sqrt(ac.square().sum() * bc.square().sum());
    };
    for (int c = 0; c + 1 < 4; ++c)
        CHECK(corr(raw.values.col(c), raw.values.col(c + 1)) ==
              doctest::Approx(corr(standardized.values.col(c), standardized.values.col(c + 1)))
                  .epsilon(1e-12));

    Dataset constant;
    constant.values = Eigen::MatrixXd::Ones(10, 1);
    CHECK_THROWS_AS(standardize_posthoc(constant), std::runtime_error);
}

TEST_CASE("sample_iscm empirical mode standardizes exactly") {
    RandomStream rng(73);
    const GenerativeSpec spec = chain_spec(6, 1.7, Regime::InternallyStandardized);
    const Dataset ds = sample_iscm(spec, 1000, rng);
    for (int c = 0; c < 6; ++c) {
        CHECK(std::abs(ds.values.col(c).mean()) < 1e-10);
        CHECK(std::abs(column_variance(ds.values.col(c)) - 1.0) < 1e-10);
    }
}

TEST_CASE("single-node iscm equals standardized noise") {
    RandomStream rng(79);
    const Dag single(1, {});
    GenerativeSpec spec = GenerativeSpec::make_linear(single, WeightMatrix::Zero(1, 1),
                                                      NoiseSpec::gaussian(4.0),
                                                      Regime::InternallyStandardized);
    const Dataset ds = sample_iscm(spec, 2000, rng);
    CHECK(std::abs(ds.values.col(0).mean()) < 1e-10);
    CHECK(std::abs(column_variance(ds.values.col(0)) - 1.0) < 1e-10);
}

TEST_CASE("population-mode iscm equals forward sampling of the implied model") {
    RandomStream a(97), b(97);
    const GenerativeSpec spec = chain_spec(5, 1.3, Regime::InternallyStandardized,
                                           Standardization::Population);
    const Dataset via_iscm = sample_iscm(spec, 500, a);

    const ImpliedLinearModel implied = implied_iscm(spec.to_linear_scm());
    GenerativeSpec implied_spec;
    implied_spec.dag = spec.dag;
    implied_spec.linear = implied.weights;
    for (int v = 0; v < 5; ++v) implied_spec.noise.push_back(NoiseSpec::gaussian(implied.noise_var(v)));
    implied_spec.regime = Regime::Raw;
    const Dataset via_implied = sample_raw(implied_spec, 500, b);

    CHECK(via_iscm.values == via_implied.values);  // bit-for-bit
}

TEST_CASE("population-mode iscm covariance matches the trek covariance") {
    RandomStream rng(101);
    const Dag g = sample_er(8, 2.0, rng);
    const WeightMatrix w = sample_linear_weights(g, 0.5, 2.0, rng);
    const GenerativeSpec spec = GenerativeSpec::make_linear(
        g, w, NoiseSpec::gaussian(1.0), Regime::InternallyStandardized, Standardization::Population);
    const int n = 1000000;
    const Dataset ds = sample_iscm(spec, n, rng);
    const Eigen::MatrixXd analytic = covariance_of(g, implied_iscm(spec.to_linear_scm()));
    const Eigen::MatrixXd centered = ds.values.rowwise() - ds.values.colwise().mean();
    const Eigen::MatrixXd empirical = centered.transpose() * centered / static_cast<double>(n);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            const double se = std::sqrt((analytic(i, i) * analytic(j, j) + analytic(i, j) * analytic(i, j)) / n);
            CHECK(std::abs(empirical(i, j) - analytic(i, j)) <= 5.0 * se);
        }
    }
}

TEST_CASE("standardized regime keeps raw correlations") {
    RandomStream a(103), b(103);
    const GenerativeSpec raw_spec = chain_spec(5, 1.4, Regime::Raw);
    GenerativeSpec std_spec = raw_spec;
    std_spec.regime = Regime::PostHocStandardized;
    const Dataset raw = sample_raw(raw_spec, 4000, a);
    const Dataset standardized = sample_standardized_scm(std_spec, 4000, b);
    auto corr = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        const Eigen::ArrayXd xc = x.array() - x.mean();
        const Eigen::ArrayXd yc = y.array() - y.mean();
        return (xc * yc).sum() / std::sqrt(xc.square().sum() * yc.square().sum());
    };
    for (int c = 0; c + 1 < 5; ++c)
        CHECK(corr(raw.values.col(c), raw.values.col(c + 1)) ==
              doctest::Approx(corr(standardized.values.col(c), standardized.values.col(c + 1)))
                  .epsilon(1e-9));
}

TEST_CASE("rff sampling stays finite across regimes") {
    RandomStream rng(107);
    const Dag g = sample_er(8, 2.0, rng);
    const auto mechanisms = sample_rff_mechanisms(g, 7.0, 10.0, 10.0, 20.0, 100, rng);
    const GenerativeSpec spec =
        GenerativeSpec::make_rff(g, mechanisms, NoiseSpec::gaussian(1.0), Regime::InternallyStandardized);
    const Dataset ds = sample_iscm(spec, 500, rng);
    CHECK(ds.values.allFinite());
    for (int c = 0; c < 8; ++c) CHECK(std::abs(column_variance(ds.values.col(c)) - 1.0) < 1e-9);

    GenerativeSpec population = spec;
    population.standardization = Standardization::Population;
    CHECK_THROWS_AS(sample_iscm(population, 100, rng), std::invalid_argument);
}

TEST_CASE("determinism: same spec, n, seed give identical bytes") {
    const GenerativeSpec spec = chain_spec(6, 1.1, Regime::InternallyStandardized);
    RandomStream a(111), b(111);
    const Dataset first = sample_iscm(spec, 300, a);
    const Dataset second = sample_iscm(spec, 300, b);
    CHECK(first.values == second.values);
    CHECK(dataset_to_csv(first) == dataset_to_csv(second));
}

TEST_CASE("raw and population iscm consume identical noise draws") {
    // Same seed: the raw chain and the internally standardized chain see the
    // same standard normal sequence, so their first column only differs by
    // the noise scale ratio.
    const GenerativeSpec raw_spec = chain_spec(3, 2.0, Regime::Raw);
    GenerativeSpec iscm_spec = chain_spec(3, 2.0, Regime::InternallyStandardized,
                                          Standardization::Population);
    RandomStream a(113), b(113);
    const Dataset raw = sample_raw(raw_spec, 200, a);
    const Dataset iscm = sample_iscm(iscm_spec, 200, b);
    CHECK((raw.values.col(0) - iscm.values.col(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("intervention on a leaf leaves upstream columns untouched") {
    const GenerativeSpec spec = chain_spec(4, 1.2, Regime::InternallyStandardized,
                                           Standardization::Population);
    Intervention zero;
    zero.kind = Intervention::Kind::Constant;
    zero.value = 0.0;
    const GenerativeSpec intervened = apply_intervention(spec, 3, zero);
    REQUIRE(intervened.frozen_scale.has_value());

    RandomStream a(127), b(127);
    const Dataset base = sample_iscm(spec, 500, a);
    const Dataset after = sample_iscm(intervened, 500, b);
    // Upstream columns keep the same distribution; the leaf is pinned to
    // (0 - mu) / s exactly.
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(column_variance(after.values.col(c)) - column_variance(base.values.col(c))) < 0.2);
    const double expected = (0.0 - 0.0) / (*intervened.frozen_scale)(3);
    CHECK((after.values.col(3).array() - expected).abs().maxCoeff() < 1e-12);
}

TEST_CASE("constant intervention shifts by the frozen statistics") {
    RandomStream pilot(131);
    const Dag g = chain(3);
    RandomStream mech_rng(137);
    const auto mechanisms = sample_rff_mechanisms(g, 7.0, 10.0, 10.0, 20.0, 50, mech_rng);
    const GenerativeSpec spec =
        GenerativeSpec::make_rff(g, mechanisms, NoiseSpec::gaussian(1.0), Regime::InternallyStandardized);
    Intervention zero;
    zero.kind = Intervention::Kind::Constant;
    zero.value = 0.0;
    CHECK_THROWS_AS(apply_intervention(spec, 1, zero), std::invalid_argument);  // pilot stream required
    const GenerativeSpec intervened = apply_intervention(spec, 1, zero, 20000, &pilot);
    REQUIRE(intervened.frozen_mean.has_value());

    RandomStream rng(139);
    const Dataset ds = sample_iscm(intervened, 2000, rng);
    const double expected = -(*intervened.frozen_mean)(1) / (*intervened.frozen_scale)(1);
    CHECK(ds.values.col(1).mean() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("identity intervention keeps the raw regime unchanged bitwise") {
    const GenerativeSpec spec = chain_spec(3, 1.6, Regime::Raw);
    Intervention same;
    same.kind = Intervention::Kind::Linear;
    same.parent_weights = Eigen::VectorXd::Constant(1, 1.6);
    const GenerativeSpec intervened = apply_intervention(spec, 1, same);
    RandomStream a(149), b(149);
    const Dataset base = sample_raw(spec, 300, a);
    const Dataset after = sample_raw(intervened, 300, b);
    CHECK(base.values == after.values);
}

TEST_CASE("identity intervention keeps the iscm distribution") {
    const GenerativeSpec spec = chain_spec(3, 1.6, Regime::InternallyStandardized,
                                           Standardization::Population);
    Intervention same;
    same.kind = Intervention::Kind::Linear;
    same.parent_weights = Eigen::VectorXd::Constant(1, 1.6);
    const GenerativeSpec intervened = apply_intervention(spec, 1, same);
    RandomStream rng(151);
    const Dataset ds = sample_iscm(intervened, 200000, rng);
    for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(ds.values.col(c).mean()) < 0.02);
        CHECK(column_variance(ds.values.col(c)) == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("generative spec validation") {
    GenerativeSpec spec;
    spec.dag = chain(2);
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);  // no mechanism
    spec.linear = WeightMatrix::Zero(2, 2);
    (*spec.linear)(0, 1) = 1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);  // missing noise
    spec.noise.assign(2, NoiseSpec::gaussian(1.0));
    CHECK_NOTHROW(spec.validate());
}
