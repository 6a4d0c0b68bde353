#include <doctest.h>

#include <cmath>
#include <random>

#include "gwc/error.hpp"
#include "gwc/gw.hpp"
#include "gwc/linear.hpp"
#include "gwc/parallel.hpp"
#include "gwc/synth.hpp"
#include "test_support.hpp"

using namespace gwc;

namespace {

GwModelSet fake_models(const std::vector<Eigen::VectorXd>& coefs, int target_class = 0) {
    GwModelSet set;
    set.learner = GwLearner::logistic;
    set.target_class = target_class;
    for (const auto& c : coefs) {
        GwUnitResult u;
        u.status = GwUnitStatus::fitted;
        u.coefficients = c;
        u.focal_probability = 0.5;
        set.units.push_back(u);
    }
    return set;
}

} // namespace

TEST_CASE("stationary data: local coefficients hug the global fit") {
    SynthSpec spec;
    spec.n_units = 2500;
    spec.n_classes = 2;
    spec.n_variables = 2;
    spec.coefficient_field = {
        {{FieldKind::constant, 1.2}, {FieldKind::constant, -0.8}},
        {{FieldKind::constant, 0.0}, {FieldKind::constant, 0.0}},
    };
    spec.seed = 314;
    auto [ds, truth] = generate(spec);
    (void)truth;

    GwFitSpec gw;
    gw.kernel = {KernelShape::bisquare, BandwidthMode::adaptive_k, 2450};
    gw.target_class = 0;
    gw.l2_lambda = 1e-4;
    gw.seed = 1;
    NeighborGraph graph = build_knn(ds, 2450);
    GwModelSet models = fit_gw(ds, gw, graph);

    std::vector<int> y(ds.n());
    for (int i = 0; i < ds.n(); ++i) y[i] = ds.label(i) == 0 ? 1 : 0;
    LogisticModel global =
        fit_binary_logistic(ds.features(), y, Eigen::VectorXd::Ones(ds.n()), 1e-4);

    CHECK(models.n_fitted() == ds.n());
    for (const GwUnitResult& u : models.units) {
        REQUIRE(u.status == GwUnitStatus::fitted);
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(u.coefficients[j] - global.coefficients(0, j)) < 0.15);
    }
}

TEST_CASE("a class absent from a region yields skips with the exact fallback") {
    // Class 1 exists only east of x=700; west units see zero positives.
    const int n = 200;
    std::mt19937 rng(10);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> xs(n), ys(n);
    std::vector<std::vector<double>> features(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = (i * 997) % 1000;
        ys[i] = (i * 131) % 1000;
        features[i] = {normal(rng)};
        labels[i] = xs[i] > 700 && i % 2 == 0 ? 1 : 0;
    }
    SpatialDataset ds = test_support::make_dataset(xs, ys, features, labels, {"a", "b"});

    GwFitSpec gw;
    gw.kernel = {KernelShape::bisquare, BandwidthMode::adaptive_k, 15};
    gw.target_class = 1;
    gw.min_positive = 5;
    gw.fallback = GwFallback::prior_rate;
    gw.seed = 3;
    GwModelSet models = fit_gw(ds, gw, build_knn(ds, 15));

    int skipped = 0;
    for (int i = 0; i < n; ++i) {
        const GwUnitResult& u = models.units[i];
        if (u.status == GwUnitStatus::skipped_low_positive) {
            ++skipped;
            // Weighted positive rate among the neighbors; for a deep-west
            // unit every neighbor is negative, so the fallback is exactly 0.
            if (xs[i] < 300) CHECK(u.focal_probability == 0.0);
        }
    }
    CHECK(skipped > 0);
    CHECK(models.n_skipped() == skipped);
}

TEST_CASE("global_model fallback evaluates the global fit at the skipped unit") {
    const int n = 150;
    std::mt19937 rng(22);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> xs(n), ys(n);
    std::vector<std::vector<double>> features(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = (i * 37) % 500;
        ys[i] = (i * 61) % 500;
        features[i] = {normal(rng)};
        labels[i] = xs[i] > 400 ? 1 : 0;
    }
    SpatialDataset ds = test_support::make_dataset(xs, ys, features, labels, {"a", "b"});

    GwFitSpec gw;
    gw.kernel = {KernelShape::bisquare, BandwidthMode::adaptive_k, 10};
    gw.target_class = 1;
    gw.min_positive = 8;
    gw.fallback = GwFallback::global_model;
    gw.seed = 4;
    GwModelSet models = fit_gw(ds, gw, build_knn(ds, 10));

    std::vector<int> y(ds.n());
    for (int i = 0; i < ds.n(); ++i) y[i] = ds.label(i);
    LogisticModel global =
        fit_binary_logistic(ds.features(), y, Eigen::VectorXd::Ones(ds.n()), gw.l2_lambda);
    Eigen::MatrixXd proba = predict_proba(global, ds.features());

    int checked = 0;
    for (int i = 0; i < n; ++i) {
        if (models.units[i].status == GwUnitStatus::fitted) continue;
        CHECK(models.units[i].focal_probability == proba(i, 1));
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("sign-flip field: local coefficient signs track the generator") {
    SynthSpec spec;
    spec.n_units = 900;
    spec.n_classes = 2;
    spec.n_variables = 2;
    spec.coefficient_field = {
        {{FieldKind::east_west_sign_flip, 2.0}, {FieldKind::constant, 0.5}},
        {{FieldKind::constant, 0.0}, {FieldKind::constant, 0.0}},
    };
    spec.seed = 41;
    auto [ds, truth] = generate(spec);

    GwFitSpec gw;
    gw.kernel = {KernelShape::bisquare, BandwidthMode::adaptive_k, 90};
    gw.target_class = 0;
    gw.min_positive = 3;
    gw.seed = 8;
    GwModelSet models = fit_gw(ds, gw, build_knn(ds, 90));

    int matched = 0, considered = 0;
    for (int i = 0; i < ds.n(); ++i) {
        const GwUnitResult& u = models.units[i];
        if (u.status != GwUnitStatus::fitted) continue;
        // One-vs-rest for class 0 sees the class-0-minus-class-1 contrast;
        // the generating contrast for v1 is 2 * field sign.
        const double truth_sign = truth.coefficients[0](i, 0);
        ++considered;
        if (u.coefficients[0] * truth_sign > 0) ++matched;
    }
    REQUIRE(considered > 800);
    CHECK(static_cast<double>(matched) / considered >= 0.9);
}

TEST_CASE("perturbing one unit only moves models that can see it") {
    SpatialDataset base = test_support::random_dataset(60, 2, 5, 100.0);
    std::vector<int> labels(base.n());
    for (int i = 0; i < base.n(); ++i)
        labels[i] = base.features()(i, 0) + 0.3 * base.features()(i, 1) > 0 ? 1 : 0;
    SpatialDataset ds = base.with_labels(labels, {"a", "b"});

    GwFitSpec gw;
    gw.kernel = {KernelShape::bisquare, BandwidthMode::adaptive_k, 8};
    gw.target_class = 1;
    gw.min_positive = 1;
    gw.seed = 6;
    NeighborGraph graph = build_knn(ds, 8);
    GwModelSet before = fit_gw(ds, gw, graph);

    const int victim = 17;
    std::vector<UnitRecord> units(ds.n());
    for (int i = 0; i < ds.n(); ++i) {
        units[i].unit_id = ds.unit_id(i);
        units[i].x = ds.x(i);
        units[i].y = ds.y(i);
        units[i].label = ds.label(i);
        units[i].features.assign(ds.features().row(i).begin(), ds.features().row(i).end());
    }
    units[victim].features[0] += 3.0;
    SpatialDataset perturbed = SpatialDataset::from_records(
        units, ds.variable_names(), ds.class_names(), ds.standardized());
    GwModelSet after = fit_gw(perturbed, gw, graph);

    for (int i = 0; i < ds.n(); ++i) {
        const bool sees_victim =
            std::find(graph.neighbors[i].indices.begin(), graph.neighbors[i].indices.end(),
                      victim) != graph.neighbors[i].indices.end();
        if (sees_victim || i == victim) continue; // may legitimately change
        CHECK(before.units[i].focal_probability == after.units[i].focal_probability);
        CHECK((before.units[i].coefficients - after.units[i].coefficients)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    // The victim's own model ignores its own features (self excluded).
    CHECK((before.units[victim].coefficients - after.units[victim].coefficients)
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("fit_gw output is identical across worker counts, both learners") {
    SynthSpec spec;
    spec.n_units = 250;
    spec.n_classes = 2;
    spec.n_variables = 3;
    spec.seed = 66;
    auto [ds, truth] = generate(spec);
    (void)truth;
    NeighborGraph graph = build_knn(ds, 40);

    for (GwLearner learner : {GwLearner::logistic, GwLearner::forest}) {
        GwFitSpec gw;
        gw.learner = learner;
        gw.kernel = {KernelShape::bisquare, BandwidthMode::adaptive_k, 40};
        gw.target_class = 0;
        gw.min_positive = 3;
        gw.forest.n_trees = 15;
        gw.seed = 77;

        set_max_workers(1);
        GwModelSet serial = fit_gw(ds, gw, graph);
        set_max_workers(4);
        GwModelSet parallel = fit_gw(ds, gw, graph);
        set_max_workers(0);

        REQUIRE(serial.units.size() == parallel.units.size());
        for (std::size_t i = 0; i < serial.units.size(); ++i) {
            CHECK(serial.units[i].status == parallel.units[i].status);
            CHECK(serial.units[i].focal_probability ==
                  parallel.units[i].focal_probability);
        }
    }
}

TEST_CASE("extract_coefficients on identical local models has zero sd") {
    Eigen::VectorXd c(2);
    c << 2.0, -1.0;
    GwModelSet set = fake_models({c, c, c, c});
    CoefficientSurface surface = extract_coefficients(set, {"v1", "v2"});
    CHECK(surface.summaries[0].mean_abs == doctest::Approx(2.0));
    CHECK(surface.summaries[0].sd == 0.0);
    CHECK(surface.summaries[1].sd == 0.0);
    CHECK(surface.summaries[0].sign_agreement == 1.0);
    CHECK(surface.order_by_mean_abs == std::vector<int>{0, 1});
}

TEST_CASE("extract_coefficients closed form for a +1/-1 pair") {
    Eigen::VectorXd a(1), b(1);
    a << 1.0;
    b << -1.0;
    CoefficientSurface surface = extract_coefficients(fake_models({a, b}), {"v1"});
    CHECK(surface.summaries[0].mean_abs == doctest::Approx(1.0));
    CHECK(surface.summaries[0].sd == doctest::Approx(std::sqrt(2.0)));
    CHECK(surface.summaries[0].sign_agreement == doctest::Approx(0.5));
}

TEST_CASE("extract_coefficients skips skipped units and rejects forests") {
    Eigen::VectorXd c(1);
    c << 3.0;
    GwModelSet set = fake_models({c, c, c});
    set.units[1].status = GwUnitStatus::skipped_low_positive;
    set.units[1].coefficients.resize(0);
    CoefficientSurface surface = extract_coefficients(set, {"v1"});
    CHECK(surface.n_fitted == 2);
    CHECK(surface.n_skipped == 1);
    CHECK(std::isnan(surface.local(1, 0)));

    set.learner = GwLearner::forest;
    CHECK_THROWS_AS(extract_coefficients(set, {"v1"}), DataError);
}

TEST_CASE("dispersion quantiles collapse correctly in edge cases") {
    Eigen::VectorXd a(1), b(1);
    a << 2.0;
    b << -3.0;
    CoefficientSurface one_var = extract_coefficients(fake_models({a, b}, 0), {"v1"});
    std::vector<DispersionRow> rows = coefficient_dispersion_by_class({one_var});
    // A single variable: every quantile equals its sd.
    const double s = one_var.summaries[0].sd;
    CHECK(rows[0].min == doctest::Approx(s));
    CHECK(rows[0].median == doctest::Approx(s));
    CHECK(rows[0].max == doctest::Approx(s));

    Eigen::VectorXd c(2);
    c << 1.0, -2.0;
    CoefficientSurface constant = extract_coefficients(fake_models({c, c, c}, 1), {"v1", "v2"});
    rows = coefficient_dispersion_by_class({constant});
    CHECK(rows[0].class_index == 1);
    CHECK(rows[0].max == 0.0);
}

TEST_CASE("a sign-flipping class disperses more than a stationary one") {
    SynthSpec spec;
    spec.n_units = 700;
    spec.n_classes = 3;
    spec.n_variables = 3;
    spec.coefficient_field = {
        {{FieldKind::constant, 1.5}, {FieldKind::constant, 0.0}, {FieldKind::constant, 0.0}},
        {{FieldKind::constant, 0.0},
         {FieldKind::east_west_sign_flip, 1.5},
         {FieldKind::east_west_sign_flip, -1.2}},
        {{FieldKind::constant, 0.0}, {FieldKind::constant, 0.0}, {FieldKind::constant, 0.0}},
    };
    spec.seed = 2025;
    auto [ds, truth] = generate(spec);
    (void)truth;

    NeighborGraph graph = build_knn(ds, 80);
    std::vector<CoefficientSurface> surfaces;
    for (int c = 0; c < 2; ++c) {
        GwFitSpec gw;
        gw.kernel = {KernelShape::bisquare, BandwidthMode::adaptive_k, 80};
        gw.target_class = c;
        gw.min_positive = 3;
        gw.seed = 50 + c;
        surfaces.push_back(
            extract_coefficients(fit_gw(ds, gw, graph), ds.variable_names()));
    }
    std::vector<DispersionRow> rows = coefficient_dispersion_by_class(surfaces);
    CHECK(rows[1].median > rows[0].median);
}

TEST_CASE("quantile interpolates linearly") {
    std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
    CHECK_THROWS_AS(quantile({}, 0.5), DataError);
}

TEST_CASE("fixed-distance kernels drive in-sample and out-of-sample fits") {
    SynthSpec spec;
    spec.n_units = 300;
    spec.extent = 1000.0;
    spec.n_classes = 2;
    spec.n_variables = 2;
    spec.seed = 91;
    auto [ds, truth] = generate(spec);
    (void)truth;

    GwFitSpec gw;
    gw.kernel = {KernelShape::bisquare, BandwidthMode::fixed_distance, 250.0};
    gw.target_class = 0;
    gw.min_positive = 3;
    gw.seed = 2;
    NeighborGraph band = build_distance_band(ds, 250.0);
    GwModelSet models = fit_gw(ds, gw, band);
    CHECK(models.n_fitted() > 250);
    for (const GwUnitResult& u : models.units) {
        CHECK(u.focal_probability >= 0.0);
        CHECK(u.focal_probability <= 1.0);
    }

    Eigen::MatrixXd queries(2, 2);
    queries << 0.5, -0.2, -1.0, 0.7;
    GwPrediction pred =
        gw_predict(ds, queries, {100.0, 900.0}, {100.0, 900.0}, gw);
    for (double p : pred.probability) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("fit_gw validates the graph and spec") {
    SynthSpec spec;
    spec.n_units = 80;
    spec.n_classes = 2;
    spec.n_variables = 1;
    spec.seed = 4;
    auto [ds, truth] = generate(spec);
    (void)truth;
    NeighborGraph graph = build_knn(ds, 10);

    GwFitSpec gw;
    gw.kernel = {KernelShape::bisquare, BandwidthMode::adaptive_k, 10};
    gw.target_class = 5;
    gw.seed = 0;
    CHECK_THROWS_AS(fit_gw(ds, gw, graph), ConfigError);

    gw.target_class = 0;
    gw.min_positive = 0;
    CHECK_THROWS_AS(fit_gw(ds, gw, graph), ConfigError);

    gw.min_positive = 2;
    NeighborGraph wrong = build_knn(test_support::random_dataset(20, 1, 1), 3);
    CHECK_THROWS_AS(fit_gw(ds, gw, wrong), DataError);
}
