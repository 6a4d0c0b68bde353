#pragma once

#include <random>
#include <string>
#include <vector>

#include "gwc/data_model.hpp"

namespace test_support {

// Quick dataset from parallel vectors; features indexed [unit][variable].
inline gwc::SpatialDataset make_dataset(const std::vector<double>& xs,
                                        const std::vector<double>& ys,
                                        const std::vector<std::vector<double>>& features,
                                        const std::vector<int>& labels = {},
                                        std::vector<std::string> class_names = {},
                                        bool standardized = false) {
    std::vector<gwc::UnitRecord> units(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        units[i].unit_id = "u" + std::to_string(i);
        units[i].x = xs[i];
        units[i].y = ys[i];
        units[i].features = features[i];
        units[i].label = labels.empty() ? -1 : labels[i];
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < features[0].size(); ++j)
        names.push_back("v" + std::to_string(j + 1));
    return gwc::SpatialDataset::from_records(units, names, std::move(class_names),
                                             standardized);
}

// Dataset whose base variables share a common-factor structure: each loads
// sqrt(h2/2) on two of seven latent factors (a balanced pair design keeps
// base-base correlations at h2/2), plus optional redundant clones of chosen
// sources. A clone mirrors the source's common component only, so its
// correlation with the source is the requested rho while its communality
// (rho^2/h2... sits at a^2 = (rho/sqrt(h2))^2) stays strictly below the base
// band. Used by the variable-selection tests, where every base variable must
// carry an above-average communality and every clone a below-average one.
inline gwc::SpatialDataset factor_structured_dataset(
    int n, int n_base, double h2, const std::vector<std::pair<int, double>>& clones,
    unsigned seed, std::vector<std::string>* clone_names = nullptr) {
    static const int pairs[16][2] = {{0, 1}, {2, 3}, {4, 5}, {0, 6}, {1, 2}, {3, 4},
                                     {5, 6}, {0, 2}, {1, 3}, {4, 6}, {3, 5}, {2, 6},
                                     {0, 4}, {1, 5}, {2, 4}, {3, 6}};
    if (n_base > 16) throw std::invalid_argument("n_base <= 16");
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> coord(0.0, 1000.0);

    const double load = std::sqrt(h2 / 2.0);
    const double unique = std::sqrt(1.0 - h2);
    const int p_total = n_base + static_cast<int>(clones.size());

    std::vector<double> xs(n), ys(n);
    std::vector<std::vector<double>> features(n, std::vector<double>(p_total));
    std::vector<double> factors(7), common(n_base);
    for (int i = 0; i < n; ++i) {
        xs[i] = coord(rng);
        ys[i] = coord(rng);
        for (double& f : factors) f = normal(rng);
        for (int j = 0; j < n_base; ++j) {
            common[j] = load * (factors[pairs[j][0]] + factors[pairs[j][1]]);
            features[i][j] = common[j] + unique * normal(rng);
        }
        for (std::size_t q = 0; q < clones.size(); ++q) {
            const auto& [source, rho] = clones[q];
            const double a = rho / std::sqrt(h2); // corr(clone, source) = a*sqrt(h2)
            if (a > 1.0) throw std::invalid_argument("rho must be <= sqrt(h2)");
            features[i][n_base + q] = a / std::sqrt(h2) * common[source] +
                                      std::sqrt(1.0 - a * a) * normal(rng);
        }
    }

    std::vector<gwc::UnitRecord> units(n);
    std::vector<std::string> names;
    char buf[32];
    for (int j = 0; j < n_base; ++j) {
        std::snprintf(buf, sizeof(buf), "v%02d", j + 1);
        names.push_back(buf);
    }
    for (std::size_t q = 0; q < clones.size(); ++q) {
        std::snprintf(buf, sizeof(buf), "v%02d_clone", clones[q].first + 1);
        names.push_back(buf);
        if (clone_names) clone_names->push_back(buf);
    }
    for (int i = 0; i < n; ++i) {
        units[i].unit_id = "u" + std::to_string(i);
        units[i].x = xs[i];
        units[i].y = ys[i];
        units[i].features = features[i];
    }
    return gwc::SpatialDataset::from_records(units, names, {});
}

// Uniform random point cloud with standard-normal features.
inline gwc::SpatialDataset random_dataset(int n, int p, unsigned seed,
                                          double extent = 1000.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, extent);
    std::normal_distribution<double> feat(0.0, 1.0);
    std::vector<double> xs(n), ys(n);
    std::vector<std::vector<double>> features(n, std::vector<double>(p));
    for (int i = 0; i < n; ++i) {
        xs[i] = coord(rng);
        ys[i] = coord(rng);
        for (int j = 0; j < p; ++j) features[i][j] = feat(rng);
    }
    return make_dataset(xs, ys, features);
}

} // namespace test_support
