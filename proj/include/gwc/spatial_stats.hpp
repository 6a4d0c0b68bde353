#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gwc/data_model.hpp"
#include "gwc/kernels.hpp"

namespace gwc {

struct GResult {
    double g_observed = 0.0;
    double g_expected = 0.0; // permutation mean
    double z_score = 0.0;    // from the permutation distribution
    double p_value = 1.0;    // (count of permuted G >= observed + 1)/(n_perm + 1)
    int n_permutations = 0;
};

// Global Getis-Ord G over a symmetric binary graph:
// G = sum_{i != j} w_ij x_i x_j / sum_{i != j} x_i x_j, inference by random
// relabeling. Permutations run in parallel with per-permutation seeds.
GResult global_g(const std::vector<double>& values, const NeighborGraph& graph,
                 int n_permutations, std::uint64_t seed);

struct LocalGUnit {
    double g_star = 0.0;
    double z_score = 0.0;
    double p_value = 1.0;
    bool hotspot = false;
};

struct LocalGResult {
    std::vector<LocalGUnit> units;
    double significance = 0.05;
    bool bonferroni = false;
    int n_permutations = 0;
};

// Local G* (self included with weight 1), conditional permutation: x_i stays
// put, the remaining values are resampled without replacement. Hotspots:
// z > 0 and p below the (optionally Bonferroni-corrected) level.
LocalGResult local_g_star(const std::vector<double>& values, const NeighborGraph& graph,
                          int n_permutations, std::uint64_t seed, double significance,
                          bool bonferroni = false);

// Binary misclassification indicator: 1 where prediction != label.
// Predictions must be held-out (spatial CV) and aligned with unit order.
std::vector<double> error_surface(const std::vector<int>& predictions,
                                  const SpatialDataset& dataset);

void write_local_g_csv(const std::string& path, const LocalGResult& result,
                       const SpatialDataset& dataset);
nlohmann::ordered_json global_g_to_json(const GResult& result);

} // namespace gwc
