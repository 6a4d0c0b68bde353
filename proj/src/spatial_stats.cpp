#include "gwc/spatial_stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gwc/csv.hpp"
#include "gwc/error.hpp"
#include "gwc/parallel.hpp"
#include "gwc/rng.hpp"

namespace gwc {

namespace {

void check_values(const std::vector<double>& values, const NeighborGraph& graph) {
    if (static_cast<int>(values.size()) != graph.n())
        throw DataError("value vector does not match the neighbor graph");
    if (values.empty()) throw DataError("empty value vector");
    bool all_equal = true;
    for (double v : values) {
        if (v < 0) throw DataError("Getis-Ord statistics require non-negative values");
        if (v != values.front()) all_equal = false;
    }
    if (all_equal)
        throw NumericError("degenerate field: all values equal, the statistic "
                           "carries no information");
}

// Numerator of global G for a value arrangement.
double g_numerator(const std::vector<double>& values, const NeighborGraph& graph) {
    double num = 0.0;
    for (int i = 0; i < graph.n(); ++i) {
        const NeighborList& nl = graph.neighbors[i];
        double s = 0.0;
        for (std::size_t m = 0; m < nl.indices.size(); ++m)
            s += values[nl.indices[m]];
        num += values[i] * s;
    }
    return num;
}

} // namespace

GResult global_g(const std::vector<double>& values, const NeighborGraph& graph,
                 int n_permutations, std::uint64_t seed) {
    check_values(values, graph);
    if (!graph.symmetric)
        throw DataError("global G requires a symmetric binary graph");
    if (n_permutations < 1) throw ConfigError("n_permutations must be >= 1");

    double sum = 0.0, sum_sq = 0.0;
    for (double v : values) {
        sum += v;
        sum_sq += v * v;
    }
    const double denom = sum * sum - sum_sq; // sum over i != j of x_i x_j
    if (!(denom > 0))
        throw NumericError("degenerate field: off-diagonal cross products vanish");

    GResult result;
    result.n_permutations = n_permutations;
    result.g_observed = g_numerator(values, graph) / denom;

    std::vector<double> permuted_g(n_permutations);
#pragma omp parallel num_threads(max_workers())
    {
        std::vector<double> shuffled(values);
#pragma omp for schedule(static)
        for (int t = 0; t < n_permutations; ++t) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
            std::copy(values.begin(), values.end(), shuffled.begin());
            rng.shuffle(shuffled);
            permuted_g[t] = g_numerator(shuffled, graph) / denom;
        }
    }

    int count_ge = 0;
    double mean = 0.0;
    for (double g : permuted_g) {
        if (g >= result.g_observed) ++count_ge;
        mean += g;
    }
    mean /= n_permutations;
    double var = 0.0;
    for (double g : permuted_g) var += (g - mean) * (g - mean);
    var = n_permutations > 1 ? var / (n_permutations - 1) : 0.0;

    result.g_expected = mean;
    result.p_value = (count_ge + 1.0) / (n_permutations + 1.0);
    result.z_score = var > 0 ? (result.g_observed - mean) / std::sqrt(var) : 0.0;
    return result;
}

LocalGResult local_g_star(const std::vector<double>& values, const NeighborGraph& graph,
                          int n_permutations, std::uint64_t seed, double significance,
                          bool bonferroni) {
    check_values(values, graph);
    if (n_permutations < 1) throw ConfigError("n_permutations must be >= 1");
    if (!(significance > 0 && significance < 1))
        throw ConfigError("significance must lie in (0,1)");

    const int n = graph.n();
    double total = 0.0;
    for (double v : values) total += v;
    if (!(total > 0)) throw NumericError("degenerate field: all values are zero");

    LocalGResult result;
    result.units.resize(n);
    result.significance = significance;
    result.bonferroni = bonferroni;
    result.n_permutations = n_permutations;
    const double level = bonferroni ? significance / n : significance;

#pragma omp parallel num_threads(max_workers())
    {
        std::vector<double> others(n - 1);
#pragma omp for schedule(dynamic, 16)
        for (int i = 0; i < n; ++i) {
            const NeighborList& nl = graph.neighbors[i];
            const int m = static_cast<int>(nl.indices.size());
            LocalGUnit& unit = result.units[i];

            double neighbor_sum = 0.0;
            for (int j : nl.indices) neighbor_sum += values[j];
            const double observed = (values[i] + neighbor_sum) / total;
            unit.g_star = observed;

            // Conditional permutation: hold x_i, draw m of the other values.
            int idx = 0;
            for (int j = 0; j < n; ++j)
                if (j != i) others[idx++] = values[j];

            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            int count_ge = 0;
            double mean = 0.0, sq = 0.0;
            for (int t = 0; t < n_permutations; ++t) {
                double draw_sum = 0.0;
                // Partial Fisher-Yates: the first m entries become a sample
                // without replacement.
                for (int d = 0; d < m; ++d) {
                    const std::size_t pick =
                        d + static_cast<std::size_t>(rng.below(others.size() - d));
                    std::swap(others[d], others[pick]);
                    draw_sum += others[d];
                }
                const double g = (values[i] + draw_sum) / total;
                if (g >= observed) ++count_ge;
                mean += g;
                sq += g * g;
            }
            mean /= n_permutations;
            const double var =
                n_permutations > 1
                    ? std::max(0.0, (sq - n_permutations * mean * mean) / (n_permutations - 1))
                    : 0.0;
            unit.p_value = (count_ge + 1.0) / (n_permutations + 1.0);
            unit.z_score = var > 0 ? (observed - mean) / std::sqrt(var) : 0.0;
            unit.hotspot = unit.z_score > 0 && unit.p_value < level;
        }
    }
    return result;
}

std::vector<double> error_surface(const std::vector<int>& predictions,
                                  const SpatialDataset& dataset) {
    if (static_cast<int>(predictions.size()) != dataset.n())
        throw DataError("prediction vector does not match the dataset");
    if (!dataset.has_labels()) throw DataError("error surface requires labels");
    std::vector<double> surface(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i)
        surface[i] = predictions[i] == dataset.label(static_cast<int>(i)) ? 0.0 : 1.0;
    return surface;
}

void write_local_g_csv(const std::string& path, const LocalGResult& result,
                       const SpatialDataset& dataset) {
    if (static_cast<int>(result.units.size()) != dataset.n())
        throw DataError("local G result does not match the dataset");
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "unit_id,g_star,z_score,p_value,hotspot\n";
    for (std::size_t i = 0; i < result.units.size(); ++i) {
        const LocalGUnit& u = result.units[i];
        out << csv_escape(dataset.unit_id(static_cast<int>(i))) << ','
            << format_double(u.g_star) << ',' << format_double(u.z_score) << ','
            << format_double(u.p_value) << ',' << (u.hotspot ? 1 : 0) << '\n';
    }
}

nlohmann::ordered_json global_g_to_json(const GResult& result) {
    nlohmann::ordered_json j;
    j["g_observed"] = result.g_observed;
    j["g_expected"] = result.g_expected;
    j["z_score"] = result.z_score;
    j["p_value"] = result.p_value;
    j["n_permutations"] = result.n_permutations;
    return j;
}

} // namespace gwc
