#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gwc/data_model.hpp"
#include "gwc/evaluation.hpp"
#include "gwc/forest.hpp"
#include "gwc/gw.hpp"
#include "gwc/kernels.hpp"
#include "gwc/synth.hpp"

namespace gwc {

// Flat INI-style file: [section] headers, key = value lines, ';' or '#'
// comments. Unknown sections or keys fail validation immediately.
struct IniFile {
    std::map<std::string, std::map<std::string, std::string>> sections;
    bool has(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;
    const std::string& get(const std::string& section, const std::string& key) const;
};

IniFile parse_ini(const std::string& path);

struct DataConfig {
    std::string units_csv;
    std::string elements_csv; // optional
    CsvSchema schema;
    bool standardize = true;
    std::vector<std::string> exclusions;
};

struct VarselConfig {
    double threshold = 0.75;
};

struct GwConfig {
    std::string learner = "logistic"; // logistic | forest | both
    int min_positive = 5;
    GwFallback fallback = GwFallback::prior_rate;
    double l2_lambda = 1e-4;
    std::vector<double> bandwidth_candidates; // empty = default ladder
    bool select_bandwidth = false;
    int forest_trees = 40;
    int forest_depth = 8;
    std::uint64_t seed = 0;
};

struct EvaluationConfig {
    int folds = 5;
    FoldMethod method = FoldMethod::coordinate_clusters;
    double l2_lambda = 1e-4;
    std::uint64_t seed = 0;
};

struct AutocorrConfig {
    int n_permutations = 999;
    double significance = 0.05;
    double d_max = 0.0; // 0 = max nearest-neighbor distance
    bool bonferroni = false;
    std::string source = "forest"; // which error surface to test
    std::uint64_t seed = 0;
};

struct GlobalForestConfig {
    ForestParams params;
};

struct PipelineConfig {
    std::optional<DataConfig> data;
    std::optional<SynthSpec> synth;
    VarselConfig varsel;
    std::optional<KernelSpec> kernel;
    bool dump_graph = false; // write per-class neighbor graphs from fit-gw
    std::optional<GwConfig> gw;
    std::optional<EvaluationConfig> evaluation;
    std::optional<AutocorrConfig> autocorr;
    std::optional<GlobalForestConfig> forest;
    std::string output_directory = "out";

    // Parses and fully validates the file; throws ConfigError on any unknown
    // section/key, malformed value, or missing mandatory seed.
    static PipelineConfig load(const std::string& path);

    // Section accessors that fail with an actionable message.
    const DataConfig& need_data() const;
    const SynthSpec& need_synth() const;
    const KernelSpec& need_kernel() const;
    const GwConfig& need_gw() const;
    const EvaluationConfig& need_evaluation() const;
    const AutocorrConfig& need_autocorr() const;
    const GlobalForestConfig& need_forest() const;
};

// Loads the unit table per the data section, optionally aggregates element
// labels, optionally standardizes. The applied per-variable (mean, sd) pairs
// travel along for reporting.
struct LoadedData {
    SpatialDataset dataset;
    std::optional<Standardization> standardization;
    std::vector<std::string> dropped_units; // units with no elements
};

LoadedData load_pipeline_dataset(const DataConfig& config);

} // namespace gwc
