#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gwc/data_model.hpp"
#include "gwc/forest.hpp"
#include "gwc/kernels.hpp"

namespace gwc {

enum class GwLearner { logistic, forest };
enum class GwFallback { global_model, prior_rate };

GwLearner parse_gw_learner(const std::string& s);
std::string to_string(GwLearner l);

// One-vs-rest local fitting spec for a single target class.
struct GwFitSpec {
    GwLearner learner = GwLearner::logistic;
    KernelSpec kernel;
    int target_class = 0;
    int min_positive = 5;                       // positives required in a neighborhood
    GwFallback fallback = GwFallback::prior_rate;
    double l2_lambda = 1e-4;                    // local logistic ridge
    ForestParams forest{/* local forests stay small */ 40, 8, 1.0, 0, true, 0};
    std::uint64_t seed = 0;

    void validate(const SpatialDataset& dataset) const;
};

enum class GwUnitStatus { fitted, skipped_low_positive, skipped_degenerate };

std::string to_string(GwUnitStatus s);

struct GwUnitResult {
    GwUnitStatus status = GwUnitStatus::skipped_degenerate;
    double focal_probability = 0.0;   // fallback value when skipped
    Eigen::VectorXd coefficients;     // logistic only; empty otherwise
    double intercept = 0.0;
    bool converged = false;
};

// The ensemble of local models for one class, in dataset unit order.
struct GwModelSet {
    GwLearner learner = GwLearner::logistic;
    int target_class = 0;
    KernelSpec kernel;
    double bandwidth = 0.0;
    std::vector<GwUnitResult> units;

    int n_fitted() const;
    int n_skipped() const;
};

// Fits one local model per focal unit on its kernel-weighted neighborhood
// (self excluded). Parallel over units; output is identical for any worker
// count.
GwModelSet fit_gw(const SpatialDataset& dataset, const GwFitSpec& spec,
                  const NeighborGraph& graph);

// Local predictions at out-of-sample locations: each query point gets a
// model fit on its neighborhood among the training units only. Used by
// spatial cross-validation, where queries are held-out units.
struct GwPrediction {
    std::vector<double> probability;
    std::vector<GwUnitStatus> status;
    std::vector<double> neighborhood_f1; // local model's F1 on its own
                                         // neighborhood; NaN when skipped
};

GwPrediction gw_predict(const SpatialDataset& train, const Eigen::MatrixXd& query_features,
                        const std::vector<double>& query_x, const std::vector<double>& query_y,
                        const GwFitSpec& spec);

// Per-variable view over the local logistic coefficients.
struct VariableSummary {
    std::string name;
    double mean_abs = 0.0;
    double sd = 0.0;             // sample sd over fitted units
    double sign_agreement = 0.0; // max share of a single sign
};

struct CoefficientSurface {
    int target_class = 0;
    std::vector<std::string> variable_names;
    Eigen::MatrixXd local; // n x p; NaN where the unit was skipped
    std::vector<bool> fitted;
    std::vector<VariableSummary> summaries;   // variable order
    std::vector<int> order_by_mean_abs;       // descending mean |beta|
    int n_fitted = 0;
    int n_skipped = 0;
};

CoefficientSurface extract_coefficients(const GwModelSet& models,
                                        const std::vector<std::string>& variable_names);

// Five-number summary of per-variable coefficient sds, one row per class.
struct DispersionRow {
    int class_index = 0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

std::vector<DispersionRow>
coefficient_dispersion_by_class(const std::vector<CoefficientSurface>& surfaces);

// Type-7 linear-interpolation quantile of unsorted values.
double quantile(std::vector<double> values, double q);

void write_gw_units_csv(const std::string& path, const GwModelSet& models,
                        const SpatialDataset& dataset,
                        const std::vector<std::string>& variable_names);

nlohmann::ordered_json coefficient_surface_to_json(const CoefficientSurface& surface);
nlohmann::ordered_json dispersion_to_json(const std::vector<DispersionRow>& rows,
                                          const std::vector<std::string>& class_names);

} // namespace gwc
