#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gwc/data_model.hpp"
#include "gwc/forest.hpp"
#include "gwc/gw.hpp"

namespace gwc {

enum class FoldMethod { coordinate_clusters, grid_blocks };

FoldMethod parse_fold_method(const std::string& s);

struct FoldAssignment {
    std::vector<int> fold_of; // per unit
    int n_folds = 0;
    FoldMethod method = FoldMethod::coordinate_clusters;
    std::uint64_t seed = 0;
};

// Spatially blocked folds: k-means on coordinates (k-means++ seeding) or
// square grid tiles assigned round-robin.
FoldAssignment spatial_kfold(const SpatialDataset& dataset, int n_folds,
                             FoldMethod method, std::uint64_t seed);

struct ClassScore {
    long true_positives = 0;
    long false_positives = 0;
    long false_negatives = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool absent = false; // class appears in neither y_true nor y_pred
};

struct ScoreReport {
    std::string model;
    std::vector<ClassScore> per_class;
    double macro_f1 = 0.0;             // unweighted mean over all C classes
    std::vector<double> fold_macro_f1; // attached by the CV harnesses
};

// Per-class F1 with the 0/0 -> 0 convention; absent classes count as zero
// and are flagged.
ScoreReport f1_macro(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                     int n_classes);

enum class GlobalModelKind { multinomial_lr, forest };

struct GlobalEvalOptions {
    double l2_lambda = 1e-4;
    ForestParams forest;
    std::uint64_t seed = 0;
};

struct GlobalEvaluation {
    ScoreReport pooled;            // primary: all held-out predictions scored once
    std::vector<int> predictions;  // held-out predicted class per unit
    std::vector<int> flagged_folds; // folds whose training split missed a class
};

// Train on out-of-fold units, predict in-fold; pooled predictions are the
// primary score, per-fold scores attached.
GlobalEvaluation evaluate_global(const SpatialDataset& dataset, GlobalModelKind kind,
                                 const FoldAssignment& folds,
                                 const GlobalEvalOptions& options = {});

struct GwClassEvaluation {
    int class_index = 0;
    double bandwidth = 0.0;
    double f1_mean = 0.0;           // mean over folds of the binary F1
    std::vector<double> fold_f1;
    double location_f1_mean = 0.0;  // local-model neighborhood F1 across units
    double location_f1_sd = 0.0;
    int n_fitted = 0;
    int n_skipped = 0;
    bool evaluable = false;
    std::vector<double> focal_probability; // held-out, dataset order
};

struct GwEvaluation {
    std::vector<GwClassEvaluation> per_class;
    double mean_class_f1 = 0.0; // over evaluable classes
    ScoreReport combined;       // argmax over class probabilities vs true labels
};

// One-vs-rest spatial CV of the geographically weighted learner; graphs are
// rebuilt per training split so held-out units never enter a neighborhood.
GwEvaluation evaluate_gw(const SpatialDataset& dataset, const std::vector<GwFitSpec>& specs,
                         const FoldAssignment& folds);

struct BandwidthScore {
    double bandwidth = 0.0;
    double f1_mean = 0.0;
    int n_skipped = 0;
    bool all_skipped = false;
};

struct BandwidthSelection {
    double best = 0.0;
    std::vector<BandwidthScore> table;
};

// Scores every candidate bandwidth by spatially cross-validated F1 of focal
// predictions; ties go to the smaller bandwidth.
BandwidthSelection select_bandwidth(const SpatialDataset& dataset, const GwFitSpec& base,
                                    const std::vector<double>& candidates,
                                    const FoldAssignment& folds);

// Default candidate ladder: geometrically spaced adaptive k between
// max(30, 5p) and n-1.
std::vector<double> default_bandwidth_candidates(const SpatialDataset& dataset, int count = 12);

nlohmann::ordered_json score_report_to_json(const ScoreReport& report,
                                            const std::vector<std::string>& class_names);
nlohmann::ordered_json gw_evaluation_to_json(const GwEvaluation& eval,
                                             const std::vector<std::string>& class_names);

} // namespace gwc
