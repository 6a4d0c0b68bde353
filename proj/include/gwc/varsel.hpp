#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gwc/data_model.hpp"

namespace gwc {

// Pearson correlation matrix of the dataset's feature columns.
Eigen::MatrixXd correlation_matrix(const SpatialDataset& dataset);
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X);

// Iterated principal-axis factor model. The factor count comes from Kaiser's
// criterion on the full correlation matrix; loadings are re-estimated from
// the reduced matrix until communalities stabilize.
struct FactorModel {
    Eigen::VectorXd eigenvalues;   // full correlation matrix, descending
    int n_factors = 0;
    Eigen::MatrixXd loadings;      // p x n_factors
    Eigen::VectorXd communalities; // per variable, in [0,1]
    double mean_communality = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<std::string> warnings; // Heywood clips, n <= p, SMC fallback
};

struct FactorOptions {
    int max_iterations = 100;
    double tol = 1e-4; // max communality change
};

FactorModel fit_factor_model(const SpatialDataset& dataset, const FactorOptions& opts = {});
FactorModel fit_factor_model_corr(const Eigen::MatrixXd& corr, const FactorOptions& opts = {});

struct CommunalitySplit {
    std::vector<std::string> kept;
    std::vector<std::string> removed;
};

// Keeps variable j iff its communality is >= the mean communality.
CommunalitySplit communality_filter(const FactorModel& model,
                                    const std::vector<std::string>& variables);

struct MstEdge {
    int a = 0, b = 0;   // variable indices, a < b
    double abs_r = 0.0;
};

struct PruneRemoval {
    std::string removed;
    std::string paired_with;
    double abs_r = 0.0;
    int degree_removed = 0;
    int degree_kept = 0;
    std::string tie_rule; // "degree", "mean_abs_corr", or "index"
};

struct MstPruneResult {
    std::vector<MstEdge> mst_edges;
    std::vector<MstEdge> high_corr_pairs; // |r| >= threshold, descending |r|
    std::vector<PruneRemoval> removals;
    std::vector<std::string> retained;
    double total_weight = 0.0; // sum of (1 - |r|) over MST edges
};

// Builds the complete correlation graph with edge weight 1-|r|, takes its
// minimum spanning tree, and removes one member of every highly correlated
// pair, lower MST degree first.
MstPruneResult mst_prune(const Eigen::MatrixXd& corr,
                         const std::vector<std::string>& variables,
                         double threshold = 0.75);

struct SelectionTrace {
    std::vector<std::string> input_variables;
    std::vector<std::string> manually_excluded;
    FactorModel factor_model;
    std::vector<std::string> stage1_removed;
    std::vector<double> stage1_removed_communalities;
    MstPruneResult prune;
    std::vector<std::string> retained;
    double threshold = 0.75;
};

// The full three-stage workflow: manual exclusion, factor/communality
// filter, MST correlation pruning.
SelectionTrace select_variables(const SpatialDataset& dataset,
                                const std::vector<std::string>& exclusions,
                                double threshold = 0.75,
                                const FactorOptions& opts = {});

nlohmann::ordered_json selection_trace_to_json(const SelectionTrace& trace);

} // namespace gwc
