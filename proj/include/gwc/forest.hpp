#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gwc {

struct ForestParams {
    int n_trees = 100;
    int max_depth = 12;
    double min_leaf_weight = 1.0;
    int mtry = 0;          // 0 = ceil(sqrt(p))
    bool bootstrap = true; // weighted bootstrap; off = weight-carrying rows
    std::uint64_t seed = 0;
};

// Flat node storage; feature == -1 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> probs; // leaf class distribution, sums to 1
};

struct Tree {
    std::vector<TreeNode> nodes; // root at 0
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestParams params;
    int n_classes = 0;
    int n_features = 0;
};

// CART forest on weighted samples. Each tree resamples rows with probability
// proportional to w (bootstrap mode) and greedily maximizes the weighted
// Gini decrease over mtry randomly chosen features. row_keys, when given,
// define a canonical row order so that fits are invariant to input row
// permutations; they must be distinct.
ForestModel fit_forest(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       const Eigen::VectorXd& w, int n_classes, const ForestParams& params,
                       const std::vector<int>& row_keys = {});

// Mean of per-tree leaf distributions; rows sum to 1. Parallel over rows.
Eigen::MatrixXd predict_forest(const ForestModel& model, const Eigen::MatrixXd& X);

// Single-tree distribution for one feature row.
const std::vector<double>& tree_leaf_probs(const Tree& tree, const Eigen::VectorXd& x);

} // namespace gwc
