#include "gwc/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gwc/error.hpp"
#include "gwc/parallel.hpp"
#include "gwc/rng.hpp"

namespace gwc {

namespace {

struct Sample {
    int row;       // row in the (reordered) training matrix
    double weight; // multiplicity-folded weight
};

double gini(const std::vector<double>& class_weight, double total) {
    if (total <= 0) return 0.0;
    double sum_sq = 0.0;
    for (double v : class_weight) sum_sq += v * v;
    return 1.0 - sum_sq / (total * total);
}

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const std::vector<int>& y;
    int n_classes;
    const ForestParams& params;
    int mtry;
    Rng rng;
    Tree tree;

    // Scratch buffers reused across nodes.
    std::vector<int> feature_pool;

    TreeBuilder(const Eigen::MatrixXd& X_, const std::vector<int>& y_, int n_classes_,
                const ForestParams& params_, int mtry_, std::uint64_t seed)
        : X(X_), y(y_), n_classes(n_classes_), params(params_), mtry(mtry_), rng(seed) {
        feature_pool.resize(X.cols());
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
    }

    int make_leaf(const std::vector<double>& class_weight, double total) {
        TreeNode node;
        node.probs.resize(n_classes);
        for (int k = 0; k < n_classes; ++k) node.probs[k] = class_weight[k] / total;
        tree.nodes.push_back(std::move(node));
        return static_cast<int>(tree.nodes.size()) - 1;
    }

    int build(std::vector<Sample>& samples, int depth) {
        std::vector<double> class_weight(n_classes, 0.0);
        double total = 0.0;
        for (const Sample& s : samples) {
            class_weight[y[s.row]] += s.weight;
            total += s.weight;
        }
        const double parent_gini = gini(class_weight, total);

        int present = 0;
        for (int k = 0; k < n_classes; ++k)
            if (class_weight[k] > 0) ++present;
        if (present <= 1 || depth >= params.max_depth ||
            total < 2.0 * params.min_leaf_weight)
            return make_leaf(class_weight, total);

        // mtry features drawn without replacement.
        for (int t = 0; t < mtry; ++t) {
            const int j = t + static_cast<int>(rng.below(feature_pool.size() - t));
            std::swap(feature_pool[t], feature_pool[j]);
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_decrease = 0.0;
        std::vector<double> left_weight(n_classes);

        std::vector<Sample> sorted = samples;
        for (int t = 0; t < mtry; ++t) {
            const int f = feature_pool[t];
            std::sort(sorted.begin(), sorted.end(), [&](const Sample& a, const Sample& b) {
                const double va = X(a.row, f), vb = X(b.row, f);
                if (va != vb) return va < vb;
                return a.row < b.row;
            });

            std::fill(left_weight.begin(), left_weight.end(), 0.0);
            double left_total = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const Sample& s = sorted[i];
                left_weight[y[s.row]] += s.weight;
                left_total += s.weight;
                const double v = X(s.row, f);
                const double v_next = X(sorted[i + 1].row, f);
                if (v == v_next) continue; // split only between distinct values
                const double right_total = total - left_total;
                if (left_total < params.min_leaf_weight ||
                    right_total < params.min_leaf_weight)
                    continue;
                double left_sq = 0.0, right_sq = 0.0;
                for (int k = 0; k < n_classes; ++k) {
                    left_sq += left_weight[k] * left_weight[k];
                    const double r = class_weight[k] - left_weight[k];
                    right_sq += r * r;
                }
                const double child_gini =
                    (left_total - left_sq / left_total + right_total - right_sq / right_total) /
                    total;
                const double decrease = parent_gini - child_gini;
                // Splitting can never increase the weighted impurity; a
                // negative decrease beyond roundoff means a bookkeeping bug.
                if (decrease < -1e-9)
                    throw std::logic_error("weighted child Gini exceeds the parent's");
                if (decrease <= 0) continue;
                const double threshold = 0.5 * (v + v_next);
                const bool better =
                    best_feature < 0 || decrease > best_decrease ||
                    (decrease == best_decrease &&
                     (f < best_feature || (f == best_feature && threshold < best_threshold)));
                if (better) {
                    best_feature = f;
                    best_threshold = threshold;
                    best_decrease = decrease;
                }
            }
        }

        if (best_feature < 0) return make_leaf(class_weight, total);

        std::vector<Sample> left_samples, right_samples;
        for (const Sample& s : samples) {
            if (X(s.row, best_feature) <= best_threshold)
                left_samples.push_back(s);
            else
                right_samples.push_back(s);
        }
        samples.clear();
        samples.shrink_to_fit();

        TreeNode node;
        node.feature = best_feature;
        node.threshold = best_threshold;
        const int self = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(std::move(node));
        const int left = build(left_samples, depth + 1);
        const int right = build(right_samples, depth + 1);
        tree.nodes[self].left = left;
        tree.nodes[self].right = right;
        return self;
    }
};

} // namespace

ForestModel fit_forest(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       const Eigen::VectorXd& w, int n_classes, const ForestParams& params,
                       const std::vector<int>& row_keys) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (static_cast<int>(y.size()) != n || w.size() != n)
        throw DataError("X, y, w must have matching row counts");
    if (params.n_trees < 1) throw ConfigError("n_trees must be >= 1");
    if (params.mtry > p) throw ConfigError("mtry cannot exceed the feature count");
    if (!row_keys.empty() && static_cast<int>(row_keys.size()) != n)
        throw DataError("row_keys length must match the row count");

    // Canonical row order: ascending row_keys. All subsequent work sees the
    // reordered data, so the fit is independent of the caller's row order.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (!row_keys.empty()) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (row_keys[a] != row_keys[b]) return row_keys[a] < row_keys[b];
            return a < b;
        });
        for (int i = 0; i + 1 < n; ++i)
            if (row_keys[order[i]] == row_keys[order[i + 1]])
                throw DataError("row_keys must be distinct");
    }
    Eigen::MatrixXd Xs(n, p);
    std::vector<int> ys(n);
    Eigen::VectorXd ws(n);
    for (int i = 0; i < n; ++i) {
        Xs.row(i) = X.row(order[i]);
        ys[i] = y[order[i]];
        ws[i] = w[order[i]];
    }

    int distinct = 0;
    std::vector<bool> seen(n_classes, false);
    double w_total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (ws[i] < 0) throw DataError("sample weights must be non-negative");
        if (ws[i] > 0 && !seen[ys[i]]) {
            seen[ys[i]] = true;
            ++distinct;
        }
        w_total += ws[i];
    }
    if (distinct < 2)
        throw NumericError("degenerate labels: forest requires >= 2 classes among "
                           "positively weighted rows");

    ForestModel model;
    model.params = params;
    model.n_classes = n_classes;
    model.n_features = p;
    model.trees.resize(params.n_trees);
    const int mtry = params.mtry > 0 ? params.mtry
                                     : static_cast<int>(std::ceil(std::sqrt(double(p))));

    // Cumulative weights for bootstrap draws.
    std::vector<double> cumulative(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += ws[i];
        cumulative[i] = acc;
    }

#pragma omp parallel for schedule(dynamic) num_threads(max_workers())
    for (int t = 0; t < params.n_trees; ++t) {
        const std::uint64_t tree_seed = derive_seed(params.seed, static_cast<std::uint64_t>(t));
        Rng boot_rng(tree_seed);

        std::vector<Sample> samples;
        if (params.bootstrap) {
            // n draws proportional to w, folded into per-row multiplicities.
            std::vector<double> multiplicity(n, 0.0);
            for (int d = 0; d < n; ++d) {
                const double u = boot_rng.uniform() * w_total;
                const int idx = static_cast<int>(
                    std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                    cumulative.begin());
                multiplicity[std::min(idx, n - 1)] += 1.0;
            }
            for (int i = 0; i < n; ++i)
                if (multiplicity[i] > 0) samples.push_back({i, multiplicity[i]});
        } else {
            for (int i = 0; i < n; ++i)
                if (ws[i] > 0) samples.push_back({i, ws[i]});
        }

        TreeBuilder builder(Xs, ys, n_classes, params, mtry,
                            derive_seed(tree_seed, 0x7ee5u));
        builder.build(samples, 0);
        model.trees[t] = std::move(builder.tree);
    }
    return model;
}

const std::vector<double>& tree_leaf_probs(const Tree& tree, const Eigen::VectorXd& x) {
    int node = 0;
    while (tree.nodes[node].feature >= 0) {
        const TreeNode& nd = tree.nodes[node];
        node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return tree.nodes[node].probs;
}

Eigen::MatrixXd predict_forest(const ForestModel& model, const Eigen::MatrixXd& X) {
    if (static_cast<int>(X.cols()) != model.n_features)
        throw DataError("predict_forest: expected " + std::to_string(model.n_features) +
                        " feature columns, got " + std::to_string(X.cols()));
    const int n = static_cast<int>(X.rows());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, model.n_classes);

#pragma omp parallel for schedule(static) num_threads(max_workers())
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x = X.row(i);
        for (const Tree& tree : model.trees) {
            const std::vector<double>& probs = tree_leaf_probs(tree, x);
            for (int k = 0; k < model.n_classes; ++k) out(i, k) += probs[k];
        }
        out.row(i) /= static_cast<double>(model.trees.size());
    }
    return out;
}

} // namespace gwc
