#include "gwc/varsel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gwc/error.hpp"

namespace gwc {

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (n < 2) throw DataError("correlation requires >= 2 rows");

    Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
    Eigen::VectorXd norms(p);
    for (int j = 0; j < p; ++j) {
        norms[j] = centered.col(j).norm();
        if (!(norms[j] > 0.0))
            throw NumericError("variable at column " + std::to_string(j) +
                               " has zero variance");
    }
    Eigen::MatrixXd R = centered.transpose() * centered;
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) R(a, b) /= norms[a] * norms[b];
    // Exact unit diagonal and symmetry.
    for (int a = 0; a < p; ++a) {
        R(a, a) = 1.0;
        for (int b = a + 1; b < p; ++b) {
            const double v = 0.5 * (R(a, b) + R(b, a));
            R(a, b) = R(b, a) = v;
        }
    }
    return R;
}

Eigen::MatrixXd correlation_matrix(const SpatialDataset& dataset) {
    return correlation_matrix(dataset.features());
}

namespace {

// Eigenvalues/vectors in descending eigenvalue order.
void eigen_descending(const Eigen::MatrixXd& S, Eigen::VectorXd& values,
                      Eigen::MatrixXd& vectors) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
    if (solver.info() != Eigen::Success)
        throw NumericError("eigendecomposition failed");
    const int p = static_cast<int>(S.rows());
    values.resize(p);
    vectors.resize(p, p);
    for (int j = 0; j < p; ++j) {
        values[j] = solver.eigenvalues()[p - 1 - j];
        vectors.col(j) = solver.eigenvectors().col(p - 1 - j);
    }
}

// Initial communalities: squared multiple correlations, 1 - 1/diag(R^-1).
// Falls back to the largest absolute off-diagonal correlation per row when R
// is (near-)singular.
Eigen::VectorXd initial_communalities(const Eigen::MatrixXd& R, bool& used_fallback) {
    const int p = static_cast<int>(R.rows());
    used_fallback = false;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
    if (lu.isInvertible()) {
        Eigen::MatrixXd Rinv = lu.inverse();
        Eigen::VectorXd smc(p);
        bool ok = true;
        for (int j = 0; j < p; ++j) {
            smc[j] = 1.0 - 1.0 / Rinv(j, j);
            if (!std::isfinite(smc[j]) || smc[j] < 0.0 || smc[j] > 1.0) ok = false;
        }
        if (ok) return smc;
    }
    used_fallback = true;
    Eigen::VectorXd h(p);
    for (int j = 0; j < p; ++j) {
        double best = 0.0;
        for (int k = 0; k < p; ++k)
            if (k != j) best = std::max(best, std::abs(R(j, k)));
        h[j] = best;
    }
    return h;
}

} // namespace

FactorModel fit_factor_model_corr(const Eigen::MatrixXd& corr, const FactorOptions& opts) {
    const int p = static_cast<int>(corr.rows());
    if (p < 2) throw DataError("factor analysis requires >= 2 variables");
    if (corr.cols() != p) throw DataError("correlation matrix must be square");

    FactorModel model;
    Eigen::MatrixXd vectors;
    eigen_descending(corr, model.eigenvalues, vectors);

    // Kaiser: factors with full-matrix eigenvalues >= 1. The matrix trace is
    // p, so at least one eigenvalue is always >= 1.
    int n_factors = 0;
    for (int j = 0; j < p; ++j)
        if (model.eigenvalues[j] >= 1.0) ++n_factors;
    model.n_factors = std::max(1, n_factors);

    bool smc_fallback = false;
    Eigen::VectorXd h = initial_communalities(corr, smc_fallback);
    if (smc_fallback)
        model.warnings.push_back("singular correlation matrix: initial communalities "
                                 "fall back to max |r| per row");

    Eigen::MatrixXd reduced = corr;
    Eigen::VectorXd values;
    Eigen::MatrixXd loadings;
    bool heywood = false;
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        for (int j = 0; j < p; ++j) reduced(j, j) = h[j];
        eigen_descending(reduced, values, vectors);
        loadings.resize(p, model.n_factors);
        for (int f = 0; f < model.n_factors; ++f) {
            const double scale = std::sqrt(std::max(values[f], 0.0));
            loadings.col(f) = vectors.col(f) * scale;
        }
        Eigen::VectorXd h_new = loadings.rowwise().squaredNorm();
        for (int j = 0; j < p; ++j) {
            if (h_new[j] > 1.0) {
                if (h_new[j] > 1.0 + 1e-8) heywood = true;
                h_new[j] = 1.0;
            }
        }
        const double change = (h_new - h).cwiseAbs().maxCoeff();
        h = h_new;
        if (change < opts.tol) {
            model.converged = true;
            ++iter;
            break;
        }
    }
    if (heywood)
        model.warnings.push_back("Heywood case: communality above 1 clipped");

    model.loadings = loadings;
    model.communalities = h;
    model.mean_communality = h.mean();
    model.iterations = iter;
    return model;
}

FactorModel fit_factor_model(const SpatialDataset& dataset, const FactorOptions& opts) {
    FactorModel model = fit_factor_model_corr(correlation_matrix(dataset), opts);
    if (dataset.n() <= dataset.p())
        model.warnings.push_back("n <= p: factor solution may be unstable");
    return model;
}

CommunalitySplit communality_filter(const FactorModel& model,
                                    const std::vector<std::string>& variables) {
    if (static_cast<int>(variables.size()) != model.communalities.size())
        throw DataError("variable list does not match the factor model");
    CommunalitySplit split;
    for (std::size_t j = 0; j < variables.size(); ++j) {
        if (model.communalities[static_cast<int>(j)] >= model.mean_communality)
            split.kept.push_back(variables[j]);
        else
            split.removed.push_back(variables[j]);
    }
    return split;
}

MstPruneResult mst_prune(const Eigen::MatrixXd& corr,
                         const std::vector<std::string>& variables,
                         double threshold) {
    const int p = static_cast<int>(corr.rows());
    if (static_cast<int>(variables.size()) != p)
        throw DataError("variable list does not match the correlation matrix");

    MstPruneResult result;
    result.retained = variables;
    if (p < 2) return result;

    // Kruskal on the complete graph with weight 1-|r|; ties break on the
    // lexicographic index pair.
    struct Edge {
        double weight;
        int a, b;
    };
    std::vector<Edge> edges;
    edges.reserve(p * (p - 1) / 2);
    for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b)
            edges.push_back({1.0 - std::abs(corr(a, b)), a, b});
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        if (x.weight != y.weight) return x.weight < y.weight;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    std::vector<int> parent(p);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };

    std::vector<int> degree(p, 0);
    for (const Edge& e : edges) {
        const int ra = find(e.a), rb = find(e.b);
        if (ra == rb) continue;
        parent[ra] = rb;
        result.mst_edges.push_back({e.a, e.b, std::abs(corr(e.a, e.b))});
        result.total_weight += e.weight;
        ++degree[e.a];
        ++degree[e.b];
    }

    // Highly correlated pairs, most correlated first.
    for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b)
            if (std::abs(corr(a, b)) >= threshold)
                result.high_corr_pairs.push_back({a, b, std::abs(corr(a, b))});
    std::sort(result.high_corr_pairs.begin(), result.high_corr_pairs.end(),
              [](const MstEdge& x, const MstEdge& y) {
                  if (x.abs_r != y.abs_r) return x.abs_r > y.abs_r;
                  if (x.a != y.a) return x.a < y.a;
                  return x.b < y.b;
              });

    // Mean absolute correlation to all other variables; the first tie rule.
    std::vector<double> mean_abs(p, 0.0);
    if (p > 1) {
        for (int a = 0; a < p; ++a) {
            double s = 0.0;
            for (int b = 0; b < p; ++b)
                if (b != a) s += std::abs(corr(a, b));
            mean_abs[a] = s / (p - 1);
        }
    }

    std::vector<bool> removed(p, false);
    for (const MstEdge& pair : result.high_corr_pairs) {
        if (removed[pair.a] || removed[pair.b]) continue; // pair already broken
        int drop, keep;
        std::string rule;
        if (degree[pair.a] != degree[pair.b]) {
            drop = degree[pair.a] < degree[pair.b] ? pair.a : pair.b;
            rule = "degree";
        } else if (mean_abs[pair.a] != mean_abs[pair.b]) {
            drop = mean_abs[pair.a] > mean_abs[pair.b] ? pair.a : pair.b;
            rule = "mean_abs_corr";
        } else {
            drop = std::max(pair.a, pair.b);
            rule = "index";
        }
        keep = drop == pair.a ? pair.b : pair.a;
        removed[drop] = true;
        result.removals.push_back({variables[drop], variables[keep], pair.abs_r,
                                   degree[drop], degree[keep], rule});
    }

    result.retained.clear();
    for (int j = 0; j < p; ++j)
        if (!removed[j]) result.retained.push_back(variables[j]);
    return result;
}

SelectionTrace select_variables(const SpatialDataset& dataset,
                                const std::vector<std::string>& exclusions,
                                double threshold, const FactorOptions& opts) {
    if (!dataset.standardized())
        throw DataError("select_variables requires a standardized dataset");

    SelectionTrace trace;
    trace.threshold = threshold;
    trace.input_variables = dataset.variable_names();

    // Stage 0: manual exclusions.
    std::vector<int> stage1_columns;
    for (const std::string& name : exclusions) {
        if (dataset.variable_index(name) < 0)
            throw DataError("exclusion \"" + name + "\" is not a dataset variable");
    }
    for (int j = 0; j < dataset.p(); ++j) {
        const std::string& name = dataset.variable_names()[j];
        if (std::find(exclusions.begin(), exclusions.end(), name) != exclusions.end())
            trace.manually_excluded.push_back(name);
        else
            stage1_columns.push_back(j);
    }
    if (stage1_columns.size() < 2)
        throw DataError("variable selection needs >= 2 variables after exclusions");

    SpatialDataset working = dataset.select_variables(stage1_columns);

    // Stage 1: factor analysis + communality filter.
    trace.factor_model = fit_factor_model(working, opts);
    CommunalitySplit split = communality_filter(trace.factor_model, working.variable_names());
    for (std::size_t j = 0; j < working.variable_names().size(); ++j) {
        const std::string& name = working.variable_names()[j];
        if (std::find(split.removed.begin(), split.removed.end(), name) !=
            split.removed.end()) {
            trace.stage1_removed.push_back(name);
            trace.stage1_removed_communalities.push_back(
                trace.factor_model.communalities[static_cast<int>(j)]);
        }
    }

    // Stage 2: MST pruning of the survivors.
    std::vector<int> stage2_columns;
    for (const std::string& name : split.kept)
        stage2_columns.push_back(working.variable_index(name));
    SpatialDataset stage2 = working.select_variables(stage2_columns);
    if (stage2.p() >= 2) {
        trace.prune = mst_prune(correlation_matrix(stage2), stage2.variable_names(),
                                threshold);
        trace.retained = trace.prune.retained;
    } else {
        trace.retained = stage2.variable_names();
    }
    return trace;
}

nlohmann::ordered_json selection_trace_to_json(const SelectionTrace& trace) {
    nlohmann::ordered_json j;
    j["input_variables"] = trace.input_variables;
    j["manually_excluded"] = trace.manually_excluded;

    nlohmann::ordered_json fa;
    const FactorModel& m = trace.factor_model;
    fa["eigenvalues"] = std::vector<double>(m.eigenvalues.data(),
                                            m.eigenvalues.data() + m.eigenvalues.size());
    fa["n_factors"] = m.n_factors;
    fa["communalities"] = std::vector<double>(m.communalities.data(),
                                              m.communalities.data() + m.communalities.size());
    fa["mean_communality"] = m.mean_communality;
    fa["converged"] = m.converged;
    fa["iterations"] = m.iterations;
    fa["warnings"] = m.warnings;
    j["factor_model"] = fa;

    nlohmann::ordered_json stage1 = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < trace.stage1_removed.size(); ++i) {
        nlohmann::ordered_json r;
        r["variable"] = trace.stage1_removed[i];
        r["communality"] = trace.stage1_removed_communalities[i];
        stage1.push_back(r);
    }
    j["stage1_removed"] = stage1;

    nlohmann::ordered_json mst = nlohmann::ordered_json::array();
    for (const MstEdge& e : trace.prune.mst_edges) {
        nlohmann::ordered_json r;
        r["a"] = e.a;
        r["b"] = e.b;
        r["abs_r"] = e.abs_r;
        mst.push_back(r);
    }
    j["mst_edges"] = mst;
    j["mst_total_weight"] = trace.prune.total_weight;

    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const MstEdge& e : trace.prune.high_corr_pairs) {
        nlohmann::ordered_json r;
        r["a"] = e.a;
        r["b"] = e.b;
        r["abs_r"] = e.abs_r;
        pairs.push_back(r);
    }
    j["high_corr_pairs"] = pairs;

    nlohmann::ordered_json removals = nlohmann::ordered_json::array();
    for (const PruneRemoval& r : trace.prune.removals) {
        nlohmann::ordered_json e;
        e["removed"] = r.removed;
        e["paired_with"] = r.paired_with;
        e["abs_r"] = r.abs_r;
        e["degree_removed"] = r.degree_removed;
        e["degree_kept"] = r.degree_kept;
        e["tie_rule"] = r.tie_rule;
        removals.push_back(e);
    }
    j["stage2_removed"] = removals;
    j["retained"] = trace.retained;
    j["threshold"] = trace.threshold;
    return j;
}

} // namespace gwc
