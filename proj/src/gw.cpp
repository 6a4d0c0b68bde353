#include "gwc/gw.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gwc/csv.hpp"
#include "gwc/error.hpp"
#include "gwc/linear.hpp"
#include "gwc/parallel.hpp"
#include "gwc/rng.hpp"

namespace gwc {

GwLearner parse_gw_learner(const std::string& s) {
    if (s == "logistic") return GwLearner::logistic;
    if (s == "forest") return GwLearner::forest;
    throw ConfigError("unknown gw learner \"" + s + "\"");
}

std::string to_string(GwLearner l) {
    return l == GwLearner::logistic ? "logistic" : "forest";
}

std::string to_string(GwUnitStatus s) {
    switch (s) {
        case GwUnitStatus::fitted: return "fitted";
        case GwUnitStatus::skipped_low_positive: return "skipped_low_positive";
        case GwUnitStatus::skipped_degenerate: return "skipped_degenerate";
    }
    return "?";
}

void GwFitSpec::validate(const SpatialDataset& dataset) const {
    kernel.validate();
    if (min_positive < 1) throw ConfigError("min_positive must be >= 1");
    if (l2_lambda < 0) throw ConfigError("l2_lambda must be >= 0");
    if (!dataset.has_labels()) throw DataError("gw fitting requires labeled units");
    if (target_class < 0 || target_class >= dataset.n_classes())
        throw ConfigError("target_class out of range");
}

int GwModelSet::n_fitted() const {
    int c = 0;
    for (const auto& u : units)
        if (u.status == GwUnitStatus::fitted) ++c;
    return c;
}

int GwModelSet::n_skipped() const { return static_cast<int>(units.size()) - n_fitted(); }

namespace {

struct LocalProblem {
    Eigen::MatrixXd X;        // neighbors x p
    std::vector<int> y;       // binary target
    Eigen::VectorXd w;        // kernel weights
    std::vector<int> keys;    // neighbor unit indices (canonical row order)
};

LocalProblem assemble(const SpatialDataset& dataset, const NeighborList& nl,
                      int target_class) {
    const int m = static_cast<int>(nl.indices.size());
    LocalProblem prob;
    prob.X.resize(m, dataset.p());
    prob.y.resize(m);
    prob.w.resize(m);
    prob.keys = nl.indices;
    for (int r = 0; r < m; ++r) {
        const int j = nl.indices[r];
        prob.X.row(r) = dataset.features().row(j);
        prob.y[r] = dataset.label(j) == target_class ? 1 : 0;
        prob.w[r] = nl.weights[r];
    }
    return prob;
}

double prior_rate(const LocalProblem& prob) {
    double wsum = 0.0, wpos = 0.0;
    for (int r = 0; r < prob.w.size(); ++r) {
        wsum += prob.w[r];
        if (prob.y[r] == 1) wpos += prob.w[r];
    }
    if (wsum > 0) return wpos / wsum;
    double pos = 0.0;
    for (int v : prob.y) pos += v;
    return pos / static_cast<double>(prob.y.size());
}

// Fits one local model and evaluates it at the query features. Also scores
// the model on its own neighborhood (binary F1 at threshold 0.5) for the
// per-location strength report.
GwUnitResult fit_local(const LocalProblem& prob, const Eigen::RowVectorXd& query,
                       const GwFitSpec& spec, std::uint64_t unit_seed,
                       double global_fallback, double* neighborhood_f1) {
    GwUnitResult out;
    if (neighborhood_f1) *neighborhood_f1 = std::numeric_limits<double>::quiet_NaN();

    int positives = 0, negatives = 0;
    for (int r = 0; r < prob.w.size(); ++r) {
        if (prob.w[r] <= 0) continue;
        (prob.y[r] == 1 ? positives : negatives)++;
    }
    const double fallback = spec.fallback == GwFallback::prior_rate
                                ? prior_rate(prob)
                                : global_fallback;
    if (positives < spec.min_positive) {
        out.status = GwUnitStatus::skipped_low_positive;
        out.focal_probability = fallback;
        return out;
    }
    if (negatives == 0) {
        out.status = GwUnitStatus::skipped_degenerate;
        out.focal_probability = fallback;
        return out;
    }

    Eigen::VectorXd local_probs;
    try {
        if (spec.learner == GwLearner::logistic) {
            LogisticModel model = fit_binary_logistic(prob.X, prob.y, prob.w, spec.l2_lambda);
            out.coefficients = model.coefficients.row(0);
            out.intercept = model.intercepts[0];
            out.converged = model.converged;
            out.focal_probability = predict_proba(model, query)(0, 1);
            if (neighborhood_f1) local_probs = predict_proba(model, prob.X).col(1);
        } else {
            ForestParams params = spec.forest;
            params.seed = unit_seed;
            ForestModel model = fit_forest(prob.X, prob.y, prob.w, 2, params, prob.keys);
            out.converged = true;
            out.focal_probability = predict_forest(model, query)(0, 1);
            if (neighborhood_f1) local_probs = predict_forest(model, prob.X).col(1);
        }
    } catch (const NumericError&) {
        out.status = GwUnitStatus::skipped_degenerate;
        out.focal_probability = fallback;
        return out;
    }
    out.status = GwUnitStatus::fitted;

    if (neighborhood_f1) {
        long tp = 0, fp = 0, fn = 0;
        for (int r = 0; r < local_probs.size(); ++r) {
            const bool pred = local_probs[r] >= 0.5;
            if (pred && prob.y[r] == 1) ++tp;
            else if (pred && prob.y[r] == 0) ++fp;
            else if (!pred && prob.y[r] == 1) ++fn;
        }
        *neighborhood_f1 = (2 * tp + fp + fn) == 0
                               ? 0.0
                               : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    }
    return out;
}

// Global binary model probabilities evaluated at `at`, used by the
// global_model fallback. Unweighted fit with the same ridge; degenerate
// training labels reduce to the base rate.
std::vector<double> global_fallback_probabilities(const SpatialDataset& train,
                                                  const Eigen::MatrixXd& at,
                                                  const GwFitSpec& spec) {
    if (spec.fallback != GwFallback::global_model) return {};
    const int n = train.n();
    const int q = static_cast<int>(at.rows());
    std::vector<int> y(n);
    int positives = 0;
    for (int i = 0; i < n; ++i) {
        y[i] = train.label(i) == spec.target_class ? 1 : 0;
        positives += y[i];
    }
    if (positives == 0 || positives == n)
        return std::vector<double>(q, positives / static_cast<double>(n));
    LogisticModel model = fit_binary_logistic(train.features(), y,
                                              Eigen::VectorXd::Ones(n), spec.l2_lambda);
    Eigen::MatrixXd proba = predict_proba(model, at);
    std::vector<double> out(q);
    for (int i = 0; i < q; ++i) out[i] = proba(i, 1);
    return out;
}

} // namespace

GwModelSet fit_gw(const SpatialDataset& dataset, const GwFitSpec& spec,
                  const NeighborGraph& graph) {
    spec.validate(dataset);
    const int n = dataset.n();
    if (graph.n() != n)
        throw DataError("neighbor graph does not match the dataset (" +
                        std::to_string(graph.n()) + " vs " + std::to_string(n) + " units)");

    NeighborGraph weighted = kernel_weights(graph, spec.kernel, dataset);
    const std::vector<double> global_fb =
        global_fallback_probabilities(dataset, dataset.features(), spec);

    GwModelSet set;
    set.learner = spec.learner;
    set.target_class = spec.target_class;
    set.kernel = spec.kernel;
    set.bandwidth = spec.kernel.bandwidth;
    set.units.resize(n);

#pragma omp parallel for schedule(dynamic, 8) num_threads(max_workers())
    for (int i = 0; i < n; ++i) {
        LocalProblem prob = assemble(dataset, weighted.neighbors[i], spec.target_class);
        const Eigen::RowVectorXd query = dataset.features().row(i);
        const double fb = global_fb.empty() ? 0.0 : global_fb[i];
        set.units[i] = fit_local(prob, query, spec,
                                 derive_seed(spec.seed, static_cast<std::uint64_t>(i)),
                                 fb, nullptr);
    }
    return set;
}

GwPrediction gw_predict(const SpatialDataset& train, const Eigen::MatrixXd& query_features,
                        const std::vector<double>& query_x, const std::vector<double>& query_y,
                        const GwFitSpec& spec) {
    spec.validate(train);
    const int q = static_cast<int>(query_features.rows());
    if (static_cast<int>(query_x.size()) != q || static_cast<int>(query_y.size()) != q)
        throw DataError("query coordinates must match the feature rows");
    if (query_features.cols() != train.features().cols())
        throw DataError("query feature count does not match the training data");

    const bool adaptive = spec.kernel.mode == BandwidthMode::adaptive_k;
    if (train.n() < 2) throw NumericError("out-of-sample prediction needs >= 2 training units");
    // Bandwidths chosen on the full dataset may exceed a CV training split;
    // the neighborhood then simply spans every training unit.
    const int k_query = adaptive ? std::min(spec.kernel.adaptive_k(), train.n() - 1) : 0;

    KdTree2d tree(train.xs(), train.ys());
    const std::vector<double> global_fb =
        global_fallback_probabilities(train, query_features, spec);
    double base_rate = 0.0;
    for (int i = 0; i < train.n(); ++i)
        if (train.label(i) == spec.target_class) base_rate += 1.0;
    base_rate /= train.n();

    GwPrediction pred;
    pred.probability.resize(q);
    pred.status.resize(q);
    pred.neighborhood_f1.resize(q);

#pragma omp parallel for schedule(dynamic, 8) num_threads(max_workers())
    for (int i = 0; i < q; ++i) {
        NeighborList nl;
        if (adaptive) {
            tree.query_knn(query_x[i], query_y[i], k_query, -1,
                           nl.indices, nl.distances);
            const double b = nl.distances.empty() ? 0.0 : nl.distances.back();
            nl.weights.resize(nl.distances.size());
            if (!(b > 0.0)) {
                // Fully coincident neighborhood: uniform weights keep the
                // fit defined.
                std::fill(nl.weights.begin(), nl.weights.end(), 1.0);
            } else {
                for (std::size_t m = 0; m < nl.distances.size(); ++m)
                    nl.weights[m] = kernel_value(spec.kernel.shape, nl.distances[m], b);
            }
        } else {
            tree.query_radius(query_x[i], query_y[i], spec.kernel.bandwidth, -1,
                              nl.indices, nl.distances);
            nl.weights.resize(nl.distances.size());
            for (std::size_t m = 0; m < nl.distances.size(); ++m)
                nl.weights[m] =
                    kernel_value(spec.kernel.shape, nl.distances[m], spec.kernel.bandwidth);
        }

        if (nl.indices.empty()) {
            pred.status[i] = GwUnitStatus::skipped_degenerate;
            pred.probability[i] = global_fb.empty() ? base_rate : global_fb[i];
            pred.neighborhood_f1[i] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }

        LocalProblem prob = assemble(train, nl, spec.target_class);
        const Eigen::RowVectorXd query = query_features.row(i);
        const double fb = global_fb.empty() ? 0.0 : global_fb[i];
        GwUnitResult r = fit_local(prob, query, spec,
                                   derive_seed(spec.seed, 0x9d5f0000ULL + i), fb,
                                   &pred.neighborhood_f1[i]);
        pred.status[i] = r.status;
        pred.probability[i] = r.focal_probability;
    }
    return pred;
}

CoefficientSurface extract_coefficients(const GwModelSet& models,
                                        const std::vector<std::string>& variable_names) {
    if (models.learner != GwLearner::logistic)
        throw DataError("coefficient extraction requires logistic local models");
    const int n = static_cast<int>(models.units.size());
    const int p = static_cast<int>(variable_names.size());

    CoefficientSurface surface;
    surface.target_class = models.target_class;
    surface.variable_names = variable_names;
    surface.local = Eigen::MatrixXd::Constant(n, p, std::numeric_limits<double>::quiet_NaN());
    surface.fitted.resize(n, false);

    for (int i = 0; i < n; ++i) {
        const GwUnitResult& u = models.units[i];
        if (u.status != GwUnitStatus::fitted) continue;
        if (u.coefficients.size() != p)
            throw DataError("local model coefficient count does not match variable list");
        surface.fitted[i] = true;
        surface.local.row(i) = u.coefficients.transpose();
        ++surface.n_fitted;
    }
    surface.n_skipped = n - surface.n_fitted;

    surface.summaries.resize(p);
    for (int j = 0; j < p; ++j) {
        VariableSummary& s = surface.summaries[j];
        s.name = variable_names[j];
        if (surface.n_fitted == 0) continue;
        double sum_abs = 0.0, sum = 0.0;
        int n_pos = 0, n_neg = 0;
        for (int i = 0; i < n; ++i) {
            if (!surface.fitted[i]) continue;
            const double v = surface.local(i, j);
            sum_abs += std::abs(v);
            sum += v;
            if (v > 0) ++n_pos;
            else if (v < 0) ++n_neg;
        }
        const double mean = sum / surface.n_fitted;
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!surface.fitted[i]) continue;
            const double d = surface.local(i, j) - mean;
            ss += d * d;
        }
        s.mean_abs = sum_abs / surface.n_fitted;
        s.sd = surface.n_fitted > 1 ? std::sqrt(ss / (surface.n_fitted - 1)) : 0.0;
        s.sign_agreement = static_cast<double>(std::max(n_pos, n_neg)) / surface.n_fitted;
    }

    surface.order_by_mean_abs.resize(p);
    std::iota(surface.order_by_mean_abs.begin(), surface.order_by_mean_abs.end(), 0);
    std::sort(surface.order_by_mean_abs.begin(), surface.order_by_mean_abs.end(),
              [&](int a, int b) {
                  if (surface.summaries[a].mean_abs != surface.summaries[b].mean_abs)
                      return surface.summaries[a].mean_abs > surface.summaries[b].mean_abs;
                  return a < b;
              });
    return surface;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DataError("quantile of an empty set");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(h));
    return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

std::vector<DispersionRow>
coefficient_dispersion_by_class(const std::vector<CoefficientSurface>& surfaces) {
    if (surfaces.empty()) throw DataError("dispersion table requires >= 1 class surface");
    std::vector<DispersionRow> rows;
    for (const CoefficientSurface& s : surfaces) {
        std::vector<double> sds;
        for (const VariableSummary& v : s.summaries) sds.push_back(v.sd);
        DispersionRow row;
        row.class_index = s.target_class;
        row.min = quantile(sds, 0.0);
        row.q1 = quantile(sds, 0.25);
        row.median = quantile(sds, 0.5);
        row.q3 = quantile(sds, 0.75);
        row.max = quantile(sds, 1.0);
        rows.push_back(row);
    }
    return rows;
}

void write_gw_units_csv(const std::string& path, const GwModelSet& models,
                        const SpatialDataset& dataset,
                        const std::vector<std::string>& variable_names) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "unit_id,status,focal_probability,intercept";
    for (const auto& v : variable_names) out << ',' << csv_escape("coef_" + v);
    out << '\n';
    for (std::size_t i = 0; i < models.units.size(); ++i) {
        const GwUnitResult& u = models.units[i];
        out << csv_escape(dataset.unit_id(static_cast<int>(i))) << ','
            << to_string(u.status) << ',' << format_double(u.focal_probability);
        if (u.status == GwUnitStatus::fitted && u.coefficients.size() > 0) {
            out << ',' << format_double(u.intercept);
            for (int j = 0; j < u.coefficients.size(); ++j)
                out << ',' << format_double(u.coefficients[j]);
        } else {
            out << ',';
            for (std::size_t j = 0; j < variable_names.size(); ++j) out << ',';
        }
        out << '\n';
    }
}

nlohmann::ordered_json coefficient_surface_to_json(const CoefficientSurface& surface) {
    nlohmann::ordered_json j;
    j["target_class"] = surface.target_class;
    j["n_fitted"] = surface.n_fitted;
    j["n_skipped"] = surface.n_skipped;
    nlohmann::ordered_json vars = nlohmann::ordered_json::array();
    for (int idx : surface.order_by_mean_abs) {
        const VariableSummary& s = surface.summaries[idx];
        nlohmann::ordered_json v;
        v["variable"] = s.name;
        v["mean_abs_coefficient"] = s.mean_abs;
        v["sd"] = s.sd;
        v["sign_agreement"] = s.sign_agreement;
        vars.push_back(v);
    }
    j["variables_by_mean_abs"] = vars;
    return j;
}

nlohmann::ordered_json dispersion_to_json(const std::vector<DispersionRow>& rows,
                                          const std::vector<std::string>& class_names) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const DispersionRow& r : rows) {
        nlohmann::ordered_json j;
        j["class_index"] = r.class_index;
        if (r.class_index >= 0 && r.class_index < static_cast<int>(class_names.size()))
            j["class"] = class_names[r.class_index];
        j["min"] = r.min;
        j["q1"] = r.q1;
        j["median"] = r.median;
        j["q3"] = r.q3;
        j["max"] = r.max;
        arr.push_back(j);
    }
    return arr;
}

} // namespace gwc
