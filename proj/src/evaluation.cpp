#include "gwc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gwc/error.hpp"
#include "gwc/linear.hpp"
#include "gwc/rng.hpp"

namespace gwc {

FoldMethod parse_fold_method(const std::string& s) {
    if (s == "coordinate_clusters") return FoldMethod::coordinate_clusters;
    if (s == "grid_blocks") return FoldMethod::grid_blocks;
    throw ConfigError("unknown fold method \"" + s + "\"");
}

namespace {

// Lloyd's algorithm on unit coordinates with k-means++ seeding. Returns
// false when a cluster empties out.
bool kmeans_once(const SpatialDataset& dataset, int k, std::uint64_t seed,
                 std::vector<int>& assignment) {
    const int n = dataset.n();
    Rng rng(seed);

    std::vector<double> cx(k), cy(k);
    // k-means++: first center uniform, then proportional to squared distance.
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    int first = static_cast<int>(rng.below(n));
    cx[0] = dataset.x(first);
    cy[0] = dataset.y(first);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double dx = dataset.x(i) - cx[c - 1];
            const double dy = dataset.y(i) - cy[c - 1];
            d2[i] = std::min(d2[i], dx * dx + dy * dy);
            total += d2[i];
        }
        if (total <= 0) {
            // All points coincide with a center; any spread is impossible.
            const int pick = static_cast<int>(rng.below(n));
            cx[c] = dataset.x(pick);
            cy[c] = dataset.y(pick);
            continue;
        }
        double u = rng.uniform() * total;
        int pick = n - 1;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc >= u) {
                pick = i;
                break;
            }
        }
        cx[c] = dataset.x(pick);
        cy[c] = dataset.y(pick);
    }

    assignment.assign(n, 0);
    std::vector<double> sum_x(k), sum_y(k);
    std::vector<int> count(k);
    for (int iteration = 0; iteration < 100; ++iteration) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dx = dataset.x(i) - cx[c];
                const double dy = dataset.y(i) - cy[c];
                const double d = dx * dx + dy * dy;
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }
        std::fill(sum_x.begin(), sum_x.end(), 0.0);
        std::fill(sum_y.begin(), sum_y.end(), 0.0);
        std::fill(count.begin(), count.end(), 0);
        for (int i = 0; i < n; ++i) {
            sum_x[assignment[i]] += dataset.x(i);
            sum_y[assignment[i]] += dataset.y(i);
            ++count[assignment[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (count[c] == 0) return false;
            cx[c] = sum_x[c] / count[c];
            cy[c] = sum_y[c] / count[c];
        }
        if (!changed) break;
    }
    for (int c = 0; c < k; ++c)
        if (count[c] == 0) return false;
    return true;
}

} // namespace

FoldAssignment spatial_kfold(const SpatialDataset& dataset, int n_folds,
                             FoldMethod method, std::uint64_t seed) {
    const int n = dataset.n();
    if (n_folds < 2) throw ConfigError("fold count must be >= 2");
    if (n < n_folds) throw DataError("fewer units than folds");

    FoldAssignment folds;
    folds.n_folds = n_folds;
    folds.method = method;
    folds.seed = seed;

    if (method == FoldMethod::coordinate_clusters) {
        for (int attempt = 0; attempt < 10; ++attempt) {
            if (kmeans_once(dataset, n_folds, derive_seed(seed, attempt), folds.fold_of))
                return folds;
        }
        throw NumericError("k-means fold construction produced an empty fold "
                           "after 10 re-seeds");
    }

    // grid_blocks: square tiles over the bounding box, assigned round-robin
    // in row-major order. The grid has at least 2*n_folds cells.
    double min_x = dataset.x(0), max_x = dataset.x(0);
    double min_y = dataset.y(0), max_y = dataset.y(0);
    for (int i = 1; i < n; ++i) {
        min_x = std::min(min_x, dataset.x(i));
        max_x = std::max(max_x, dataset.x(i));
        min_y = std::min(min_y, dataset.y(i));
        max_y = std::max(max_y, dataset.y(i));
    }
    const int side = static_cast<int>(std::ceil(std::sqrt(2.0 * n_folds)));
    const double span_x = std::max(max_x - min_x, 1e-12);
    const double span_y = std::max(max_y - min_y, 1e-12);
    const double tile = std::max(span_x, span_y) / side;

    folds.fold_of.resize(n);
    for (int i = 0; i < n; ++i) {
        int gx = static_cast<int>((dataset.x(i) - min_x) / tile);
        int gy = static_cast<int>((dataset.y(i) - min_y) / tile);
        gx = std::min(gx, side - 1);
        gy = std::min(gy, side - 1);
        folds.fold_of[i] = (gy * side + gx) % n_folds;
    }
    std::vector<int> count(n_folds, 0);
    for (int f : folds.fold_of) ++count[f];
    for (int f = 0; f < n_folds; ++f)
        if (count[f] == 0)
            throw NumericError("grid fold " + std::to_string(f) +
                               " is empty; use coordinate_clusters or fewer folds");
    return folds;
}

ScoreReport f1_macro(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                     int n_classes) {
    if (y_true.size() != y_pred.size())
        throw DataError("y_true and y_pred lengths differ");
    if (n_classes < 1) throw ConfigError("n_classes must be >= 1");

    ScoreReport report;
    report.per_class.resize(n_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
            throw DataError("label out of range in scoring");
        if (t == p)
            ++report.per_class[t].true_positives;
        else {
            ++report.per_class[p].false_positives;
            ++report.per_class[t].false_negatives;
        }
    }
    double sum_f1 = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        ClassScore& s = report.per_class[c];
        const long tp = s.true_positives, fp = s.false_positives, fn = s.false_negatives;
        s.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
        s.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
        s.f1 = (2 * tp + fp + fn) == 0 ? 0.0
                                       : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
        s.absent = (tp + fp + fn) == 0;
        sum_f1 += s.f1;
    }
    report.macro_f1 = sum_f1 / n_classes;
    return report;
}

GlobalEvaluation evaluate_global(const SpatialDataset& dataset, GlobalModelKind kind,
                                 const FoldAssignment& folds,
                                 const GlobalEvalOptions& options) {
    const int n = dataset.n();
    const int c = dataset.n_classes();
    if (!dataset.has_labels()) throw DataError("evaluate_global requires labels");
    if (static_cast<int>(folds.fold_of.size()) != n)
        throw DataError("fold assignment does not match the dataset");

    GlobalEvaluation eval;
    eval.predictions.assign(n, -1);

    for (int f = 0; f < folds.n_folds; ++f) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < n; ++i)
            (folds.fold_of[i] == f ? test_rows : train_rows).push_back(i);
        if (train_rows.empty() || test_rows.empty()) continue;

        // Classes present in this training split; missing ones are
        // unpredictable here and will score as errors.
        std::vector<int> class_map(c, -1);
        std::vector<int> present;
        for (int i : train_rows) {
            const int label = dataset.label(i);
            if (class_map[label] < 0) {
                class_map[label] = static_cast<int>(present.size());
                present.push_back(label);
            }
        }
        if (static_cast<int>(present.size()) < c) eval.flagged_folds.push_back(f);
        if (present.size() < 2)
            throw NumericError("training split for fold " + std::to_string(f) +
                               " has fewer than 2 classes");

        Eigen::MatrixXd X_train(train_rows.size(), dataset.p());
        std::vector<int> y_train(train_rows.size());
        for (std::size_t r = 0; r < train_rows.size(); ++r) {
            X_train.row(static_cast<int>(r)) = dataset.features().row(train_rows[r]);
            y_train[r] = class_map[dataset.label(train_rows[r])];
        }
        Eigen::MatrixXd X_test(test_rows.size(), dataset.p());
        for (std::size_t r = 0; r < test_rows.size(); ++r)
            X_test.row(static_cast<int>(r)) = dataset.features().row(test_rows[r]);

        Eigen::MatrixXd proba;
        const Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<int>(train_rows.size()));
        if (kind == GlobalModelKind::multinomial_lr) {
            LogisticModel model =
                fit_multinomial_logistic(X_train, y_train, w,
                                         static_cast<int>(present.size()),
                                         options.l2_lambda);
            proba = predict_proba(model, X_test);
            if (present.size() == 2 && proba.cols() == 2) {
                // Binary fit keeps the (neg, pos) column order; remap below
                // handles it uniformly.
            }
        } else {
            ForestParams params = options.forest;
            params.seed = derive_seed(options.seed, static_cast<std::uint64_t>(f));
            ForestModel model = fit_forest(X_train, y_train, w,
                                           static_cast<int>(present.size()), params,
                                           train_rows);
            proba = predict_forest(model, X_test);
        }

        for (std::size_t r = 0; r < test_rows.size(); ++r) {
            int best = 0;
            for (int k = 1; k < proba.cols(); ++k)
                if (proba(static_cast<int>(r), k) > proba(static_cast<int>(r), best)) best = k;
            eval.predictions[test_rows[r]] = present[best];
        }
    }

    for (int i = 0; i < n; ++i)
        if (eval.predictions[i] < 0)
            throw NumericError("unit " + std::to_string(i) + " received no held-out prediction");

    eval.pooled = f1_macro(dataset.labels(), eval.predictions, c);
    eval.pooled.model = kind == GlobalModelKind::multinomial_lr ? "multinomial_lr" : "forest";
    for (int f = 0; f < folds.n_folds; ++f) {
        std::vector<int> yt, yp;
        for (int i = 0; i < n; ++i) {
            if (folds.fold_of[i] != f) continue;
            yt.push_back(dataset.label(i));
            yp.push_back(eval.predictions[i]);
        }
        eval.pooled.fold_macro_f1.push_back(yt.empty() ? 0.0
                                                       : f1_macro(yt, yp, c).macro_f1);
    }
    return eval;
}

GwEvaluation evaluate_gw(const SpatialDataset& dataset, const std::vector<GwFitSpec>& specs,
                         const FoldAssignment& folds) {
    const int n = dataset.n();
    if (!dataset.has_labels()) throw DataError("evaluate_gw requires labels");
    if (static_cast<int>(folds.fold_of.size()) != n)
        throw DataError("fold assignment does not match the dataset");
    if (specs.empty()) throw ConfigError("evaluate_gw needs >= 1 class spec");

    GwEvaluation eval;
    Eigen::MatrixXd class_proba =
        Eigen::MatrixXd::Constant(n, specs.size(), std::numeric_limits<double>::quiet_NaN());

    for (std::size_t s = 0; s < specs.size(); ++s) {
        const GwFitSpec& spec = specs[s];
        GwClassEvaluation ce;
        ce.class_index = spec.target_class;
        ce.bandwidth = spec.kernel.bandwidth;
        ce.focal_probability.assign(n, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> location_f1;

        for (int f = 0; f < folds.n_folds; ++f) {
            std::vector<int> train_rows, test_rows;
            for (int i = 0; i < n; ++i)
                (folds.fold_of[i] == f ? test_rows : train_rows).push_back(i);
            if (test_rows.empty()) continue;

            SpatialDataset train = dataset.select_units(train_rows);
            Eigen::MatrixXd qX(test_rows.size(), dataset.p());
            std::vector<double> qx(test_rows.size()), qy(test_rows.size());
            for (std::size_t r = 0; r < test_rows.size(); ++r) {
                qX.row(static_cast<int>(r)) = dataset.features().row(test_rows[r]);
                qx[r] = dataset.x(test_rows[r]);
                qy[r] = dataset.y(test_rows[r]);
            }

            GwFitSpec fold_spec = spec;
            fold_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(f));
            GwPrediction pred = gw_predict(train, qX, qx, qy, fold_spec);

            std::vector<int> yt, yp;
            for (std::size_t r = 0; r < test_rows.size(); ++r) {
                const int unit = test_rows[r];
                ce.focal_probability[unit] = pred.probability[r];
                class_proba(unit, static_cast<int>(s)) = pred.probability[r];
                if (pred.status[r] == GwUnitStatus::fitted) {
                    ++ce.n_fitted;
                    if (std::isfinite(pred.neighborhood_f1[r]))
                        location_f1.push_back(pred.neighborhood_f1[r]);
                } else {
                    ++ce.n_skipped;
                }
                yt.push_back(dataset.label(unit) == spec.target_class ? 1 : 0);
                yp.push_back(pred.probability[r] >= 0.5 ? 1 : 0);
            }
            // Binary F1 for the target class on this fold.
            ScoreReport fold_score = f1_macro(yt, yp, 2);
            ce.fold_f1.push_back(fold_score.per_class[1].f1);
        }

        ce.evaluable = ce.n_fitted > 0;
        if (!ce.fold_f1.empty()) {
            double sum = 0.0;
            for (double v : ce.fold_f1) sum += v;
            ce.f1_mean = sum / static_cast<double>(ce.fold_f1.size());
        }
        if (!location_f1.empty()) {
            double sum = 0.0;
            for (double v : location_f1) sum += v;
            ce.location_f1_mean = sum / static_cast<double>(location_f1.size());
            double ss = 0.0;
            for (double v : location_f1) ss += (v - ce.location_f1_mean) * (v - ce.location_f1_mean);
            ce.location_f1_sd = location_f1.size() > 1
                                    ? std::sqrt(ss / (location_f1.size() - 1))
                                    : 0.0;
        }
        eval.per_class.push_back(std::move(ce));
    }

    double sum = 0.0;
    int evaluable = 0;
    for (const auto& ce : eval.per_class) {
        if (!ce.evaluable) continue;
        sum += ce.f1_mean;
        ++evaluable;
    }
    eval.mean_class_f1 = evaluable > 0 ? sum / evaluable : 0.0;

    // Combined multiclass view: argmax over the one-vs-rest probabilities.
    // Only meaningful when every class has a spec.
    if (static_cast<int>(specs.size()) == dataset.n_classes()) {
        std::vector<int> yp(n, 0);
        for (int i = 0; i < n; ++i) {
            int best = 0;
            for (int k = 1; k < class_proba.cols(); ++k)
                if (class_proba(i, k) > class_proba(i, best)) best = k;
            yp[i] = specs[best].target_class;
        }
        eval.combined = f1_macro(dataset.labels(), yp, dataset.n_classes());
        eval.combined.model = "gw_" + to_string(specs.front().learner);
    }
    return eval;
}

BandwidthSelection select_bandwidth(const SpatialDataset& dataset, const GwFitSpec& base,
                                    const std::vector<double>& candidates,
                                    const FoldAssignment& folds) {
    if (candidates.size() < 2)
        throw ConfigError("bandwidth selection needs >= 2 candidates");

    BandwidthSelection sel;
    bool any_scored = false;
    int best_index = -1;
    for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
        GwFitSpec spec = base;
        spec.kernel.bandwidth = candidates[idx];
        spec.kernel.validate();

        GwEvaluation eval = evaluate_gw(dataset, {spec}, folds);
        const GwClassEvaluation& ce = eval.per_class.front();
        BandwidthScore score;
        score.bandwidth = candidates[idx];
        score.f1_mean = ce.f1_mean;
        score.n_skipped = ce.n_skipped;
        score.all_skipped = !ce.evaluable;
        sel.table.push_back(score);
        if (!score.all_skipped) any_scored = true;

        if (score.all_skipped) continue;
        if (best_index < 0) {
            best_index = static_cast<int>(idx);
            continue;
        }
        const BandwidthScore& best = sel.table[best_index];
        if (score.f1_mean > best.f1_mean ||
            (score.f1_mean == best.f1_mean && score.bandwidth < best.bandwidth)) {
            best_index = static_cast<int>(idx);
        }
    }
    if (!any_scored)
        throw NumericError("every candidate bandwidth produced all-skip fits");
    sel.best = sel.table[best_index].bandwidth;
    return sel;
}

std::vector<double> default_bandwidth_candidates(const SpatialDataset& dataset, int count) {
    const int n = dataset.n();
    const int lo = std::max(30, dataset.p() * 5);
    const int hi = n - 1;
    if (hi <= lo) return {static_cast<double>(hi)};
    std::vector<double> out;
    const double ratio = static_cast<double>(hi) / lo;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        const int k = static_cast<int>(std::lround(lo * std::pow(ratio, t)));
        if (out.empty() || static_cast<int>(out.back()) != k)
            out.push_back(static_cast<double>(k));
    }
    return out;
}

nlohmann::ordered_json score_report_to_json(const ScoreReport& report,
                                            const std::vector<std::string>& class_names) {
    nlohmann::ordered_json j;
    j["model"] = report.model;
    j["macro_f1"] = report.macro_f1;
    nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const ClassScore& s = report.per_class[c];
        nlohmann::ordered_json e;
        e["class_index"] = c;
        if (c < class_names.size()) e["class"] = class_names[c];
        e["precision"] = s.precision;
        e["recall"] = s.recall;
        e["f1"] = s.f1;
        e["absent"] = s.absent;
        per_class.push_back(e);
    }
    j["per_class"] = per_class;
    j["fold_macro_f1"] = report.fold_macro_f1;
    return j;
}

nlohmann::ordered_json gw_evaluation_to_json(const GwEvaluation& eval,
                                             const std::vector<std::string>& class_names) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
    for (const GwClassEvaluation& ce : eval.per_class) {
        nlohmann::ordered_json e;
        e["class_index"] = ce.class_index;
        if (ce.class_index >= 0 && ce.class_index < static_cast<int>(class_names.size()))
            e["class"] = class_names[ce.class_index];
        e["bandwidth"] = ce.bandwidth;
        e["f1_mean"] = ce.f1_mean;
        e["fold_f1"] = ce.fold_f1;
        e["location_f1_mean"] = ce.location_f1_mean;
        e["location_f1_sd"] = ce.location_f1_sd;
        e["n_fitted"] = ce.n_fitted;
        e["n_skipped"] = ce.n_skipped;
        e["evaluable"] = ce.evaluable;
        per_class.push_back(e);
    }
    j["per_class"] = per_class;
    j["mean_class_f1"] = eval.mean_class_f1;
    if (!eval.combined.per_class.empty())
        j["combined"] = score_report_to_json(eval.combined, class_names);
    return j;
}

} // namespace gwc
