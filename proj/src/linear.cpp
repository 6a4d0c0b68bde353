#include "gwc/linear.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gwc/error.hpp"

namespace gwc {

namespace {

// log(1 + e^x) without overflow.
double log1pexp(double x) {
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

void check_inputs(const Eigen::MatrixXd& X, const std::vector<int>& y,
                  const Eigen::VectorXd& w, int n_classes) {
    const int n = static_cast<int>(X.rows());
    if (static_cast<int>(y.size()) != n || w.size() != n)
        throw DataError("X, y, w must have matching row counts");
    if (n < 2) throw DataError("logistic fit requires n >= 2");
    int positive_weights = 0;
    for (int i = 0; i < n; ++i) {
        if (w[i] < 0) throw DataError("sample weights must be non-negative");
        if (w[i] > 0) ++positive_weights;
        if (y[i] < 0 || y[i] >= n_classes)
            throw DataError("label out of range at row " + std::to_string(i));
    }
    if (positive_weights < 2)
        throw DataError("logistic fit requires >= 2 positively weighted rows");
}

} // namespace

double binary_objective(const Eigen::MatrixXd& X, const std::vector<int>& y,
                        const Eigen::VectorXd& w, const Eigen::VectorXd& beta,
                        double intercept, double l2_lambda) {
    const int n = static_cast<int>(X.rows());
    Eigen::VectorXd eta = X * beta;
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = eta[i] + intercept;
        ll += w[i] * (y[i] * e - log1pexp(e));
    }
    return ll - 0.5 * l2_lambda * beta.squaredNorm();
}

Eigen::VectorXd binary_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                const Eigen::VectorXd& w, const Eigen::VectorXd& beta,
                                double intercept, double l2_lambda) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd resid(n);
    for (int i = 0; i < n; ++i)
        resid[i] = w[i] * (y[i] - sigmoid(eta[i] + intercept));
    Eigen::VectorXd grad(p + 1);
    grad[0] = resid.sum();
    grad.tail(p) = X.transpose() * resid - l2_lambda * beta;
    return grad;
}

LogisticModel fit_binary_logistic(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                  const Eigen::VectorXd& w, double l2_lambda,
                                  const LogisticOptions& opts) {
    check_inputs(X, y, w, 2);
    if (l2_lambda < 0) throw ConfigError("l2_lambda must be >= 0");
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());

    double w_pos = 0.0, w_neg = 0.0;
    for (int i = 0; i < n; ++i) {
        if (w[i] <= 0) continue;
        (y[i] == 1 ? w_pos : w_neg) += w[i];
    }
    if (w_pos == 0.0 || w_neg == 0.0)
        throw NumericError("degenerate labels: both classes must appear among "
                           "positively weighted rows");

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double intercept = 0.0;
    double objective = binary_objective(X, y, w, beta, intercept, l2_lambda);
    if (opts.objective_trace) opts.objective_trace->push_back(objective);

    LogisticModel model;
    model.binary = true;
    model.l2_lambda = l2_lambda;
    model.n_effective = w.sum();

    bool converged = false;
    int iter = 0;
    Eigen::VectorXd eta(n), prob(n), s(n);
    for (; iter < opts.max_iterations; ++iter) {
        eta = (X * beta).array() + intercept;
        for (int i = 0; i < n; ++i) {
            prob[i] = sigmoid(eta[i]);
            s[i] = w[i] * prob[i] * (1.0 - prob[i]);
        }

        // Newton system on (intercept, beta); the intercept is unpenalized.
        Eigen::MatrixXd H(p + 1, p + 1);
        Eigen::VectorXd g(p + 1);
        Eigen::VectorXd resid(n);
        for (int i = 0; i < n; ++i) resid[i] = w[i] * (y[i] - prob[i]);
        H(0, 0) = s.sum();
        Eigen::VectorXd Xs = X.transpose() * s;
        H.block(0, 1, 1, p) = Xs.transpose();
        H.block(1, 0, p, 1) = Xs;
        H.block(1, 1, p, p) = X.transpose() * s.asDiagonal() * X;
        for (int j = 0; j < p; ++j) H(j + 1, j + 1) += l2_lambda;
        g[0] = resid.sum();
        g.tail(p) = X.transpose() * resid - l2_lambda * beta;

        Eigen::VectorXd delta;
        if (l2_lambda == 0.0) {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
            if (!lu.isInvertible())
                throw NumericError("singular weighted normal equations; "
                                   "set l2_lambda > 0");
            delta = lu.solve(g);
        } else {
            delta = H.ldlt().solve(g);
        }

        // Step halving keeps the penalized likelihood non-decreasing.
        double step = 1.0;
        double candidate = 0.0;
        Eigen::VectorXd beta_new;
        double intercept_new = 0.0;
        for (int halving = 0; halving < 60; ++halving) {
            beta_new = beta + step * delta.tail(p);
            intercept_new = intercept + step * delta[0];
            candidate = binary_objective(X, y, w, beta_new, intercept_new, l2_lambda);
            if (candidate >= objective - 1e-12) break;
            step *= 0.5;
        }

        const double max_change =
            std::max(std::abs(step * delta[0]),
                     (step * delta.tail(p)).cwiseAbs().maxCoeff());
        beta = beta_new;
        intercept = intercept_new;
        objective = candidate;
        if (opts.objective_trace) opts.objective_trace->push_back(objective);
        if (max_change < opts.param_tol) {
            converged = true;
            ++iter;
            break;
        }
    }

    model.coefficients = beta.transpose();
    model.intercepts = Eigen::VectorXd::Constant(1, intercept);
    model.converged = converged;
    model.iterations = iter;
    return model;
}

double multinomial_objective(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             const Eigen::VectorXd& w, const Eigen::MatrixXd& params,
                             double l2_lambda) {
    const int n = static_cast<int>(X.rows());
    const int c = static_cast<int>(params.rows());
    const int p = static_cast<int>(X.cols());
    Eigen::MatrixXd eta = X * params.rightCols(p).transpose(); // n x C
    eta.rowwise() += params.col(0).transpose();
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
        if (w[i] == 0.0) continue;
        const double m = eta.row(i).maxCoeff();
        double lse = 0.0;
        for (int k = 0; k < c; ++k) lse += std::exp(eta(i, k) - m);
        lse = m + std::log(lse);
        ll += w[i] * (eta(i, y[i]) - lse);
    }
    return ll - 0.5 * l2_lambda * params.rightCols(p).squaredNorm();
}

Eigen::MatrixXd multinomial_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                     const Eigen::VectorXd& w, const Eigen::MatrixXd& params,
                                     double l2_lambda) {
    const int n = static_cast<int>(X.rows());
    const int c = static_cast<int>(params.rows());
    const int p = static_cast<int>(X.cols());
    Eigen::MatrixXd eta = X * params.rightCols(p).transpose();
    eta.rowwise() += params.col(0).transpose();

    Eigen::MatrixXd resid(n, c); // w_i * (1[y_i = k] - P_ik)
    for (int i = 0; i < n; ++i) {
        const double m = eta.row(i).maxCoeff();
        double denom = 0.0;
        for (int k = 0; k < c; ++k) denom += std::exp(eta(i, k) - m);
        for (int k = 0; k < c; ++k) {
            const double pik = std::exp(eta(i, k) - m) / denom;
            resid(i, k) = w[i] * ((y[i] == k ? 1.0 : 0.0) - pik);
        }
    }

    Eigen::MatrixXd grad(c, p + 1);
    grad.col(0) = resid.colwise().sum().transpose();
    grad.rightCols(p) = resid.transpose() * X - l2_lambda * params.rightCols(p);
    return grad;
}

LogisticModel fit_multinomial_logistic(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                       const Eigen::VectorXd& w, int n_classes,
                                       double l2_lambda, const MultinomialOptions& opts) {
    if (n_classes < 2) throw ConfigError("multinomial fit requires >= 2 classes");
    check_inputs(X, y, w, n_classes);
    if (l2_lambda < 0) throw ConfigError("l2_lambda must be >= 0");
    const int p = static_cast<int>(X.cols());
    const int n = static_cast<int>(X.rows());

    Eigen::VectorXd class_weight = Eigen::VectorXd::Zero(n_classes);
    for (int i = 0; i < n; ++i)
        if (w[i] > 0) class_weight[y[i]] += w[i];
    for (int k = 0; k < n_classes; ++k)
        if (class_weight[k] == 0.0)
            throw NumericError("degenerate labels: class " + std::to_string(k) +
                               " absent among positively weighted rows");

    const double w_total = w.sum();
    // The optimizer works on the weight-normalized objective (same argmax as
    // the sum form); the gradient tolerance is then independent of n.
    auto f = [&](const Eigen::MatrixXd& params) {
        return multinomial_objective(X, y, w, params, l2_lambda) / w_total;
    };

    Eigen::MatrixXd params = Eigen::MatrixXd::Zero(n_classes, p + 1);
    double objective = f(params);
    double step = 1.0;
    bool converged = false;
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        Eigen::MatrixXd grad =
            multinomial_gradient(X, y, w, params, l2_lambda) / w_total;
        const double gnorm = grad.norm();
        if (gnorm < opts.gradient_tol) {
            converged = true;
            break;
        }
        const double g2 = gnorm * gnorm;
        step = std::min(step * 2.0, 1e8);
        Eigen::MatrixXd trial;
        double trial_obj = objective;
        bool accepted = false;
        for (int backtrack = 0; backtrack < 80; ++backtrack) {
            trial = params + step * grad;
            trial_obj = f(trial);
            if (trial_obj >= objective + 1e-4 * step * g2) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break; // line search exhausted, no ascent possible
        params = trial;
        objective = trial_obj;
    }

    LogisticModel model;
    model.binary = false;
    model.l2_lambda = l2_lambda;
    model.n_effective = w_total;
    model.converged = converged;
    model.iterations = iter;
    // Identification: shift each parameter column to sum-to-zero across
    // classes (the likelihood is invariant; starting from zero the iterates
    // already satisfy this up to rounding).
    Eigen::RowVectorXd mean = params.colwise().mean();
    params.rowwise() -= mean;
    model.intercepts = params.col(0);
    model.coefficients = params.rightCols(p);
    return model;
}

Eigen::MatrixXd predict_proba(const LogisticModel& model, const Eigen::MatrixXd& X) {
    if (static_cast<int>(X.cols()) != model.n_features())
        throw DataError("predict_proba: expected " + std::to_string(model.n_features()) +
                        " feature columns, got " + std::to_string(X.cols()));
    const int n = static_cast<int>(X.rows());
    if (model.binary) {
        Eigen::VectorXd eta = (X * model.coefficients.row(0).transpose()).array() +
                              model.intercepts[0];
        Eigen::MatrixXd out(n, 2);
        for (int i = 0; i < n; ++i) {
            const double pi = sigmoid(eta[i]);
            out(i, 0) = 1.0 - pi;
            out(i, 1) = pi;
        }
        return out;
    }
    const int c = model.n_classes();
    Eigen::MatrixXd eta = X * model.coefficients.transpose();
    eta.rowwise() += model.intercepts.transpose();
    Eigen::MatrixXd out(n, c);
    for (int i = 0; i < n; ++i) {
        const double m = eta.row(i).maxCoeff();
        double denom = 0.0;
        for (int k = 0; k < c; ++k) denom += std::exp(eta(i, k) - m);
        for (int k = 0; k < c; ++k) out(i, k) = std::exp(eta(i, k) - m) / denom;
    }
    return out;
}

nlohmann::ordered_json logistic_to_json(const LogisticModel& model) {
    nlohmann::ordered_json j;
    j["family"] = model.binary ? "binary" : "multinomial";
    j["intercepts"] = std::vector<double>(model.intercepts.data(),
                                          model.intercepts.data() + model.intercepts.size());
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int k = 0; k < model.coefficients.rows(); ++k) {
        std::vector<double> row(model.coefficients.cols());
        for (int p = 0; p < model.coefficients.cols(); ++p) row[p] = model.coefficients(k, p);
        rows.push_back(row);
    }
    j["coefficients"] = rows;
    j["l2_lambda"] = model.l2_lambda;
    j["converged"] = model.converged;
    j["iterations"] = model.iterations;
    j["n_effective"] = model.n_effective;
    return j;
}

} // namespace gwc
