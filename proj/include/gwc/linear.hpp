#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gwc {

// Fitted logistic model. Binary models have one coefficient row; multinomial
// models have C rows identified by a sum-to-zero constraint across classes.
// The intercept is never penalized.
struct LogisticModel {
    Eigen::MatrixXd coefficients; // C x p (binary: 1 x p)
    Eigen::VectorXd intercepts;   // size C (binary: size 1)
    double l2_lambda = 0.0;
    bool converged = false;
    int iterations = 0;
    double n_effective = 0.0; // sum of sample weights
    bool binary = true;

    int n_classes() const { return binary ? 2 : static_cast<int>(intercepts.size()); }
    int n_features() const { return static_cast<int>(coefficients.cols()); }
};

struct LogisticOptions {
    int max_iterations = 100;   // IRLS
    double param_tol = 1e-8;    // max parameter change
    std::vector<double>* objective_trace = nullptr; // per-iteration penalized LL
};

struct MultinomialOptions {
    int max_iterations = 500;
    double gradient_tol = 1e-7; // norm of the weight-normalized gradient
};

// Weighted binary logistic regression by iteratively reweighted least
// squares with step halving; maximizes the weighted log-likelihood minus
// (l2_lambda/2)*||beta||^2.
LogisticModel fit_binary_logistic(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                  const Eigen::VectorXd& w, double l2_lambda,
                                  const LogisticOptions& opts = {});

// Weighted multinomial (softmax) regression by full-gradient ascent with a
// backtracking line search.
LogisticModel fit_multinomial_logistic(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                       const Eigen::VectorXd& w, int n_classes,
                                       double l2_lambda, const MultinomialOptions& opts = {});

// n x C probability matrix; rows sum to 1. Binary models return (1-p, p).
Eigen::MatrixXd predict_proba(const LogisticModel& model, const Eigen::MatrixXd& X);

// Penalized weighted log-likelihoods and their analytic gradients, exposed
// so tests can check them against finite differences. Binary parameters are
// (intercept, beta); the gradient vector is laid out the same way.
double binary_objective(const Eigen::MatrixXd& X, const std::vector<int>& y,
                        const Eigen::VectorXd& w, const Eigen::VectorXd& beta,
                        double intercept, double l2_lambda);

Eigen::VectorXd binary_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                const Eigen::VectorXd& w, const Eigen::VectorXd& beta,
                                double intercept, double l2_lambda);

// Multinomial parameters as C x (p+1) with the intercept in column 0.
double multinomial_objective(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             const Eigen::VectorXd& w, const Eigen::MatrixXd& params,
                             double l2_lambda);

Eigen::MatrixXd multinomial_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                     const Eigen::VectorXd& w, const Eigen::MatrixXd& params,
                                     double l2_lambda);

nlohmann::ordered_json logistic_to_json(const LogisticModel& model);

} // namespace gwc
