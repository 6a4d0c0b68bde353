// Test-side oracles. Each one is an independent route to a value the library
// computes some other way; none of them share code with the implementation.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// All-pairs k-nearest-neighbor scan, ties by smaller index.
inline void knn_scan(const std::vector<double>& xs, const std::vector<double>& ys,
                     int focal, int k, std::vector<int>& idx_out) {
    struct Entry {
        double d;
        int j;
    };
    std::vector<Entry> entries;
    for (int j = 0; j < static_cast<int>(xs.size()); ++j) {
        if (j == focal) continue;
        const double dx = xs[j] - xs[focal];
        const double dy = ys[j] - ys[focal];
        entries.push_back({std::hypot(dx, dy), j});
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.d != b.d) return a.d < b.d;
        return a.j < b.j;
    });
    idx_out.clear();
    for (int m = 0; m < k; ++m) idx_out.push_back(entries[m].j);
}

// Textbook two-pass Pearson correlation.
inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const int n = static_cast<int>(a.size());
    double ma = 0, mb = 0;
    for (int i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Plain gradient ascent on the penalized binary logistic log-likelihood,
// run to a tight tolerance. Independent of the IRLS path under test.
struct GradientAscentFit {
    Eigen::VectorXd beta; // coefficients
    double intercept = 0.0;
    int iterations = 0;
};

inline GradientAscentFit gradient_ascent_logistic(const Eigen::MatrixXd& X,
                                                  const std::vector<int>& y,
                                                  const Eigen::VectorXd& w, double lambda,
                                                  int max_iter = 2000000,
                                                  double grad_tol = 1e-10) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double intercept = 0.0;

    auto objective = [&](const Eigen::VectorXd& b, double b0) {
        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            const double eta = X.row(i).dot(b) + b0;
            const double lse = eta > 0 ? eta + std::log1p(std::exp(-eta))
                                       : std::log1p(std::exp(eta));
            ll += w[i] * (y[i] * eta - lse);
        }
        return ll - 0.5 * lambda * b.squaredNorm();
    };

    double step = 1.0 / std::max(1.0, w.sum());
    double obj = objective(beta, intercept);
    int it = 0;
    for (; it < max_iter; ++it) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
        double grad0 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double eta = X.row(i).dot(beta) + intercept;
            const double prob = 1.0 / (1.0 + std::exp(-eta));
            const double r = w[i] * (y[i] - prob);
            grad += r * X.row(i).transpose();
            grad0 += r;
        }
        grad -= lambda * beta;
        const double gnorm = std::sqrt(grad.squaredNorm() + grad0 * grad0);
        if (gnorm < grad_tol) break;

        step *= 2.0;
        for (;;) {
            const Eigen::VectorXd cand = beta + step * grad;
            const double cand0 = intercept + step * grad0;
            const double cand_obj = objective(cand, cand0);
            if (cand_obj > obj - 1e-18) {
                beta = cand;
                intercept = cand0;
                obj = cand_obj;
                break;
            }
            step *= 0.5;
            if (step < 1e-20) break;
        }
    }
    return {beta, intercept, it};
}

// Exhaustive minimum spanning tree for small p: tries every edge subset of
// size p-1, keeps the cheapest connected one. Edges weighted 1-|r|.
// The total is summed over the winning subset in (weight, a, b) order.
inline double exhaustive_mst_weight(const Eigen::MatrixXd& corr) {
    const int p = static_cast<int>(corr.rows());
    struct Edge {
        double w;
        int a, b;
    };
    std::vector<Edge> edges;
    for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b) edges.push_back({1.0 - std::abs(corr(a, b)), a, b});
    const int m = static_cast<int>(edges.size());

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> chosen;
    std::vector<int> subset(p - 1);
    // Enumerate all (m choose p-1) subsets with an odometer.
    std::iota(subset.begin(), subset.end(), 0);
    for (;;) {
        // Connectivity via repeated relabeling.
        std::vector<int> comp(p);
        std::iota(comp.begin(), comp.end(), 0);
        for (int e : subset) {
            const int ca = comp[edges[e].a], cb = comp[edges[e].b];
            if (ca != cb)
                for (int& c : comp)
                    if (c == cb) c = ca;
        }
        bool connected = true;
        for (int c : comp)
            if (c != comp[0]) connected = false;
        if (connected) {
            double total = 0.0;
            for (int e : subset) total += edges[e].w;
            if (total < best) {
                best = total;
                chosen.assign(subset.begin(), subset.end());
            }
        }
        // Next subset.
        int i = p - 2;
        while (i >= 0 && subset[i] == m - (p - 1) + i) --i;
        if (i < 0) break;
        ++subset[i];
        for (int j = i + 1; j < p - 1; ++j) subset[j] = subset[j - 1] + 1;
    }

    // Re-sum in the Kruskal insertion order so the comparison can be exact.
    std::vector<Edge> winning;
    for (int e : chosen) winning.push_back(edges[e]);
    std::sort(winning.begin(), winning.end(), [](const Edge& x, const Edge& y) {
        if (x.w != y.w) return x.w < y.w;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    double total = 0.0;
    for (const Edge& e : winning) total += e.w;
    return total;
}

// Central finite differences of a scalar function of a parameter vector.
template <typename F>
Eigen::VectorXd finite_difference_gradient(F&& f, Eigen::VectorXd at, double h = 1e-5) {
    Eigen::VectorXd grad(at.size());
    for (int j = 0; j < at.size(); ++j) {
        const double keep = at[j];
        at[j] = keep + h;
        const double up = f(at);
        at[j] = keep - h;
        const double down = f(at);
        at[j] = keep;
        grad[j] = (up - down) / (2.0 * h);
    }
    return grad;
}

// Exhaustive best 2-partition of points by within-cluster squared distance.
inline std::vector<int> best_two_partition(const std::vector<double>& xs,
                                           const std::vector<double>& ys) {
    const int n = static_cast<int>(xs.size());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_assign(n, 0);
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
        double mx[2] = {0, 0}, my[2] = {0, 0};
        int count[2] = {0, 0};
        for (int i = 0; i < n; ++i) {
            const int g = (mask >> i) & 1;
            mx[g] += xs[i];
            my[g] += ys[i];
            ++count[g];
        }
        if (count[0] == 0 || count[1] == 0) continue;
        for (int g = 0; g < 2; ++g) {
            mx[g] /= count[g];
            my[g] /= count[g];
        }
        double cost = 0.0;
        for (int i = 0; i < n; ++i) {
            const int g = (mask >> i) & 1;
            cost += (xs[i] - mx[g]) * (xs[i] - mx[g]) + (ys[i] - my[g]) * (ys[i] - my[g]);
        }
        if (cost < best) {
            best = cost;
            for (int i = 0; i < n; ++i) best_assign[i] = (mask >> i) & 1;
        }
    }
    return best_assign;
}

// Independent permutation p-value for the global G numerator, using the
// standard library's shuffle rather than the library RNG.
inline double permutation_p_global_g(const std::vector<double>& values,
                                     const std::vector<std::pair<int, int>>& edges,
                                     int n_perm, unsigned seed) {
    auto numerator = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (const auto& [i, j] : edges) s += v[i] * v[j] + v[j] * v[i];
        return s;
    };
    const double observed = numerator(values);
    std::mt19937 rng(seed);
    std::vector<double> shuffled(values);
    int count_ge = 0;
    for (int t = 0; t < n_perm; ++t) {
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        if (numerator(shuffled) >= observed) ++count_ge;
    }
    return (count_ge + 1.0) / (n_perm + 1.0);
}

} // namespace oracle
