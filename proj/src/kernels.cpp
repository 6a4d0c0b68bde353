#include "gwc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gwc/csv.hpp"
#include "gwc/error.hpp"
#include "gwc/parallel.hpp"

namespace gwc {

KernelShape parse_kernel_shape(const std::string& s) {
    if (s == "bisquare") return KernelShape::bisquare;
    if (s == "gaussian") return KernelShape::gaussian;
    if (s == "tricube") return KernelShape::tricube;
    if (s == "boxcar") return KernelShape::boxcar;
    throw ConfigError("unknown kernel shape \"" + s + "\"");
}

std::string to_string(KernelShape s) {
    switch (s) {
        case KernelShape::bisquare: return "bisquare";
        case KernelShape::gaussian: return "gaussian";
        case KernelShape::tricube: return "tricube";
        case KernelShape::boxcar: return "boxcar";
    }
    return "?";
}

void KernelSpec::validate() const {
    if (mode == BandwidthMode::adaptive_k) {
        if (bandwidth != std::floor(bandwidth) || bandwidth < 2)
            throw ConfigError("adaptive bandwidth must be an integer >= 2");
    } else {
        if (!(bandwidth > 0))
            throw ConfigError("fixed bandwidth must be > 0 meters");
    }
}

int KernelSpec::adaptive_k() const { return static_cast<int>(bandwidth); }

double kernel_value(KernelShape shape, double d, double b) {
    switch (shape) {
        case KernelShape::bisquare: {
            if (d >= b) return 0.0;
            double u = d / b;
            double t = 1.0 - u * u;
            return t * t;
        }
        case KernelShape::tricube: {
            if (d >= b) return 0.0;
            double u = d / b;
            double t = 1.0 - u * u * u;
            return t * t * t;
        }
        case KernelShape::gaussian: {
            double u = d / b;
            return std::exp(-0.5 * u * u);
        }
        case KernelShape::boxcar:
            return d <= b ? 1.0 : 0.0;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// KdTree2d

KdTree2d::KdTree2d(const std::vector<double>& xs, const std::vector<double>& ys)
    : px_(xs), py_(ys) {
    const int n = static_cast<int>(px_.size());
    if (n == 0) return;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    nodes_.reserve(n);
    root_ = build(order, 0, n, 0);
}

int KdTree2d::build(std::vector<int>& order, int lo, int hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth & 1;
    const int mid = lo + (hi - lo) / 2;
    const std::vector<double>& coord = axis == 0 ? px_ : py_;
    // Ties ordered by point index so the structure is independent of the
    // initial permutation.
    std::nth_element(order.begin() + lo, order.begin() + mid, order.begin() + hi,
                     [&](int a, int b) {
                         if (coord[a] != coord[b]) return coord[a] < coord[b];
                         return a < b;
                     });
    Node node;
    node.point = order[mid];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(order, lo, mid, depth + 1);
    const int right = build(order, mid + 1, hi, depth + 1);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

namespace {

struct Candidate {
    double dist;
    int index;
};

// Max-heap ordering: worst candidate on top. (dist, index) lexicographic so
// exact distance ties resolve to smaller indices.
inline bool cand_less(const Candidate& a, const Candidate& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.index < b.index;
}

} // namespace

void KdTree2d::query_knn(double qx, double qy, int k, int exclude,
                         std::vector<int>& idx_out, std::vector<double>& dist_out) const {
    idx_out.clear();
    dist_out.clear();
    if (k <= 0 || root_ < 0) return;

    std::vector<Candidate> heap;
    heap.reserve(k);
    auto heap_cmp = [](const Candidate& a, const Candidate& b) { return cand_less(a, b); };

    // Iterative depth-first search with pruning on the splitting planes.
    std::vector<int> stack;
    stack.reserve(64);
    stack.push_back(root_);
    while (!stack.empty()) {
        const int ni = stack.back();
        stack.pop_back();
        if (ni < 0) continue;
        const Node& node = nodes_[ni];

        if (node.point != exclude) {
            const double dx = px_[node.point] - qx;
            const double dy = py_[node.point] - qy;
            const Candidate c{std::sqrt(dx * dx + dy * dy), node.point};
            if (static_cast<int>(heap.size()) < k) {
                heap.push_back(c);
                std::push_heap(heap.begin(), heap.end(), heap_cmp);
            } else if (cand_less(c, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), heap_cmp);
                heap.back() = c;
                std::push_heap(heap.begin(), heap.end(), heap_cmp);
            }
        }

        const double plane = node.axis == 0 ? px_[node.point] : py_[node.point];
        const double qa = node.axis == 0 ? qx : qy;
        const double plane_gap = qa - plane;
        const int near = plane_gap < 0 ? node.left : node.right;
        const int far = plane_gap < 0 ? node.right : node.left;
        // The far subtree cannot beat a full heap whose worst candidate is
        // closer than the splitting plane.
        const bool prune_far = static_cast<int>(heap.size()) == k &&
                               std::abs(plane_gap) > heap.front().dist;
        if (!prune_far) stack.push_back(far);
        stack.push_back(near);
    }

    std::sort(heap.begin(), heap.end(), cand_less);
    idx_out.reserve(heap.size());
    dist_out.reserve(heap.size());
    for (const Candidate& c : heap) {
        idx_out.push_back(c.index);
        dist_out.push_back(c.dist);
    }
}

void KdTree2d::query_radius(double qx, double qy, double radius, int exclude,
                            std::vector<int>& idx_out, std::vector<double>& dist_out) const {
    idx_out.clear();
    dist_out.clear();
    if (root_ < 0) return;
    std::vector<Candidate> found;

    std::vector<int> stack;
    stack.push_back(root_);
    while (!stack.empty()) {
        const int ni = stack.back();
        stack.pop_back();
        if (ni < 0) continue;
        const Node& node = nodes_[ni];
        const double planes = node.axis == 0 ? px_[node.point] : py_[node.point];
        const double qa = node.axis == 0 ? qx : qy;
        const double plane_gap = qa - planes;
        if (plane_gap <= radius) stack.push_back(node.left);
        if (-plane_gap <= radius) stack.push_back(node.right);

        if (node.point == exclude) continue;
        const double dx = px_[node.point] - qx;
        const double dy = py_[node.point] - qy;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d <= radius) found.push_back({d, node.point});
    }
    std::sort(found.begin(), found.end(), cand_less);
    for (const Candidate& c : found) {
        idx_out.push_back(c.index);
        dist_out.push_back(c.dist);
    }
}

// ---------------------------------------------------------------------------
// Graph builders

NeighborGraph build_knn(const SpatialDataset& dataset, int k) {
    const int n = dataset.n();
    if (k < 1 || k > n - 1)
        throw NumericError("k-nearest-neighbor bandwidth k=" + std::to_string(k) +
                           " requires 1 <= k <= n-1 (n=" + std::to_string(n) + ")");
    KdTree2d tree(dataset.xs(), dataset.ys());
    NeighborGraph graph;
    graph.neighbors.resize(n);
    graph.symmetric = false;

#pragma omp parallel for schedule(static) num_threads(max_workers())
    for (int i = 0; i < n; ++i) {
        NeighborList& nl = graph.neighbors[i];
        tree.query_knn(dataset.x(i), dataset.y(i), k, i, nl.indices, nl.distances);
    }
    return graph;
}

NeighborGraph build_knn_bruteforce(const SpatialDataset& dataset, int k) {
    const int n = dataset.n();
    if (k < 1 || k > n - 1)
        throw NumericError("k-nearest-neighbor bandwidth k=" + std::to_string(k) +
                           " requires 1 <= k <= n-1 (n=" + std::to_string(n) + ")");
    NeighborGraph graph;
    graph.neighbors.resize(n);
    graph.symmetric = false;
    std::vector<Candidate> all(n - 1);
    for (int i = 0; i < n; ++i) {
        all.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dx = dataset.x(j) - dataset.x(i);
            const double dy = dataset.y(j) - dataset.y(i);
            all.push_back({std::sqrt(dx * dx + dy * dy), j});
        }
        std::partial_sort(all.begin(), all.begin() + k, all.end(), cand_less);
        NeighborList& nl = graph.neighbors[i];
        nl.indices.resize(k);
        nl.distances.resize(k);
        for (int m = 0; m < k; ++m) {
            nl.indices[m] = all[m].index;
            nl.distances[m] = all[m].dist;
        }
    }
    return graph;
}

NeighborGraph kernel_weights(NeighborGraph graph, const KernelSpec& spec,
                             const SpatialDataset& dataset) {
    spec.validate();
    const int n = graph.n();
    for (int i = 0; i < n; ++i) {
        NeighborList& nl = graph.neighbors[i];
        double b;
        if (spec.mode == BandwidthMode::adaptive_k) {
            if (static_cast<int>(nl.indices.size()) != spec.adaptive_k())
                throw DataError("adaptive kernel expects exactly k=" +
                                std::to_string(spec.adaptive_k()) +
                                " neighbors per unit; unit \"" + dataset.unit_id(i) +
                                "\" has " + std::to_string(nl.indices.size()));
            b = nl.distances.empty() ? 0.0 : nl.distances.back();
            if (!(b > 0.0))
                throw NumericError("degenerate adaptive bandwidth at unit \"" +
                                   dataset.unit_id(i) +
                                   "\": all neighbors coincide with the focal point");
        } else {
            b = spec.bandwidth;
        }
        nl.weights.resize(nl.distances.size());
        for (std::size_t m = 0; m < nl.distances.size(); ++m)
            nl.weights[m] = kernel_value(spec.shape, nl.distances[m], b);
    }
    return graph;
}

NeighborGraph build_distance_band(const SpatialDataset& dataset, double d_max) {
    if (!(d_max > 0)) throw ConfigError("distance band requires d_max > 0");
    const int n = dataset.n();
    KdTree2d tree(dataset.xs(), dataset.ys());
    NeighborGraph graph;
    graph.neighbors.resize(n);
    graph.symmetric = true;

#pragma omp parallel for schedule(static) num_threads(max_workers())
    for (int i = 0; i < n; ++i) {
        NeighborList& nl = graph.neighbors[i];
        std::vector<int> idx;
        std::vector<double> dist;
        tree.query_radius(dataset.x(i), dataset.y(i), d_max, i, idx, dist);
        for (std::size_t m = 0; m < idx.size(); ++m) {
            if (dist[m] > 0.0) { // coincident points are not neighbors
                nl.indices.push_back(idx[m]);
                nl.distances.push_back(dist[m]);
                nl.weights.push_back(1.0);
            }
        }
    }
    for (int i = 0; i < n; ++i)
        if (graph.neighbors[i].indices.empty()) graph.isolates.push_back(i);
    return graph;
}

double max_nearest_neighbor_distance(const SpatialDataset& dataset) {
    NeighborGraph g = build_knn(dataset, 1);
    double best = 0.0;
    for (const auto& nl : g.neighbors)
        if (!nl.distances.empty()) best = std::max(best, nl.distances.front());
    return best;
}

void write_graph_csv(const std::string& path, const NeighborGraph& graph,
                     const SpatialDataset& dataset) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "focal_id,neighbor_id,distance,weight\n";
    for (int i = 0; i < graph.n(); ++i) {
        const NeighborList& nl = graph.neighbors[i];
        for (std::size_t m = 0; m < nl.indices.size(); ++m) {
            double w = m < nl.weights.size() ? nl.weights[m] : 0.0;
            out << csv_escape(dataset.unit_id(i)) << ','
                << csv_escape(dataset.unit_id(nl.indices[m])) << ','
                << format_double(nl.distances[m]) << ',' << format_double(w) << '\n';
        }
    }
}

} // namespace gwc
