#pragma once

#include <string>
#include <vector>

#include "gwc/data_model.hpp"

namespace gwc {

enum class KernelShape { bisquare, gaussian, tricube, boxcar };
enum class BandwidthMode { adaptive_k, fixed_distance };

KernelShape parse_kernel_shape(const std::string& s);
std::string to_string(KernelShape s);

// Distance-decay kernel. bandwidth is a neighbor count for adaptive_k
// (integer >= 2) or meters for fixed_distance (> 0).
struct KernelSpec {
    KernelShape shape = KernelShape::bisquare;
    BandwidthMode mode = BandwidthMode::adaptive_k;
    double bandwidth = 0.0;

    void validate() const;
    int adaptive_k() const; // bandwidth as an integer neighbor count
};

// Kernel value at distance d with bandwidth b.
double kernel_value(KernelShape shape, double d, double b);

struct NeighborList {
    std::vector<int> indices;     // sorted by (distance, index)
    std::vector<double> distances;
    std::vector<double> weights;  // in [0,1]; filled by kernel_weights
};

struct NeighborGraph {
    std::vector<NeighborList> neighbors;
    bool symmetric = false;
    std::vector<int> isolates; // distance-band units with zero neighbors

    int n() const { return static_cast<int>(neighbors.size()); }
};

// Planar kd-tree over a fixed point set. Built once, queried read-only from
// any number of threads.
class KdTree2d {
public:
    KdTree2d() = default;
    KdTree2d(const std::vector<double>& xs, const std::vector<double>& ys);

    // k nearest points to (qx,qy); ties break to the smaller point index.
    // exclude >= 0 removes that point from consideration.
    void query_knn(double qx, double qy, int k, int exclude,
                   std::vector<int>& idx_out, std::vector<double>& dist_out) const;

    // All points with 0 <= distance <= radius, sorted by (distance, index).
    void query_radius(double qx, double qy, double radius, int exclude,
                      std::vector<int>& idx_out, std::vector<double>& dist_out) const;

    int size() const { return static_cast<int>(px_.size()); }

private:
    struct Node {
        int point = -1;
        int left = -1, right = -1;
        int axis = 0;
    };
    int build(std::vector<int>& order, int lo, int hi, int depth);

    std::vector<double> px_, py_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// k nearest other units per focal unit (self excluded), Euclidean distance,
// parallel over focal units.
NeighborGraph build_knn(const SpatialDataset& dataset, int k);

// Serial all-pairs scan; reference implementation for build_knn, kept for
// testing and the benchmark target.
NeighborGraph build_knn_bruteforce(const SpatialDataset& dataset, int k);

// Fills weights from the kernel spec. For adaptive_k the local bandwidth is
// the distance to the k-th neighbor (inclusive), so that neighbor gets
// weight 0 under bisquare/tricube.
NeighborGraph kernel_weights(NeighborGraph graph, const KernelSpec& spec,
                             const SpatialDataset& dataset);

// Binary weights: 1 if 0 < distance <= d_max. Symmetric. Units without
// neighbors are listed in isolates (warning, not fatal).
NeighborGraph build_distance_band(const SpatialDataset& dataset, double d_max);

// Largest nearest-neighbor distance; the smallest band distance that leaves
// no unit isolated.
double max_nearest_neighbor_distance(const SpatialDataset& dataset);

// Diagnostic dump: focal_id,neighbor_id,distance,weight.
void write_graph_csv(const std::string& path, const NeighborGraph& graph,
                     const SpatialDataset& dataset);

} // namespace gwc
