#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gwc/data_model.hpp"

namespace gwc {

// Spatial profile of a generating coefficient, evaluated at unit coordinates.
enum class FieldKind { constant, linear_gradient, east_west_sign_flip, radial };

FieldKind parse_field_kind(const std::string& s);
std::string to_string(FieldKind k);

struct CoefficientField {
    FieldKind kind = FieldKind::constant;
    double amplitude = 0.0;
};

// Redundant variable planted for selection tests: a noisy copy of a source
// column at the given correlation (1.0 = exact copy).
struct ClonePlan {
    int source_variable = 0;
    double correlation = 1.0;
};

struct SynthSpec {
    int n_units = 500;
    double extent = 10000.0; // square side, meters
    int n_classes = 2;
    int n_variables = 1;     // base variables; clones are appended after them
    std::vector<std::vector<CoefficientField>> coefficient_field; // C x p
    double noise_sd = 0.0;   // additive predictor noise
    std::vector<ClonePlan> redundancy_plan;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruth {
    // One n x p matrix per class: the exact local coefficient of each base
    // variable at each unit. Clone columns do not enter the predictor.
    std::vector<Eigen::MatrixXd> coefficients;
    std::vector<ClonePlan> clones;
    std::vector<std::string> clone_names;
};

// Coefficient value at a location.
double field_value(const CoefficientField& field, double x, double y, double extent);

// Units uniform on the square, base features standard normal, labels drawn
// from the softmax of the location-dependent linear predictors.
// Bit-reproducible from the seed.
std::pair<SpatialDataset, GroundTruth> generate(const SynthSpec& spec);

void write_ground_truth_csv(const std::string& path, const SpatialDataset& dataset,
                            const GroundTruth& truth);

} // namespace gwc
