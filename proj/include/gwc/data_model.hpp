#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace gwc {

// One georeferenced unit. Coordinates are projected planar meters; label is
// an index into the dataset's class list, -1 while unlabeled.
struct UnitRecord {
    std::string unit_id;
    double x = 0.0;
    double y = 0.0;
    std::vector<double> features;
    int label = -1;
};

// Per-variable centering/scaling applied by standardize_features.
struct Standardization {
    std::vector<double> means;
    std::vector<double> sds; // sample standard deviations (n-1 denominator)
};

// Immutable after construction; unit order is the canonical order for every
// downstream per-unit output.
class SpatialDataset {
public:
    SpatialDataset() = default;

    static SpatialDataset from_records(const std::vector<UnitRecord>& units,
                                       std::vector<std::string> variable_names,
                                       std::vector<std::string> class_names,
                                       bool standardized = false);

    int n() const { return static_cast<int>(unit_ids_.size()); }
    int p() const { return static_cast<int>(variable_names_.size()); }
    int n_classes() const { return static_cast<int>(class_names_.size()); }
    bool has_labels() const { return !class_names_.empty(); }
    bool standardized() const { return standardized_; }

    const std::string& unit_id(int i) const { return unit_ids_[i]; }
    double x(int i) const { return xs_[i]; }
    double y(int i) const { return ys_[i]; }
    int label(int i) const { return labels_[i]; }

    const std::vector<std::string>& unit_ids() const { return unit_ids_; }
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }
    const std::vector<int>& labels() const { return labels_; }
    const Eigen::MatrixXd& features() const { return features_; } // n x p
    const std::vector<std::string>& variable_names() const { return variable_names_; }
    const std::vector<std::string>& class_names() const { return class_names_; }

    // New dataset restricted to the given variable columns (by index).
    SpatialDataset select_variables(const std::vector<int>& columns) const;

    // New dataset restricted to the given units (by index, in given order).
    SpatialDataset select_units(const std::vector<int>& rows) const;

    // New dataset with labels replaced (resets the class list).
    SpatialDataset with_labels(std::vector<int> labels,
                               std::vector<std::string> class_names) const;

    int variable_index(const std::string& name) const; // -1 if absent

private:
    std::vector<std::string> unit_ids_;
    std::vector<double> xs_, ys_;
    Eigen::MatrixXd features_;
    std::vector<int> labels_;
    std::vector<std::string> variable_names_;
    std::vector<std::string> class_names_;
    bool standardized_ = false;
};

// Element-level labels awaiting aggregation onto units. Labels are indices
// into class_names.
struct ElementLabelRow {
    std::string element_id;
    std::string unit_id;
    int label = -1;
};

struct ElementLabelTable {
    std::vector<ElementLabelRow> rows;
    std::vector<std::string> class_names;
};

// Column mapping for load_units_csv. Empty feature_columns means: every
// column that is not id/x/y/label. Empty label_column means no labels in the
// file. Empty class_names means: derive them from the label column, sorted.
struct CsvSchema {
    std::string id_column = "id";
    std::string x_column = "x";
    std::string y_column = "y";
    std::string label_column;
    std::vector<std::string> feature_columns;
    std::vector<std::string> class_names;
};

SpatialDataset load_units_csv(const std::string& path, const CsvSchema& schema);

// Element table columns are fixed: element_id,unit_id,label.
ElementLabelTable load_elements_csv(const std::string& path);

struct AggregateResult {
    SpatialDataset dataset;
    std::vector<std::string> dropped_unit_ids; // units that received no element
};

// Assigns each unit the modal element label; ties break to the smallest
// class index. Units without elements are dropped and reported.
AggregateResult aggregate_majority(const ElementLabelTable& elements,
                                   const SpatialDataset& dataset);

struct StandardizeResult {
    SpatialDataset dataset;
    Standardization applied;
};

// Centers each feature column to mean 0 and scales to sample sd 1.
StandardizeResult standardize_features(const SpatialDataset& dataset);

// Writes the unit table: id,x,y,<features...>[,label]. Floats carry
// 17 significant digits so a reload is bit-identical.
void write_units_csv(const std::string& path, const SpatialDataset& dataset);

} // namespace gwc
