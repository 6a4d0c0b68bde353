#include "gwc/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "gwc/csv.hpp"
#include "gwc/error.hpp"

namespace gwc {

SpatialDataset SpatialDataset::from_records(const std::vector<UnitRecord>& units,
                                            std::vector<std::string> variable_names,
                                            std::vector<std::string> class_names,
                                            bool standardized) {
    SpatialDataset ds;
    const int n = static_cast<int>(units.size());
    const int p = static_cast<int>(variable_names.size());

    {
        std::unordered_set<std::string> seen;
        for (const auto& v : variable_names)
            if (!seen.insert(v).second)
                throw DataError("duplicate variable name: " + v);
    }
    {
        std::unordered_set<std::string> seen;
        for (const auto& c : class_names)
            if (!seen.insert(c).second)
                throw DataError("duplicate class name: " + c);
    }

    ds.features_.resize(n, p);
    ds.unit_ids_.reserve(n);
    ds.xs_.reserve(n);
    ds.ys_.reserve(n);
    ds.labels_.reserve(n);

    std::unordered_set<std::string> ids;
    for (int i = 0; i < n; ++i) {
        const UnitRecord& u = units[i];
        if (!std::isfinite(u.x) || !std::isfinite(u.y))
            throw DataError("non-finite coordinates for unit \"" + u.unit_id + "\"");
        if (!ids.insert(u.unit_id).second)
            throw DataError("duplicate unit_id \"" + u.unit_id + "\"");
        if (static_cast<int>(u.features.size()) != p)
            throw DataError("unit \"" + u.unit_id + "\" has " +
                            std::to_string(u.features.size()) + " features, expected " +
                            std::to_string(p));
        if (u.label >= 0 && u.label >= static_cast<int>(class_names.size()))
            throw DataError("unit \"" + u.unit_id + "\" label out of range");
        ds.unit_ids_.push_back(u.unit_id);
        ds.xs_.push_back(u.x);
        ds.ys_.push_back(u.y);
        ds.labels_.push_back(u.label);
        for (int j = 0; j < p; ++j) ds.features_(i, j) = u.features[j];
    }
    ds.variable_names_ = std::move(variable_names);
    ds.class_names_ = std::move(class_names);
    ds.standardized_ = standardized;
    return ds;
}

SpatialDataset SpatialDataset::select_variables(const std::vector<int>& columns) const {
    SpatialDataset ds;
    ds.unit_ids_ = unit_ids_;
    ds.xs_ = xs_;
    ds.ys_ = ys_;
    ds.labels_ = labels_;
    ds.class_names_ = class_names_;
    ds.standardized_ = standardized_;
    ds.features_.resize(n(), static_cast<int>(columns.size()));
    ds.variable_names_.reserve(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        int c = columns[j];
        if (c < 0 || c >= p()) throw DataError("variable column index out of range");
        ds.features_.col(static_cast<int>(j)) = features_.col(c);
        ds.variable_names_.push_back(variable_names_[c]);
    }
    return ds;
}

SpatialDataset SpatialDataset::select_units(const std::vector<int>& rows) const {
    SpatialDataset ds;
    ds.variable_names_ = variable_names_;
    ds.class_names_ = class_names_;
    ds.standardized_ = standardized_;
    ds.features_.resize(static_cast<int>(rows.size()), p());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int r = rows[i];
        if (r < 0 || r >= n()) throw DataError("unit row index out of range");
        ds.unit_ids_.push_back(unit_ids_[r]);
        ds.xs_.push_back(xs_[r]);
        ds.ys_.push_back(ys_[r]);
        ds.labels_.push_back(labels_[r]);
        ds.features_.row(static_cast<int>(i)) = features_.row(r);
    }
    return ds;
}

SpatialDataset SpatialDataset::with_labels(std::vector<int> labels,
                                           std::vector<std::string> class_names) const {
    if (static_cast<int>(labels.size()) != n())
        throw DataError("label vector length does not match unit count");
    for (int l : labels)
        if (l < 0 || l >= static_cast<int>(class_names.size()))
            throw DataError("label index out of range");
    SpatialDataset ds = *this;
    ds.labels_ = std::move(labels);
    ds.class_names_ = std::move(class_names);
    return ds;
}

int SpatialDataset::variable_index(const std::string& name) const {
    for (int j = 0; j < p(); ++j)
        if (variable_names_[j] == name) return j;
    return -1;
}

SpatialDataset load_units_csv(const std::string& path, const CsvSchema& schema) {
    CsvTable table = read_csv(path);

    const int id_col = table.column(schema.id_column);
    const int x_col = table.column(schema.x_column);
    const int y_col = table.column(schema.y_column);
    if (id_col < 0) throw DataError(path + ": missing id column \"" + schema.id_column + "\"");
    if (x_col < 0) throw DataError(path + ": missing x column \"" + schema.x_column + "\"");
    if (y_col < 0) throw DataError(path + ": missing y column \"" + schema.y_column + "\"");

    int label_col = -1;
    if (!schema.label_column.empty()) {
        label_col = table.column(schema.label_column);
        if (label_col < 0)
            throw DataError(path + ": missing label column \"" + schema.label_column + "\"");
    }

    std::vector<int> feature_cols;
    std::vector<std::string> feature_names;
    if (!schema.feature_columns.empty()) {
        for (const auto& name : schema.feature_columns) {
            int c = table.column(name);
            if (c < 0) throw DataError(path + ": missing feature column \"" + name + "\"");
            feature_cols.push_back(c);
            feature_names.push_back(name);
        }
    } else {
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            int ci = static_cast<int>(c);
            if (ci == id_col || ci == x_col || ci == y_col || ci == label_col) continue;
            feature_cols.push_back(ci);
            feature_names.push_back(table.header[c]);
        }
    }
    if (feature_cols.empty())
        throw DataError(path + ": no feature columns found");

    // Class list: explicit, or the sorted distinct labels found in the file.
    std::vector<std::string> class_names = schema.class_names;
    std::unordered_map<std::string, int> class_index;
    if (label_col >= 0 && class_names.empty()) {
        std::set<std::string> distinct;
        for (const auto& row : table.rows) {
            if (static_cast<int>(row.size()) > label_col && !row[label_col].empty())
                distinct.insert(row[label_col]);
        }
        class_names.assign(distinct.begin(), distinct.end());
    }
    for (std::size_t i = 0; i < class_names.size(); ++i)
        class_index[class_names[i]] = static_cast<int>(i);

    std::vector<UnitRecord> units;
    units.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t want = table.header.size();
        if (row.size() != want)
            throw DataError(path + ": row " + std::to_string(r + 2) + " has " +
                            std::to_string(row.size()) + " fields, expected " +
                            std::to_string(want));
        UnitRecord u;
        u.unit_id = row[id_col];
        if (!parse_double(row[x_col], u.x))
            throw DataError(path + ": row " + std::to_string(r + 2) +
                            ", column \"" + schema.x_column + "\": cannot parse \"" +
                            row[x_col] + "\" as a coordinate");
        if (!parse_double(row[y_col], u.y))
            throw DataError(path + ": row " + std::to_string(r + 2) +
                            ", column \"" + schema.y_column + "\": cannot parse \"" +
                            row[y_col] + "\" as a coordinate");
        u.features.resize(feature_cols.size());
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            if (!parse_double(row[feature_cols[j]], u.features[j]))
                throw DataError(path + ": row " + std::to_string(r + 2) +
                                ", column \"" + feature_names[j] + "\": cannot parse \"" +
                                row[feature_cols[j]] + "\" as a number");
        }
        if (label_col >= 0) {
            const std::string& cell = row[label_col];
            if (!cell.empty()) {
                auto it = class_index.find(cell);
                if (it == class_index.end())
                    throw DataError(path + ": row " + std::to_string(r + 2) +
                                    ": unknown class \"" + cell + "\"");
                u.label = it->second;
            }
        }
        units.push_back(std::move(u));
    }

    return SpatialDataset::from_records(units, feature_names,
                                        label_col >= 0 ? class_names
                                                       : std::vector<std::string>{});
}

ElementLabelTable load_elements_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    const int e_col = table.column("element_id");
    const int u_col = table.column("unit_id");
    const int l_col = table.column("label");
    if (e_col < 0 || u_col < 0 || l_col < 0)
        throw DataError(path + ": element table requires columns element_id,unit_id,label");

    std::set<std::string> distinct;
    for (const auto& row : table.rows) distinct.insert(row[l_col]);
    ElementLabelTable t;
    t.class_names.assign(distinct.begin(), distinct.end());
    std::unordered_map<std::string, int> class_index;
    for (std::size_t i = 0; i < t.class_names.size(); ++i)
        class_index[t.class_names[i]] = static_cast<int>(i);

    for (const auto& row : table.rows) {
        ElementLabelRow r;
        r.element_id = row[e_col];
        r.unit_id = row[u_col];
        r.label = class_index.at(row[l_col]);
        t.rows.push_back(std::move(r));
    }
    return t;
}

AggregateResult aggregate_majority(const ElementLabelTable& elements,
                                   const SpatialDataset& dataset) {
    const int c = static_cast<int>(elements.class_names.size());
    std::unordered_map<std::string, int> unit_index;
    for (int i = 0; i < dataset.n(); ++i) unit_index[dataset.unit_id(i)] = i;

    std::vector<std::vector<long>> counts(dataset.n(), std::vector<long>(c, 0));
    for (const auto& row : elements.rows) {
        auto it = unit_index.find(row.unit_id);
        if (it == unit_index.end())
            throw DataError("element \"" + row.element_id +
                            "\" references unknown unit_id \"" + row.unit_id + "\"");
        counts[it->second][row.label] += 1;
    }

    AggregateResult result;
    std::vector<int> kept_rows;
    std::vector<int> kept_labels;
    for (int i = 0; i < dataset.n(); ++i) {
        long total = 0;
        for (long v : counts[i]) total += v;
        if (total == 0) {
            result.dropped_unit_ids.push_back(dataset.unit_id(i));
            continue;
        }
        // Modal label; ties break to the smallest class index.
        int best = 0;
        for (int k = 1; k < c; ++k)
            if (counts[i][k] > counts[i][best]) best = k;
        kept_rows.push_back(i);
        kept_labels.push_back(best);
    }

    SpatialDataset kept = dataset.select_units(kept_rows);
    result.dataset = kept.with_labels(std::move(kept_labels), elements.class_names);
    return result;
}

StandardizeResult standardize_features(const SpatialDataset& dataset) {
    if (dataset.standardized())
        throw DataError("dataset is already standardized");
    const int n = dataset.n();
    const int p = dataset.p();
    if (n < 2) throw DataError("standardization requires at least 2 units");

    const Eigen::MatrixXd& X = dataset.features();
    Standardization info;
    info.means.resize(p);
    info.sds.resize(p);
    Eigen::MatrixXd Z(n, p);
    for (int j = 0; j < p; ++j) {
        double mean = X.col(j).mean();
        double ss = (X.col(j).array() - mean).square().sum();
        double sd = std::sqrt(ss / (n - 1));
        if (!(sd > 0.0))
            throw NumericError("variable \"" + dataset.variable_names()[j] +
                               "\" has zero variance");
        info.means[j] = mean;
        info.sds[j] = sd;
        Z.col(j) = (X.col(j).array() - mean) / sd;
    }

    std::vector<UnitRecord> units(n);
    for (int i = 0; i < n; ++i) {
        units[i].unit_id = dataset.unit_id(i);
        units[i].x = dataset.x(i);
        units[i].y = dataset.y(i);
        units[i].label = dataset.label(i);
        units[i].features.resize(p);
        for (int j = 0; j < p; ++j) units[i].features[j] = Z(i, j);
    }
    StandardizeResult out;
    out.dataset = SpatialDataset::from_records(units, dataset.variable_names(),
                                               dataset.class_names(), true);
    out.applied = std::move(info);
    return out;
}

void write_units_csv(const std::string& path, const SpatialDataset& dataset) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "id,x,y";
    for (const auto& v : dataset.variable_names()) out << ',' << csv_escape(v);
    if (dataset.has_labels()) out << ",label";
    out << '\n';
    for (int i = 0; i < dataset.n(); ++i) {
        out << csv_escape(dataset.unit_id(i)) << ',' << format_double(dataset.x(i))
            << ',' << format_double(dataset.y(i));
        for (int j = 0; j < dataset.p(); ++j)
            out << ',' << format_double(dataset.features()(i, j));
        if (dataset.has_labels()) {
            out << ',';
            if (dataset.label(i) >= 0)
                out << csv_escape(dataset.class_names()[dataset.label(i)]);
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

} // namespace gwc
