#include "gwc/synth.hpp"

#include <cmath>
#include <fstream>

#include "gwc/csv.hpp"
#include "gwc/error.hpp"
#include "gwc/rng.hpp"

namespace gwc {

FieldKind parse_field_kind(const std::string& s) {
    if (s == "constant") return FieldKind::constant;
    if (s == "linear_gradient" || s == "gradient") return FieldKind::linear_gradient;
    if (s == "east_west_sign_flip" || s == "sign_flip") return FieldKind::east_west_sign_flip;
    if (s == "radial") return FieldKind::radial;
    throw ConfigError("unknown coefficient field kind \"" + s + "\"");
}

std::string to_string(FieldKind k) {
    switch (k) {
        case FieldKind::constant: return "constant";
        case FieldKind::linear_gradient: return "linear_gradient";
        case FieldKind::east_west_sign_flip: return "east_west_sign_flip";
        case FieldKind::radial: return "radial";
    }
    return "?";
}

void SynthSpec::validate() const {
    if (n_units < 50) throw ConfigError("synth requires n_units >= 50");
    if (n_classes < 2) throw ConfigError("synth requires >= 2 classes");
    if (n_variables < 1) throw ConfigError("synth requires >= 1 variable");
    if (!(extent > 0)) throw ConfigError("extent must be > 0");
    if (noise_sd < 0) throw ConfigError("noise_sd must be >= 0");
    if (!coefficient_field.empty()) {
        if (static_cast<int>(coefficient_field.size()) != n_classes)
            throw ConfigError("coefficient_field must have one row per class");
        for (const auto& row : coefficient_field)
            if (static_cast<int>(row.size()) != n_variables)
                throw ConfigError("coefficient_field rows must have one entry per variable");
    }
    for (const ClonePlan& c : redundancy_plan) {
        if (c.source_variable < 0 || c.source_variable >= n_variables)
            throw ConfigError("clone source variable out of range");
        if (!(c.correlation > -1.0 && c.correlation <= 1.0))
            throw ConfigError("clone correlation must lie in (-1, 1]");
    }
}

double field_value(const CoefficientField& field, double x, double y, double extent) {
    const double u = x / extent;
    switch (field.kind) {
        case FieldKind::constant:
            return field.amplitude;
        case FieldKind::linear_gradient:
            return field.amplitude * (2.0 * u - 1.0);
        case FieldKind::east_west_sign_flip:
            return u < 0.5 ? -field.amplitude : field.amplitude;
        case FieldKind::radial: {
            const double dx = x - 0.5 * extent;
            const double dy = y - 0.5 * extent;
            const double r = std::sqrt(dx * dx + dy * dy);
            return field.amplitude * (1.0 - 2.0 * r / extent);
        }
    }
    return 0.0;
}

std::pair<SpatialDataset, GroundTruth> generate(const SynthSpec& spec) {
    spec.validate();
    const int n = spec.n_units;
    const int p = spec.n_variables;
    const int c = spec.n_classes;
    const int n_clones = static_cast<int>(spec.redundancy_plan.size());
    const int p_total = p + n_clones;

    // Independent streams per concern keep the output stable under changes
    // to any one stage.
    Rng coord_rng(derive_seed(spec.seed, 1));
    Rng feature_rng(derive_seed(spec.seed, 2));
    Rng clone_rng(derive_seed(spec.seed, 3));
    Rng label_rng(derive_seed(spec.seed, 4));
    Rng noise_rng(derive_seed(spec.seed, 5));

    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = coord_rng.uniform(0.0, spec.extent);
        ys[i] = coord_rng.uniform(0.0, spec.extent);
    }

    Eigen::MatrixXd X(n, p_total);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = feature_rng.normal();

    GroundTruth truth;
    truth.clones = spec.redundancy_plan;
    for (int q = 0; q < n_clones; ++q) {
        const ClonePlan& plan = spec.redundancy_plan[q];
        const double rho = plan.correlation;
        const double residual = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        for (int i = 0; i < n; ++i)
            X(i, p + q) = rho * X(i, plan.source_variable) + residual * clone_rng.normal();
    }

    // Default field: constant 1 for the class-matching variable diagonal.
    std::vector<std::vector<CoefficientField>> fields = spec.coefficient_field;
    if (fields.empty()) {
        fields.assign(c, std::vector<CoefficientField>(p, {FieldKind::constant, 0.0}));
        for (int k = 0; k < c; ++k) fields[k][k % p] = {FieldKind::constant, 1.0};
    }

    truth.coefficients.assign(c, Eigen::MatrixXd::Zero(n, p));
    std::vector<int> labels(n);
    Eigen::VectorXd eta(c);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < c; ++k) {
            double lin = 0.0;
            for (int j = 0; j < p; ++j) {
                const double beta = field_value(fields[k][j], xs[i], ys[i], spec.extent);
                truth.coefficients[k](i, j) = beta;
                lin += beta * X(i, j);
            }
            if (spec.noise_sd > 0) lin += spec.noise_sd * noise_rng.normal();
            eta[k] = lin;
        }
        const double m = eta.maxCoeff();
        double denom = 0.0;
        for (int k = 0; k < c; ++k) denom += std::exp(eta[k] - m);
        double u = label_rng.uniform() * denom;
        int pick = c - 1;
        double acc = 0.0;
        for (int k = 0; k < c; ++k) {
            acc += std::exp(eta[k] - m);
            if (acc >= u) {
                pick = k;
                break;
            }
        }
        labels[i] = pick;
    }

    std::vector<std::string> variable_names;
    char buf[32];
    for (int j = 0; j < p; ++j) {
        std::snprintf(buf, sizeof(buf), "v%02d", j + 1);
        variable_names.push_back(buf);
    }
    for (int q = 0; q < n_clones; ++q) {
        std::snprintf(buf, sizeof(buf), "clone%d_of_v%02d", q + 1,
                      spec.redundancy_plan[q].source_variable + 1);
        variable_names.push_back(buf);
        truth.clone_names.push_back(buf);
    }
    std::vector<std::string> class_names;
    for (int k = 0; k < c; ++k) {
        std::snprintf(buf, sizeof(buf), "c%d", k);
        class_names.push_back(buf);
    }

    std::vector<UnitRecord> units(n);
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "u%06d", i);
        units[i].unit_id = buf;
        units[i].x = xs[i];
        units[i].y = ys[i];
        units[i].label = labels[i];
        units[i].features.resize(p_total);
        for (int j = 0; j < p_total; ++j) units[i].features[j] = X(i, j);
    }

    return {SpatialDataset::from_records(units, variable_names, class_names), std::move(truth)};
}

void write_ground_truth_csv(const std::string& path, const SpatialDataset& dataset,
                            const GroundTruth& truth) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "unit_id,class,variable,true_coefficient\n";
    const int c = static_cast<int>(truth.coefficients.size());
    for (int i = 0; i < dataset.n(); ++i) {
        for (int k = 0; k < c; ++k) {
            const Eigen::MatrixXd& B = truth.coefficients[k];
            for (int j = 0; j < B.cols(); ++j) {
                out << csv_escape(dataset.unit_id(i)) << ','
                    << csv_escape(dataset.class_names()[k]) << ','
                    << csv_escape(dataset.variable_names()[j]) << ','
                    << format_double(B(i, j)) << '\n';
            }
        }
    }
}

} // namespace gwc
