// gwclass: end-to-end pipeline driver for geographically weighted
// classification of georeferenced units.
//
// Subcommands: synth, select-vars, fit-global, autocorr, fit-gw, report.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gwc/config.hpp"
#include "gwc/csv.hpp"
#include "gwc/data_model.hpp"
#include "gwc/error.hpp"
#include "gwc/evaluation.hpp"
#include "gwc/gw.hpp"
#include "gwc/kernels.hpp"
#include "gwc/linear.hpp"
#include "gwc/parallel.hpp"
#include "gwc/rng.hpp"
#include "gwc/spatial_stats.hpp"
#include "gwc/synth.hpp"
#include "gwc/varsel.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CliContext {
    std::string config_path;
    std::string out_override;
    int workers = 0;
};

gwc::PipelineConfig load_config(const CliContext& ctx) {
    gwc::PipelineConfig config = gwc::PipelineConfig::load(ctx.config_path);
    if (!ctx.out_override.empty()) config.output_directory = ctx.out_override;
    if (ctx.workers > 0) gwc::set_max_workers(ctx.workers);
    fs::create_directories(config.output_directory);
    return config;
}

std::string out_path(const gwc::PipelineConfig& config, const std::string& name) {
    return (fs::path(config.output_directory) / name).string();
}

void write_json(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw gwc::DataError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

ordered_json read_json_stage(const gwc::PipelineConfig& config, const std::string& name,
                             const std::string& stage) {
    const std::string path = out_path(config, name);
    std::ifstream in(path);
    if (!in)
        throw gwc::DataError("missing " + name + "; run the \"" + stage +
                             "\" stage before report");
    ordered_json j;
    in >> j;
    return j;
}

int cmd_synth(const CliContext& ctx) {
    gwc::PipelineConfig config = load_config(ctx);
    const gwc::SynthSpec& spec = config.need_synth();
    auto [dataset, truth] = gwc::generate(spec);
    gwc::write_units_csv(out_path(config, "units.csv"), dataset);
    gwc::write_ground_truth_csv(out_path(config, "ground_truth.csv"), dataset, truth);
    std::cout << "synth: wrote " << dataset.n() << " units, " << dataset.p()
              << " variables, " << dataset.n_classes() << " classes\n";
    return 0;
}

// The applied standardization and any units dropped during aggregation,
// written by every data-consuming subcommand.
void write_data_summary(const gwc::PipelineConfig& config, const gwc::LoadedData& loaded) {
    ordered_json j;
    j["n_units"] = loaded.dataset.n();
    j["n_variables"] = loaded.dataset.p();
    j["n_classes"] = loaded.dataset.n_classes();
    j["dropped_units"] = loaded.dropped_units;
    if (loaded.standardization) {
        ordered_json rows = ordered_json::array();
        for (int v = 0; v < loaded.dataset.p(); ++v) {
            ordered_json row;
            row["variable"] = loaded.dataset.variable_names()[v];
            row["mean"] = loaded.standardization->means[v];
            row["sd"] = loaded.standardization->sds[v];
            rows.push_back(row);
        }
        j["standardization"] = rows;
    }
    write_json(out_path(config, "data_summary.json"), j);
}

int cmd_select_vars(const CliContext& ctx) {
    gwc::PipelineConfig config = load_config(ctx);
    gwc::LoadedData loaded = gwc::load_pipeline_dataset(config.need_data());
    write_data_summary(config, loaded);
    gwc::SelectionTrace trace = gwc::select_variables(
        loaded.dataset, config.need_data().exclusions, config.varsel.threshold);
    write_json(out_path(config, "selection_trace.json"),
               gwc::selection_trace_to_json(trace));
    std::cout << "select-vars: retained " << trace.retained.size() << " of "
              << trace.input_variables.size() << " variables\n";
    return 0;
}

void write_error_surface_csv(const std::string& path, const gwc::SpatialDataset& dataset,
                             const std::vector<int>& predictions) {
    std::ofstream out(path);
    if (!out) throw gwc::DataError("cannot open for writing: " + path);
    out << "unit_id,x,y,true_label,predicted_label,error\n";
    for (int i = 0; i < dataset.n(); ++i) {
        const int err = predictions[i] == dataset.label(i) ? 0 : 1;
        out << gwc::csv_escape(dataset.unit_id(i)) << ','
            << gwc::format_double(dataset.x(i)) << ',' << gwc::format_double(dataset.y(i))
            << ',' << gwc::csv_escape(dataset.class_names()[dataset.label(i)]) << ','
            << gwc::csv_escape(dataset.class_names()[predictions[i]]) << ',' << err << '\n';
    }
}

int cmd_fit_global(const CliContext& ctx) {
    gwc::PipelineConfig config = load_config(ctx);
    gwc::LoadedData loaded = gwc::load_pipeline_dataset(config.need_data());
    write_data_summary(config, loaded);
    const gwc::SpatialDataset& dataset = loaded.dataset;
    if (!dataset.has_labels())
        throw gwc::DataError("fit-global requires labeled units");
    const gwc::EvaluationConfig& eval_cfg = config.need_evaluation();
    const gwc::GlobalForestConfig& forest_cfg = config.need_forest();

    gwc::FoldAssignment folds =
        gwc::spatial_kfold(dataset, eval_cfg.folds, eval_cfg.method, eval_cfg.seed);

    gwc::GlobalEvalOptions lr_options;
    lr_options.l2_lambda = eval_cfg.l2_lambda;
    gwc::GlobalEvaluation lr =
        gwc::evaluate_global(dataset, gwc::GlobalModelKind::multinomial_lr, folds, lr_options);

    gwc::GlobalEvalOptions rf_options;
    rf_options.forest = forest_cfg.params;
    rf_options.seed = forest_cfg.params.seed;
    gwc::GlobalEvaluation rf =
        gwc::evaluate_global(dataset, gwc::GlobalModelKind::forest, folds, rf_options);

    ordered_json j;
    j["folds"] = eval_cfg.folds;
    j["fold_method"] = eval_cfg.method == gwc::FoldMethod::coordinate_clusters
                           ? "coordinate_clusters"
                           : "grid_blocks";
    j["multinomial_lr"] = gwc::score_report_to_json(lr.pooled, dataset.class_names());
    j["forest"] = gwc::score_report_to_json(rf.pooled, dataset.class_names());
    write_json(out_path(config, "global_scores.json"), j);

    write_error_surface_csv(out_path(config, "error_surface_multinomial_lr.csv"), dataset,
                            lr.predictions);
    write_error_surface_csv(out_path(config, "error_surface_forest.csv"), dataset,
                            rf.predictions);

    // Full-data model artifacts: the multinomial coefficients and a forest
    // summary (parameters plus per-class training F1, not the trees).
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(dataset.n());
    gwc::LogisticModel lr_model = gwc::fit_multinomial_logistic(
        dataset.features(), dataset.labels(), ones, dataset.n_classes(),
        eval_cfg.l2_lambda);
    write_json(out_path(config, "global_model_multinomial_lr.json"),
               gwc::logistic_to_json(lr_model));

    gwc::ForestModel forest_model =
        gwc::fit_forest(dataset.features(), dataset.labels(), ones, dataset.n_classes(),
                        forest_cfg.params);
    Eigen::MatrixXd train_proba = gwc::predict_forest(forest_model, dataset.features());
    std::vector<int> train_pred(dataset.n());
    for (int i = 0; i < dataset.n(); ++i) {
        int best = 0;
        for (int k = 1; k < train_proba.cols(); ++k)
            if (train_proba(i, k) > train_proba(i, best)) best = k;
        train_pred[i] = best;
    }
    gwc::ScoreReport train_score = gwc::f1_macro(dataset.labels(), train_pred,
                                                 dataset.n_classes());
    ordered_json fj;
    fj["n_trees"] = forest_cfg.params.n_trees;
    fj["max_depth"] = forest_cfg.params.max_depth;
    fj["min_leaf_weight"] = forest_cfg.params.min_leaf_weight;
    fj["mtry"] = forest_cfg.params.mtry;
    fj["seed"] = forest_cfg.params.seed;
    fj["training_scores"] = gwc::score_report_to_json(train_score, dataset.class_names());
    write_json(out_path(config, "global_model_forest.json"), fj);

    std::cout << "fit-global: macro F1 multinomial_lr=" << lr.pooled.macro_f1
              << " forest=" << rf.pooled.macro_f1 << '\n';
    return 0;
}

int cmd_autocorr(const CliContext& ctx) {
    gwc::PipelineConfig config = load_config(ctx);
    const gwc::AutocorrConfig& ac = config.need_autocorr();

    const std::string surface_csv =
        out_path(config, "error_surface_" + ac.source + ".csv");
    if (!fs::exists(surface_csv))
        throw gwc::DataError("missing " + surface_csv + "; run fit-global first");

    gwc::CsvSchema schema;
    schema.id_column = "unit_id";
    schema.feature_columns = {"error"};
    gwc::SpatialDataset surface_data = gwc::load_units_csv(surface_csv, schema);

    std::vector<double> errors(surface_data.n());
    for (int i = 0; i < surface_data.n(); ++i)
        errors[i] = surface_data.features()(i, 0);

    const double d_max = ac.d_max > 0
                             ? ac.d_max
                             : gwc::max_nearest_neighbor_distance(surface_data);
    gwc::NeighborGraph band = gwc::build_distance_band(surface_data, d_max);

    gwc::GResult global = gwc::global_g(errors, band, ac.n_permutations, ac.seed);
    gwc::LocalGResult local =
        gwc::local_g_star(errors, band, ac.n_permutations,
                          gwc::derive_seed(ac.seed, 0x10ca1u), ac.significance,
                          ac.bonferroni);

    ordered_json j = gwc::global_g_to_json(global);
    j["d_max"] = d_max;
    j["source"] = ac.source;
    j["isolates"] = band.isolates.size();
    int hotspots = 0;
    for (const auto& u : local.units)
        if (u.hotspot) ++hotspots;
    j["local_hotspots"] = hotspots;
    j["significance"] = ac.significance;
    j["bonferroni"] = ac.bonferroni;
    write_json(out_path(config, "autocorr_global.json"), j);
    gwc::write_local_g_csv(out_path(config, "autocorr_local.csv"), local, surface_data);
    std::cout << "autocorr: global G p=" << global.p_value << ", " << hotspots
              << " hotspot units\n";
    return 0;
}

gwc::GwFitSpec make_spec(const gwc::GwConfig& gw_cfg, const gwc::KernelSpec& kernel,
                         gwc::GwLearner learner, int target_class) {
    gwc::GwFitSpec spec;
    spec.learner = learner;
    spec.kernel = kernel;
    spec.target_class = target_class;
    spec.min_positive = gw_cfg.min_positive;
    spec.fallback = gw_cfg.fallback;
    spec.l2_lambda = gw_cfg.l2_lambda;
    spec.forest.n_trees = gw_cfg.forest_trees;
    spec.forest.max_depth = gw_cfg.forest_depth;
    spec.seed = gwc::derive_seed(gw_cfg.seed, static_cast<std::uint64_t>(target_class));
    return spec;
}

int cmd_fit_gw(const CliContext& ctx) {
    gwc::PipelineConfig config = load_config(ctx);
    gwc::LoadedData loaded = gwc::load_pipeline_dataset(config.need_data());
    write_data_summary(config, loaded);
    const gwc::SpatialDataset& dataset = loaded.dataset;
    if (!dataset.has_labels()) throw gwc::DataError("fit-gw requires labeled units");
    const gwc::GwConfig& gw_cfg = config.need_gw();
    const gwc::KernelSpec& kernel = config.need_kernel();
    const gwc::EvaluationConfig& eval_cfg = config.need_evaluation();

    gwc::FoldAssignment folds =
        gwc::spatial_kfold(dataset, eval_cfg.folds, eval_cfg.method, eval_cfg.seed);

    std::vector<gwc::GwLearner> learners;
    if (gw_cfg.learner == "logistic" || gw_cfg.learner == "both")
        learners.push_back(gwc::GwLearner::logistic);
    if (gw_cfg.learner == "forest" || gw_cfg.learner == "both")
        learners.push_back(gwc::GwLearner::forest);

    std::vector<double> candidates = gw_cfg.bandwidth_candidates;
    if (gw_cfg.select_bandwidth && candidates.empty())
        candidates = gwc::default_bandwidth_candidates(dataset);

    ordered_json bandwidth_json = ordered_json::object();
    ordered_json scores_json = ordered_json::object();
    std::vector<gwc::CoefficientSurface> surfaces;

    for (gwc::GwLearner learner : learners) {
        // Per-class bandwidths: selected when asked, fixed otherwise.
        std::vector<double> class_bandwidth(dataset.n_classes(), kernel.bandwidth);
        if (gw_cfg.select_bandwidth) {
            ordered_json tables = ordered_json::array();
            for (int c = 0; c < dataset.n_classes(); ++c) {
                gwc::GwFitSpec base = make_spec(gw_cfg, kernel, learner, c);
                gwc::BandwidthSelection sel =
                    gwc::select_bandwidth(dataset, base, candidates, folds);
                class_bandwidth[c] = sel.best;
                ordered_json table;
                table["class_index"] = c;
                table["class"] = dataset.class_names()[c];
                table["best_bandwidth"] = sel.best;
                ordered_json rows = ordered_json::array();
                for (const gwc::BandwidthScore& s : sel.table) {
                    ordered_json row;
                    row["bandwidth"] = s.bandwidth;
                    row["f1_mean"] = s.f1_mean;
                    row["n_skipped"] = s.n_skipped;
                    row["all_skipped"] = s.all_skipped;
                    rows.push_back(row);
                }
                table["candidates"] = rows;
                tables.push_back(table);
            }
            bandwidth_json[gwc::to_string(learner)] = tables;
        }

        std::vector<gwc::GwFitSpec> specs;
        for (int c = 0; c < dataset.n_classes(); ++c) {
            gwc::GwFitSpec spec = make_spec(gw_cfg, kernel, learner, c);
            spec.kernel.bandwidth = class_bandwidth[c];
            specs.push_back(spec);
        }
        gwc::GwEvaluation eval = gwc::evaluate_gw(dataset, specs, folds);
        scores_json[gwc::to_string(learner)] =
            gwc::gw_evaluation_to_json(eval, dataset.class_names());

        // In-sample ensembles for the coefficient analysis (logistic only).
        if (learner == gwc::GwLearner::logistic) {
            for (int c = 0; c < dataset.n_classes(); ++c) {
                gwc::NeighborGraph graph;
                if (specs[c].kernel.mode == gwc::BandwidthMode::adaptive_k)
                    graph = gwc::build_knn(dataset, specs[c].kernel.adaptive_k());
                else
                    graph = gwc::build_distance_band(dataset, specs[c].kernel.bandwidth);
                if (config.dump_graph) {
                    gwc::NeighborGraph weighted =
                        gwc::kernel_weights(graph, specs[c].kernel, dataset);
                    gwc::write_graph_csv(
                        out_path(config, "gw_graph_c" + std::to_string(c) + ".csv"),
                        weighted, dataset);
                }
                gwc::GwModelSet models = gwc::fit_gw(dataset, specs[c], graph);
                gwc::write_gw_units_csv(
                    out_path(config, "gw_units_c" + std::to_string(c) + ".csv"), models,
                    dataset, dataset.variable_names());
                gwc::CoefficientSurface surface =
                    gwc::extract_coefficients(models, dataset.variable_names());
                write_json(out_path(config, "gw_coefficients_c" + std::to_string(c) + ".json"),
                           gwc::coefficient_surface_to_json(surface));
                surfaces.push_back(std::move(surface));
            }
        }
    }

    if (!surfaces.empty()) {
        std::vector<gwc::DispersionRow> rows = gwc::coefficient_dispersion_by_class(surfaces);
        write_json(out_path(config, "gw_dispersion.json"),
                   gwc::dispersion_to_json(rows, dataset.class_names()));
    }
    if (gw_cfg.select_bandwidth)
        write_json(out_path(config, "gw_bandwidths.json"), bandwidth_json);
    write_json(out_path(config, "gw_scores.json"), scores_json);
    std::cout << "fit-gw: wrote scores for " << learners.size() << " learner(s), "
              << dataset.n_classes() << " classes\n";
    return 0;
}

int cmd_report(const CliContext& ctx) {
    gwc::PipelineConfig config = load_config(ctx);
    ordered_json report;
    report["selection"] = read_json_stage(config, "selection_trace.json", "select-vars");
    report["global_models"] = read_json_stage(config, "global_scores.json", "fit-global");
    report["autocorrelation"] = read_json_stage(config, "autocorr_global.json", "autocorr");
    report["gw_models"] = read_json_stage(config, "gw_scores.json", "fit-gw");

    // Merge per-class coefficient summaries, re-checking the mean-|beta|
    // ordering.
    ordered_json coefficients = ordered_json::array();
    for (int c = 0;; ++c) {
        const std::string name = "gw_coefficients_c" + std::to_string(c) + ".json";
        if (!fs::exists(out_path(config, name))) {
            if (c == 0)
                throw gwc::DataError("missing " + name + "; run the \"fit-gw\" stage "
                                     "before report");
            break;
        }
        ordered_json j = read_json_stage(config, name, "fit-gw");
        double last = std::numeric_limits<double>::infinity();
        for (const auto& v : j["variables_by_mean_abs"]) {
            const double m = v["mean_abs_coefficient"].get<double>();
            if (m > last + 1e-12)
                throw gwc::DataError(name + ": coefficient summaries are not ordered "
                                     "by mean absolute value");
            last = m;
        }
        coefficients.push_back(j);
    }
    report["gw_coefficients"] = coefficients;
    report["gw_dispersion"] = read_json_stage(config, "gw_dispersion.json", "fit-gw");

    write_json(out_path(config, "report.json"), report);
    std::cout << "report: consolidated " << coefficients.size() << " class surfaces\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geographically weighted classification pipeline"};
    app.require_subcommand(1);

    CliContext ctx;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", ctx.config_path, "Pipeline config file (INI)")
            ->required();
        cmd->add_option("--workers", ctx.workers, "Worker thread count");
        cmd->add_option("--out", ctx.out_override, "Output directory override");
    };

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    CLI::App* select_vars =
        app.add_subcommand("select-vars", "Run the variable-selection workflow");
    CLI::App* fit_global =
        app.add_subcommand("fit-global", "Evaluate global models with spatial CV");
    CLI::App* autocorr =
        app.add_subcommand("autocorr", "Getis-Ord statistics on a model error surface");
    CLI::App* fit_gw =
        app.add_subcommand("fit-gw", "Fit and evaluate geographically weighted models");
    CLI::App* report = app.add_subcommand("report", "Consolidate stage outputs");
    for (CLI::App* cmd : {synth, select_vars, fit_global, autocorr, fit_gw, report})
        add_common(cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(ctx);
        if (select_vars->parsed()) return cmd_select_vars(ctx);
        if (fit_global->parsed()) return cmd_fit_global(ctx);
        if (autocorr->parsed()) return cmd_autocorr(ctx);
        if (fit_gw->parsed()) return cmd_fit_gw(ctx);
        if (report->parsed()) return cmd_report(ctx);
    } catch (const gwc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
