#include "gwc/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "gwc/csv.hpp"
#include "gwc/error.hpp"

namespace gwc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            const std::string t = trim(cur);
            if (!t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    const std::string t = trim(cur);
    if (!t.empty()) out.push_back(t);
    return out;
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
    double d;
    if (!parse_double(v, d))
        throw ConfigError("[" + section + "] " + key + ": \"" + v + "\" is not a number");
    return d;
}

long to_long(const std::string& section, const std::string& key, const std::string& v) {
    long l;
    if (!parse_long(v, l))
        throw ConfigError("[" + section + "] " + key + ": \"" + v + "\" is not an integer");
    return l;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": \"" + v + "\" is not a boolean");
}

std::uint64_t required_seed(const IniFile& ini, const std::string& section) {
    if (!ini.has(section, "seed"))
        throw ConfigError("[" + section + "] requires an explicit seed "
                          "(wall-clock defaults are not allowed)");
    return static_cast<std::uint64_t>(
        to_long(section, "seed", ini.get(section, "seed")));
}

void check_keys(const IniFile& ini, const std::string& section,
                const std::set<std::string>& allowed,
                bool allow_field_overrides = false) {
    auto it = ini.sections.find(section);
    if (it == ini.sections.end()) return;
    for (const auto& [key, value] : it->second) {
        (void)value;
        if (allowed.count(key)) continue;
        if (allow_field_overrides && key.rfind("field_", 0) == 0) continue;
        throw ConfigError("unknown key \"" + key + "\" in section [" + section + "]");
    }
}

CoefficientField parse_field(const std::string& section, const std::string& key,
                             const std::string& v) {
    const std::size_t colon = v.find(':');
    if (colon == std::string::npos)
        throw ConfigError("[" + section + "] " + key +
                          ": expected kind:amplitude, got \"" + v + "\"");
    CoefficientField field;
    field.kind = parse_field_kind(trim(v.substr(0, colon)));
    field.amplitude = to_double(section, key, trim(v.substr(colon + 1)));
    return field;
}

} // namespace

bool IniFile::has(const std::string& section) const {
    return sections.count(section) > 0;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    auto it = sections.find(section);
    return it != sections.end() && it->second.count(key) > 0;
}

const std::string& IniFile::get(const std::string& section, const std::string& key) const {
    return sections.at(section).at(key);
}

IniFile parse_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    IniFile ini;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t comment = line.find_first_of(";#");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(path + ":" + std::to_string(line_no) + ": empty section name");
            ini.sections[section]; // register even if empty
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        if (section.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": key outside of any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        if (ini.sections[section].count(key))
            throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key \"" +
                              key + "\"");
        ini.sections[section][key] = value;
    }
    return ini;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    IniFile ini = parse_ini(path);

    static const std::set<std::string> known_sections = {
        "data", "synth", "varsel", "kernel", "gw", "evaluation",
        "autocorr", "forest", "output"};
    for (const auto& [name, keys] : ini.sections) {
        (void)keys;
        if (!known_sections.count(name))
            throw ConfigError("unknown section [" + name + "]");
    }

    PipelineConfig config;

    check_keys(ini, "data",
               {"units_csv", "elements_csv", "id_column", "x_column", "y_column",
                "label_column", "feature_columns", "class_names", "standardize",
                "exclusions"});
    if (ini.has("data")) {
        DataConfig d;
        if (!ini.has("data", "units_csv"))
            throw ConfigError("[data] requires units_csv");
        d.units_csv = ini.get("data", "units_csv");
        if (ini.has("data", "elements_csv"))
            d.elements_csv = ini.get("data", "elements_csv");
        if (ini.has("data", "id_column")) d.schema.id_column = ini.get("data", "id_column");
        if (ini.has("data", "x_column")) d.schema.x_column = ini.get("data", "x_column");
        if (ini.has("data", "y_column")) d.schema.y_column = ini.get("data", "y_column");
        if (ini.has("data", "label_column"))
            d.schema.label_column = ini.get("data", "label_column");
        if (ini.has("data", "feature_columns"))
            d.schema.feature_columns = split_list(ini.get("data", "feature_columns"));
        if (ini.has("data", "class_names"))
            d.schema.class_names = split_list(ini.get("data", "class_names"));
        if (ini.has("data", "standardize"))
            d.standardize = to_bool("data", "standardize", ini.get("data", "standardize"));
        if (ini.has("data", "exclusions"))
            d.exclusions = split_list(ini.get("data", "exclusions"));
        config.data = std::move(d);
    }

    check_keys(ini, "synth",
               {"n_units", "extent", "n_classes", "n_variables", "noise_sd", "clones",
                "seed"},
               /*allow_field_overrides=*/true);
    if (ini.has("synth")) {
        SynthSpec s;
        if (ini.has("synth", "n_units"))
            s.n_units = static_cast<int>(to_long("synth", "n_units", ini.get("synth", "n_units")));
        if (ini.has("synth", "extent"))
            s.extent = to_double("synth", "extent", ini.get("synth", "extent"));
        if (ini.has("synth", "n_classes"))
            s.n_classes =
                static_cast<int>(to_long("synth", "n_classes", ini.get("synth", "n_classes")));
        if (ini.has("synth", "n_variables"))
            s.n_variables = static_cast<int>(
                to_long("synth", "n_variables", ini.get("synth", "n_variables")));
        if (ini.has("synth", "noise_sd"))
            s.noise_sd = to_double("synth", "noise_sd", ini.get("synth", "noise_sd"));
        if (ini.has("synth", "clones")) {
            for (const std::string& item : split_list(ini.get("synth", "clones"))) {
                const std::size_t colon = item.find(':');
                if (colon == std::string::npos)
                    throw ConfigError("[synth] clones: expected source:correlation, got \"" +
                                      item + "\"");
                ClonePlan plan;
                plan.source_variable = static_cast<int>(
                    to_long("synth", "clones", trim(item.substr(0, colon)))) - 1;
                plan.correlation = to_double("synth", "clones", trim(item.substr(colon + 1)));
                s.redundancy_plan.push_back(plan);
            }
        }
        s.seed = required_seed(ini, "synth");

        // field_default plus per class/variable overrides: field_c<k>_v<NN>.
        CoefficientField default_field{FieldKind::constant, 0.0};
        bool have_default = false;
        if (ini.has("synth", "field_default")) {
            default_field = parse_field("synth", "field_default",
                                        ini.get("synth", "field_default"));
            have_default = true;
        }
        bool have_overrides = false;
        for (const auto& [key, value] : ini.sections.at("synth")) {
            if (key.rfind("field_", 0) == 0 && key != "field_default") have_overrides = true;
            (void)value;
        }
        if (have_default || have_overrides) {
            s.coefficient_field.assign(
                s.n_classes, std::vector<CoefficientField>(s.n_variables, default_field));
            for (const auto& [key, value] : ini.sections.at("synth")) {
                if (key.rfind("field_", 0) != 0 || key == "field_default") continue;
                // key format: field_c<k>_v<NN>
                const std::size_t c_pos = key.find("_c");
                const std::size_t v_pos = key.find("_v", c_pos + 1);
                if (c_pos == std::string::npos || v_pos == std::string::npos)
                    throw ConfigError("[synth] malformed field override \"" + key +
                                      "\" (expected field_c<k>_v<NN>)");
                const int k = static_cast<int>(
                    to_long("synth", key, key.substr(c_pos + 2, v_pos - c_pos - 2)));
                const int j =
                    static_cast<int>(to_long("synth", key, key.substr(v_pos + 2))) - 1;
                if (k < 0 || k >= s.n_classes || j < 0 || j >= s.n_variables)
                    throw ConfigError("[synth] field override \"" + key +
                                      "\" is out of range");
                s.coefficient_field[k][j] = parse_field("synth", key, value);
            }
        }
        s.validate();
        config.synth = std::move(s);
    }

    check_keys(ini, "varsel", {"threshold"});
    if (ini.has("varsel", "threshold")) {
        config.varsel.threshold =
            to_double("varsel", "threshold", ini.get("varsel", "threshold"));
        if (!(config.varsel.threshold > 0 && config.varsel.threshold <= 1))
            throw ConfigError("[varsel] threshold must lie in (0,1]");
    }

    check_keys(ini, "kernel", {"shape", "mode", "bandwidth", "dump_graph"});
    if (ini.has("kernel", "dump_graph"))
        config.dump_graph =
            to_bool("kernel", "dump_graph", ini.get("kernel", "dump_graph"));
    if (ini.has("kernel")) {
        KernelSpec k;
        if (ini.has("kernel", "shape"))
            k.shape = parse_kernel_shape(ini.get("kernel", "shape"));
        if (ini.has("kernel", "mode")) {
            const std::string& mode = ini.get("kernel", "mode");
            if (mode == "adaptive")
                k.mode = BandwidthMode::adaptive_k;
            else if (mode == "fixed")
                k.mode = BandwidthMode::fixed_distance;
            else
                throw ConfigError("[kernel] mode must be adaptive or fixed");
        }
        if (!ini.has("kernel", "bandwidth"))
            throw ConfigError("[kernel] requires bandwidth");
        k.bandwidth = to_double("kernel", "bandwidth", ini.get("kernel", "bandwidth"));
        k.validate();
        config.kernel = k;
    }

    check_keys(ini, "gw",
               {"learner", "min_positive", "fallback", "l2_lambda",
                "bandwidth_candidates", "select_bandwidth", "forest_trees",
                "forest_depth", "seed"});
    if (ini.has("gw")) {
        GwConfig g;
        if (ini.has("gw", "learner")) {
            g.learner = ini.get("gw", "learner");
            if (g.learner != "logistic" && g.learner != "forest" && g.learner != "both")
                throw ConfigError("[gw] learner must be logistic, forest, or both");
        }
        if (ini.has("gw", "min_positive"))
            g.min_positive =
                static_cast<int>(to_long("gw", "min_positive", ini.get("gw", "min_positive")));
        if (ini.has("gw", "fallback")) {
            const std::string& fb = ini.get("gw", "fallback");
            if (fb == "prior_rate")
                g.fallback = GwFallback::prior_rate;
            else if (fb == "global_model")
                g.fallback = GwFallback::global_model;
            else
                throw ConfigError("[gw] fallback must be prior_rate or global_model");
        }
        if (ini.has("gw", "l2_lambda"))
            g.l2_lambda = to_double("gw", "l2_lambda", ini.get("gw", "l2_lambda"));
        if (ini.has("gw", "bandwidth_candidates"))
            for (const std::string& item : split_list(ini.get("gw", "bandwidth_candidates")))
                g.bandwidth_candidates.push_back(to_double("gw", "bandwidth_candidates", item));
        if (ini.has("gw", "select_bandwidth"))
            g.select_bandwidth =
                to_bool("gw", "select_bandwidth", ini.get("gw", "select_bandwidth"));
        if (ini.has("gw", "forest_trees"))
            g.forest_trees =
                static_cast<int>(to_long("gw", "forest_trees", ini.get("gw", "forest_trees")));
        if (ini.has("gw", "forest_depth"))
            g.forest_depth =
                static_cast<int>(to_long("gw", "forest_depth", ini.get("gw", "forest_depth")));
        g.seed = required_seed(ini, "gw");
        config.gw = std::move(g);
    }

    check_keys(ini, "evaluation", {"folds", "method", "l2_lambda", "seed"});
    if (ini.has("evaluation")) {
        EvaluationConfig e;
        if (ini.has("evaluation", "folds"))
            e.folds =
                static_cast<int>(to_long("evaluation", "folds", ini.get("evaluation", "folds")));
        if (ini.has("evaluation", "method"))
            e.method = parse_fold_method(ini.get("evaluation", "method"));
        if (ini.has("evaluation", "l2_lambda"))
            e.l2_lambda =
                to_double("evaluation", "l2_lambda", ini.get("evaluation", "l2_lambda"));
        e.seed = required_seed(ini, "evaluation");
        config.evaluation = std::move(e);
    }

    check_keys(ini, "autocorr",
               {"n_permutations", "significance", "d_max", "bonferroni", "source", "seed"});
    if (ini.has("autocorr")) {
        AutocorrConfig a;
        if (ini.has("autocorr", "n_permutations"))
            a.n_permutations = static_cast<int>(
                to_long("autocorr", "n_permutations", ini.get("autocorr", "n_permutations")));
        if (ini.has("autocorr", "significance"))
            a.significance =
                to_double("autocorr", "significance", ini.get("autocorr", "significance"));
        if (ini.has("autocorr", "d_max"))
            a.d_max = to_double("autocorr", "d_max", ini.get("autocorr", "d_max"));
        if (ini.has("autocorr", "bonferroni"))
            a.bonferroni = to_bool("autocorr", "bonferroni", ini.get("autocorr", "bonferroni"));
        if (ini.has("autocorr", "source")) {
            a.source = ini.get("autocorr", "source");
            if (a.source != "forest" && a.source != "multinomial_lr")
                throw ConfigError("[autocorr] source must be forest or multinomial_lr");
        }
        a.seed = required_seed(ini, "autocorr");
        config.autocorr = std::move(a);
    }

    check_keys(ini, "forest", {"n_trees", "max_depth", "min_leaf_weight", "mtry", "seed"});
    if (ini.has("forest")) {
        GlobalForestConfig f;
        if (ini.has("forest", "n_trees"))
            f.params.n_trees =
                static_cast<int>(to_long("forest", "n_trees", ini.get("forest", "n_trees")));
        if (ini.has("forest", "max_depth"))
            f.params.max_depth =
                static_cast<int>(to_long("forest", "max_depth", ini.get("forest", "max_depth")));
        if (ini.has("forest", "min_leaf_weight"))
            f.params.min_leaf_weight = to_double("forest", "min_leaf_weight",
                                                 ini.get("forest", "min_leaf_weight"));
        if (ini.has("forest", "mtry"))
            f.params.mtry =
                static_cast<int>(to_long("forest", "mtry", ini.get("forest", "mtry")));
        f.params.seed = required_seed(ini, "forest");
        config.forest = std::move(f);
    }

    check_keys(ini, "output", {"directory"});
    if (ini.has("output", "directory"))
        config.output_directory = ini.get("output", "directory");

    return config;
}

const DataConfig& PipelineConfig::need_data() const {
    if (!data) throw ConfigError("this command requires a [data] section");
    return *data;
}
const SynthSpec& PipelineConfig::need_synth() const {
    if (!synth) throw ConfigError("this command requires a [synth] section");
    return *synth;
}
const KernelSpec& PipelineConfig::need_kernel() const {
    if (!kernel) throw ConfigError("this command requires a [kernel] section");
    return *kernel;
}
const GwConfig& PipelineConfig::need_gw() const {
    if (!gw) throw ConfigError("this command requires a [gw] section");
    return *gw;
}
const EvaluationConfig& PipelineConfig::need_evaluation() const {
    if (!evaluation) throw ConfigError("this command requires an [evaluation] section");
    return *evaluation;
}
const AutocorrConfig& PipelineConfig::need_autocorr() const {
    if (!autocorr) throw ConfigError("this command requires an [autocorr] section");
    return *autocorr;
}
const GlobalForestConfig& PipelineConfig::need_forest() const {
    if (!forest) throw ConfigError("this command requires a [forest] section");
    return *forest;
}

LoadedData load_pipeline_dataset(const DataConfig& config) {
    // Paths are validated here, when a command first touches the data.
    if (!std::filesystem::exists(config.units_csv))
        throw ConfigError("[data] units_csv does not exist: " + config.units_csv);
    if (!config.elements_csv.empty() && !std::filesystem::exists(config.elements_csv))
        throw ConfigError("[data] elements_csv does not exist: " + config.elements_csv);
    LoadedData out;
    out.dataset = load_units_csv(config.units_csv, config.schema);
    if (!config.elements_csv.empty()) {
        ElementLabelTable elements = load_elements_csv(config.elements_csv);
        AggregateResult aggregated = aggregate_majority(elements, out.dataset);
        out.dataset = std::move(aggregated.dataset);
        out.dropped_units = std::move(aggregated.dropped_unit_ids);
    }
    if (config.standardize) {
        StandardizeResult z = standardize_features(out.dataset);
        out.dataset = std::move(z.dataset);
        out.standardization = std::move(z.applied);
    }
    return out;
}

} // namespace gwc
