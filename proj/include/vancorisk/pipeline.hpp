#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vancorisk/io.hpp"
#include "vancorisk/svg.hpp"
#include "vancorisk/version.hpp"

// Configuration-driven orchestration: generate/ingest -> label -> split +
// preprocess -> select -> CV grid search + final train -> fixed-sensitivity
// evaluation -> interpretation -> posterior UQ -> report. Every stage runs
// standalone on serialized intermediates; chained stages reproduce the
// end-to-end run byte for byte.

namespace vancorisk::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

struct RunConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = "out";
    int threads = 1;

    bool generate_mode = true;
    synth::GeneratorSpec generator = synth::GeneratorSpec::defaults();
    std::string events_csv, admissions_csv;

    double test_fraction = 0.3;
    eval::SmoteSettings smote;
    feature_select::SelectionConfig selection;
    std::vector<models::Family> families = {
        models::Family::gbdt_ordered,  models::Family::gbdt_leafwise,
        models::Family::gbdt_levelwise, models::Family::logreg,
        models::Family::gaussian_nb,    models::Family::mlp};

    int n_boot = 2000;
    double target_sensitivity = 0.800;
    int cv_folds = 5;

    bool interpret_enabled = true;
    std::size_t shap_max_rows = 1000;
    int ale_bins = 32;
    std::vector<std::string> ale_features = {"phosphate", "apsiii", "magnesium",
                                             "total_bilirubin"};
    int ablation_n_boot = 20;

    bool uq_enabled = true;
    dream::SamplerConfig sampler;
};

inline json config_to_json(const RunConfig& cfg) {
    json j;
    j["schema_version"] = 1;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["threads"] = cfg.threads;
    if (cfg.generate_mode) {
        j["input"] = {{"mode", "generate"},
                      {"generator", io::generator_spec_to_json(cfg.generator)}};
    } else {
        j["input"] = {{"mode", "ingest"},
                      {"events_csv", cfg.events_csv},
                      {"admissions_csv", cfg.admissions_csv}};
    }
    j["split"] = {{"test_fraction", cfg.test_fraction}};
    j["smote"] = {{"enabled", cfg.smote.enabled},
                  {"k", cfg.smote.k},
                  {"target_ratio", cfg.smote.target_ratio}};
    j["feature_selection"] = {
        {"stage1_top_k", cfg.selection.stage1_top_k},
        {"stage2_top_k", cfg.selection.stage2_top_k},
        {"p_threshold", is_missing(cfg.selection.p_threshold)
                            ? json(nullptr)
                            : json(cfg.selection.p_threshold)},
        {"forest", {{"n_trees", cfg.selection.forest.n_trees},
                    {"max_depth", cfg.selection.forest.max_depth},
                    {"n_bins", cfg.selection.forest.n_bins}}}};
    json fams = json::array();
    for (auto f : cfg.families) fams.push_back(models::to_string(f));
    j["models"] = {{"families", fams}};
    j["evaluation"] = {{"n_boot", cfg.n_boot},
                       {"target_sensitivity", cfg.target_sensitivity},
                       {"cv_folds", cfg.cv_folds}};
    j["interpret"] = {{"enabled", cfg.interpret_enabled},
                      {"shap_max_rows", cfg.shap_max_rows},
                      {"ale_bins", cfg.ale_bins},
                      {"ale_features", cfg.ale_features},
                      {"ablation_n_boot", cfg.ablation_n_boot}};
    j["uq"] = {{"enabled", cfg.uq_enabled},
               {"n_chains", cfg.sampler.n_chains},
               {"n_iterations", cfg.sampler.n_iterations},
               {"burn_in_fraction", cfg.sampler.burn_in_fraction},
               {"crossover_probability", cfg.sampler.crossover_probability},
               {"jump_scale", cfg.sampler.jump_scale},
               {"gamma_one_every", cfg.sampler.gamma_one_every}};
    return j;
}

inline RunConfig parse_config(const json& j) {
    RunConfig cfg;
    require(j.contains("seed"), "invalid-config",
            "config must set an explicit seed (no wall-clock defaults)");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.seed_set = true;
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.threads = j.value("threads", cfg.threads);
    require(cfg.threads >= 1, "invalid-config", "threads must be >= 1");

    if (j.contains("input")) {
        const auto& ji = j.at("input");
        const auto mode = ji.value("mode", std::string("generate"));
        if (mode == "generate") {
            cfg.generate_mode = true;
            if (ji.contains("generator"))
                cfg.generator = io::generator_spec_from_json(ji.at("generator"));
        } else if (mode == "ingest") {
            cfg.generate_mode = false;
            cfg.events_csv = ji.at("events_csv").get<std::string>();
            cfg.admissions_csv = ji.at("admissions_csv").get<std::string>();
            require(fs::exists(cfg.events_csv), "invalid-config",
                    "events_csv does not exist: " + cfg.events_csv);
            require(fs::exists(cfg.admissions_csv), "invalid-config",
                    "admissions_csv does not exist: " + cfg.admissions_csv);
        } else {
            fail("invalid-config", "input.mode must be 'generate' or 'ingest'");
        }
    }
    if (cfg.generate_mode && !j.contains("input"))
        cfg.generator = synth::GeneratorSpec::defaults();
    if (cfg.generate_mode) cfg.generator.seed = cfg.seed;

    if (j.contains("split"))
        cfg.test_fraction = j.at("split").value("test_fraction", cfg.test_fraction);
    if (j.contains("smote")) {
        const auto& js = j.at("smote");
        cfg.smote.enabled = js.value("enabled", cfg.smote.enabled);
        cfg.smote.k = js.value("k", cfg.smote.k);
        cfg.smote.target_ratio = js.value("target_ratio", cfg.smote.target_ratio);
    }
    if (j.contains("feature_selection")) {
        const auto& js = j.at("feature_selection");
        cfg.selection.stage1_top_k =
            js.value("stage1_top_k", cfg.selection.stage1_top_k);
        cfg.selection.stage2_top_k =
            js.value("stage2_top_k", cfg.selection.stage2_top_k);
        if (js.contains("p_threshold") && !js.at("p_threshold").is_null())
            cfg.selection.p_threshold = js.at("p_threshold").get<double>();
        if (js.contains("forest")) {
            const auto& jf = js.at("forest");
            cfg.selection.forest.n_trees =
                jf.value("n_trees", cfg.selection.forest.n_trees);
            cfg.selection.forest.max_depth =
                jf.value("max_depth", cfg.selection.forest.max_depth);
            cfg.selection.forest.n_bins =
                jf.value("n_bins", cfg.selection.forest.n_bins);
        }
    }
    if (j.contains("models") && j.at("models").contains("families")) {
        cfg.families.clear();
        for (const auto& f : j.at("models").at("families"))
            cfg.families.push_back(models::family_from_string(f.get<std::string>()));
        require(!cfg.families.empty(), "invalid-config", "models.families is empty");
    }
    if (j.contains("evaluation")) {
        const auto& je = j.at("evaluation");
        cfg.n_boot = je.value("n_boot", cfg.n_boot);
        cfg.target_sensitivity =
            je.value("target_sensitivity", cfg.target_sensitivity);
        cfg.cv_folds = je.value("cv_folds", cfg.cv_folds);
    }
    if (j.contains("interpret")) {
        const auto& ji = j.at("interpret");
        cfg.interpret_enabled = ji.value("enabled", cfg.interpret_enabled);
        cfg.shap_max_rows = ji.value("shap_max_rows", cfg.shap_max_rows);
        cfg.ale_bins = ji.value("ale_bins", cfg.ale_bins);
        if (ji.contains("ale_features"))
            cfg.ale_features = ji.at("ale_features").get<std::vector<std::string>>();
        cfg.ablation_n_boot = ji.value("ablation_n_boot", cfg.ablation_n_boot);
    }
    if (j.contains("uq")) {
        const auto& ju = j.at("uq");
        cfg.uq_enabled = ju.value("enabled", cfg.uq_enabled);
        cfg.sampler.n_chains = ju.value("n_chains", cfg.sampler.n_chains);
        cfg.sampler.n_iterations = ju.value("n_iterations", cfg.sampler.n_iterations);
        cfg.sampler.burn_in_fraction =
            ju.value("burn_in_fraction", cfg.sampler.burn_in_fraction);
        cfg.sampler.crossover_probability =
            ju.value("crossover_probability", cfg.sampler.crossover_probability);
        cfg.sampler.jump_scale = ju.value("jump_scale", cfg.sampler.jump_scale);
        cfg.sampler.gamma_one_every =
            ju.value("gamma_one_every", cfg.sampler.gamma_one_every);
    }
    cfg.sampler.seed = cfg.seed;
    return cfg;
}

inline std::uint64_t config_hash(const RunConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Default hyperparameter grids per family.
// ---------------------------------------------------------------------------

inline std::vector<models::ModelSpec> default_grid(models::Family family,
                                                   std::uint64_t seed) {
    using models::Family;
    std::vector<models::ModelSpec> grid;
    auto base = [&] {
        models::ModelSpec spec;
        spec.family = family;
        spec.gbdt.seed = seed;
        spec.mlp.seed = seed;
        return spec;
    };
    switch (family) {
        case Family::gbdt_ordered:
        case Family::gbdt_levelwise:
            for (int depth : {4, 6}) {
                auto spec = base();
                spec.gbdt.n_rounds = 200;
                spec.gbdt.learning_rate = 0.1;
                spec.gbdt.max_depth = depth;
                grid.push_back(spec);
            }
            break;
        case Family::gbdt_leafwise:
            for (int leaves : {15, 31}) {
                auto spec = base();
                spec.gbdt.n_rounds = 200;
                spec.gbdt.learning_rate = 0.1;
                spec.gbdt.max_leaves = leaves;
                grid.push_back(spec);
            }
            break;
        case Family::logreg:
            for (double lambda : {1e-4, 1e-3, 1e-2}) {
                auto spec = base();
                spec.logreg.penalty = models::Penalty::l2;
                spec.logreg.lambda = lambda;
                spec.logreg.max_iter = 300;
                grid.push_back(spec);
            }
            break;
        case Family::gaussian_nb:
            grid.push_back(base());
            break;
        case Family::mlp:
            for (int hidden : {16, 32}) {
                auto spec = base();
                spec.mlp.hidden_units = hidden;
                spec.mlp.dropout = 0.1;
                spec.mlp.epochs = 30;
                spec.mlp.batch_size = 64;
                grid.push_back(spec);
            }
            break;
    }
    return grid;
}

inline json model_spec_to_json(const models::ModelSpec& spec) {
    json j;
    j["family"] = models::to_string(spec.family);
    if (models::is_gbdt(spec.family)) {
        j["n_rounds"] = spec.gbdt.n_rounds;
        j["learning_rate"] = spec.gbdt.learning_rate;
        j["max_depth"] = spec.gbdt.max_depth;
        j["max_leaves"] = spec.gbdt.max_leaves;
        j["l2_reg"] = spec.gbdt.l2_reg;
        j["n_bins"] = spec.gbdt.n_bins;
    } else if (spec.family == models::Family::logreg) {
        j["penalty"] = spec.logreg.penalty == models::Penalty::l1 ? "l1" : "l2";
        j["lambda"] = spec.logreg.lambda;
        j["max_iter"] = spec.logreg.max_iter;
    } else if (spec.family == models::Family::mlp) {
        j["hidden_units"] = spec.mlp.hidden_units;
        j["dropout"] = spec.mlp.dropout;
        j["learning_rate"] = spec.mlp.learning_rate;
        j["batch_size"] = spec.mlp.batch_size;
        j["epochs"] = spec.mlp.epochs;
    } else {
        j["var_floor"] = spec.gnb_var_floor;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

struct StageRecord {
    std::string name;
    double wall_ms = 0.0;
    std::vector<std::string> reads;
    std::vector<std::string> writes;
};

inline fs::path art(const RunConfig& cfg, const std::string& name) {
    return fs::path(cfg.out_dir) / name;
}

inline StageRecord stage_generate(const RunConfig& cfg) {
    require(cfg.generate_mode, "invalid-config",
            "generate stage requires input.mode = generate");
    const auto cohort = synth::generate_cohort(cfg.generator);
    io::write_timelines(art(cfg, "events.csv"), art(cfg, "admissions.csv"), cohort);
    io::write_json(art(cfg, "generator_spec.json"),
                   io::generator_spec_to_json(cfg.generator));
    return {"generate", 0.0, {},
            {"events.csv", "admissions.csv", "generator_spec.json"}};
}

inline StageRecord stage_label(const RunConfig& cfg) {
    const fs::path events =
        cfg.generate_mode ? art(cfg, "events.csv") : fs::path(cfg.events_csv);
    const fs::path admissions =
        cfg.generate_mode ? art(cfg, "admissions.csv") : fs::path(cfg.admissions_csv);
    auto timelines = io::read_timelines(events, admissions);
    const auto labeled = cohort::build_labeled_cohort(std::move(timelines));

    io::write_file(art(cfg, "cohort.csv"), io::cohort_csv(labeled));
    io::write_json(art(cfg, "attrition.json"), io::attrition_to_json(labeled.attrition));
    const auto groups = synth::summarize_groups(labeled.data);
    io::write_file(art(cfg, "group_comparison.csv"), io::group_comparison_csv(groups));
    return {"label", 0.0, {"events.csv", "admissions.csv"},
            {"cohort.csv", "attrition.json", "group_comparison.csv"}};
}

inline StageRecord stage_preprocess(const RunConfig& cfg) {
    const auto cohort_file = io::read_cohort_csv(art(cfg, "cohort.csv"));
    auto [train_raw, test_raw] =
        preprocess::stratified_split(cohort_file.data, cfg.test_fraction, cfg.seed);

    const auto params = preprocess::fit_params(train_raw);
    const auto train_scaled = preprocess::transform(train_raw, params);
    const auto test_scaled = preprocess::transform(test_raw, params);

    io::write_file(art(cfg, "train_raw.csv"), io::dataset_csv(train_raw));
    io::write_file(art(cfg, "test_raw.csv"), io::dataset_csv(test_raw));
    io::write_file(art(cfg, "train.csv"), io::dataset_csv(train_scaled));
    io::write_file(art(cfg, "test.csv"), io::dataset_csv(test_scaled));
    io::write_json(art(cfg, "preprocess_params.json"),
                   io::preprocess_params_to_json(params));
    io::write_file(art(cfg, "split_comparison.csv"),
                   io::dataset_comparison_csv(
                       eval::compare_datasets(train_raw, test_raw), "train", "test"));
    return {"preprocess", 0.0, {"cohort.csv"},
            {"train_raw.csv", "test_raw.csv", "train.csv", "test.csv",
             "preprocess_params.json", "split_comparison.csv"}};
}

inline StageRecord stage_select(const RunConfig& cfg) {
    const auto train = io::read_dataset_csv(art(cfg, "train.csv"));
    const auto result = feature_select::two_stage_select(
        train, schema::admission_feature_ids(), cfg.selection, cfg.seed);
    io::write_file(art(cfg, "features.csv"), io::feature_scores_csv(result.scores));
    return {"select", 0.0, {"train.csv"}, {"features.csv"}};
}

namespace detail {

inline Dataset select_named_columns(const Dataset& data,
                                    const std::vector<std::string>& names) {
    std::vector<std::size_t> cols;
    for (const auto& name : names) {
        const int c = data.column_index(name);
        require(c >= 0, "schema-mismatch", "dataset lacks column '" + name + "'");
        cols.push_back(static_cast<std::size_t>(c));
    }
    return data.select_columns(cols);
}

}  // namespace detail

inline StageRecord stage_train(const RunConfig& cfg) {
    const auto train_raw = io::read_dataset_csv(art(cfg, "train_raw.csv"));
    const auto selected = io::read_selected_features(art(cfg, "features.csv"));
    const Dataset train_sel_raw = detail::select_named_columns(train_raw, selected);
    const auto params = io::preprocess_params_from_json(
        io::read_json(art(cfg, "preprocess_params.json")));
    const auto params_sel = preprocess::subset_params(params, selected);

    json cv_out;
    cv_out["schema_version"] = 1;
    json families = json::object();
    StageRecord record{"train", 0.0,
                       {"train_raw.csv", "features.csv", "preprocess_params.json"},
                       {"cv_results.json"}};

    for (const auto family : cfg.families) {
        const auto grid = default_grid(family, cfg.seed);
        eval::CvOptions opt;
        opt.n_folds = cfg.cv_folds;
        opt.seed = cfg.seed;
        opt.smote = cfg.smote;
        opt.target_sensitivity = cfg.target_sensitivity;

        double best_auc = -1.0;
        std::size_t best_idx = 0;
        json grid_results = json::array();
        std::vector<std::vector<double>> grid_fold_aucs;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto reports = eval::cross_validate(train_sel_raw, grid[g], opt);
            std::vector<double> fold_aucs;
            for (const auto& r : reports) fold_aucs.push_back(r.auroc);
            grid_fold_aucs.push_back(fold_aucs);
            const double mean_auc = eval::mean_cv_auroc(reports);
            grid_results.push_back({{"config", model_spec_to_json(grid[g])},
                                    {"fold_aurocs", fold_aucs},
                                    {"mean_auroc", mean_auc}});
            if (mean_auc > best_auc) {
                best_auc = mean_auc;
                best_idx = g;
            }
        }

        // final fit: transform the full training split, oversample, train
        Dataset train_final = preprocess::transform(train_sel_raw, params_sel);
        if (cfg.smote.enabled)
            train_final = preprocess::smote(train_final, cfg.smote.k,
                                            cfg.smote.target_ratio, cfg.seed)
                              .data;
        const auto model = models::train_model(train_final, grid[best_idx]);
        const std::string model_file =
            std::string("model_") + models::to_string(family) + ".json";
        io::write_json(art(cfg, model_file), models::to_json(model));
        record.writes.push_back(model_file);

        families[models::to_string(family)] = {
            {"grid", grid_results},
            {"chosen", model_spec_to_json(grid[best_idx])},
            {"chosen_mean_cv_auroc", best_auc},
            {"chosen_fold_aurocs", grid_fold_aucs[best_idx]}};
    }
    cv_out["families"] = families;
    io::write_json(art(cfg, "cv_results.json"), cv_out);
    return record;
}

inline StageRecord stage_evaluate(const RunConfig& cfg) {
    const auto test_raw = io::read_dataset_csv(art(cfg, "test_raw.csv"));
    const auto selected = io::read_selected_features(art(cfg, "features.csv"));
    const auto params = io::preprocess_params_from_json(
        io::read_json(art(cfg, "preprocess_params.json")));
    const auto params_sel = preprocess::subset_params(params, selected);
    const Dataset test_sel =
        preprocess::transform(detail::select_named_columns(test_raw, selected),
                              params_sel);
    const auto cv_results = io::read_json(art(cfg, "cv_results.json"));

    json out;
    out["schema_version"] = 1;
    out["seed"] = cfg.seed;
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    out["config_hash"] = hash_hex;
    out["target_sensitivity"] = cfg.target_sensitivity;
    json families = json::object();

    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> curves;
    std::string best_family;
    double best_auc = -1.0;
    StageRecord record{"evaluate", 0.0,
                       {"test_raw.csv", "features.csv", "preprocess_params.json",
                        "cv_results.json"},
                       {"metrics.json", "roc.csv", "roc.svg"}};

    for (const auto family : cfg.families) {
        const std::string name = models::to_string(family);
        const std::string model_file = "model_" + name + ".json";
        record.reads.push_back(model_file);
        const auto model = models::model_from_json(io::read_json(art(cfg, model_file)));
        const auto scores = models::predict_proba(model, test_sel);
        const auto report = eval::evaluate_at_sensitivity(
            scores, test_sel.labels, cfg.target_sensitivity, cfg.n_boot, cfg.seed);

        json jf = io::metrics_report_to_json(report);
        if (cv_results.at("families").contains(name))
            jf["cv"] = cv_results.at("families").at(name);
        families[name] = jf;
        curves.push_back({name, eval::roc_points(scores, test_sel.labels)});
        if (report.auroc > best_auc) {
            best_auc = report.auroc;
            best_family = name;
        }
    }
    out["families"] = families;
    out["best_family"] = best_family;
    io::write_json(art(cfg, "metrics.json"), out);
    io::write_file(art(cfg, "roc.csv"), io::roc_csv(curves));

    std::vector<svg::Series> series;
    for (const auto& [name, pts] : curves) series.push_back({name, pts});
    io::write_file(art(cfg, "roc.svg"),
                   svg::line_chart(series, "false positive rate",
                                   "true positive rate", "ROC (test set)", true));
    return record;
}

// best gbdt family on the test set (tree explanations need tree models)
inline std::string pick_gbdt_family(const json& metrics) {
    std::string best;
    double best_auc = -1.0;
    for (const auto& [name, jf] : metrics.at("families").items()) {
        if (name.rfind("gbdt_", 0) != 0) continue;
        const double auc = jf.at("auroc").get<double>();
        if (auc > best_auc) {
            best_auc = auc;
            best = name;
        }
    }
    require(!best.empty(), "no-gbdt-model",
            "explanations need at least one gbdt family in the run");
    return best;
}

inline StageRecord stage_explain(const RunConfig& cfg) {
    StageRecord record{"explain", 0.0,
                       {"train.csv", "test_raw.csv", "features.csv",
                        "preprocess_params.json", "metrics.json"},
                       {"shap.csv", "shap_summary.csv", "shap_beeswarm.svg",
                        "ale.csv", "ale.svg", "ablation.csv", "ablation.svg"}};
    const auto selected = io::read_selected_features(art(cfg, "features.csv"));
    const auto params = io::preprocess_params_from_json(
        io::read_json(art(cfg, "preprocess_params.json")));
    const auto params_sel = preprocess::subset_params(params, selected);

    const auto test_raw = io::read_dataset_csv(art(cfg, "test_raw.csv"));
    const Dataset test_sel =
        preprocess::transform(detail::select_named_columns(test_raw, selected),
                              params_sel);
    const auto train_scaled = io::read_dataset_csv(art(cfg, "train.csv"));
    const Dataset train_sel = detail::select_named_columns(train_scaled, selected);

    const auto metrics = io::read_json(art(cfg, "metrics.json"));
    const std::string family = pick_gbdt_family(metrics);
    record.reads.push_back("model_" + family + ".json");
    const auto model =
        models::model_from_json(io::read_json(art(cfg, "model_" + family + ".json")));

    const auto summary = interpret::shap_summary(model, test_sel, cfg.shap_max_rows);
    io::write_file(art(cfg, "shap.csv"), io::shap_matrix_csv(summary));
    io::write_file(art(cfg, "shap_summary.csv"), io::shap_summary_csv(summary));
    io::write_file(art(cfg, "shap_beeswarm.svg"),
                   svg::beeswarm(summary.feature_names, summary.ranking,
                                 summary.phi_matrix, summary.value_matrix, 10,
                                 "SHAP summary (" + family + ")"));

    std::vector<interpret::AleCurve> curves;
    std::vector<svg::Series> ale_series;
    for (const auto& feat : cfg.ale_features) {
        const int c = test_sel.column_index(feat);
        if (c < 0 || test_sel.feature_meta[c].kind != FeatureKind::continuous)
            continue;
        auto curve = interpret::ale_curve(model, test_sel,
                                          static_cast<std::size_t>(c), cfg.ale_bins);
        svg::Series s;
        s.label = feat;
        for (std::size_t i = 0; i < curve.edges.size(); ++i)
            s.points.push_back({curve.edges[i], curve.effects[i]});
        ale_series.push_back(std::move(s));
        curves.push_back(std::move(curve));
    }
    io::write_file(art(cfg, "ale.csv"), io::ale_csv(curves));
    io::write_file(art(cfg, "ale.svg"),
                   svg::line_chart(ale_series, "feature value (scaled)",
                                   "accumulated local effect",
                                   "ALE (" + family + ")"));

    const auto ablation = interpret::ablation(train_sel, test_sel,
                                              cfg.ablation_n_boot, cfg.seed);
    io::write_file(art(cfg, "ablation.csv"), io::ablation_csv(ablation));
    std::vector<std::pair<std::string, double>> bars;
    {
        auto rows = ablation.rows;
        std::sort(rows.begin(), rows.end(),
                  [](const interpret::AblationRow& a, const interpret::AblationRow& b) {
                      return a.delta_auc > b.delta_auc;
                  });
        for (const auto& r : rows) bars.push_back({r.feature, r.delta_auc});
    }
    io::write_file(art(cfg, "ablation.svg"),
                   svg::bar_chart(bars, "delta AUROC after removal",
                                  "Feature ablation (logistic baseline)"));
    return record;
}

inline StageRecord stage_uq(const RunConfig& cfg) {
    StageRecord record{"uq", 0.0,
                       {"train_raw.csv", "features.csv", "preprocess_params.json",
                        "metrics.json"},
                       {"posterior.json", "posterior_hist.csv", "posterior.svg"}};
    const auto selected = io::read_selected_features(art(cfg, "features.csv"));
    const auto params = io::preprocess_params_from_json(
        io::read_json(art(cfg, "preprocess_params.json")));
    const auto params_sel = preprocess::subset_params(params, selected);
    const auto train_raw = io::read_dataset_csv(art(cfg, "train_raw.csv"));
    const Dataset train_sel_raw = detail::select_named_columns(train_raw, selected);

    const auto metrics = io::read_json(art(cfg, "metrics.json"));
    const std::string family = pick_gbdt_family(metrics);
    record.reads.push_back("model_" + family + ".json");
    const auto model =
        models::model_from_json(io::read_json(art(cfg, "model_" + family + ".json")));

    // elevation-group prior from the raw training split, truncated at the
    // schema's physiologic bounds
    const auto groups = synth::summarize_groups(train_sel_raw);
    dream::GaussianPrior prior;
    for (std::size_t j = 0; j < train_sel_raw.n_cols(); ++j) {
        const auto& name = train_sel_raw.feature_meta[j].name;
        prior.feature_names.push_back(name);
        prior.mean.push_back(groups[j].mean_pos);
        prior.sd.push_back(std::max(groups[j].sd_pos, 1e-6));
        const int s = schema::feature_index(name);
        prior.lower.push_back(s >= 0 ? schema::features()[s].lower : kMissing);
        prior.upper.push_back(s >= 0 ? schema::features()[s].upper : kMissing);
    }

    const auto summary = dream::posterior_risk(model, &params_sel, prior, cfg.sampler);
    io::write_json(art(cfg, "posterior.json"),
                   io::posterior_to_json(summary, cfg.sampler, "elevation_group"));
    io::write_file(art(cfg, "posterior_hist.csv"), io::posterior_hist_csv(summary));
    io::write_file(art(cfg, "posterior.svg"),
                   svg::histogram(summary.hist_edges, summary.hist_counts,
                                  "predicted risk", "Posterior risk (" + family + ")",
                                  summary.mean_risk));
    return record;
}

inline StageRecord stage_report(const RunConfig& cfg) {
    StageRecord record{"report", 0.0,
                       {"metrics.json", "attrition.json"},
                       {"report.md"}};
    const auto metrics = io::read_json(art(cfg, "metrics.json"));
    const auto attrition =
        io::attrition_from_json(io::read_json(art(cfg, "attrition.json")));

    auto fmt3 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    auto cell = [&](const json& j, const char* key) -> std::string {
        const auto& v = j.at("confusion").at(key);
        return v.is_null() ? std::string("-") : fmt3(v.get<double>());
    };

    std::string md = "# Run report\n\n## Cohort attrition\n\n";
    md += "| stage | input | output |\n|---|---|---|\n";
    for (const auto& s : attrition.stages)
        md += "| " + s.name + " | " + std::to_string(s.input) + " | " +
              std::to_string(s.output) + " |\n";

    md += "\n## Test-set performance (sensitivity fixed at " +
          fmt3(metrics.at("target_sensitivity").get<double>()) + ")\n\n";
    md += "| Model | AUC (95% CI) | Accuracy | F1-score | Sensitivity | Specificity "
          "| PPV | NPV |\n|---|---|---|---|---|---|---|---|\n";
    for (const auto& [name, jf] : metrics.at("families").items()) {
        std::string auc = fmt3(jf.at("auroc").get<double>());
        if (!jf.at("auroc_ci_low").is_null())
            auc += " (" + fmt3(jf.at("auroc_ci_low").get<double>()) + "-" +
                   fmt3(jf.at("auroc_ci_high").get<double>()) + ")";
        md += "| " + name + " | " + auc + " | " + cell(jf, "accuracy") + " | " +
              cell(jf, "f1") + " | " + cell(jf, "sensitivity") + " | " +
              cell(jf, "specificity") + " | " + cell(jf, "ppv") + " | " +
              cell(jf, "npv") + " |\n";
    }
    md += "\nBest family by test AUROC: **" +
          metrics.at("best_family").get<std::string>() + "**\n";
    md += "\n## Plots\n\n";
    for (const auto* f : {"roc.svg", "shap_beeswarm.svg", "ale.svg", "ablation.svg",
                          "posterior.svg"})
        if (fs::exists(art(cfg, f))) md += std::string("![](") + f + ")\n";
    io::write_file(art(cfg, "report.md"), md);
    return record;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {
        "generate", "label", "preprocess", "select", "train",
        "evaluate", "explain",  "uq",       "report"};
    return names;
}

inline StageRecord run_stage(const RunConfig& cfg, const std::string& name) {
    worker_count() = cfg.threads;
    const auto t0 = std::chrono::steady_clock::now();
    StageRecord record;
    if (name == "generate") record = stage_generate(cfg);
    else if (name == "label") record = stage_label(cfg);
    else if (name == "preprocess") record = stage_preprocess(cfg);
    else if (name == "select") record = stage_select(cfg);
    else if (name == "train") record = stage_train(cfg);
    else if (name == "evaluate") record = stage_evaluate(cfg);
    else if (name == "explain") record = stage_explain(cfg);
    else if (name == "uq") record = stage_uq(cfg);
    else if (name == "report") record = stage_report(cfg);
    else fail("unknown-stage", "unknown stage: " + name);
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return record;
}

// Full pipeline; manifest.json records config hash, seed, versions and
// per-stage wall time plus each stage's declared reads/writes.
inline fs::path run_pipeline(const RunConfig& cfg) {
    json manifest;
    manifest["schema_version"] = 1;
    manifest["version"] = kVersion;
    manifest["seed"] = cfg.seed;
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    manifest["config_hash"] = hash_hex;
    manifest["config"] = config_to_json(cfg);

    json stages = json::array();
    for (const auto& name : stage_names()) {
        if (name == "generate" && !cfg.generate_mode) continue;
        if (name == "explain" && !cfg.interpret_enabled) continue;
        if (name == "uq" && !cfg.uq_enabled) continue;
        const auto record = run_stage(cfg, name);
        stages.push_back({{"name", record.name},
                          {"wall_ms", record.wall_ms},
                          {"reads", record.reads},
                          {"writes", record.writes}});
    }
    manifest["stages"] = stages;
    io::write_json(art(cfg, "manifest.json"), manifest);
    return fs::path(cfg.out_dir);
}

}  // namespace vancorisk::pipeline
