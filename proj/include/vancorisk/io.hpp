#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vancorisk/cohort.hpp"
#include "vancorisk/dream.hpp"
#include "vancorisk/eval.hpp"
#include "vancorisk/feature_select.hpp"
#include "vancorisk/interpret/ablation.hpp"
#include "vancorisk/interpret/ale.hpp"
#include "vancorisk/interpret/shap.hpp"
#include "vancorisk/preprocess.hpp"
#include "vancorisk/schema.hpp"
#include "vancorisk/synth.hpp"
#include "vancorisk/types.hpp"

// CSV and JSON artifact formats. All floating-point values go through
// format_double (17 significant digits) in CSVs and nlohmann's exact
// round-trip encoding in JSON, so identical runs produce identical bytes.

namespace vancorisk::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "io-error", "cannot open for write: " + path.string());
    out << content;
    require(out.good(), "io-error", "write failed: " + path.string());
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "io-error", "cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_json(const fs::path& path, const json& j) {
    write_file(path, j.dump(2) + "\n");
}

inline json read_json(const fs::path& path) {
    return json::parse(read_file(path));
}

// ---------------------------------------------------------------------------
// CSV scaffolding (fields in our schemas never contain commas or quotes).
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }

    int require_column(const std::string& name, const std::string& file) const {
        const int c = column(name);
        require(c >= 0, "schema-mismatch",
                file + ": missing required column '" + name + "'");
        return c;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), "io-error", "cannot open: " + path.string());
    CsvTable table;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "schema-mismatch",
            path.string() + ": empty file");
    table.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        require(cells.size() == table.header.size(), "schema-mismatch",
                path.string() + ": row has " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
    }
    return table;
}

inline double parse_double(const std::string& s, const std::string& context) {
    if (s.empty() || s == "NA") return kMissing;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        require(used == s.size(), "schema-mismatch",
                context + ": bad numeric value '" + s + "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        fail("schema-mismatch", context + ": bad numeric value '" + s + "'");
    }
}

inline std::string csv_cell(double v) { return is_missing(v) ? "NA" : format_double(v); }

// ---------------------------------------------------------------------------
// Timelines: events.csv + admissions.csv.
// ---------------------------------------------------------------------------

inline std::string events_csv(const std::vector<PatientTimeline>& timelines) {
    std::string out = "patient_id,stay_index,timestamp_hours,kind,item_id,value\n";
    for (const auto& t : timelines)
        for (const auto& e : t.events) {
            out += t.patient_id;
            out += ',';
            out += std::to_string(t.stay_index);
            out += ',';
            out += format_double(e.timestamp);
            out += ',';
            out += to_string(e.kind);
            out += ',';
            out += e.item_id;
            out += ',';
            out += format_double(e.value);
            out += '\n';
        }
    return out;
}

inline std::string admissions_csv(const std::vector<PatientTimeline>& timelines) {
    std::string out = "patient_id,age,malignancy,ed_duration,charlson,apsiii\n";
    for (const auto& t : timelines) {
        out += t.patient_id;
        out += ',';
        out += format_double(t.age);
        out += ',';
        out += t.has_active_malignancy ? "1" : "0";
        out += ',';
        out += format_double(t.admission.ed_duration);
        out += ',';
        out += format_double(t.admission.charlson_index);
        out += ',';
        out += format_double(t.admission.apsiii);
        out += '\n';
    }
    return out;
}

inline void write_timelines(const fs::path& events_path, const fs::path& admissions_path,
                            const std::vector<PatientTimeline>& timelines) {
    write_file(events_path, events_csv(timelines));
    write_file(admissions_path, admissions_csv(timelines));
}

inline std::vector<PatientTimeline> read_timelines(const fs::path& events_path,
                                                   const fs::path& admissions_path) {
    const auto adm = read_csv(admissions_path);
    const int c_id = adm.require_column("patient_id", admissions_path.string());
    const int c_age = adm.require_column("age", admissions_path.string());
    const int c_mal = adm.require_column("malignancy", admissions_path.string());
    const int c_ed = adm.require_column("ed_duration", admissions_path.string());
    const int c_ch = adm.require_column("charlson", admissions_path.string());
    const int c_aps = adm.require_column("apsiii", admissions_path.string());

    std::vector<PatientTimeline> timelines;
    std::map<std::string, std::size_t> index;
    for (const auto& row : adm.rows) {
        PatientTimeline t;
        t.patient_id = row[c_id];
        t.age = parse_double(row[c_age], "admissions.age");
        t.admission.age = t.age;
        t.has_active_malignancy = row[c_mal] == "1";
        t.admission.ed_duration = parse_double(row[c_ed], "admissions.ed_duration");
        t.admission.charlson_index = parse_double(row[c_ch], "admissions.charlson");
        t.admission.apsiii = parse_double(row[c_aps], "admissions.apsiii");
        require(index.emplace(t.patient_id, timelines.size()).second, "schema-mismatch",
                "duplicate patient_id in admissions: " + t.patient_id);
        timelines.push_back(std::move(t));
    }

    const auto ev = read_csv(events_path);
    const int e_id = ev.require_column("patient_id", events_path.string());
    const int e_stay = ev.require_column("stay_index", events_path.string());
    const int e_ts = ev.require_column("timestamp_hours", events_path.string());
    const int e_kind = ev.require_column("kind", events_path.string());
    const int e_item = ev.require_column("item_id", events_path.string());
    const int e_val = ev.require_column("value", events_path.string());

    for (const auto& row : ev.rows) {
        const auto it = index.find(row[e_id]);
        require(it != index.end(), "schema-mismatch",
                "event references unknown patient_id: " + row[e_id]);
        auto& t = timelines[it->second];
        t.stay_index = static_cast<int>(parse_double(row[e_stay], "events.stay_index"));
        ClinicalEvent e;
        e.timestamp = parse_double(row[e_ts], "events.timestamp_hours");
        e.kind = event_kind_from_string(row[e_kind]);
        e.item_id = row[e_item];
        e.value = parse_double(row[e_val], "events.value");
        t.events.push_back(std::move(e));
    }

    for (auto& t : timelines) {
        std::stable_sort(t.events.begin(), t.events.end(),
                         [](const ClinicalEvent& a, const ClinicalEvent& b) {
                             return a.timestamp < b.timestamp;
                         });
        for (const auto& e : t.events)
            if (e.kind == EventKind::drug_dose && e.item_id == schema::kVancomycinId) {
                t.first_vanco_time = e.timestamp;
                break;
            }
    }
    return timelines;
}

// ---------------------------------------------------------------------------
// Labeled cohort CSV.
// ---------------------------------------------------------------------------

inline std::string cohort_csv(const cohort::LabeledCohort& cohort) {
    std::string out = "patient_id";
    for (const auto& m : cohort.data.feature_meta) out += "," + m.name;
    out += ",label,trigger,trigger_time,baseline_creatinine,peak_post_creatinine,"
           "data_quality\n";
    for (std::size_t r = 0; r < cohort.data.n_rows(); ++r) {
        out += cohort.data.row_ids[r];
        for (std::size_t j = 0; j < cohort.data.n_cols(); ++j)
            out += "," + csv_cell(cohort.data.at(r, j));
        const auto& l = cohort.labels[r];
        out += ",";
        out += l.positive ? "1" : "0";
        out += ",";
        out += to_string(l.trigger);
        out += "," + (l.trigger_time ? format_double(*l.trigger_time) : std::string("NA"));
        out += "," + format_double(l.baseline_creatinine);
        out += "," + (l.peak_post_creatinine ? format_double(*l.peak_post_creatinine)
                                             : std::string("NA"));
        out += ",";
        out += l.data_quality_flag == DataQuality::ok ? "ok" : "no_post_creatinine";
        out += "\n";
    }
    return out;
}

struct CohortFile {
    Dataset data;
    std::vector<std::string> trigger;
    std::vector<double> trigger_time;
    std::vector<double> baseline;
};

inline CohortFile read_cohort_csv(const fs::path& path) {
    const auto table = read_csv(path);
    const int c_id = table.require_column("patient_id", path.string());
    const int c_label = table.require_column("label", path.string());
    const int c_trigger = table.require_column("trigger", path.string());
    const int c_ttime = table.require_column("trigger_time", path.string());
    const int c_base = table.require_column("baseline_creatinine", path.string());

    CohortFile out;
    std::vector<int> feature_cols;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        const auto& name = table.header[i];
        const int s = schema::feature_index(name);
        if (s >= 0) {
            feature_cols.push_back(static_cast<int>(i));
            const auto& def = schema::features()[s];
            out.data.feature_meta.push_back({def.id, def.kind, def.unit});
        }
    }
    require(!feature_cols.empty(), "schema-mismatch",
            path.string() + ": no recognized feature columns");

    for (const auto& row : table.rows) {
        std::vector<double> values;
        values.reserve(feature_cols.size());
        for (int c : feature_cols)
            values.push_back(parse_double(row[c], "cohort." + table.header[c]));
        out.data.push_row(values, row[c_label] == "1" ? 1 : 0, row[c_id]);
        out.trigger.push_back(row[c_trigger]);
        out.trigger_time.push_back(parse_double(row[c_ttime], "cohort.trigger_time"));
        out.baseline.push_back(parse_double(row[c_base], "cohort.baseline_creatinine"));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generic feature/label dataset CSV (train/test intermediates).
// ---------------------------------------------------------------------------

inline std::string dataset_csv(const Dataset& data) {
    std::string out = "row_id";
    for (const auto& m : data.feature_meta) out += "," + m.name;
    out += ",label\n";
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        out += data.row_ids.size() == data.n_rows() ? data.row_ids[r] : std::string();
        for (std::size_t j = 0; j < data.n_cols(); ++j)
            out += "," + csv_cell(data.at(r, j));
        out += ",";
        out += data.labels[r] ? "1" : "0";
        out += "\n";
    }
    return out;
}

inline Dataset read_dataset_csv(const fs::path& path) {
    const auto table = read_csv(path);
    require(!table.header.empty() && table.header.front() == "row_id",
            "schema-mismatch", path.string() + ": first column must be row_id");
    require(table.header.back() == "label", "schema-mismatch",
            path.string() + ": last column must be label");
    Dataset data;
    for (std::size_t i = 1; i + 1 < table.header.size(); ++i) {
        const auto& name = table.header[i];
        const int s = schema::feature_index(name);
        if (s >= 0) {
            const auto& def = schema::features()[s];
            data.feature_meta.push_back({def.id, def.kind, def.unit});
        } else {
            data.feature_meta.push_back({name, FeatureKind::continuous, ""});
        }
    }
    for (const auto& row : table.rows) {
        std::vector<double> values;
        for (std::size_t i = 1; i + 1 < table.header.size(); ++i)
            values.push_back(parse_double(row[i], path.string() + "." + table.header[i]));
        data.push_row(values, row.back() == "1" ? 1 : 0, row.front());
    }
    return data;
}

// ---------------------------------------------------------------------------
// JSON artifacts.
// ---------------------------------------------------------------------------

inline json attrition_to_json(const AttritionReport& report) {
    json stages = json::array();
    for (const auto& s : report.stages)
        stages.push_back({{"name", s.name}, {"input", s.input}, {"output", s.output}});
    return {{"schema_version", 1},
            {"stages", stages},
            {"final_count", report.final_count()}};
}

inline AttritionReport attrition_from_json(const json& j) {
    AttritionReport report;
    for (const auto& js : j.at("stages"))
        report.stages.push_back({js.at("name").get<std::string>(),
                                 js.at("input").get<std::size_t>(),
                                 js.at("output").get<std::size_t>()});
    return report;
}

inline json generator_spec_to_json(const synth::GeneratorSpec& spec) {
    json feats = json::array();
    for (const auto& f : spec.features) {
        json jf;
        jf["id"] = f.id;
        jf["kind"] = f.kind == FeatureKind::binary ? "binary" : "continuous";
        if (!is_missing(f.lower)) jf["lower"] = f.lower;
        if (!is_missing(f.upper)) jf["upper"] = f.upper;
        jf["mean_neg"] = f.mean[0];
        jf["mean_pos"] = f.mean[1];
        jf["sd_neg"] = f.sd[0];
        jf["sd_pos"] = f.sd[1];
        feats.push_back(jf);
    }
    return {{"schema_version", 1},
            {"n_patients", spec.n_patients},
            {"prevalence", spec.prevalence},
            {"seed", spec.seed},
            {"features", feats}};
}

inline synth::GeneratorSpec generator_spec_from_json(const json& j) {
    synth::GeneratorSpec spec;
    spec.n_patients = j.at("n_patients").get<std::size_t>();
    spec.prevalence = j.at("prevalence").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("features")) {
        for (const auto& jf : j.at("features")) {
            synth::FeatureGenSpec f;
            f.id = jf.at("id").get<std::string>();
            f.kind = jf.at("kind").get<std::string>() == "binary"
                         ? FeatureKind::binary
                         : FeatureKind::continuous;
            f.lower = jf.contains("lower") ? jf.at("lower").get<double>() : kMissing;
            f.upper = jf.contains("upper") ? jf.at("upper").get<double>() : kMissing;
            f.mean[0] = jf.at("mean_neg").get<double>();
            f.mean[1] = jf.at("mean_pos").get<double>();
            f.sd[0] = jf.at("sd_neg").get<double>();
            f.sd[1] = jf.at("sd_pos").get<double>();
            spec.features.push_back(std::move(f));
        }
    } else {
        spec.features = synth::GeneratorSpec::defaults().features;
    }
    return spec;
}

inline json preprocess_params_to_json(const preprocess::PreprocessParams& p) {
    json cols = json::array();
    for (std::size_t j = 0; j < p.columns.size(); ++j) {
        const auto& c = p.columns[j];
        json jc;
        jc["name"] = p.feature_names[j];
        jc["kind"] = c.kind == FeatureKind::binary ? "binary" : "continuous";
        if (c.kind == FeatureKind::binary) {
            jc["mode"] = c.mode;
        } else {
            jc["median"] = c.median;
            jc["min"] = c.min;
            jc["max"] = c.max;
            jc["degenerate"] = c.degenerate;
        }
        cols.push_back(jc);
    }
    return {{"schema_version", 1}, {"columns", cols}, {"warnings", p.warnings}};
}

inline preprocess::PreprocessParams preprocess_params_from_json(const json& j) {
    preprocess::PreprocessParams p;
    for (const auto& jc : j.at("columns")) {
        preprocess::ColumnParams c;
        p.feature_names.push_back(jc.at("name").get<std::string>());
        if (jc.at("kind").get<std::string>() == "binary") {
            c.kind = FeatureKind::binary;
            c.mode = jc.at("mode").get<double>();
        } else {
            c.kind = FeatureKind::continuous;
            c.median = jc.at("median").get<double>();
            c.min = jc.at("min").get<double>();
            c.max = jc.at("max").get<double>();
            c.degenerate = jc.at("degenerate").get<bool>();
        }
        p.columns.push_back(c);
    }
    if (j.contains("warnings"))
        p.warnings = j.at("warnings").get<std::vector<std::string>>();
    p.fitted = true;
    return p;
}

inline std::string feature_scores_csv(const std::vector<feature_select::FeatureScore>& scores) {
    std::string out = "feature,f_statistic,p_value,gini_importance,rank,selected\n";
    for (const auto& s : scores) {
        out += s.name;
        out += "," + csv_cell(s.f_statistic);
        out += "," + csv_cell(s.p_value);
        out += "," + csv_cell(s.gini_importance);
        out += "," + std::to_string(s.rank);
        out += ",";
        out += s.selected ? "1" : "0";
        out += "\n";
    }
    return out;
}

inline std::vector<std::string> read_selected_features(const fs::path& path) {
    const auto table = read_csv(path);
    const int c_name = table.require_column("feature", path.string());
    const int c_sel = table.require_column("selected", path.string());
    std::vector<std::string> out;
    for (const auto& row : table.rows)
        if (row[c_sel] == "1") out.push_back(row[c_name]);
    return out;
}

inline json confusion_to_json(const eval::ConfusionMetrics& m) {
    json j;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["tn"] = m.tn;
    j["fn"] = m.fn;
    auto put = [&](const char* k, const std::optional<double>& v) {
        if (v)
            j[k] = *v;
        else
            j[k] = nullptr;
    };
    put("accuracy", m.accuracy);
    put("f1", m.f1);
    put("sensitivity", m.sensitivity);
    put("specificity", m.specificity);
    put("ppv", m.ppv);
    put("npv", m.npv);
    return j;
}

inline json metrics_report_to_json(const eval::MetricsReport& r) {
    json j;
    j["auroc"] = r.auroc;
    j["auroc_ci_low"] = r.auroc_ci_low ? json(*r.auroc_ci_low) : json(nullptr);
    j["auroc_ci_high"] = r.auroc_ci_high ? json(*r.auroc_ci_high) : json(nullptr);
    j["threshold"] = r.threshold;
    j["n_pos"] = r.n_pos;
    j["n_neg"] = r.n_neg;
    j["confusion"] = confusion_to_json(r.confusion);
    return j;
}

inline std::string roc_csv(
    const std::vector<std::pair<std::string,
                                std::vector<std::pair<double, double>>>>& curves) {
    std::string out = "family,fpr,tpr\n";
    for (const auto& [family, pts] : curves)
        for (const auto& [fpr, tpr] : pts)
            out += family + "," + format_double(fpr) + "," + format_double(tpr) + "\n";
    return out;
}

inline std::string group_comparison_csv(const std::vector<synth::GroupStatRow>& rows) {
    std::string out =
        "feature,mean_non_elevation,sd_non_elevation,mean_elevation,sd_elevation,t,p\n";
    for (const auto& r : rows)
        out += r.feature + "," + format_double(r.mean_neg) + "," +
               format_double(r.sd_neg) + "," + format_double(r.mean_pos) + "," +
               format_double(r.sd_pos) + "," + format_double(r.t) + "," +
               format_double(r.p) + "\n";
    return out;
}

inline std::string dataset_comparison_csv(const std::vector<eval::FeatureComparison>& rows,
                                          const std::string& label_a,
                                          const std::string& label_b) {
    std::string out = "feature,mean_" + label_a + ",sd_" + label_a + ",mean_" + label_b +
                      ",sd_" + label_b + ",t,p\n";
    for (const auto& r : rows)
        out += r.feature + "," + format_double(r.mean_a) + "," + format_double(r.sd_a) +
               "," + format_double(r.mean_b) + "," + format_double(r.sd_b) + "," +
               format_double(r.t) + "," + format_double(r.p) + "\n";
    return out;
}

inline std::string shap_matrix_csv(const interpret::ShapSummary& summary) {
    std::string out = "row";
    for (const auto& n : summary.feature_names) out += ",phi_" + n;
    for (const auto& n : summary.feature_names) out += ",value_" + n;
    out += "\n";
    for (std::size_t r = 0; r < summary.phi_matrix.size(); ++r) {
        out += std::to_string(r);
        for (double v : summary.phi_matrix[r]) out += "," + format_double(v);
        for (double v : summary.value_matrix[r]) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

inline std::string shap_summary_csv(const interpret::ShapSummary& summary) {
    std::string out = "rank,feature,mean_abs_phi\n";
    for (std::size_t r = 0; r < summary.ranking.size(); ++r) {
        const auto j = summary.ranking[r];
        out += std::to_string(r + 1) + "," + summary.feature_names[j] + "," +
               format_double(summary.mean_abs_phi[j]) + "\n";
    }
    return out;
}

inline std::string ale_csv(const std::vector<interpret::AleCurve>& curves) {
    std::string out = "feature,edge,effect,bin_count\n";
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.edges.size(); ++i) {
            const std::size_t count = i == 0 ? 0 : c.bin_counts[i - 1];
            out += c.feature + "," + format_double(c.edges[i]) + "," +
                   format_double(c.effects[i]) + "," + std::to_string(count) + "\n";
        }
    return out;
}

inline std::string ablation_csv(const interpret::AblationResult& result) {
    std::string out = "feature,delta_auc,boot_mean,boot_sd,full_auc\n";
    for (const auto& r : result.rows)
        out += r.feature + "," + format_double(r.delta_auc) + "," +
               format_double(r.boot_mean) + "," + format_double(r.boot_sd) + "," +
               format_double(result.full_auc) + "\n";
    return out;
}

inline json posterior_to_json(const dream::PosteriorSummary& s,
                              const dream::SamplerConfig& cfg,
                              const std::string& prior_kind) {
    json hist = json::array();
    for (std::size_t b = 0; b < s.hist_counts.size(); ++b)
        hist.push_back({{"lo", s.hist_edges[b]},
                        {"hi", s.hist_edges[b + 1]},
                        {"count", s.hist_counts[b]}});
    return {{"schema_version", 1},
            {"prior", prior_kind},
            {"mean_risk", s.mean_risk},
            {"cri_low", s.cri_low},
            {"cri_high", s.cri_high},
            {"risk_rhat", s.risk_rhat},
            {"ess", s.ess},
            {"acceptance_rate", s.acceptance_rate},
            {"n_retained", s.n_retained},
            {"histogram", hist},
            {"warnings", s.warnings},
            {"sampler", {{"n_chains", cfg.n_chains},
                         {"n_iterations", cfg.n_iterations},
                         {"burn_in_fraction", cfg.burn_in_fraction},
                         {"crossover_probability", cfg.crossover_probability},
                         {"jump_scale", cfg.jump_scale},
                         {"gamma_one_every", cfg.gamma_one_every},
                         {"seed", cfg.seed}}}};
}

inline std::string posterior_hist_csv(const dream::PosteriorSummary& s) {
    std::string out = "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < s.hist_counts.size(); ++b)
        out += format_double(s.hist_edges[b]) + "," + format_double(s.hist_edges[b + 1]) +
               "," + std::to_string(s.hist_counts[b]) + "\n";
    return out;
}

}  // namespace vancorisk::io
