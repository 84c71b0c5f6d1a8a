#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vancorisk/models/gbdt.hpp"
#include "vancorisk/models/linear.hpp"
#include "vancorisk/models/mlp.hpp"
#include "vancorisk/models/naive_bayes.hpp"
#include "vancorisk/types.hpp"

// One train/predict contract over the six model families, plus a versioned
// JSON artifact that reloads to bit-identical predictions.

namespace vancorisk::models {

enum class Family { gbdt_ordered, gbdt_leafwise, gbdt_levelwise, logreg, gaussian_nb, mlp };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::gbdt_ordered: return "gbdt_ordered";
        case Family::gbdt_leafwise: return "gbdt_leafwise";
        case Family::gbdt_levelwise: return "gbdt_levelwise";
        case Family::logreg: return "logreg";
        case Family::gaussian_nb: return "gaussian_nb";
        case Family::mlp: return "mlp";
    }
    return "?";
}

inline Family family_from_string(const std::string& s) {
    if (s == "gbdt_ordered") return Family::gbdt_ordered;
    if (s == "gbdt_leafwise") return Family::gbdt_leafwise;
    if (s == "gbdt_levelwise") return Family::gbdt_levelwise;
    if (s == "logreg") return Family::logreg;
    if (s == "gaussian_nb") return Family::gaussian_nb;
    if (s == "mlp") return Family::mlp;
    fail("bad-family", "unknown model family: " + s);
}

inline bool is_gbdt(Family f) {
    return f == Family::gbdt_ordered || f == Family::gbdt_leafwise ||
           f == Family::gbdt_levelwise;
}

// Hyperparameters for any family; the family tag picks which block applies.
struct ModelSpec {
    Family family = Family::gbdt_ordered;
    GbdtConfig gbdt;
    LogRegConfig logreg;
    MlpConfig mlp;
    double gnb_var_floor = 1e-9;
};

struct TrainedModel {
    Family family = Family::gbdt_ordered;
    std::size_t n_features = 0;
    std::variant<GbdtModel, LogRegModel, GnbModel, MlpModel> impl;

    double predict_raw(std::span<const double> row) const {
        require(row.size() == n_features, "width-mismatch",
                "row width " + std::to_string(row.size()) +
                    " does not match training width " + std::to_string(n_features));
        return std::visit([&](const auto& m) { return m.predict_raw(row); }, impl);
    }

    double predict_proba_one(std::span<const double> row) const {
        return sigmoid(predict_raw(row));
    }

    const std::vector<double>* loss_trace() const {
        if (const auto* g = std::get_if<GbdtModel>(&impl)) return &g->loss_trace;
        if (const auto* l = std::get_if<LogRegModel>(&impl)) return &l->loss_trace;
        if (const auto* m = std::get_if<MlpModel>(&impl)) return &m->loss_trace;
        return nullptr;
    }
};

inline TrainedModel train_model(const Dataset& train, const ModelSpec& spec) {
    TrainedModel model;
    model.family = spec.family;
    model.n_features = train.n_cols();
    switch (spec.family) {
        case Family::gbdt_ordered:
        case Family::gbdt_leafwise:
        case Family::gbdt_levelwise: {
            GbdtConfig cfg = spec.gbdt;
            cfg.variant = spec.family == Family::gbdt_ordered   ? GbdtVariant::ordered
                          : spec.family == Family::gbdt_leafwise ? GbdtVariant::leafwise
                                                                 : GbdtVariant::levelwise;
            model.impl = train_gbdt(train, cfg);
            break;
        }
        case Family::logreg:
            model.impl = train_logreg(train, spec.logreg);
            break;
        case Family::gaussian_nb:
            model.impl = train_gnb(train, spec.gnb_var_floor);
            break;
        case Family::mlp:
            model.impl = train_mlp(train, spec.mlp);
            break;
    }
    return model;
}

inline std::vector<double> predict_proba(const TrainedModel& model, const Dataset& rows) {
    std::vector<double> out(rows.n_rows());
    parallel_for(rows.n_rows(), [&](std::size_t i) {
        out[i] = model.predict_proba_one(rows.row(i));
    });
    return out;
}

// ---------------------------------------------------------------------------
// JSON model artifact (schema_version 1).
// ---------------------------------------------------------------------------

namespace model_json {

using nlohmann::json;

inline json tree_to_json(const Tree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value},
                         {"cover", n.cover}});
    return nodes;
}

inline Tree tree_from_json(const json& j) {
    Tree tree;
    for (const auto& jn : j) {
        TreeNode n;
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.value = jn.at("value").get<double>();
        n.cover = jn.at("cover").get<double>();
        tree.nodes.push_back(n);
    }
    return tree;
}

}  // namespace model_json

inline nlohmann::json to_json(const TrainedModel& model) {
    using nlohmann::json;
    json j;
    j["schema_version"] = 1;
    j["family"] = to_string(model.family);
    j["n_features"] = model.n_features;
    if (const auto* g = std::get_if<GbdtModel>(&model.impl)) {
        j["base_score"] = g->base_score;
        j["loss_trace"] = g->loss_trace;
        j["config"] = {{"variant", to_string(g->config.variant)},
                       {"n_rounds", g->config.n_rounds},
                       {"learning_rate", g->config.learning_rate},
                       {"max_depth", g->config.max_depth},
                       {"max_leaves", g->config.max_leaves},
                       {"l2_reg", g->config.l2_reg},
                       {"n_bins", g->config.n_bins},
                       {"min_child_rows", g->config.min_child_rows},
                       {"seed", g->config.seed}};
        json trees = json::array();
        for (const auto& t : g->trees) trees.push_back(model_json::tree_to_json(t));
        j["trees"] = trees;
    } else if (const auto* l = std::get_if<LogRegModel>(&model.impl)) {
        j["weights"] = l->weights;
        j["bias"] = l->bias;
        j["converged"] = l->converged;
        j["final_grad_norm"] = l->final_grad_norm;
        j["config"] = {{"penalty", l->config.penalty == Penalty::l1 ? "l1" : "l2"},
                       {"lambda", l->config.lambda},
                       {"max_iter", l->config.max_iter},
                       {"tol", l->config.tol}};
    } else if (const auto* nb = std::get_if<GnbModel>(&model.impl)) {
        j["log_prior"] = {nb->log_prior[0], nb->log_prior[1]};
        j["mean_neg"] = nb->mean[0];
        j["mean_pos"] = nb->mean[1];
        j["var_neg"] = nb->var[0];
        j["var_pos"] = nb->var[1];
        j["var_floor"] = nb->var_floor;
    } else if (const auto* m = std::get_if<MlpModel>(&model.impl)) {
        j["w1"] = m->w1;
        j["b1"] = m->b1;
        j["w2"] = m->w2;
        j["b2"] = m->b2;
        j["loss_trace"] = m->loss_trace;
        j["config"] = {{"hidden_units", m->config.hidden_units},
                       {"dropout", m->config.dropout},
                       {"learning_rate", m->config.learning_rate},
                       {"batch_size", m->config.batch_size},
                       {"epochs", m->config.epochs},
                       {"seed", m->config.seed}};
    }
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    require(j.at("schema_version").get<int>() == 1, "schema-version",
            "unsupported model schema version");
    TrainedModel model;
    model.family = family_from_string(j.at("family").get<std::string>());
    model.n_features = j.at("n_features").get<std::size_t>();
    if (is_gbdt(model.family)) {
        GbdtModel g;
        const auto& jc = j.at("config");
        g.config.variant = model.family == Family::gbdt_ordered ? GbdtVariant::ordered
                           : model.family == Family::gbdt_leafwise
                               ? GbdtVariant::leafwise
                               : GbdtVariant::levelwise;
        g.config.n_rounds = jc.at("n_rounds").get<int>();
        g.config.learning_rate = jc.at("learning_rate").get<double>();
        g.config.max_depth = jc.at("max_depth").get<int>();
        g.config.max_leaves = jc.at("max_leaves").get<int>();
        g.config.l2_reg = jc.at("l2_reg").get<double>();
        g.config.n_bins = jc.at("n_bins").get<int>();
        g.config.min_child_rows = jc.at("min_child_rows").get<int>();
        g.config.seed = jc.at("seed").get<std::uint64_t>();
        g.base_score = j.at("base_score").get<double>();
        g.loss_trace = j.at("loss_trace").get<std::vector<double>>();
        for (const auto& jt : j.at("trees"))
            g.trees.push_back(model_json::tree_from_json(jt));
        model.impl = std::move(g);
    } else if (model.family == Family::logreg) {
        LogRegModel l;
        const auto& jc = j.at("config");
        l.config.penalty = jc.at("penalty").get<std::string>() == "l1" ? Penalty::l1
                                                                       : Penalty::l2;
        l.config.lambda = jc.at("lambda").get<double>();
        l.config.max_iter = jc.at("max_iter").get<int>();
        l.config.tol = jc.at("tol").get<double>();
        l.weights = j.at("weights").get<std::vector<double>>();
        l.bias = j.at("bias").get<double>();
        l.converged = j.at("converged").get<bool>();
        l.final_grad_norm = j.at("final_grad_norm").get<double>();
        model.impl = std::move(l);
    } else if (model.family == Family::gaussian_nb) {
        GnbModel nb;
        nb.log_prior[0] = j.at("log_prior")[0].get<double>();
        nb.log_prior[1] = j.at("log_prior")[1].get<double>();
        nb.mean[0] = j.at("mean_neg").get<std::vector<double>>();
        nb.mean[1] = j.at("mean_pos").get<std::vector<double>>();
        nb.var[0] = j.at("var_neg").get<std::vector<double>>();
        nb.var[1] = j.at("var_pos").get<std::vector<double>>();
        nb.var_floor = j.at("var_floor").get<double>();
        model.impl = std::move(nb);
    } else {
        MlpModel m;
        const auto& jc = j.at("config");
        m.config.hidden_units = jc.at("hidden_units").get<int>();
        m.config.dropout = jc.at("dropout").get<double>();
        m.config.learning_rate = jc.at("learning_rate").get<double>();
        m.config.batch_size = jc.at("batch_size").get<int>();
        m.config.epochs = jc.at("epochs").get<int>();
        m.config.seed = jc.at("seed").get<std::uint64_t>();
        m.w1 = j.at("w1").get<std::vector<double>>();
        m.b1 = j.at("b1").get<std::vector<double>>();
        m.w2 = j.at("w2").get<std::vector<double>>();
        m.b2 = j.at("b2").get<double>();
        m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
        model.impl = std::move(m);
    }
    return model;
}

}  // namespace vancorisk::models
