// Composition of the pieces into the evaluation pipeline: target encoding
// per factor column, probing over every group of a dataset, metric
// computation over probe results, and the JSON forms the CLI writes.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "strudel/dataset.hpp"
#include "strudel/encoding.hpp"
#include "strudel/error.hpp"
#include "strudel/metrics.hpp"
#include "strudel/probing.hpp"

namespace strudel {

// Encoded target matrix for one group. Categorical factor columns (class
// indices on disk) are mapped to scalar codes chosen per group by
// validation-error minimization on the raw, unaligned latents; numeric
// columns pass through.
struct EncodedTargets {
    Matrix targets;
    std::map<std::string, TargetEncoding> encodings;  // keyed by factor tuple label
};

inline EncodedTargets encode_group_targets(const Group& group, const SplitSets& splits,
                                           const HierarchySchema& schema,
                                           const std::vector<FactorSpec>* specs,
                                           double ridge_lambda = 1.0) {
    EncodedTargets out;
    out.targets = group.factors;
    if (!specs) return out;
    std::map<std::string, const FactorSpec*> by_name;
    for (const auto& f : *specs) by_name[f.name] = &f;

    std::optional<Matrix> x_fit, x_val;
    for (std::size_t j = 0; j < schema.factor_count(); ++j) {
        const Tuple& tuple = schema.factor_tuples()[j];
        const FactorSpec* spec = nullptr;
        for (const auto& label : tuple) {
            auto it = by_name.find(label);
            if (it != by_name.end()) spec = it->second;
        }
        if (!spec || spec->kind != FactorKind::categorical) continue;
        if (group.latents.cols() == 0)
            throw SpecError("categorical factor '" + spec->name +
                            "' needs latents for encoding selection");
        if (!x_fit) {
            Matrix xf(splits.fit.size(), group.latents.cols());
            for (std::size_t k = 0; k < splits.fit.size(); ++k)
                std::copy_n(group.latents.row(static_cast<std::size_t>(splits.fit[k])),
                            group.latents.cols(), xf.row(k));
            Matrix xv(splits.validation.size(), group.latents.cols());
            for (std::size_t k = 0; k < splits.validation.size(); ++k)
                std::copy_n(group.latents.row(static_cast<std::size_t>(splits.validation[k])),
                            group.latents.cols(), xv.row(k));
            x_fit = std::move(xf);
            x_val = std::move(xv);
        }
        auto class_at = [&](std::size_t row) {
            const auto idx = static_cast<std::size_t>(group.factors(row, j));
            if (idx >= spec->classes.size())
                throw SpecError("factor column '" + tuple_label(tuple) +
                                "' holds an out-of-range class index");
            return spec->classes[idx];
        };
        std::vector<std::string> fit_values, val_values;
        for (int r : splits.fit) fit_values.push_back(class_at(static_cast<std::size_t>(r)));
        for (int r : splits.validation) val_values.push_back(class_at(static_cast<std::size_t>(r)));
        TargetEncoding enc = splits.validation.empty()
                                 ? encode_targets_fixed(spec->classes)
                                 : choose_encoding(spec->classes, fit_values, val_values, *x_fit,
                                                   *x_val, ridge_lambda);
        for (std::size_t r = 0; r < group.factors.rows(); ++r)
            out.targets(r, j) = enc.encode(class_at(r));
        out.encodings.emplace(tuple_label(tuple), std::move(enc));
    }
    return out;
}

struct ProbeRun {
    SchemaPtr schema;
    SlotLayout layout;
    std::vector<GroupProbeResult> groups;
    std::vector<std::map<std::string, TargetEncoding>> encodings;  // per group
};

// Probe every group of the dataset. Groups run sequentially; the inner
// loops (E step, trees) parallelize, so results are thread-count invariant.
inline ProbeRun probe_dataset(const GroupedDataset& ds, const std::vector<FactorSpec>* specs,
                              const ProbeConfig& config) {
    ProbeRun run;
    run.schema = ds.schema;
    run.layout = ds.layout;
    for (std::size_t g = 0; g < ds.groups.size(); ++g) {
        if (ds.groups[g].latents.cols() == 0)
            throw SpecError("group " + std::to_string(ds.groups[g].id) +
                            " has no latents; encode the dataset first");
        EncodedTargets enc =
            encode_group_targets(ds.groups[g], ds.splits[g], *ds.schema, specs,
                                 config.ridge_lambda);
        ProbeInput input;
        input.latents = &ds.groups[g].latents;
        input.targets = &enc.targets;
        input.splits = &ds.splits[g];
        input.group_id = ds.groups[g].id;
        run.groups.push_back(run_probing(input, ds.schema, ds.layout, config));
        run.encodings.push_back(std::move(enc.encodings));
    }
    return run;
}

// The slice of a probe result the metrics stage consumes.
struct GroupProbeData {
    int group_id = 0;
    JointDistribution joint;
    Matrix eval_targets_std;
    Matrix eval_predictions_std;
};

inline std::vector<GroupProbeData> probe_data(const ProbeRun& run) {
    std::vector<GroupProbeData> out;
    for (const auto& g : run.groups)
        out.push_back({g.group_id, *g.joint, g.eval_targets_std, g.eval_predictions_std});
    return out;
}

// ---- projection naming -----------------------------------------------------

// "identity" keeps all levels; an attribute name keeps that level; names
// joined with '+' keep several levels.
inline std::vector<std::pair<std::string, Projection>> resolve_projections(
    const HierarchySchema& schema, const std::vector<std::string>& names) {
    auto level_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < schema.attributes().size(); ++i)
            if (schema.attributes()[i].name == name) return static_cast<int>(i);
        std::string valid = "identity";
        for (const auto& a : schema.attributes()) valid += ", " + a.name;
        throw SpecError("unknown projection '" + name + "'; valid names: " + valid +
                        " (join with '+' for multi-level)");
    };
    std::vector<std::pair<std::string, Projection>> out;
    for (const auto& name : names) {
        if (name == "identity") {
            out.emplace_back(name, schema.identity_projection());
            continue;
        }
        Projection p;
        std::string part;
        std::set<int> levels;
        for (std::size_t i = 0; i <= name.size(); ++i) {
            if (i == name.size() || name[i] == '+') {
                if (!part.empty()) levels.insert(level_of(part));
                part.clear();
            } else {
                part += name[i];
            }
        }
        if (levels.empty()) throw SpecError("empty projection name");
        p.levels.assign(levels.begin(), levels.end());
        out.emplace_back(name, p);
    }
    return out;
}

inline std::vector<std::string> default_projection_names(const HierarchySchema& schema) {
    std::vector<std::string> names;
    for (const auto& a : schema.attributes()) names.push_back(a.name);
    names.push_back("identity");
    return names;
}

// ---- metrics over probe results --------------------------------------------

inline MetricReport compute_metrics(const std::vector<GroupProbeData>& groups,
                                    const std::vector<std::pair<std::string, Projection>>& projections,
                                    const std::set<std::string>& background_tags) {
    if (groups.empty()) throw SpecError("metrics need at least one probed group");
    MetricReport report;
    for (const auto& g : groups) {
        GroupMetrics gm;
        gm.group_id = g.group_id;
        JointDistribution joint = g.joint;
        if (!background_tags.empty()) {
            StripResult sr = strip_background(joint, background_tags);
            joint = sr.joint;
            gm.background_slot_removed = sr.removed_slot;
            gm.background_slot_label = sr.removed_slot_label;
            gm.background_tie = sr.tie;
        }
        for (const auto& [name, proj] : projections)
            gm.projections[name] = {completeness(joint, proj), disentanglement(joint, proj)};
        gm.dci = dci_scores(joint);
        for (const auto& t : joint.schema()->factor_tuples()) gm.factor_names.push_back(tuple_label(t));
        for (const auto& t : joint.schema()->latent_tuples()) gm.latent_names.push_back(tuple_label(t));
        gm.inf = informativeness(g.eval_predictions_std, g.eval_targets_std);
        for (const auto& t : g.joint.schema()->factor_tuples())
            gm.inf_factor_names.push_back(tuple_label(t));
        report.groups.push_back(std::move(gm));
    }
    report.aggregate = aggregate_groups(report.groups);
    return report;
}

// ---- JSON forms -------------------------------------------------------------

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row_copy(i));
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.size(), j.empty() ? 0 : j.front().size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto row = j[i].get<std::vector<double>>();
        if (row.size() != m.cols()) throw IoError("matrix rows have inconsistent lengths");
        for (std::size_t c = 0; c < row.size(); ++c) m(i, c) = row[c];
    }
    return m;
}

inline nlohmann::json group_probe_to_json(const GroupProbeResult& g,
                                          const std::map<std::string, TargetEncoding>& encodings) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& t : g.trace)
        trace.push_back({{"changed", t.changed},
                         {"residual_before", t.residual_before},
                         {"residual_after", t.residual_after}});
    nlohmann::json enc = nlohmann::json::object();
    for (const auto& [name, e] : encodings)
        enc[name] = {{"classes", e.classes},
                     {"values", e.values},
                     {"error_minimizing", e.error_minimizing},
                     {"constant", e.constant}};
    return {{"group_id", g.group_id},
            {"iterations_run", g.iterations_run},
            {"permutations", g.permutations},
            {"trace", std::move(trace)},
            {"importances_raw", matrix_to_json(g.importances_raw)},
            {"importances_thresholded", matrix_to_json(g.importances_thresholded)},
            {"joint", matrix_to_json(g.joint->matrix())},
            {"eval_targets_std", matrix_to_json(g.eval_targets_std)},
            {"eval_predictions_std", matrix_to_json(g.eval_predictions_std)},
            {"encodings", std::move(enc)}};
}

inline GroupProbeData group_probe_data_from_json(const nlohmann::json& j, SchemaPtr schema) {
    GroupProbeData d{j.at("group_id").get<int>(),
                     normalize_joint(matrix_from_json(j.at("joint")), schema),
                     matrix_from_json(j.at("eval_targets_std")),
                     matrix_from_json(j.at("eval_predictions_std"))};
    return d;
}

inline nlohmann::json mean_stderr_to_json(const MeanStderr& v) {
    nlohmann::json j{{"n", v.n}};
    if (v.n > 0)
        j["mean"] = v.mean;
    else
        j["mean"] = nullptr;
    if (v.stderr_)
        j["stderr"] = *v.stderr_;
    else
        j["stderr"] = nullptr;
    return j;
}

inline double round_percent(double v) { return std::round(v * 1000.0) / 10.0; }

inline nlohmann::json metric_report_to_json(const MetricReport& report) {
    nlohmann::json jgroups = nlohmann::json::array();
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (const auto& g : report.groups) {
        nlohmann::json jp = nlohmann::json::object();
        for (const auto& [name, s] : g.projections)
            jp[name] = {{"completeness", s.completeness}, {"disentanglement", s.disentanglement}};
        nlohmann::json per_factor_c = nlohmann::json::object();
        nlohmann::json weights = nlohmann::json::object();
        for (std::size_t j = 0; j < g.factor_names.size(); ++j) {
            per_factor_c[g.factor_names[j]] = opt(g.dci.completeness_per_factor[j]);
            weights[g.factor_names[j]] = g.dci.factor_weights[j];
        }
        nlohmann::json per_factor_i = nlohmann::json::object();
        for (std::size_t j = 0; j < g.inf_factor_names.size(); ++j)
            per_factor_i[g.inf_factor_names[j]] = opt(g.inf.per_factor[j]);
        nlohmann::json jg{{"group_id", g.group_id},
                          {"projections", std::move(jp)},
                          {"per_factor_completeness", std::move(per_factor_c)},
                          {"weights", std::move(weights)},
                          {"informativeness", {{"global", opt(g.inf.global)},
                                               {"per_factor", std::move(per_factor_i)}}},
                          {"dci",
                           {{"weighted_completeness", g.dci.weighted_completeness},
                            {"weighted_disentanglement", g.dci.weighted_disentanglement}}}};
        if (g.background_slot_removed >= 0)
            jg["background"] = {{"removed_slot", g.background_slot_removed},
                                {"removed_slot_label", g.background_slot_label},
                                {"tie", g.background_tie}};
        jgroups.push_back(std::move(jg));
    }
    nlohmann::json jagg = nlohmann::json::object();
    nlohmann::json jproj = nlohmann::json::object();
    nlohmann::json jpercent = nlohmann::json::object();
    for (const auto& [name, cd] : report.aggregate.projections) {
        jproj[name] = {{"completeness", mean_stderr_to_json(cd.first)},
                       {"disentanglement", mean_stderr_to_json(cd.second)}};
        jpercent[name] = {{"completeness", round_percent(cd.first.mean)},
                          {"disentanglement", round_percent(cd.second.mean)}};
    }
    jagg["projections"] = std::move(jproj);
    jagg["informativeness_global"] = mean_stderr_to_json(report.aggregate.informativeness_global);
    nlohmann::json jinf = nlohmann::json::object();
    for (const auto& [name, v] : report.aggregate.informativeness_per_factor)
        jinf[name] = mean_stderr_to_json(v);
    jagg["informativeness_per_factor"] = std::move(jinf);
    nlohmann::json jcomp = nlohmann::json::object();
    for (const auto& [name, v] : report.aggregate.completeness_per_factor)
        jcomp[name] = mean_stderr_to_json(v);
    jagg["completeness_per_factor"] = std::move(jcomp);
    nlohmann::json jw = nlohmann::json::object();
    for (const auto& [name, v] : report.aggregate.factor_weights)
        jw[name] = mean_stderr_to_json(v);
    jagg["factor_weights"] = std::move(jw);

    return {{"groups", std::move(jgroups)},
            {"aggregate", std::move(jagg)},
            {"percent", std::move(jpercent)}};
}

}  // namespace strudel
