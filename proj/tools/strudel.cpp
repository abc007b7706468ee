// strudel — structured disentanglement evaluation toolkit, command line.
//
// Subcommands:
//   generate   sample a grouped evaluation dataset (optionally with
//              synthetic latents)
//   probe      permutation-invariant probing of a dataset
//   metrics    projection metrics over probe results or an injected joint
//   verify     Monte Carlo verification of the theoretical identities
//   ablate     2x2 ablation grid of the alignment and grouping algorithms
//   hinton     Hinton-diagram SVG of an affinity matrix
//
// Exit codes: 0 success, 2 input/config error, 3 verification failure.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strudel/builtin_schemas.hpp"
#include "strudel/dataset.hpp"
#include "strudel/dataset_io.hpp"
#include "strudel/error.hpp"
#include "strudel/hinton.hpp"
#include "strudel/manifest.hpp"
#include "strudel/metrics.hpp"
#include "strudel/parallel.hpp"
#include "strudel/pipeline.hpp"
#include "strudel/probing.hpp"
#include "strudel/theory.hpp"
#include "strudel/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitVerification = 3;

strudel::SplitSizes parse_split(const std::string& text, int n_samples) {
    strudel::SplitSizes split;
    if (text.empty()) {
        split.fit = n_samples * 8 / 10;
        split.validation = (n_samples - split.fit) / 2;
        split.evaluation = n_samples - split.fit - split.validation;
        return split;
    }
    int parts[3] = {0, 0, 0};
    std::size_t idx = 0;
    std::string cur;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ',') {
            if (idx >= 3 || cur.empty()) throw strudel::SpecError("--split expects fit,val,eval");
            parts[idx++] = std::stoi(cur);
            cur.clear();
        } else {
            cur += text[i];
        }
    }
    if (idx != 3) throw strudel::SpecError("--split expects fit,val,eval");
    split.fit = parts[0];
    split.validation = parts[1];
    split.evaluation = parts[2];
    return split;
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string spec_path;
    std::string out_dir;
    int groups = 10;
    int samples = 5000;
    std::string split;
    std::uint64_t seed = 1;
    std::string mixing_path;
};

int cmd_generate(const GenerateArgs& args) {
    strudel::RunManifest manifest("generate");
    const strudel::GenerationSpec spec =
        strudel::generation_spec_from_json(strudel::read_json_file(args.spec_path));
    const strudel::SplitSizes split = parse_split(args.split, args.samples);
    strudel::GroupedDataset ds =
        strudel::generate_eval_dataset(spec, args.groups, args.samples, split, args.seed);
    manifest.add_input(args.spec_path);
    manifest.config()["groups"] = args.groups;
    manifest.config()["samples"] = args.samples;
    manifest.config()["split"] = {split.fit, split.validation, split.evaluation};
    manifest.set_seed(args.seed);
    if (!args.mixing_path.empty()) {
        const strudel::MixingSpec mix =
            strudel::mixing_spec_from_json(strudel::read_json_file(args.mixing_path));
        ds = strudel::synth_encode(ds, mix, args.seed);
        manifest.add_input(args.mixing_path);
        manifest.config()["mixing"] = strudel::mixing_spec_to_json(mix);
    }
    strudel::save_dataset(ds, args.out_dir, &spec.factors);
    manifest.add_output(args.out_dir);
    manifest.write(args.out_dir);
    std::cout << "wrote dataset with " << ds.groups.size() << " groups to " << args.out_dir
              << "\n";
    return kExitOk;
}

// ---- probe --------------------------------------------------------------------

struct ProbeArgs {
    std::string dataset_dir;
    std::string out_dir;
    std::string config_path;
    std::optional<int> iters;
    bool no_perm = false;
    std::optional<double> threshold;
    std::optional<double> lambda;
    std::optional<int> trees;
    std::optional<int> depth;
    std::optional<std::uint64_t> seed;
};

strudel::ProbeConfig probe_config_from_json(const json& j) {
    strudel::ProbeConfig cfg;
    cfg.n_iters = j.value("n_iters", cfg.n_iters);
    cfg.ridge_lambda = j.value("ridge_lambda", cfg.ridge_lambda);
    cfg.threshold_fraction = j.value("threshold_fraction", cfg.threshold_fraction);
    cfg.early_stop = j.value("early_stop", cfg.early_stop);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("forest")) {
        const json& f = j.at("forest");
        cfg.forest.n_trees = f.value("n_trees", cfg.forest.n_trees);
        cfg.forest.max_depth = f.value("max_depth", cfg.forest.max_depth);
        cfg.forest.min_samples_leaf = f.value("min_samples_leaf", cfg.forest.min_samples_leaf);
        cfg.forest.bootstrap = f.value("bootstrap", cfg.forest.bootstrap);
    }
    return cfg;
}

json probe_config_to_json(const strudel::ProbeConfig& cfg) {
    return {{"n_iters", cfg.n_iters},
            {"ridge_lambda", cfg.ridge_lambda},
            {"threshold_fraction", cfg.threshold_fraction},
            {"early_stop", cfg.early_stop},
            {"seed", cfg.seed},
            {"forest",
             {{"n_trees", cfg.forest.n_trees},
              {"max_depth", cfg.forest.max_depth},
              {"min_samples_leaf", cfg.forest.min_samples_leaf},
              {"bootstrap", cfg.forest.bootstrap}}}};
}

int cmd_probe(const ProbeArgs& args) {
    strudel::RunManifest manifest("probe");
    strudel::ProbeConfig cfg;
    if (!args.config_path.empty()) {
        cfg = probe_config_from_json(strudel::read_json_file(args.config_path));
        manifest.add_input(args.config_path);
    }
    if (args.iters) cfg.n_iters = *args.iters;
    if (args.no_perm) cfg.n_iters = 0;
    if (args.threshold) cfg.threshold_fraction = *args.threshold;
    if (args.lambda) cfg.ridge_lambda = *args.lambda;
    if (args.trees) cfg.forest.n_trees = *args.trees;
    if (args.depth) cfg.forest.max_depth = *args.depth;
    if (args.seed) cfg.seed = *args.seed;

    const strudel::LoadedDataset loaded = strudel::load_dataset(args.dataset_dir);
    const std::vector<strudel::FactorSpec>* specs =
        loaded.factor_specs ? &*loaded.factor_specs : nullptr;
    const strudel::ProbeRun run = strudel::probe_dataset(loaded.dataset, specs, cfg);

    fs::create_directories(args.out_dir);
    strudel::write_json_file(fs::path(args.out_dir) / "schema.json",
                             strudel::schema_to_json(*run.schema));
    strudel::write_json_file(fs::path(args.out_dir) / "layout.json",
                             strudel::layout_to_json(run.layout));
    strudel::Matrix pooled_raw(run.schema->latent_count(), run.schema->factor_count());
    strudel::Matrix pooled_thr(run.schema->latent_count(), run.schema->factor_count());
    for (std::size_t g = 0; g < run.groups.size(); ++g) {
        const auto& gr = run.groups[g];
        strudel::write_json_file(
            fs::path(args.out_dir) / ("probe_group_" + std::to_string(gr.group_id) + ".json"),
            strudel::group_probe_to_json(gr, run.encodings[g]));
        for (std::size_t i = 0; i < pooled_raw.rows(); ++i)
            for (std::size_t j = 0; j < pooled_raw.cols(); ++j) {
                pooled_raw(i, j) += gr.importances_raw(i, j) / run.groups.size();
                pooled_thr(i, j) += gr.importances_thresholded(i, j) / run.groups.size();
            }
    }
    strudel::write_json_file(
        fs::path(args.out_dir) / "pooled.json",
        {{"importances_raw", strudel::matrix_to_json(pooled_raw)},
         {"importances_thresholded", strudel::matrix_to_json(pooled_thr)},
         {"joint",
          strudel::matrix_to_json(strudel::normalize_joint(pooled_thr, run.schema).matrix())}});
    manifest.add_input(args.dataset_dir);
    manifest.add_output(args.out_dir);
    manifest.config() = probe_config_to_json(cfg);
    manifest.set_seed(cfg.seed);
    manifest.write(args.out_dir);
    std::cout << "probed " << run.groups.size() << " groups into " << args.out_dir << "\n";
    return kExitOk;
}

// ---- metrics -------------------------------------------------------------------

struct MetricsArgs {
    std::string probe_dir;
    std::string out_dir;
    std::string projections;
    std::vector<std::string> background;
    std::string joint_file;
};

int cmd_metrics(const MetricsArgs& args) {
    strudel::RunManifest manifest("metrics");
    strudel::SchemaPtr schema;
    std::vector<strudel::GroupProbeData> groups;
    if (!args.joint_file.empty()) {
        strudel::JointDistribution joint =
            strudel::joint_from_json(strudel::read_json_file(args.joint_file));
        schema = joint.schema();
        const std::size_t nf = schema->factor_count();
        groups.push_back({0, std::move(joint), strudel::Matrix(0, nf), strudel::Matrix(0, nf)});
        manifest.add_input(args.joint_file);
    } else {
        if (args.probe_dir.empty())
            throw strudel::SpecError("metrics needs a probe directory or --joint-file");
        schema = std::make_shared<const strudel::HierarchySchema>(
            strudel::schema_from_json(strudel::read_json_file(fs::path(args.probe_dir) / "schema.json")));
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(args.probe_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("probe_group_", 0) == 0 && entry.path().extension() == ".json")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw strudel::IoError("no probe_group_*.json files in " + args.probe_dir);
        for (const auto& f : files)
            groups.push_back(
                strudel::group_probe_data_from_json(strudel::read_json_file(f), schema));
        manifest.add_input(args.probe_dir);
    }

    const std::vector<std::string> names = args.projections.empty()
                                               ? strudel::default_projection_names(*schema)
                                               : split_commas(args.projections);
    const auto projections = strudel::resolve_projections(*schema, names);
    const std::set<std::string> tags(args.background.begin(), args.background.end());
    const strudel::MetricReport report = strudel::compute_metrics(groups, projections, tags);

    fs::create_directories(args.out_dir);
    strudel::write_json_file(fs::path(args.out_dir) / "metrics.json",
                             strudel::metric_report_to_json(report));
    manifest.add_output(args.out_dir);
    manifest.config()["projections"] = names;
    manifest.config()["background"] = args.background;
    manifest.write(args.out_dir);

    std::cout << "projection            Dis.(%)  Comp.(%)\n";
    std::cout.setf(std::ios::fixed);
    std::cout.precision(1);
    for (const auto& [name, cd] : report.aggregate.projections)
        std::cout << name << std::string(name.size() < 22 ? 22 - name.size() : 1, ' ')
                  << strudel::round_percent(cd.second.mean) << "     "
                  << strudel::round_percent(cd.first.mean) << "\n";
    if (report.aggregate.informativeness_global.n > 0)
        std::cout << "informativeness (global): "
                  << strudel::round_percent(report.aggregate.informativeness_global.mean)
                  << "%\n";
    return kExitOk;
}

// ---- verify -------------------------------------------------------------------

struct VerifyArgs {
    int draws = 10000;
    std::uint64_t seed = 1;
    double concentration = 1.0;
    std::string schema_path;
};

struct WorstCase {
    double lower_slack = std::numeric_limits<double>::infinity();
    double upper_slack = std::numeric_limits<double>::infinity();
    double k2_residual = 0.0;
    double dci_residual = 0.0;

    void merge(const WorstCase& o) {
        lower_slack = std::min(lower_slack, o.lower_slack);
        upper_slack = std::min(upper_slack, o.upper_slack);
        k2_residual = std::max(k2_residual, o.k2_residual);
        dci_residual = std::max(dci_residual, o.dci_residual);
    }
};

WorstCase verify_schema(const strudel::SchemaPtr& schema, int draws, std::uint64_t seed,
                        double concentration) {
    std::vector<strudel::Projection> singles;
    for (int lv = 0; lv < static_cast<int>(schema->arity()); ++lv)
        singles.push_back({{lv}});
    const strudel::Projection identity = schema->identity_projection();
    const bool can_k2 = schema->arity() >= 2;
    strudel::Projection k2_first{{0}};
    strudel::Projection k2_rest;
    for (int lv = 1; lv < static_cast<int>(schema->arity()); ++lv) k2_rest.levels.push_back(lv);

    std::vector<WorstCase> per_draw(static_cast<std::size_t>(draws));
    strudel::parallel_for(per_draw.size(), [&](std::size_t d) {
        const strudel::JointDistribution joint =
            strudel::random_joint(schema, concentration, strudel::derive_seed(seed, d));
        WorstCase& w = per_draw[d];
        const auto dci = strudel::check_dci_equivalence(joint);
        w.dci_residual = std::max(dci.completeness_residual, dci.disentanglement_residual);
        if (schema->arity() >= 2) {
            const auto lb = strudel::check_lower_bound(joint, identity, singles);
            w.lower_slack = std::min({lb.completeness.outer_vs_mid.slack,
                                      lb.completeness.mid_vs_metric.slack,
                                      lb.disentanglement.outer_vs_mid.slack,
                                      lb.disentanglement.mid_vs_metric.slack});
            const auto ub = strudel::check_upper_bound(joint, identity, singles);
            w.upper_slack = std::min(ub.completeness.ineq.slack, ub.disentanglement.ineq.slack);
            if (can_k2) {
                const auto k2 = strudel::check_k2_identity(joint, k2_first, k2_rest);
                w.k2_residual = std::max(k2.completeness.residual, k2.disentanglement.residual);
            }
        }
    });
    WorstCase worst;
    worst.lower_slack = std::numeric_limits<double>::infinity();
    worst.upper_slack = std::numeric_limits<double>::infinity();
    for (const auto& w : per_draw) worst.merge(w);
    return worst;
}

int cmd_verify(const VerifyArgs& args) {
    std::vector<std::pair<std::string, strudel::SchemaPtr>> schemas;
    if (!args.schema_path.empty()) {
        schemas.emplace_back(args.schema_path,
                             std::make_shared<const strudel::HierarchySchema>(
                                 strudel::schema_from_json(strudel::read_json_file(args.schema_path))));
    } else {
        schemas.emplace_back("toy 2-level", strudel::toy_two_level_schema());
        schemas.emplace_back("3-level", strudel::three_level_schema());
    }
    bool ok = true;
    std::printf("%-44s %-12s %s\n", "check", "worst", "status");
    for (const auto& [name, schema] : schemas) {
        const WorstCase w = verify_schema(schema, args.draws, args.seed, args.concentration);
        auto line = [&](const std::string& check, double value, bool pass) {
            std::printf("%-44s %-12.3e %s\n", (check + " [" + name + "]").c_str(), value,
                        pass ? "pass" : "FAIL");
            ok = ok && pass;
        };
        line("DCI equivalence residual", w.dci_residual, w.dci_residual <= 1e-12);
        line("lower-bound chain slack", w.lower_slack, w.lower_slack >= -1e-9);
        line("upper-bound slack", w.upper_slack, w.upper_slack >= -1e-9);
        line("k=2 identity residual", w.k2_residual, w.k2_residual <= 1e-9);
    }
    if (!ok) std::cout << "verification FAILED\n";
    return ok ? kExitOk : kExitVerification;
}

// ---- ablate -------------------------------------------------------------------

struct AblateArgs {
    std::string spec_path;
    std::string mixing_path;
    std::string out_dir;
    std::string seeds = "1,2,3";
    int groups = 10;
    int samples = 1000;
    std::string split;
    int iters = 100;
    double threshold = 0.03;
};

strudel::GenerationSpec without_locality(strudel::GenerationSpec spec) {
    for (auto& f : spec.factors) {
        f.window = -1;
        f.delta = -1.0;
        f.local_classes.clear();
    }
    return spec;
}

int cmd_ablate(const AblateArgs& args) {
    strudel::RunManifest manifest("ablate");
    const strudel::GenerationSpec spec =
        strudel::generation_spec_from_json(strudel::read_json_file(args.spec_path));
    const strudel::MixingSpec mix =
        strudel::mixing_spec_from_json(strudel::read_json_file(args.mixing_path));
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_commas(args.seeds)) seeds.push_back(std::stoull(s));
    if (seeds.empty()) throw strudel::SpecError("--seeds must list at least one seed");
    const strudel::SplitSizes split = parse_split(args.split, args.samples);

    struct Cell {
        std::vector<std::optional<double>> dis, comp;
    };
    std::map<std::string, Cell> cells;
    const std::string object_level = spec.make_schema().attributes().front().name;
    for (const std::uint64_t seed : seeds) {
        for (const bool with_alg2 : {true, false}) {
            const strudel::GenerationSpec gen_spec =
                with_alg2 ? spec : without_locality(spec);
            const int n_groups = with_alg2 ? args.groups : 1;
            strudel::GroupedDataset ds = strudel::generate_eval_dataset(
                gen_spec, n_groups, args.samples, split, seed);
            ds = strudel::synth_encode(ds, mix, seed);
            for (const bool with_alg1 : {true, false}) {
                strudel::ProbeConfig cfg;
                cfg.n_iters = with_alg1 ? args.iters : 0;
                cfg.threshold_fraction = args.threshold;
                cfg.seed = seed;
                const strudel::ProbeRun run = strudel::probe_dataset(ds, &gen_spec.factors, cfg);
                const auto projections =
                    strudel::resolve_projections(*run.schema, {object_level});
                const strudel::MetricReport report =
                    strudel::compute_metrics(strudel::probe_data(run), projections, {});
                const auto& cd = report.aggregate.projections.at(object_level);
                std::string key = std::string(with_alg1 ? "with_alg1" : "without_alg1") +
                                  (with_alg2 ? "_with_alg2" : "_without_alg2");
                cells[key].comp.push_back(cd.first.mean);
                cells[key].dis.push_back(cd.second.mean);
            }
        }
    }

    json jout = json::object();
    std::printf("%-28s %-16s %s\n", "configuration", "Dis.(%)", "Comp.(%)");
    for (const auto& [key, cell] : cells) {
        const auto d = strudel::aggregate_values(cell.dis);
        const auto c = strudel::aggregate_values(cell.comp);
        jout[key] = {{"disentanglement", strudel::mean_stderr_to_json(d)},
                     {"completeness", strudel::mean_stderr_to_json(c)}};
        std::printf("%-28s %5.1f +- %-5.1f  %5.1f +- %-5.1f\n", key.c_str(),
                    strudel::round_percent(d.mean),
                    d.stderr_ ? strudel::round_percent(*d.stderr_) : 0.0,
                    strudel::round_percent(c.mean),
                    c.stderr_ ? strudel::round_percent(*c.stderr_) : 0.0);
    }
    fs::create_directories(args.out_dir);
    strudel::write_json_file(fs::path(args.out_dir) / "ablation.json", jout);
    manifest.add_input(args.spec_path);
    manifest.add_input(args.mixing_path);
    manifest.add_output(args.out_dir);
    manifest.set_seeds(seeds);
    manifest.config()["groups"] = args.groups;
    manifest.config()["samples"] = args.samples;
    manifest.config()["iters"] = args.iters;
    manifest.write(args.out_dir);
    return kExitOk;
}

// ---- hinton -------------------------------------------------------------------

struct HintonArgs {
    std::string probe_dir;
    std::string out_file;
    std::string joint_file;
    int group = 0;
    std::string matrix = "joint";
    std::string projection;
};

int cmd_hinton(const HintonArgs& args) {
    strudel::SchemaPtr schema;
    strudel::Matrix m;
    std::string title;
    if (!args.joint_file.empty()) {
        const strudel::JointDistribution joint =
            strudel::joint_from_json(strudel::read_json_file(args.joint_file));
        schema = joint.schema();
        m = joint.matrix();
        title = "joint";
    } else {
        if (args.probe_dir.empty())
            throw strudel::SpecError("hinton needs a probe directory or --joint-file");
        schema = std::make_shared<const strudel::HierarchySchema>(
            strudel::schema_from_json(strudel::read_json_file(fs::path(args.probe_dir) / "schema.json")));
        const json j = strudel::read_json_file(
            fs::path(args.probe_dir) / ("probe_group_" + std::to_string(args.group) + ".json"));
        if (args.matrix == "joint")
            m = strudel::matrix_from_json(j.at("joint"));
        else if (args.matrix == "raw")
            m = strudel::matrix_from_json(j.at("importances_raw"));
        else if (args.matrix == "thresholded")
            m = strudel::matrix_from_json(j.at("importances_thresholded"));
        else
            throw strudel::SpecError("--matrix must be joint, raw or thresholded");
        title = args.matrix + " (group " + std::to_string(args.group) + ")";
    }

    std::vector<strudel::Tuple> rows = schema->latent_tuples();
    std::vector<strudel::Tuple> cols = schema->factor_tuples();
    if (!args.projection.empty()) {
        const auto projections = strudel::resolve_projections(*schema, {args.projection});
        double total = 0.0;
        for (double v : m.data()) total += v;
        if (!(total > 0.0)) throw strudel::NumericError("matrix has no mass to project");
        strudel::Matrix normalized = m;
        for (double& v : normalized.data()) v /= total;
        const strudel::ProjectedJoint pj = strudel::marginalize(
            strudel::normalize_joint(normalized, schema), projections.front().second);
        m = pj.p;
        rows = pj.row_labels;
        cols = pj.col_labels;
        title += " / projection " + args.projection;
    }
    const std::string svg = strudel::hinton_svg(m, rows, cols, title);
    std::ofstream out(args.out_file, std::ios::binary);
    if (!out) throw strudel::IoError("cannot write " + args.out_file);
    out << svg;
    std::cout << "wrote " << args.out_file << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"strudel - structured disentanglement evaluation toolkit"};
    app.set_version_flag("--version", strudel::kVersion);
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "sample a grouped evaluation dataset");
    generate->add_option("spec", gen.spec_path, "generation spec JSON")->required();
    generate->add_option("--out", gen.out_dir, "output dataset directory")->required();
    generate->add_option("--groups", gen.groups, "number of local groups");
    generate->add_option("--samples", gen.samples, "samples per group");
    generate->add_option("--split", gen.split, "fit,validation,evaluation sizes");
    generate->add_option("--seed", gen.seed, "RNG seed");
    generate->add_option("--mixing", gen.mixing_path, "mixing spec JSON for synthetic latents");

    ProbeArgs probe;
    CLI::App* probe_cmd = app.add_subcommand("probe", "permutation-invariant probing");
    probe_cmd->add_option("dataset", probe.dataset_dir, "dataset directory")->required();
    probe_cmd->add_option("--out", probe.out_dir, "output directory")->required();
    probe_cmd->add_option("--config", probe.config_path, "probe config JSON");
    probe_cmd->add_option("--iters", probe.iters, "EM iterations");
    probe_cmd->add_flag("--no-perm", probe.no_perm, "disable permutation alignment");
    probe_cmd->add_option("--threshold", probe.threshold, "importance threshold fraction");
    probe_cmd->add_option("--lambda", probe.lambda, "ridge regularization strength");
    probe_cmd->add_option("--trees", probe.trees, "trees in the final forest");
    probe_cmd->add_option("--depth", probe.depth, "max tree depth");
    probe_cmd->add_option("--seed", probe.seed, "RNG seed");

    MetricsArgs metrics;
    CLI::App* metrics_cmd = app.add_subcommand("metrics", "projection metrics over probe results");
    metrics_cmd->add_option("probe_dir", metrics.probe_dir, "probe output directory");
    metrics_cmd->add_option("--out", metrics.out_dir, "output directory")->required();
    metrics_cmd->add_option("--projections", metrics.projections,
                            "comma-separated projection names");
    metrics_cmd->add_option("--background", metrics.background,
                            "background factor labels to strip");
    metrics_cmd->add_option("--joint-file", metrics.joint_file, "evaluate an explicit joint JSON");

    VerifyArgs verify;
    CLI::App* verify_cmd = app.add_subcommand("verify", "Monte Carlo theorem verification");
    verify_cmd->add_option("--draws", verify.draws, "random joints per schema");
    verify_cmd->add_option("--seed", verify.seed, "RNG seed");
    verify_cmd->add_option("--concentration", verify.concentration, "Dirichlet concentration");
    verify_cmd->add_option("--schema", verify.schema_path, "schema JSON (defaults to built-ins)");

    AblateArgs ablate;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "2x2 ablation of alignment and grouping");
    ablate_cmd->add_option("spec", ablate.spec_path, "generation spec JSON")->required();
    ablate_cmd->add_option("--mixing", ablate.mixing_path, "mixing spec JSON")->required();
    ablate_cmd->add_option("--out", ablate.out_dir, "output directory")->required();
    ablate_cmd->add_option("--seeds", ablate.seeds, "comma-separated seeds");
    ablate_cmd->add_option("--groups", ablate.groups, "groups when local sampling is on");
    ablate_cmd->add_option("--samples", ablate.samples, "samples per group");
    ablate_cmd->add_option("--split", ablate.split, "fit,validation,evaluation sizes");
    ablate_cmd->add_option("--iters", ablate.iters, "EM iterations when alignment is on");
    ablate_cmd->add_option("--threshold", ablate.threshold, "importance threshold fraction");

    HintonArgs hinton;
    CLI::App* hinton_cmd = app.add_subcommand("hinton", "Hinton-diagram SVG");
    hinton_cmd->add_option("probe_dir", hinton.probe_dir, "probe output directory");
    hinton_cmd->add_option("--out", hinton.out_file, "output SVG path")->required();
    hinton_cmd->add_option("--joint-file", hinton.joint_file, "explicit joint JSON");
    hinton_cmd->add_option("--group", hinton.group, "group id");
    hinton_cmd->add_option("--matrix", hinton.matrix, "joint | raw | thresholded");
    hinton_cmd->add_option("--projection", hinton.projection, "project before rendering");

    try {
        app.parse(argc, argv);
        if (generate->parsed()) return cmd_generate(gen);
        if (probe_cmd->parsed()) return cmd_probe(probe);
        if (metrics_cmd->parsed()) return cmd_metrics(metrics);
        if (verify_cmd->parsed()) return cmd_verify(verify);
        if (ablate_cmd->parsed()) return cmd_ablate(ablate);
        if (hinton_cmd->parsed()) return cmd_hinton(hinton);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return kExitInput;
    } catch (const strudel::SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const strudel::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const strudel::CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
