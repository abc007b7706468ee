// scratch driver for EM behavior inspection (not part of the test suite)
#include <cstdio>
#include <map>
#include <set>

#include "strudel/dataset.hpp"
#include "strudel/metrics.hpp"
#include "strudel/pipeline.hpp"
#include "strudel/probing.hpp"

using namespace strudel;

int main(int argc, char** argv) {
    const int n_obj = argc > 1 ? std::atoi(argv[1]) : 3;
    const int n_fac = argc > 2 ? std::atoi(argv[2]) : 3;
    const int n_samples = argc > 3 ? std::atoi(argv[3]) : 260;
    const std::uint64_t seed = argc > 4 ? std::strtoull(argv[4], nullptr, 10) : 101;

    GenerationSpec spec;
    for (int o = 0; o < n_obj; ++o) spec.objects.push_back("object_" + std::to_string(o + 1));
    for (int f = 0; f < n_fac; ++f) {
        FactorSpec fs;
        fs.name = "factor_" + std::to_string(f + 1);
        fs.kind = FactorKind::ordinal;
        for (int v = 0; v < 16; ++v) fs.values.push_back(v);
        fs.window = 1;
        spec.factors.push_back(fs);
    }
    spec.layout.n_slots = n_obj;
    spec.layout.dims_per_slot = n_fac;

    const int fit = n_samples * 10 / 13;
    const int rest = (n_samples - fit) / 2;
    GroupedDataset ds = generate_eval_dataset(spec, 1, n_samples,
                                              {fit, rest, n_samples - fit - rest}, seed);
    MixingSpec mix;
    mix.shuffle_slots = true;
    std::vector<std::vector<std::vector<int>>> true_perms;
    ds = synth_encode(ds, mix, seed + 2, &true_perms);

    ProbeConfig config;
    config.n_iters = 60;
    config.seed = seed + 4;
    const ProbeRun run = probe_dataset(ds, &spec.factors, config);
    const GroupProbeResult& g = run.groups[0];

    std::printf("iterations run: %d\n", g.iterations_run);
    for (std::size_t it = 0; it < g.trace.size(); ++it)
        std::printf("  iter %2zu: changed=%3d residual %.4f -> %.4f\n", it, g.trace[it].changed,
                    g.trace[it].residual_before, g.trace[it].residual_after);

    std::map<SlotPermutation, int> fit_corr, val_corr, eval_corr;
    const SplitSets& sp = ds.splits[0];
    std::set<int> fit_set(sp.fit.begin(), sp.fit.end());
    std::set<int> val_set(sp.validation.begin(), sp.validation.end());
    for (std::size_t i = 0; i < g.permutations.size(); ++i) {
        const auto corr = compose_permutations(true_perms[0][i], g.permutations[i]);
        if (fit_set.count(static_cast<int>(i)))
            ++fit_corr[corr];
        else if (val_set.count(static_cast<int>(i)))
            ++val_corr[corr];
        else
            ++eval_corr[corr];
    }
    auto dump = [](const char* tag, const std::map<SlotPermutation, int>& m) {
        std::printf("%s correspondences:\n", tag);
        for (const auto& [perm, count] : m) {
            std::printf("  [");
            for (int p : perm) std::printf("%d ", p);
            std::printf("] x%d\n", count);
        }
    };
    dump("fit", fit_corr);
    dump("validation", val_corr);
    dump("evaluation", eval_corr);

    const auto projections = resolve_projections(*run.schema, {"object"});
    const MetricReport report = compute_metrics(probe_data(run), projections, {});
    std::printf("C(object)=%.4f D(object)=%.4f\n",
                report.aggregate.projections.at("object").first.mean,
                report.aggregate.projections.at("object").second.mean);
    return 0;
}
