#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "strudel/dataset.hpp"
#include "strudel/metrics.hpp"
#include "strudel/pipeline.hpp"
#include "strudel/probing.hpp"

using namespace strudel;

namespace {

GenerationSpec oracle_spec(int n_objects, int n_factors) {
    GenerationSpec spec;
    for (int o = 0; o < n_objects; ++o) spec.objects.push_back("object_" + std::to_string(o + 1));
    for (int f = 0; f < n_factors; ++f) {
        FactorSpec fs;
        fs.name = "factor_" + std::to_string(f + 1);
        fs.kind = FactorKind::ordinal;
        fs.values = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
        fs.window = 1;
        spec.factors.push_back(fs);
    }
    spec.layout.n_slots = n_objects;
    spec.layout.dims_per_slot = n_factors;
    return spec;
}

}  // namespace

TEST_CASE("apply_slot_permutation reorders blocks and respects pinning") {
    SlotLayout layout;
    layout.n_slots = 2;
    layout.dims_per_slot = 2;
    const std::vector<double> z{1, 2, 3, 4};
    CHECK(apply_slot_permutation(z, layout, {0, 1}) == z);
    CHECK(apply_slot_permutation(z, layout, {1, 0}) == std::vector<double>{3, 4, 1, 2});
    // applying a permutation then its inverse restores the input
    SlotLayout big;
    big.n_slots = 4;
    big.dims_per_slot = 3;
    std::mt19937_64 rng(3);
    std::vector<double> z12(12);
    for (auto& v : z12) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const SlotPermutation perm{2, 0, 3, 1};
    const auto once = apply_slot_permutation(z12, big, perm);
    CHECK(apply_slot_permutation(once, big, invert_permutation(perm)) == z12);

    SlotLayout pinned = layout;
    pinned.pinned_slots = {0};
    CHECK_THROWS_AS(apply_slot_permutation(z, pinned, {1, 0}), SpecError);
    CHECK_THROWS_AS(apply_slot_permutation(z, layout, {0, 0}), SpecError);
    CHECK_THROWS_AS(apply_slot_permutation({1.0, 2.0}, layout, {0, 1}), SpecError);
}

TEST_CASE("permutation enumeration is lexicographic and respects capacity") {
    SlotLayout layout;
    layout.n_slots = 3;
    layout.dims_per_slot = 1;
    PermutationEnumerator en(layout);
    std::vector<SlotPermutation> all;
    for (; !en.done(); en.next()) all.push_back(en.current());
    REQUIRE(all.size() == 6);
    CHECK(all.front() == SlotPermutation{0, 1, 2});
    CHECK(all.back() == SlotPermutation{2, 1, 0});
    for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1] < all[i]);

    SlotLayout too_big;
    too_big.n_slots = 10;
    too_big.dims_per_slot = 1;
    CHECK_THROWS_AS(PermutationEnumerator{too_big}, CapacityError);
}

TEST_CASE("best_permutation recovers the inverse of an applied shuffle") {
    SlotLayout layout;
    layout.n_slots = 3;
    layout.dims_per_slot = 2;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // random linear decoder f(z) = W^T z fitted exactly by construction
    Matrix x(40, 6);
    Matrix y(40, 4);
    Matrix w(6, 4);
    for (auto& v : w.data()) v = u(rng);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t j = 0; j < 6; ++j) x(i, j) = u(rng);
        for (std::size_t t = 0; t < 4; ++t) {
            double s = 0.0;
            for (std::size_t j = 0; j < 6; ++j) s += w(j, t) * x(i, j);
            y(i, t) = s;
        }
    }
    const RidgeModel model = ridge_fit(x, y, 1e-10);
    auto predict = [&](const std::vector<double>& z) { return model.predict(z); };
    const SlotPermutation sigma{2, 0, 1};
    for (std::size_t i = 0; i < 10; ++i) {
        const auto z = x.row_copy(i);
        const auto v = y.row_copy(i);
        const auto shuffled = apply_slot_permutation(z, layout, sigma);
        double residual = 1.0;
        const SlotPermutation best = best_permutation(predict, shuffled, v, layout, &residual);
        CHECK(best == invert_permutation(sigma));
        CHECK(residual < 1e-6);
    }
}

TEST_CASE("identical slots tie-break to the identity permutation") {
    SlotLayout layout;
    layout.n_slots = 3;
    layout.dims_per_slot = 2;
    const std::vector<double> z{0.4, -0.2, 0.4, -0.2, 0.4, -0.2};
    const std::vector<double> v{1.0, 2.0};
    auto predict = [](const std::vector<double>& zz) {
        return std::vector<double>{zz[0] + zz[2], zz[1] + zz[5]};
    };
    CHECK(best_permutation(predict, z, v, layout) == SlotPermutation{0, 1, 2});
}

TEST_CASE("linear fast path matches the brute-force definition") {
    SlotLayout layout;
    layout.n_slots = 3;
    layout.dims_per_slot = 3;
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix x(60, 9);
    Matrix y(60, 5);
    for (auto& v : x.data()) v = u(rng);
    for (auto& v : y.data()) v = u(rng);
    const RidgeModel model = ridge_fit(x, y, 0.7);
    auto predict = [&](const std::vector<double>& z) { return model.predict(z); };
    detail::LinearPermutationScorer scorer(model, layout);
    for (std::size_t i = 0; i < 60; ++i) {
        const auto z = x.row_copy(i);
        const auto v = y.row_copy(i);
        double slow_res = 0.0, fast_res = 0.0;
        const SlotPermutation slow = best_permutation(predict, z, v, layout, &slow_res);
        const SlotPermutation fast =
            best_permutation_linear(model, z.data(), v.data(), layout, scorer, &fast_res);
        CHECK(slow == fast);
        CHECK(slow_res == doctest::Approx(fast_res).epsilon(1e-10));
    }
}

TEST_CASE("threshold_importances zeroes entries below the column fraction") {
    Matrix r = Matrix::from_rows({{1.0, 0.0}, {0.02, 0.0}, {0.5, 0.0}});
    const Matrix t = threshold_importances(r, 0.03);
    CHECK(t(0, 0) == 1.0);
    CHECK(t(1, 0) == 0.0);  // 0.02 < 0.03 * 1.0
    CHECK(t(2, 0) == 0.5);
    CHECK(t(0, 1) == 0.0);  // all-zero column untouched
    const Matrix same = threshold_importances(r, 0.0);
    CHECK(same.data() == r.data());
    Matrix neg = r;
    neg(0, 0) = -0.1;
    CHECK_THROWS_AS(threshold_importances(neg, 0.03), NumericError);
}

TEST_CASE("probing a shuffled block-diagonal oracle recovers a consistent correspondence") {
    const GenerationSpec spec = oracle_spec(3, 3);
    GroupedDataset ds = generate_eval_dataset(spec, 1, 260, {200, 30, 30}, 101);
    MixingSpec mix;
    mix.shuffle_slots = true;
    std::vector<std::vector<std::vector<int>>> true_perms;
    ds = synth_encode(ds, mix, 103, &true_perms);

    ProbeConfig config;
    config.n_iters = 60;
    config.seed = 105;
    const ProbeRun run = probe_dataset(ds, &spec.factors, config);
    const GroupProbeResult& g = run.groups[0];

    // net correspondence sigma(pi(.)) must be one global relabeling
    std::set<SlotPermutation> correspondences;
    for (std::size_t i = 0; i < 260; ++i)
        correspondences.insert(
            compose_permutations(true_perms[0][i], g.permutations[i]));
    CHECK(correspondences.size() == 1);

    // E-step residual never increases within an iteration
    for (const auto& tr : g.trace) CHECK(tr.residual_after <= tr.residual_before + 1e-9);

    // changes concentrate in the first quarter of the configured iterations
    int total_changes = 0, early_changes = 0;
    for (std::size_t it = 0; it < g.trace.size(); ++it) {
        total_changes += g.trace[it].changed;
        if (it < static_cast<std::size_t>(config.n_iters) / 4) early_changes += g.trace[it].changed;
    }
    REQUIRE(total_changes > 0);
    CHECK(static_cast<double>(early_changes) >= 0.9 * static_cast<double>(total_changes));

    // downstream object-level separation is near perfect
    const auto projections = resolve_projections(*run.schema, {"object"});
    const MetricReport report = compute_metrics(probe_data(run), projections, {});
    CHECK(report.aggregate.projections.at("object").first.mean >= 0.95);
    CHECK(report.aggregate.projections.at("object").second.mean >= 0.95);
}

TEST_CASE("unshuffled data with one iteration keeps every permutation at identity") {
    const GenerationSpec spec = oracle_spec(3, 2);
    GroupedDataset ds = generate_eval_dataset(spec, 1, 120, {100, 10, 10}, 111);
    ds = synth_encode(ds, MixingSpec{}, 113);
    ProbeConfig config;
    config.n_iters = 1;
    config.seed = 115;
    const ProbeRun run = probe_dataset(ds, &spec.factors, config);
    for (const auto& perm : run.groups[0].permutations) CHECK(is_identity(perm));
    CHECK(run.groups[0].trace.front().changed == 0);
}

TEST_CASE("disabling alignment on shuffled data drops object-level disentanglement") {
    const GenerationSpec spec = oracle_spec(3, 3);
    GroupedDataset ds = generate_eval_dataset(spec, 1, 260, {200, 30, 30}, 121);
    MixingSpec mix;
    mix.shuffle_slots = true;
    ds = synth_encode(ds, mix, 123);

    ProbeConfig on;
    on.n_iters = 60;
    on.seed = 125;
    ProbeConfig off = on;
    off.n_iters = 0;
    const auto projections = resolve_projections(*ds.schema, {"object"});
    const MetricReport with_alg = compute_metrics(
        probe_data(probe_dataset(ds, &spec.factors, on)), projections, {});
    const MetricReport without_alg = compute_metrics(
        probe_data(probe_dataset(ds, &spec.factors, off)), projections, {});
    const double d_on = with_alg.aggregate.projections.at("object").second.mean;
    const double d_off = without_alg.aggregate.projections.at("object").second.mean;
    CHECK(d_on - d_off >= 0.2);
    // without alignment every permutation stays identity
    const ProbeRun plain = probe_dataset(ds, &spec.factors, off);
    for (const auto& perm : plain.groups[0].permutations) CHECK(is_identity(perm));
}

TEST_CASE("probing is invariant to a global slot relabeling, up to row permutation") {
    const GenerationSpec spec = oracle_spec(3, 2);
    GroupedDataset ds = generate_eval_dataset(spec, 1, 160, {120, 20, 20}, 131);
    MixingSpec mix;
    mix.shuffle_slots = true;
    ds = synth_encode(ds, mix, 133);

    ProbeConfig config;
    config.n_iters = 40;
    config.seed = 135;
    const ProbeRun base = probe_dataset(ds, &spec.factors, config);

    // relabel: apply one fixed permutation to every sample's slots
    const SlotPermutation relabel{1, 2, 0};
    GroupedDataset relabeled = ds;
    for (std::size_t i = 0; i < relabeled.groups[0].latents.rows(); ++i) {
        const auto z = relabeled.groups[0].latents.row_copy(i);
        const auto zz = apply_slot_permutation(z, ds.layout, relabel);
        for (std::size_t c = 0; c < zz.size(); ++c) relabeled.groups[0].latents(i, c) = zz[c];
    }
    const ProbeRun moved = probe_dataset(relabeled, &spec.factors, config);

    // rows of R_raw permute by the relabeling at slot granularity
    const Matrix& a = base.groups[0].importances_raw;
    const Matrix& b = moved.groups[0].importances_raw;
    const std::size_t dims = 2;
    double max_diff = 0.0;
    for (std::size_t pos = 0; pos < 3; ++pos)
        for (std::size_t d = 0; d < dims; ++d)
            for (std::size_t t = 0; t < a.cols(); ++t) {
                // moved position pos holds base slot relabel[pos]
                const double va = a(static_cast<std::size_t>(relabel[pos]) * dims + d, t);
                const double vb = b(pos * dims + d, t);
                max_diff = std::max(max_diff, std::abs(va - vb));
            }
    CHECK(max_diff <= 1e-9);
}

TEST_CASE("probing rejects invalid inputs") {
    const GenerationSpec spec = oracle_spec(2, 2);
    GroupedDataset ds = generate_eval_dataset(spec, 1, 20, {16, 2, 2}, 141);
    SUBCASE("missing latents") {
        ProbeConfig config;
        CHECK_THROWS_AS(probe_dataset(ds, &spec.factors, config), SpecError);
    }
    SUBCASE("non-finite latents") {
        ds = synth_encode(ds, MixingSpec{}, 143);
        ds.groups[0].latents(0, 0) = std::numeric_limits<double>::infinity();
        ProbeConfig config;
        CHECK_THROWS_AS(probe_dataset(ds, &spec.factors, config), NumericError);
    }
}
