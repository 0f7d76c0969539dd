#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "spark/errors.hpp"
#include "spark/policy.hpp"
#include "test_util.hpp"

using namespace spark;

namespace {

Task mod_task(int a, int b, int m) {
    Task t;
    t.id = "m" + std::to_string(a) + "_" + std::to_string(b);
    t.family = Family::ModArith;
    t.mod_arith = {a, b, m, ModOp::Add};
    t.gold_cot = a + b;
    t.gold_answer = (a + b) % m;
    return t;
}

FamilySpec mod_spec(int m) {
    FamilySpec s;
    s.family = Family::ModArith;
    s.modulus = m;
    return s;
}

PromptContext random_prompt(Rng& rng, int m) {
    Task t = mod_task(rng.uniform_int(m), rng.uniform_int(m), m);
    switch (rng.uniform_int(5)) {
        case 0: return make_solve_cot(t);
        case 1: return make_solve_answer(t, rng.uniform_int(t.cot_vocab()));
        case 2:
            return make_judge_point(t, rng.uniform_int(m),
                                    rng.uniform_int(2) ? CandidateSource::Cot
                                                       : CandidateSource::Answer);
        case 3:
            return make_judge_pair(t, rng.uniform_int(m), rng.uniform_int(m),
                                   CandidateSource::Answer);
        default: return make_reflect(t, rng.uniform_int(m));
    }
}

}  // namespace

TEST_CASE("uniform tabular policy gives equal probabilities") {
    TabularPolicy p;
    Task t = mod_task(3, 4, 10);
    auto d = p.action_distribution(make_judge_point(t, 7, CandidateSource::Answer));
    REQUIRE(d.probabilities.size() == 2);
    CHECK(d.probabilities[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.probabilities[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero noise scale equals uniform init; same seed reproduces") {
    InitSpec zero{0.0, 123};
    TabularPolicy a(zero), uniform;
    Task t = mod_task(1, 2, 7);
    auto pa = a.action_distribution(make_solve_cot(t)).probabilities;
    auto pu = uniform.action_distribution(make_solve_cot(t)).probabilities;
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == doctest::Approx(pu[i]));

    InitSpec noisy{0.5, 77};
    TabularPolicy n1(noisy), n2(noisy);
    auto d1 = n1.action_distribution(make_solve_cot(t)).probabilities;
    auto d2 = n2.action_distribution(make_solve_cot(t)).probabilities;
    for (std::size_t i = 0; i < d1.size(); ++i) CHECK(d1[i] == d2[i]);  // bitwise
}

TEST_CASE("probabilities are a distribution and match log_prob") {
    Rng rng(5);
    TabularPolicy tab(InitSpec{1.0, 9});
    MlpPolicy mlp(mod_spec(10), 8, 42);
    for (int i = 0; i < 50; ++i) {
        PromptContext ctx = random_prompt(rng, 10);
        for (const PolicyModel* p : {static_cast<const PolicyModel*>(&tab),
                                     static_cast<const PolicyModel*>(&mlp)}) {
            auto d = p->action_distribution(ctx);
            double sum = 0.0;
            for (double v : d.probabilities) {
                CHECK(v > 0.0);
                sum += v;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
            int a = rng.uniform_int(static_cast<int>(d.probabilities.size()));
            CHECK(p->log_prob(ctx, a) ==
                  doctest::Approx(std::log(d.probabilities[a])).epsilon(1e-9));
        }
    }
}

TEST_CASE("sample_action: degenerate and reproducible") {
    TabularPolicy p;
    Task t = mod_task(2, 3, 5);
    auto ctx = make_judge_point(t, 0, CandidateSource::Answer);
    p.action_distribution(ctx);  // materialize the row before stepping it
    // push one logit far up
    GradientAccumulator acc;
    acc.block("row." + ctx.context_key(), 2)[1] = 50.0;
    p.apply_gradient(acc, 1.0);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) CHECK(p.sample_action(ctx, rng).first == 1);

    Rng r1(9), r2(9);
    MlpPolicy m(mod_spec(7), 6, 3);
    auto sc = make_solve_cot(mod_task(1, 5, 7));
    for (int i = 0; i < 50; ++i) CHECK(m.sample_action(sc, r1).first == m.sample_action(sc, r2).first);
}

TEST_CASE("sampled frequencies track probabilities (3 sigma)") {
    TabularPolicy p(InitSpec{0.7, 4});
    Task t = mod_task(0, 1, 4);
    auto ctx = make_solve_answer(t, 1);
    auto probs = p.action_distribution(ctx).probabilities;
    const int N = 100000;
    std::vector<int> counts(probs.size(), 0);
    Rng rng(31337);
    for (int i = 0; i < N; ++i) counts[p.sample_action(ctx, rng).first]++;
    for (std::size_t a = 0; a < probs.size(); ++a) {
        double sigma = std::sqrt(probs[a] * (1 - probs[a]) * N);
        CHECK(std::fabs(counts[a] - probs[a] * N) < 3.0 * sigma + 1.0);
    }
}

TEST_CASE("tabular softmax gradient identity, zero-sum, and scale 0") {
    TabularPolicy p;
    Task t = mod_task(3, 4, 10);
    auto ctx = make_judge_point(t, 7, CandidateSource::Answer);  // 2 actions, p=[0.5,0.5]
    GradientAccumulator acc;
    p.grad_log_prob(ctx, 0, 1.0, acc);
    const auto& g = acc.blocks().at("row." + ctx.context_key());
    CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(g[0] + g[1] == doctest::Approx(0.0).epsilon(1e-9));

    GradientAccumulator zero;
    p.grad_log_prob(ctx, 0, 0.0, zero);
    CHECK(zero.empty());
}

TEST_CASE("gradient step rewarding an action raises its probability") {
    TabularPolicy p;
    Task t = mod_task(3, 4, 10);
    auto ctx = make_solve_answer(t, 7);
    double before = p.action_distribution(ctx).probabilities[0];
    GradientAccumulator acc;
    p.grad_log_prob(ctx, 0, 1.0, acc);
    p.apply_gradient(acc, 0.1);
    double after = p.action_distribution(ctx).probabilities[0];
    CHECK(after > before);
}

TEST_CASE("finite differences: tabular and mlp grad_log_prob") {
    Rng rng(2024);
    TabularPolicy tab(InitSpec{0.8, 55});
    MlpPolicy mlp(mod_spec(10), 12, 7);
    double worst = 0.0;
    int checked = 0;
    for (int i = 0; i < 25; ++i) {
        PromptContext ctx = random_prompt(rng, 10);
        int a = rng.uniform_int(ctx.action_count());
        auto r1 = testutil::finite_diff_check(tab, ctx, a, 1e-5, rng, 2);
        auto r2 = testutil::finite_diff_check(mlp, ctx, a, 1e-5, rng, 2);
        worst = std::max({worst, r1.max_rel_err, r2.max_rel_err});
        checked += r1.checked + r2.checked;
    }
    CHECK(checked >= 100);
    CHECK(worst < 1e-4);
}

TEST_CASE("mlp rejects hidden_dim < 1; identical prompts give identical distributions") {
    CHECK_THROWS_AS(MlpPolicy(mod_spec(10), 0, 1), ParamError);
    MlpPolicy m(mod_spec(10), 8, 1);
    auto ctx = make_solve_cot(mod_task(4, 9, 10));
    auto d1 = m.action_distribution(ctx).probabilities;
    auto d2 = m.action_distribution(ctx).probabilities;
    for (std::size_t i = 0; i < d1.size(); ++i) CHECK(d1[i] == d2[i]);
}

TEST_CASE("kl_to_reference: closed form and Gibbs inequality") {
    TabularPolicy p;
    Task t = mod_task(3, 4, 10);
    auto ctx = make_judge_point(t, 7, CandidateSource::Answer);
    ReferencePolicy ref = snapshot_reference(p);
    CHECK(kl_to_reference(p, ref, ctx) == doctest::Approx(0.0).epsilon(1e-12));

    // move policy to q = [0.25, 0.75]: logit diff ln(3)
    GradientAccumulator acc;
    acc.block("row." + ctx.context_key(), 2)[1] = std::log(3.0);
    p.apply_gradient(acc, 1.0);
    ReferencePolicy ref2 = snapshot_reference(p);  // ref2 = [0.25, 0.75]
    TabularPolicy half;                             // [0.5, 0.5]
    double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
    CHECK(kl_to_reference(half, ref2, ctx) == doctest::Approx(expected).epsilon(1e-12));

    Rng rng(6);
    TabularPolicy a(InitSpec{1.0, 1}), b(InitSpec{1.0, 2});
    ReferencePolicy rb = snapshot_reference(b);
    for (int i = 0; i < 50; ++i) {
        PromptContext c = random_prompt(rng, 10);
        CHECK(kl_to_reference(a, rb, c) >= 0.0);
    }
}

TEST_CASE("grad_kl matches finite differences of the KL") {
    Rng rng(88);
    MlpPolicy mlp(mod_spec(6), 8, 10);
    MlpPolicy other(mod_spec(6), 8, 20);
    ReferencePolicy ref = snapshot_reference(other);
    PromptContext ctx = make_solve_answer(mod_task(2, 3, 6), 5);

    GradientAccumulator analytic;
    grad_kl_to_reference(mlp, ref, ctx, 1.0, analytic);
    double h = 1e-5;
    for (const auto& [name, grads] : analytic.blocks()) {
        for (int pick = 0; pick < 3; ++pick) {
            std::size_t i =
                static_cast<std::size_t>(rng.uniform_int(static_cast<int>(grads.size())));
            testutil::perturb_param(mlp, name, grads.size(), i, h);
            double up = kl_to_reference(mlp, ref, ctx);
            testutil::perturb_param(mlp, name, grads.size(), i, -2 * h);
            double down = kl_to_reference(mlp, ref, ctx);
            testutil::perturb_param(mlp, name, grads.size(), i, h);
            double numeric = (up - down) / (2 * h);
            CHECK(numeric == doctest::Approx(grads[i]).epsilon(1e-3).scale(1.0));
        }
    }
}

TEST_CASE("apply_gradient: linearity on raw parameters, NaN rejection, zero accumulator") {
    Task t = mod_task(1, 1, 4);
    auto ctx = make_solve_cot(t);

    // one application of 2g == two applications of g, on raw logits
    TabularPolicy a, b;
    GradientAccumulator ga, gb;
    a.grad_log_prob(ctx, 2, 1.0, ga);
    b.grad_log_prob(ctx, 2, 1.0, gb);
    a.apply_gradient(ga, 0.1);
    a.apply_gradient(ga, 0.1);
    b.apply_gradient(gb, 0.2);
    auto ja = a.params_to_json().at("rows");
    auto jb = b.params_to_json().at("rows");
    for (auto it = ja.begin(); it != ja.end(); ++it) {
        auto va = it.value().get<std::vector<double>>();
        auto vb = jb.at(it.key()).get<std::vector<double>>();
        REQUIRE(va.size() == vb.size());
        for (std::size_t i = 0; i < va.size(); ++i)
            CHECK(va[i] == doctest::Approx(vb[i]).epsilon(1e-9));
    }

    // NaN entry: numeric error, no mutation
    TabularPolicy c;
    GradientAccumulator gc;
    c.grad_log_prob(ctx, 1, 1.0, gc);
    auto before = c.params_to_json();
    GradientAccumulator bad;
    bad.block("row." + ctx.context_key(), ctx.action_count())[0] =
        std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(c.apply_gradient(bad, 0.1), NumericError);
    CHECK(c.params_to_json() == before);

    // zero accumulator: parameters unchanged
    GradientAccumulator zeros;
    zeros.block("row." + ctx.context_key(), ctx.action_count());
    c.apply_gradient(zeros, 0.5);
    CHECK(c.params_to_json() == before);
}

TEST_CASE("accumulator addition is commutative") {
    Rng rng(17);
    MlpPolicy m(mod_spec(8), 6, 2);
    GradientAccumulator a, b, ab, ba;
    PromptContext c1 = random_prompt(rng, 8);
    PromptContext c2 = random_prompt(rng, 8);
    m.grad_log_prob(c1, 0, 0.7, a);
    m.grad_log_prob(c2, 0, -1.3, b);
    ab.add(a);
    ab.add(b);
    ba.add(b);
    ba.add(a);
    for (const auto& [name, va] : ab.blocks()) {
        const auto& vb = ba.blocks().at(name);
        for (std::size_t i = 0; i < va.size(); ++i)
            CHECK(va[i] == doctest::Approx(vb[i]).epsilon(1e-12));
    }
}

TEST_CASE("reference snapshot is immutable under policy updates") {
    TabularPolicy p(InitSpec{0.3, 12});
    Task t = mod_task(5, 6, 9);
    auto ctx = make_solve_answer(t, 11);
    p.action_distribution(ctx);  // materialize
    ReferencePolicy ref = snapshot_reference(p);
    auto snap_before = ref.params_to_json().dump();
    auto dist_before = ref.action_distribution(ctx).probabilities;

    GradientAccumulator g;
    p.grad_log_prob(ctx, 0, 1.0, g);
    p.apply_gradient(g, 1.0);

    CHECK(ref.params_to_json().dump() == snap_before);
    auto dist_after = ref.action_distribution(ctx).probabilities;
    for (std::size_t i = 0; i < dist_before.size(); ++i)
        CHECK(dist_before[i] == dist_after[i]);
    CHECK(kl_to_reference(p, ref, ctx) > 0.0);

    // two snapshots without intervening updates agree
    ReferencePolicy r1 = snapshot_reference(p);
    ReferencePolicy r2 = snapshot_reference(p);
    CHECK(r1.params_to_json() == r2.params_to_json());
    CHECK(kl_to_reference(p, r1, ctx) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("checkpoint save/load round-trips exactly") {
    TabularPolicy tab(InitSpec{0.6, 21});
    Rng rng(3);
    for (int i = 0; i < 10; ++i) tab.action_distribution(random_prompt(rng, 10));
    auto j = policy_to_checkpoint(tab);
    auto restored = policy_from_checkpoint(j);
    CHECK(policy_to_checkpoint(*restored) == j);

    MlpPolicy mlp(mod_spec(10), 5, 8);
    auto jm = policy_to_checkpoint(mlp);
    auto rm = policy_from_checkpoint(jm);
    CHECK(policy_to_checkpoint(*rm) == jm);
    PromptContext ctx = make_solve_cot(mod_task(2, 2, 10));
    auto d1 = mlp.action_distribution(ctx).probabilities;
    auto d2 = rm->action_distribution(ctx).probabilities;
    for (std::size_t i = 0; i < d1.size(); ++i) CHECK(d1[i] == d2[i]);
}
