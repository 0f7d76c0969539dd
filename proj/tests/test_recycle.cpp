#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "spark/errors.hpp"
#include "spark/recycle.hpp"
#include "spark/verifier.hpp"

using namespace spark;

namespace {

Task mod_task(int a, int b, int m) {
    Task t;
    t.id = "m" + std::to_string(a) + "_" + std::to_string(b) + "_" + std::to_string(m);
    t.family = Family::ModArith;
    t.mod_arith = {a, b, m, ModOp::Add};
    t.gold_cot = a + b;
    t.gold_answer = (a + b) % m;
    return t;
}

// group with prescribed answer rewards; correct samples carry the gold pair
RolloutGroup group_with_rewards(const Task& t, const std::vector<int>& rewards) {
    RolloutGroup g;
    g.task = t;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        RolloutSample s;
        if (rewards[i] == 1) {
            s.cot_action = t.gold_cot;
            s.answer_action = t.gold_answer;
        } else {
            s.cot_action = (t.gold_cot + 1) % t.cot_vocab();
            s.answer_action = (t.gold_answer + 1) % t.mod_arith.modulus;
        }
        s.cot_log_prob = s.answer_log_prob = -1.0;
        g.samples.push_back(s);
        g.rewards.push_back(rewards[i]);
        g.cot_rewards.push_back(verify_cot(s.cot_action, t));
    }
    return g;
}

}  // namespace

TEST_CASE("build_pointwise: one sample per member, labels follow the source") {
    Task t = mod_task(3, 4, 10);
    auto g = group_with_rewards(t, {1, 0});
    auto ans = build_pointwise(g, CandidateSource::Answer);
    REQUIRE(ans.size() == 2);
    CHECK(ans[0].label_a == 1);
    CHECK(ans[1].label_a == 0);
    CHECK(ans[0].cand_a == t.gold_answer);

    auto cot = build_pointwise(g, CandidateSource::Cot);
    REQUIRE(cot.size() == 2);
    CHECK(cot[0].label_a == g.cot_rewards[0]);
    CHECK(cot[1].label_a == g.cot_rewards[1]);
    CHECK(cot[0].cand_a == g.samples[0].cot_action);
}

TEST_CASE("build_pairwise: only mixed pairs, counts match combinations") {
    Task t = mod_task(3, 4, 10);
    Rng rng(1);
    CHECK(build_pairwise(group_with_rewards(t, {1, 1, 1, 1}), CandidateSource::Answer, 10, rng)
              .empty());

    auto one = build_pairwise(group_with_rewards(t, {1, 0}), CandidateSource::Answer, 1, rng);
    REQUIRE(one.size() == 1);
    CHECK(one[0].label_a + one[0].label_b == 1);

    auto four =
        build_pairwise(group_with_rewards(t, {1, 1, 0, 0}), CandidateSource::Answer, 10, rng);
    CHECK(four.size() == 4);  // 2 winners x 2 losers
    for (const auto& s : four) {
        CHECK(s.label_a + s.label_b == 1);
        int winner = s.label_a == 1 ? s.cand_a : s.cand_b;
        int loser = s.label_a == 1 ? s.cand_b : s.cand_a;
        CHECK(verify_answer(winner, t) == 1);
        CHECK(verify_answer(loser, t) == 0);
    }

    auto capped =
        build_pairwise(group_with_rewards(t, {1, 1, 0, 0}), CandidateSource::Answer, 3, rng);
    CHECK(capped.size() == 3);
}

TEST_CASE("pair presentation order is randomized") {
    Task t = mod_task(3, 4, 10);
    auto g = group_with_rewards(t, {1, 0});
    Rng rng(99);
    int winner_first = 0;
    for (int i = 0; i < 200; ++i) {
        auto pairs = build_pairwise(g, CandidateSource::Answer, 1, rng);
        if (pairs[0].label_a == 1) ++winner_first;
    }
    CHECK(winner_first > 60);
    CHECK(winner_first < 140);
}

TEST_CASE("build_reflect: only reward-0 members") {
    Task t = mod_task(3, 4, 10);
    CHECK(build_reflect(group_with_rewards(t, {1, 1})).empty());
    CHECK(build_reflect(group_with_rewards(t, {0, 0})).size() == 2);
    auto one = build_reflect(group_with_rewards(t, {1, 0}));
    REQUIRE(one.size() == 1);
    CHECK(verify_answer(one[0].cand_a, t) == 0);
    CHECK(one[0].label_a == 0);
}

TEST_CASE("assemble_on_policy honors the mix") {
    Task t = mod_task(3, 4, 10);
    auto g = group_with_rewards(t, {1, 0, 0, 1});
    Rng rng(5);
    auto point = build_pointwise(g, CandidateSource::Answer);
    auto pair = build_pairwise(g, CandidateSource::Answer, 10, rng);
    auto reflect = build_reflect(g);
    Provenance prov{t.id, group_hash(g), 0};

    MixConfig point_only{12, 1.0, 0.0, 0.0};
    auto b1 = assemble_on_policy(point, pair, reflect, point_only, rng, prov);
    CHECK(!b1.samples.empty());
    for (const auto& s : b1.samples) CHECK(s.kind == RecycleKind::Pointwise);

    MixConfig zero{0, 1.0, 1.0, 1.0};
    CHECK(assemble_on_policy(point, pair, reflect, zero, rng, prov).samples.empty());

    MixConfig ample{1000, 1.0, 1.0, 1.0};
    auto b3 = assemble_on_policy(point, pair, reflect, ample, rng, prov);
    CHECK(b3.samples.size() == point.size() + pair.size() + reflect.size());
}

TEST_CASE("assembly is deterministic given the rng seed") {
    Task t = mod_task(2, 9, 11);
    auto g = group_with_rewards(t, {1, 0, 1, 0, 0, 1});
    Provenance prov{t.id, group_hash(g), 3};
    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        auto point = build_pointwise(g, CandidateSource::Answer);
        auto pair = build_pairwise(g, CandidateSource::Answer, 4, rng);
        auto reflect = build_reflect(g);
        MixConfig mix{9, 1.0, 1.0, 1.0};
        auto b = assemble_on_policy(point, pair, reflect, mix, rng, prov);
        nlohmann::json j = nlohmann::json::array();
        for (const auto& s : b.samples) j.push_back(recycled_sample_to_json(s));
        return j.dump();
    };
    CHECK(run(7) == run(7));
}

TEST_CASE("recycled_to_tasks maps kinds to judgment tasks with RLVR-derived golds") {
    Task t = mod_task(3, 4, 10);  // gold 7
    auto g = group_with_rewards(t, {1, 0});
    Rng rng(2);
    RecycleBatch batch;
    batch.provenance = {t.id, group_hash(g), 0};
    batch.samples = build_pointwise(g, CandidateSource::Answer);
    auto pairs = build_pairwise(g, CandidateSource::Answer, 1, rng);
    auto refl = build_reflect(g);
    batch.samples.insert(batch.samples.end(), pairs.begin(), pairs.end());
    batch.samples.insert(batch.samples.end(), refl.begin(), refl.end());

    auto tasks = recycled_to_tasks(batch);
    REQUIRE(tasks.size() == 4);
    CHECK(tasks[0].prompt.mode == Mode::JudgePoint);
    CHECK(tasks[0].gold_action == 1);  // correct candidate -> Correct
    CHECK(tasks[1].prompt.mode == Mode::JudgePoint);
    CHECK(tasks[1].gold_action == 0);
    CHECK(tasks[2].prompt.mode == Mode::JudgePair);
    CHECK(tasks[2].gold_action == (pairs[0].label_a == 1 ? 0 : 1));
    CHECK(tasks[3].prompt.mode == Mode::Reflect);
    CHECK(tasks[3].gold_action == answer_value_to_action(t, 7));
    for (const auto& jt : tasks) CHECK(jt.id.find(t.id) == 0);  // provenance in the id
}

TEST_CASE("recycled_to_tasks rejects a tied pairwise sample") {
    Task t = mod_task(3, 4, 10);
    RecycleBatch batch;
    RecycledSample s;
    s.kind = RecycleKind::Pairwise;
    s.task = t;
    s.label_a = s.label_b = 1;
    batch.samples.push_back(s);
    CHECK_THROWS_AS(recycled_to_tasks(batch), ContractError);
}

TEST_CASE("label soundness over randomized groups") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        Task t = mod_task(rng.uniform_int(10), rng.uniform_int(10), 10);
        std::vector<int> rewards;
        int n = 2 + rng.uniform_int(7);
        for (int i = 0; i < n; ++i) rewards.push_back(rng.uniform_int(2));
        auto g = group_with_rewards(t, rewards);
        for (CandidateSource src : {CandidateSource::Answer, CandidateSource::Cot}) {
            for (const auto& s : build_pointwise(g, src)) {
                int re = src == CandidateSource::Cot ? verify_cot(s.cand_a, t)
                                                     : verify_answer(s.cand_a, t);
                CHECK(s.label_a == re);
            }
            for (const auto& s : build_pairwise(g, src, 100, rng)) {
                auto re = [&](int v) {
                    return src == CandidateSource::Cot ? verify_cot(v, t) : verify_answer(v, t);
                };
                CHECK(s.label_a == re(s.cand_a));
                CHECK(s.label_b == re(s.cand_b));
                CHECK(s.label_a + s.label_b == 1);
            }
        }
        for (const auto& s : build_reflect(g)) CHECK(verify_answer(s.cand_a, t) == 0);
    }
}

TEST_CASE("recycle queue drains in FIFO order up to the quota") {
    RecycleQueue q;
    Task t = mod_task(1, 2, 5);
    std::vector<JudgmentTask> tasks;
    for (int i = 0; i < 5; ++i) {
        JudgmentTask jt;
        jt.id = "jt" + std::to_string(i);
        jt.prompt = make_judge_point(t, i % 5, CandidateSource::Answer);
        jt.gold_action = 0;
        tasks.push_back(jt);
    }
    q.push(tasks);
    auto first = q.drain(3);
    REQUIRE(first.size() == 3);
    CHECK(first[0].id == "jt0");
    CHECK(first[2].id == "jt2");
    auto rest = q.drain(10);
    CHECK(rest.size() == 2);
    CHECK(q.drain(10).empty());
}
