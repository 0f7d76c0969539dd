#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spark/rng.hpp"
#include "spark/tasks.hpp"
#include "spark/verifier.hpp"

using namespace spark;

namespace {

Task mod_task(int a, int b, int m) {
    Task t;
    t.id = "t";
    t.family = Family::ModArith;
    t.mod_arith = {a, b, m, ModOp::Add};
    t.gold_cot = a + b;
    t.gold_answer = (a + b) % m;
    return t;
}

}  // namespace

TEST_CASE("verify_answer is exact match on the gold answer") {
    Task t = mod_task(3, 4, 10);
    CHECK(verify_answer(7, t) == 1);
    CHECK(verify_answer(6, t) == 0);
    CHECK(verify_answer(-5, t) == 0);   // out of range is just wrong, not an error
    CHECK(verify_answer(1000, t) == 0);
}

TEST_CASE("verify_cot checks the unreduced intermediate") {
    Task t = mod_task(3, 4, 10);
    CHECK(verify_cot(7, t) == 1);
    CHECK(verify_cot(t.gold_answer == 7 ? 8 : 7, t) == 0);
    Task big = mod_task(8, 9, 10);  // cot 17, answer 7
    CHECK(verify_cot(17, big) == 1);
    CHECK(verify_cot(7, big) == 0);
}

TEST_CASE("extract_boxed basic cases") {
    CHECK(extract_boxed("reasoning... \\box{17}") == 17);
    CHECK(extract_boxed("\\box{3} then \\box{5}") == 5);  // last box wins
    CHECK(!extract_boxed("no box here").has_value());
    CHECK(!extract_boxed("\\box{}").has_value());
    CHECK(!extract_boxed("\\box{abc}").has_value());
    CHECK(!extract_boxed("\\box{12").has_value());
    CHECK(extract_boxed("\\box{  42  }") == 42);
    CHECK(extract_boxed("\\box{-3}") == -3);
}

TEST_CASE("extract_boxed inverts render_boxed for in-range integers") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        int v = rng.uniform_int(2001) - 1000;
        CHECK(extract_boxed("some text " + render_boxed(v) + " trailing") == v);
    }
}
