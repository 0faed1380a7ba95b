#include <doctest.h>

#include <sstream>

#include "../support/fixtures.hpp"
#include "eisgrpo/errors.hpp"
#include "eisgrpo/evalkit.hpp"

using namespace eisgrpo;
using eisgrpo::testing::always_a_policy;
using eisgrpo::testing::noiseless_samples;
using eisgrpo::testing::quality_policy;

namespace {

using V = JudgeVerdict;

PairResult pr(V a, V b) { return {"p", a, b, Label::A, Label::B}; }

std::vector<PairResult> prs(std::initializer_list<std::pair<V, V>> xs) {
    std::vector<PairResult> out;
    for (auto [a, b] : xs) out.push_back(pr(a, b));
    return out;
}

}  // namespace

TEST_SUITE("evalkit") {
    TEST_CASE("consistency fixtures") {
        CHECK(consistency(prs({{V::A, V::B}})) == 1.0);
        CHECK(consistency(prs({{V::B, V::A}})) == 1.0);
        CHECK(consistency(prs({{V::A, V::A}})) == 0.0);
        CHECK(consistency(prs({{V::A, V::B}, {V::B, V::A}, {V::A, V::A}, {V::Unparseable, V::B}})) == 0.5);
        CHECK(consistency(prs({{V::Tie, V::B}})) == 0.0);
        CHECK(consistency(prs({{V::Tie, V::Tie}})) == 0.0);
        CHECK_THROWS_AS(consistency({}), ContractError);
    }

    TEST_CASE("consistent accuracy fixtures and the tie rule") {
        CHECK(consistent_accuracy(prs({{V::A, V::B}})) == 1.0);
        CHECK(consistent_accuracy(prs({{V::Tie, V::B}})) == 1.0);
        CHECK(consistent_accuracy(prs({{V::A, V::Tie}})) == 1.0);
        CHECK(consistent_accuracy(prs({{V::Tie, V::A}})) == 0.0);
        CHECK(consistent_accuracy(prs({{V::Tie, V::Tie}})) == 0.0);
        CHECK(consistent_accuracy(prs({{V::A, V::A}})) == 0.0);
        CHECK(consistent_accuracy(prs({{V::B, V::A}})) == 0.0);
        CHECK(consistent_accuracy(prs({{V::Unparseable, V::B}})) == 0.0);
        CHECK(consistent_accuracy(prs({{V::Tie, V::Unparseable}})) == 0.0);
        CHECK(consistent_accuracy(prs({{V::A, V::B}, {V::B, V::A}, {V::A, V::A}, {V::Unparseable, V::B}})) == 0.25);
        CHECK_THROWS_AS(consistent_accuracy({}), ContractError);
    }

    TEST_CASE("ordering relations hold on random tie-free result sets") {
        Rng rng = make_stream(8, "evalkit-test");
        std::uniform_int_distribution<int> pick(0, 2);
        const V choices[] = {V::A, V::B, V::Unparseable};
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<PairResult> rs(1 + trial % 13);
            for (auto& r : rs) r = pr(choices[pick(rng)], choices[pick(rng)]);
            const double ca = consistent_accuracy(rs);
            CHECK(ca <= consistency(rs));
            CHECK(ca <= order_accuracy(rs, 1));
            CHECK(ca <= order_accuracy(rs, 2));
        }
    }

    TEST_CASE("both-order judging with hand-built policies") {
        const auto samples = noiseless_samples(50, 1);
        const auto constant = always_a_policy({12, 4, 4});
        const auto r = judge_both_orders(constant, samples[0]);
        CHECK(r.order1 == V::A);
        CHECK(r.order2 == V::A);

        const auto correct = quality_policy(4, 4);
        const auto results = judge_all(correct, samples, 3);
        for (const auto& x : results) {
            CHECK(x.order1 == V::A);
            CHECK(x.order2 == V::B);
        }
        CHECK(consistent_accuracy(results) == 1.0);
        const auto again = judge_all(correct, samples, 1);
        for (std::size_t i = 0; i < results.size(); ++i) CHECK(again[i].order2 == results[i].order2);
    }

    TEST_CASE("majority vote") {
        Rng rng = make_stream(9, "vote-test");
        CHECK(majority_vote(std::vector{Verdict::A}, rng) == Verdict::A);
        CHECK(majority_vote(std::vector{Verdict::B}, rng) == Verdict::B);
        CHECK(majority_vote(std::vector{Verdict::A, Verdict::A, Verdict::B}, rng) == Verdict::A);
        CHECK(majority_vote(std::vector{Verdict::Unparseable, Verdict::B, Verdict::Unparseable}, rng) == Verdict::B);
        CHECK(majority_vote(std::vector{Verdict::Unparseable}, rng) == Verdict::Unparseable);
        int a = 0;
        for (int i = 0; i < 10000; ++i) a += majority_vote(std::vector{Verdict::A, Verdict::B}, rng) == Verdict::A;
        CHECK(std::abs(a / 10000.0 - 0.5) <= 0.015);
    }

    TEST_CASE("compute-matched sample ratios") {
        CHECK(flop_ratio(32e9, 532.62, 7e9, 270.28) == 9);
        CHECK(flop_ratio(14e9, 1621.83, 7e9, 270.28) == 12);
        CHECK(flop_ratio(7e9, 270.28, 7e9, 270.28) == 1);
        CHECK(flop_ratio(1e9, 10.0, 7e9, 270.28) == 1);
        CHECK_THROWS_AS(flop_ratio(0.0, 1.0, 1.0, 1.0), ContractError);
        std::int64_t prev = 0;
        for (double m = 1e9; m < 1e11; m *= 1.3) {
            const auto r = flop_ratio(m, 400.0, 7e9, 270.28);
            CHECK(r >= prev);
            prev = r;
        }
    }

    TEST_CASE("external judgments: mixed fixture") {
        // s1 correct both; s2 flipped (A,A); s3 tie then correct; s4 picks y2 both times;
        // s5 unparseable first; s6 double tie; s7 missing order 2.
        std::istringstream in(R"({"sample_id":"s1","order":1,"verdict":"A","gold":"A"}
{"sample_id":"s1","order":2,"verdict":"B","gold":"B"}
{"sample_id":"s2","order":1,"verdict":"A","gold":"A"}
{"sample_id":"s2","order":2,"verdict":"A","gold":"B"}
{"sample_id":"s3","order":2,"verdict":"B","gold":"B"}
{"sample_id":"s3","order":1,"verdict":"Tie","gold":"A"}
{"sample_id":"s4","order":1,"verdict":"B","gold":"A"}
{"sample_id":"s4","order":2,"verdict":"A","gold":"B"}
{"sample_id":"s5","order":1,"verdict":"garbled","gold":"A"}
{"sample_id":"s5","order":2,"verdict":"B","gold":"B"}
{"sample_id":"s6","order":1,"verdict":"Tie","gold":"A"}
{"sample_id":"s6","order":2,"verdict":"Tie","gold":"B"}
{"sample_id":"s7","order":1,"verdict":"A","gold":"A"}
)");
        const auto rep = score_external(in);
        CHECK(rep.scored == 6);
        CHECK(rep.skipped == std::vector<std::string>{"s7"});
        CHECK(rep.consistency == doctest::Approx(2.0 / 6.0));          // s1, s4
        CHECK(rep.consistent_accuracy == doctest::Approx(2.0 / 6.0));  // s1, s3
        CHECK(rep.accuracy_order1 == doctest::Approx(2.0 / 6.0));      // s1, s2
        CHECK(rep.accuracy_order2 == doctest::Approx(3.0 / 6.0));      // s1, s3, s5
        const auto table = report_table(rep);
        CHECK(table.find("consistency") != std::string::npos);
        const auto js = report_json(rep);
        CHECK(js.find("\"skipped_count\": 1") != std::string::npos);
    }

    TEST_CASE("external judgments: all correct, and malformed input") {
        std::istringstream ok(R"({"sample_id":1,"order":1,"verdict":"A","gold":"A"}
{"sample_id":1,"order":2,"verdict":"B","gold":"B"}
)");
        CHECK(score_external(ok).consistent_accuracy == 1.0);
        std::istringstream dup(R"({"sample_id":"a","order":1,"verdict":"A","gold":"A"}
{"sample_id":"a","order":1,"verdict":"A","gold":"A"}
)");
        CHECK_THROWS_AS(score_external(dup), IoError);
        std::istringstream bad_order(R"({"sample_id":"a","order":3,"verdict":"A","gold":"A"})");
        CHECK_THROWS_AS(score_external(bad_order), IoError);
        std::istringstream not_json("{oops\n");
        CHECK_THROWS_AS(score_external(not_json), IoError);
    }
}
