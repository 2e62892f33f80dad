#include <doctest.h>

#include "../support.hpp"
#include "vcd/error.hpp"
#include "vcd/metrics.hpp"

using namespace vcd;

namespace {

Entity ent(std::int64_t id, double x) { return {EntityId{id}, "e", BoundingBox(x, 0, x + 50, 50)}; }
CausalEdge edge(std::int64_t a, std::int64_t b) { return {EntityId{a}, EntityId{b}, {}}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

CausalGraph chain_gt() { return build_graph({ent(0, 0), ent(1, 100), ent(2, 200)}, {edge(0, 1), edge(1, 2)}); }

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("three node fixture") {
    const CausalGraph pred = build_graph({ent(10, 0), ent(11, 100), ent(12, 200)}, {edge(10, 11)});
    const PairEvaluation e = evaluate_pair(pred, chain_gt(), 0.5);
    CHECK(e.score.recall == 0.5);
    CHECK(e.score.precision == 1.0);
    CHECK(e.score.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(e.score.matched_edges == 1);
  }

  TEST_CASE("reversed edge does not count") {
    const CausalGraph pred = build_graph({ent(10, 0), ent(11, 100), ent(12, 200)}, {edge(11, 10)});
    const PairEvaluation e = evaluate_pair(pred, chain_gt(), 0.5);
    CHECK(e.score.recall == 0.0);
    CHECK(e.score.precision == 0.0);
    CHECK(e.score.f1 == 0.0);
  }

  TEST_CASE("empty prediction scores zero precision") {
    const CausalGraph pred = build_graph({ent(10, 0)}, {});
    const PairEvaluation e = evaluate_pair(pred, chain_gt(), 0.5);
    CHECK(e.score.precision == 0.0);
    CHECK(e.score.empty_prediction);
  }

  TEST_CASE("empty ground truth is rejected") {
    const CausalGraph gt = build_graph({ent(0, 0)}, {});
    CHECK(code_of([&] { evaluate_pair(gt, gt, 0.5); }) == ErrorCode::kEmptyGroundTruth);
  }

  TEST_CASE("reachable recall") {
    // Only entities 0 and 1 detected: one of two edges reachable.
    const CausalGraph pred = build_graph({ent(10, 0), ent(11, 100)}, {});
    const PairEvaluation e = evaluate_pair(pred, chain_gt(), 0.5);
    CHECK(e.reachable_recall == 0.5);
  }

  TEST_CASE("reasoning loss") {
    CHECK(reasoning_loss(5.7, 10.33) == doctest::Approx(0.448).epsilon(1e-3));
    CHECK(reasoning_loss(34.2, 37.2) == doctest::Approx(0.0806).epsilon(1e-3));
    CHECK(reasoning_loss(0.5, 0.5) == 0.0);
    const ReasoningLossReport r = reasoning_loss_report(0.6, 0.5);
    CHECK(r.clamped);
    CHECK(r.loss == 0.0);
    CHECK(code_of([] { reasoning_loss(0.0, 0.0); }) == ErrorCode::kZeroReachableRecall);
  }

  TEST_CASE("recall stability index") {
    CHECK(rsi({0.0, 1.0}) == 0.0);
    CHECK(rsi({0.4, 0.4, 0.4}) == 1.0);
    CHECK(rsi({0.5, 0.3}) == doctest::Approx(0.75));
    CHECK(code_of([] { rsi({}); }) == ErrorCode::kEmptyBatch);
    CHECK(code_of([] { rsi({0.0, 0.0}); }) == ErrorCode::kZeroMeanRecall);
    const SweepReport flat = make_sweep_report({0.3, 0.5}, {0.0, 0.0});
    CHECK_FALSE(flat.rsi_defined);
    CHECK(flat.rsi == 0.0);
  }

  TEST_CASE("default thresholds") {
    const auto t = default_sweep_thresholds();
    REQUIRE(t.size() == 5);
    CHECK(t.front() == doctest::Approx(0.3));
    CHECK(t.back() == doctest::Approx(0.7));
  }

  TEST_CASE("recall falls as the threshold rises on jittered boxes") {
    vcd::testing::Rng rng(21);
    for (int k = 0; k < 50; ++k) {
      const CausalGraph gt = vcd::testing::random_graph(rng, 6, 8, 0);
      std::vector<Entity> pe;
      for (const auto& e : gt.entities()) pe.push_back({e.id, e.label, vcd::testing::jittered(rng, e.box, 0.3)});
      std::vector<CausalEdge> pd;
      for (const auto& e : gt.edges()) pd.push_back({e.cause, e.effect, {}});
      const CausalGraph pred = build_graph(pe, pd);
      const SweepReport s = threshold_sweep(pred, gt, default_sweep_thresholds(), Gating::kMaskBefore);
      for (std::size_t i = 1; i < s.recalls.size(); ++i) CHECK(s.recalls[i] <= s.recalls[i - 1] + 1e-12);
      if (s.rsi_defined) {
        CHECK(s.rsi >= 0.0);
        CHECK(s.rsi <= 1.0);
      }
    }
  }

  TEST_CASE("aggregation") {
    GraphScore zero;
    zero.gt_edges = 2;
    zero.pred_edges = 1;
    GraphScore one;
    one.recall = one.precision = one.f1 = 1.0;
    one.matched_edges = one.pred_edges = one.gt_edges = 2;
    CHECK(aggregate({zero, one}, Aggregation::kMacro).recall == 0.5);
    CHECK(aggregate({one}, Aggregation::kMacro).recall == 1.0);

    GraphScore a;
    a.matched_edges = 1;
    a.gt_edges = 2;
    a.pred_edges = 1;
    a.recall = 0.5;
    GraphScore b;
    b.matched_edges = 3;
    b.gt_edges = 4;
    b.pred_edges = 3;
    b.recall = 0.75;
    const GraphScore micro = aggregate({a, b}, Aggregation::kMicro);
    CHECK(micro.recall == doctest::Approx(4.0 / 6.0));
    CHECK(micro.precision == 1.0);
    CHECK(code_of([] { aggregate({}, Aggregation::kMacro); }) == ErrorCode::kEmptyBatch);
  }

  TEST_CASE("f1") {
    CHECK(f1_score(0.0, 0.0) == 0.0);
    CHECK(f1_score(1.0, 0.5) == doctest::Approx(2.0 / 3.0));
  }
}
