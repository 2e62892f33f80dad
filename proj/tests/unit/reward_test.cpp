#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support.hpp"
#include "vcd/parser.hpp"
#include "vcd/reward.hpp"

using namespace vcd;

namespace {

Entity ent(std::int64_t id, const char* name, double x) { return {EntityId{id}, name, BoundingBox(x, 0, x + 50, 50)}; }

CausalGraph chain_gt() {
  return build_graph({ent(0, "laptop", 0), ent(1, "books", 100), ent(2, "glass", 200)},
                     {{EntityId{0}, EntityId{1}, {}}, {EntityId{1}, EntityId{2}, {}}});
}

NamedBoxPair edge_pair(const CausalGraph& g, std::int64_t a, std::int64_t b) {
  const Entity& x = g.entity(EntityId{a});
  const Entity& y = g.entity(EntityId{b});
  return {x.label, x.box, y.label, y.box, true};
}

}  // namespace

TEST_SUITE("reward") {
  TEST_CASE("weights") {
    const RewardWeights d;
    CHECK(d.recall == 0.5);
    CHECK(d.precision == 0.4);
    CHECK(d.format == 0.1);
    CHECK(RewardWeights::parse("0.5,0.4,0.1") == d);
    CHECK(RewardWeights::parse("1,0,0").sum() == 1.0);
    CHECK_THROWS_AS(RewardWeights::parse("0,0,0"), Error);
    CHECK_THROWS_AS(RewardWeights::parse("-1,1,1"), Error);
    CHECK_THROWS_AS(RewardWeights::parse("1,1"), Error);
    CHECK_THROWS_AS(RewardWeights::parse("a,b,c"), Error);
    CHECK_THROWS_AS(RewardWeights::parse("nan,1,1"), Error);
  }

  TEST_CASE("perfect, empty and partial predictions") {
    const CausalGraph gt = chain_gt();
    const RewardConfig cfg;
    const RewardBreakdown perfect =
        causal_reward(format_causal_output({edge_pair(gt, 0, 1), edge_pair(gt, 1, 2)}), gt, cfg);
    CHECK(perfect.total == doctest::Approx(1.0));
    CHECK(perfect.recall_term == 1.0);

    const RewardBreakdown empty = causal_reward("<causal pairs>[]</causal pairs>", gt, cfg);
    CHECK(empty.total == doctest::Approx(0.1));
    CHECK(empty.format_term == 1.0);

    const RewardBreakdown half = causal_reward(format_causal_output({edge_pair(gt, 0, 1)}), gt, cfg);
    CHECK(half.recall_term == 0.5);
    CHECK(half.precision_term == 1.0);
    CHECK(half.total == doctest::Approx(0.75));

    const RewardBreakdown garbage = causal_reward("I cannot see the image", gt, cfg);
    CHECK(garbage.total == 0.0);
  }

  TEST_CASE("graded format credit") {
    const CausalGraph gt = chain_gt();
    const std::string valid = format_pairs_list({edge_pair(gt, 0, 1)});
    const std::string mixed = "<causal pairs>" + valid.substr(0, valid.size() - 1) +
                              R"(, {"a": [5,5,1,1], "b": [0,0,1,1]}]</causal pairs>)";
    RewardConfig binary;
    CHECK(causal_reward(mixed, gt, binary).total == 0.0);
    RewardConfig graded;
    graded.graded_format = true;
    const RewardBreakdown g = causal_reward(mixed, gt, graded);
    CHECK(g.format_term == 0.5);
    CHECK(g.recall_term == 0.5);
  }

  TEST_CASE("reversed direction earns nothing") {
    const CausalGraph gt = chain_gt();
    const RewardBreakdown r = causal_reward(format_causal_output({edge_pair(gt, 1, 0)}), gt, RewardConfig{});
    CHECK(r.recall_term == 0.0);
    CHECK(r.precision_term == 0.0);
  }

  TEST_CASE("empty ground truth") {
    const CausalGraph gt = build_graph({ent(0, "a", 0)}, {});
    CHECK_THROWS_AS(causal_reward("<causal pairs>[]</causal pairs>", gt, RewardConfig{}), Error);
  }

  TEST_CASE("score batch") {
    const CausalGraph gt = chain_gt();
    GroundTruthIndex index{{1, gt}, {2, build_graph({ent(0, "a", 0)}, {})}};
    const RewardConfig cfg;
    CHECK(score_batch({}, index, cfg).empty());

    const std::string perfect = format_causal_output({edge_pair(gt, 0, 1), edge_pair(gt, 1, 2)});
    const auto one = score_batch({{1, perfect}}, index, cfg);
    REQUIRE(one.size() == 1);
    CHECK(*one[0].breakdown == causal_reward(perfect, gt, cfg));

    const auto mixed = score_batch({{1, perfect}, {99, perfect}, {2, perfect}, {1, "junk"}}, index, cfg);
    REQUIRE(mixed.size() == 4);
    CHECK(mixed[0].ok());
    CHECK(mixed[1].error->code == ErrorCode::kUnknownGroundTruthRef);
    CHECK(mixed[2].error->code == ErrorCode::kEmptyGroundTruth);
    CHECK(mixed[3].breakdown->total == 0.0);
  }

  TEST_CASE("batch order, shuffling and parallelism") {
    vcd::testing::Rng rng(31);
    GroundTruthIndex index;
    std::vector<ScoreItem> items;
    for (std::int64_t id = 0; id < 40; ++id) {
      const CausalGraph gt = vcd::testing::random_graph(rng, 6, 8, 0);
      index.emplace(id, gt);
      std::vector<NamedBoxPair> pairs;
      for (const auto& e : gt.edges()) {
        if (rng.chance(0.6)) pairs.push_back(edge_pair(gt, e.cause.value, e.effect.value));
      }
      items.push_back({id, format_causal_output(pairs)});
    }
    const RewardConfig cfg;
    const auto serial = score_batch(items, index, cfg, 1);
    const auto parallel = score_batch(items, index, cfg, 4);
    REQUIRE(serial.size() == items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      CHECK(*serial[i].breakdown == *parallel[i].breakdown);
      CHECK(*serial[i].breakdown == causal_reward(items[i].prediction_text, index.at(items[i].img_id), cfg));
      CHECK(serial[i].breakdown->total >= 0.0);
      CHECK(serial[i].breakdown->total <= cfg.weights.sum() + 1e-12);
    }
    auto shuffled = items;
    std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
    const auto again = score_batch(shuffled, index, cfg, 2);
    std::vector<double> a, b;
    for (const auto& r : serial) a.push_back(r.breakdown->total);
    for (const auto& r : again) b.push_back(r.breakdown->total);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}
