#include <doctest.h>

#include <limits>

#include "../support.hpp"
#include "vcd/assignment.hpp"
#include "vcd/error.hpp"

using namespace vcd;
using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

namespace {

Entity at(std::int64_t id, double x, double y, double w = 10, double h = 10) {
  return {EntityId{id}, "e", BoundingBox(x, y, x + w, y + h)};
}

}  // namespace

TEST_SUITE("assignment") {
  TEST_CASE("two by two examples") {
    const Assignment a = hungarian(CostMatrix::from_rows({{0, 1}, {1, 0}}));
    CHECK(a.pairs == Pairs{{0, 0}, {1, 1}});
    CHECK(a.total_cost == 0.0);
    const Assignment b = hungarian(CostMatrix::from_rows({{5, 1}, {1, 5}}));
    CHECK(b.pairs == Pairs{{0, 1}, {1, 0}});
    CHECK(b.total_cost == 2.0);
  }

  TEST_CASE("ties resolve to the lexicographically smallest assignment") {
    CHECK(hungarian(CostMatrix::from_rows({{1, 1}, {1, 1}})).pairs == Pairs{{0, 0}, {1, 1}});
    CHECK(hungarian(CostMatrix::from_rows({{0, 0, 0}})).pairs == Pairs{{0, 0}});
    CHECK(hungarian(CostMatrix::from_rows({{2}, {1}, {1}})).pairs == Pairs{{1, 0}});
  }

  TEST_CASE("rectangular and empty matrices") {
    CHECK(hungarian(CostMatrix()).pairs.empty());
    CHECK(hungarian(CostMatrix(0, 3, {})).pairs.empty());
    const Assignment wide = hungarian(CostMatrix::from_rows({{4, 1, 3}, {2, 0, 5}}));
    CHECK(wide.pairs == Pairs{{0, 1}, {1, 0}});
    CHECK(wide.total_cost == 3.0);
    const Assignment tall = hungarian(CostMatrix::from_rows({{4, 2}, {1, 0}, {3, 5}}));
    CHECK(tall.pairs.size() == 2);
    CHECK(tall.total_cost == 3.0);
  }

  TEST_CASE("non-finite costs are rejected") {
    const double inf = std::numeric_limits<double>::infinity();
    try {
      CostMatrix::from_rows({{0, inf}});
      FAIL("accepted infinity");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNonFiniteCost);
    }
    CHECK_THROWS_AS(CostMatrix(1, 1, {std::nan("")}), Error);
    CHECK_THROWS_AS(CostMatrix(2, 2, {1.0}), Error);
  }

  TEST_CASE("agrees with exhaustive search on small integer matrices") {
    vcd::testing::Rng rng(11);
    for (int k = 0; k < 300; ++k) {
      const std::size_t r = static_cast<std::size_t>(rng.integer(1, 5));
      const std::size_t c = static_cast<std::size_t>(rng.integer(1, 5));
      std::vector<std::vector<double>> m(r, std::vector<double>(c));
      for (auto& row : m)
        for (auto& v : row) v = static_cast<double>(rng.integer(0, 3));
      const Assignment got = hungarian(CostMatrix::from_rows(m));
      const auto want = vcd::testing::brute_assignment(m);
      CHECK(got.total_cost == want.total);
      CHECK(got.pairs == want.pairs);
    }
  }

  TEST_CASE("entity matching gates after assignment") {
    const std::vector<Entity> gt{at(0, 0, 0), at(1, 100, 0)};
    const std::vector<Entity> pred{at(10, 1, 1), at(11, 300, 300)};
    const EntityMatching m = match_entities(pred, gt, 0.5);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].pred == EntityId{10});
    CHECK(m.pairs[0].gt == EntityId{0});
    CHECK(m.gt_for(EntityId{10}) == EntityId{0});
    CHECK_FALSE(m.gt_for(EntityId{11}).has_value());
    CHECK(m.unmatched_pred == std::set<EntityId>{EntityId{11}});
    CHECK(m.unmatched_gt == std::set<EntityId>{EntityId{1}});
    for (const auto& p : m.pairs) CHECK(p.giou >= 0.5);
  }

  TEST_CASE("masking before assignment can recover a pair that post-gating drops") {
    // Global optimum pairs p0-g1 (weak) and p1-g0; masking keeps only strong pairs.
    const std::vector<Entity> gt{at(0, 0, 0, 100, 100), at(1, 95, 0, 100, 100)};
    const std::vector<Entity> pred{at(10, 50, 0, 100, 100), at(11, 0, 0, 100, 100)};
    const EntityMatching after = match_entities(pred, gt, 0.9, Gating::kAfterAssignment);
    const EntityMatching before = match_entities(pred, gt, 0.9, Gating::kMaskBefore);
    CHECK(before.pairs.size() >= after.pairs.size());
    for (const auto& p : before.pairs) CHECK(p.giou >= 0.9);
  }

  TEST_CASE("empty sides") {
    const EntityMatching m = match_entities({}, {at(0, 0, 0)}, 0.5);
    CHECK(m.pairs.empty());
    CHECK(m.unmatched_gt.size() == 1);
  }
}
