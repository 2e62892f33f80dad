#include <doctest.h>

#include <functional>

#include "vcd/error.hpp"
#include "vcd/parser.hpp"
#include "vcd/search.hpp"

using namespace vcd;

namespace {

class FunctionBackend final : public Backend {
 public:
  explicit FunctionBackend(std::function<std::string(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
  ChatResponse complete(const ChatRequest& r) override {
    ++calls;
    ChatResponse out;
    out.text = fn_(r);
    return out;
  }
  std::size_t calls = 0;

 private:
  std::function<std::string(const ChatRequest&)> fn_;
};

const BoundingBox kLaptop(0, 0, 50, 50), kBooks(100, 0, 150, 50), kGlass(200, 0, 250, 50);

CausalGraph chain_gt() {
  return build_graph({{EntityId{0}, "laptop", kLaptop}, {EntityId{1}, "books", kBooks}, {EntityId{2}, "glass", kGlass}},
                     {{EntityId{0}, EntityId{1}, {}}, {EntityId{1}, EntityId{2}, {}}});
}

const NamedBoxPair kFirst{"laptop", kLaptop, "books", kBooks, true};
const NamedBoxPair kSecond{"books", kBooks, "glass", kGlass, true};
const NamedBoxPair kWrong{"glass", kGlass, "laptop", kLaptop, true};

std::string region(const char* name, double extent = 1000) {
  return format_region_output(RegionChoice{false, name, BoundingBox(0, 0, extent, extent)});
}

// Echoes the candidates of the causality prompt as confirmed pairs.
std::string echo_candidates(const ChatRequest& r) {
  const std::string marker = "Entity pairs: ";
  const auto at = r.user_text.find(marker) + marker.size();
  return "<causal pairs>" + r.user_text.substr(at, r.user_text.find('\n', at) - at) + "</causal pairs>";
}

// Root regions by sample seed: 0 good, 1 poor, 2 END TRACE. Greedy calls pick
// the poor region first and stop once something was explored. Only the good
// region's crop reveals the true pairs.
std::string dominating_world(const ChatRequest& r) {
  if (r.purpose == "region") {
    const bool explored = r.user_text.find("Explored regions: [].") == std::string::npos;
    if (r.decode.temperature == 0.0) return explored ? "END TRACE" : region("poor", 900);
    switch (*r.decode.seed % 3) {
      case 0: return region("good");
      case 1: return region("poor", 900);
      default: return "END TRACE";
    }
  }
  if (r.purpose == "entity") {
    const bool good = r.images.at(0).handle() == "img.jpg#crop=[0, 0, 1000, 1000]";
    return good ? format_entity_output({kFirst, kSecond}) : format_entity_output({kWrong});
  }
  return echo_candidates(r);
}

SearchParams small_params() {
  SearchParams p;
  p.branching = 3;
  p.iterations = 20;
  p.step_limit = 6;
  p.crop_padding = 0.0;
  p.verify = true;
  return p;
}

SearchContext context(const CausalGraph& gt, Backend& b, SearchParams p = small_params()) {
  return SearchContext{ImageRef{"img.jpg", "", "image/jpeg", std::nullopt}, &gt, &b, p};
}

}  // namespace

TEST_SUITE("search") {
  TEST_CASE("uct score") {
    CHECK(uct_score(0.5, 1, 1, 1.414) == 0.5);
    CHECK(uct_score(0.5, 2, 10, 1.414) == doctest::Approx(2.017).epsilon(1e-3));
    double prev = uct_score(0.5, 2, 2, 1.414);
    for (std::size_t parent = 3; parent < 50; ++parent) {
      const double s = uct_score(0.5, 2, parent, 1.414);
      CHECK(s > prev);
      prev = s;
    }
  }

  TEST_CASE("selection") {
    SearchNode root;
    root.expanded = true;
    root.visits = 6;
    for (const auto& [q, n] : {std::pair{0.9, 5}, std::pair{0.1, 1}}) {
      auto c = std::make_unique<SearchNode>();
      c->parent = &root;
      c->q = q;
      c->visits = static_cast<std::size_t>(n);
      root.children.push_back(std::move(c));
    }
    auto path = select(root, 1.414);
    REQUIRE(path.size() == 2);
    CHECK(path[1] == root.children[1].get());

    auto fresh = std::make_unique<SearchNode>();
    fresh->parent = &root;
    root.children.push_back(std::move(fresh));
    auto other = std::make_unique<SearchNode>();
    other->parent = &root;
    root.children.push_back(std::move(other));
    path = select(root, 1.414);
    CHECK(path.back() == root.children[2].get());

    SearchNode lone;
    CHECK(select(lone, 1.414) == std::vector<SearchNode*>{&lone});
  }

  TEST_CASE("backpropagation") {
    SearchNode single;
    backpropagate({&single}, 0.3);
    CHECK(single.q == 0.3);
    CHECK(single.visits == 1);
    backpropagate({&single}, 0.5);
    CHECK(single.q == doctest::Approx(0.4));

    SearchNode parent;
    parent.visits = 3;
    parent.expanded = true;
    for (const auto& [q, n] : {std::pair{0.8, 2}, std::pair{0.2, 1}}) {
      auto c = std::make_unique<SearchNode>();
      c->parent = &parent;
      c->q = q;
      c->visits = static_cast<std::size_t>(n);
      parent.children.push_back(std::move(c));
    }
    backpropagate({&parent, parent.children[1].get()}, 0.2);
    CHECK(parent.q == doctest::Approx(0.5));
    CHECK(parent.visits == 4);

    SearchNode p2;
    p2.visits = 3;
    p2.expanded = true;
    auto a = std::make_unique<SearchNode>();
    a->parent = &p2;
    a->q = 1.0;
    a->visits = 3;
    auto b = std::make_unique<SearchNode>();
    b->parent = &p2;
    p2.children.push_back(std::move(a));
    p2.children.push_back(std::move(b));
    backpropagate({&p2, p2.children[1].get()}, 0.0);
    CHECK(p2.q == doctest::Approx(0.75));
  }

  TEST_CASE("expansion") {
    const CausalGraph gt = chain_gt();
    FunctionBackend three([](const ChatRequest& r) {
      const std::string names[] = {"desk", "shelf", "floor"};
      return region(names[*r.decode.seed % 3].c_str());
    });
    SearchNode root;
    CHECK(expand(root, context(gt, three)) == 3);
    CHECK(root.expanded);
    CHECK(three.calls == 3);

    // Whitespace differences parse to the same state.
    FunctionBackend dup([](const ChatRequest& r) {
      if (*r.decode.seed == 2) return region("floor");
      return *r.decode.seed == 0 ? region("desk") : "\n\n" + region("desk") + "  ";
    });
    SearchNode root2;
    CHECK(expand(root2, context(gt, dup)) == 2);

    FunctionBackend end([](const ChatRequest&) { return std::string("END TRACE"); });
    SearchNode root3;
    CHECK(expand(root3, context(gt, end)) == 1);
    CHECK(root3.children[0]->terminal);

    FunctionBackend junk([](const ChatRequest&) { return std::string("no idea"); });
    SearchNode root4;
    CHECK(expand(root4, context(gt, junk)) == 0);
    CHECK(root4.terminal);
  }

  TEST_CASE("simulation") {
    const CausalGraph gt = chain_gt();
    SearchParams p = small_params();
    FunctionBackend none([](const ChatRequest&) -> std::string { throw Error(ErrorCode::kTimeout, "unused"); });
    SearchNode ended;
    ended.state.discovered_causality = {kFirst};
    ended.state.ended = true;
    ended.terminal = true;
    CHECK(simulate(ended, context(gt, none, p)) == 0.5);
    CHECK(none.calls == 0);

    const auto world = [](std::vector<NamedBoxPair> found) {
      return [found](const ChatRequest& r) -> std::string {
        if (r.purpose == "region") {
          return r.user_text.find("Explored regions: [].") != std::string::npos ? region("all") : "END TRACE";
        }
        if (r.purpose == "entity") return format_entity_output(found);
        return echo_candidates(r);
      };
    };
    FunctionBackend full(world({kFirst, kSecond}));
    SearchNode a;
    CHECK(simulate(a, context(gt, full, p)) == 1.0);
    CHECK(a.rollout.size() == 4);

    FunctionBackend half(world({kFirst}));
    SearchNode b;
    CHECK(simulate(b, context(gt, half, p)) == 0.5);

    FunctionBackend broken([](const ChatRequest& r) -> std::string {
      if (r.purpose == "region") return region("all");
      throw Error(ErrorCode::kTransportFailure, "down");
    });
    SearchNode c;
    bool failed = false;
    CHECK(simulate(c, context(gt, broken, p), &failed) == 0.0);
    CHECK(failed);
  }

  TEST_CASE("dominating branch is extracted") {
    const CausalGraph gt = chain_gt();
    const ImageRef img{"img.jpg", "", "image/jpeg", std::nullopt};
    FunctionBackend backend(dominating_world);
    const SearchResult r = run_search(img, gt, backend, small_params());
    CHECK(r.iterations_completed == 20);
    CHECK(r.verify_failures == 0);
    CHECK_FALSE(r.degraded);
    CHECK(r.trajectory.value == 1.0);
    REQUIRE_FALSE(r.trajectory.steps.empty());
    CHECK(r.trajectory.steps[0].state.explored_regions.at(0).name == "good");
    CHECK(r.trajectory.final_graph.edges().size() == 2);
    CHECK(verify_tree(*r.root, 20).ok);
    const nlohmann::json tree = dump_tree(*r.root);
    CHECK(tree["children"].size() == 3);

    FunctionBackend greedy_only(dominating_world);
    CHECK(vanilla_baseline(img, gt, greedy_only).value == 0.0);
  }

  TEST_CASE("single iteration budget") {
    const CausalGraph gt = chain_gt();
    FunctionBackend backend(dominating_world);
    SearchParams p = small_params();
    p.iterations = 1;
    const SearchResult r = run_search(ImageRef{"img.jpg", "", "image/jpeg", std::nullopt}, gt, backend, p);
    CHECK(r.iterations_completed == 1);
    CHECK(r.root->children.size() == 3);
    CHECK(r.root->visits == 1);
    CHECK_FALSE(r.trajectory.steps.empty());
    CHECK(r.trajectory.value >= 0.0);
  }

  TEST_CASE("backend failures degrade the search") {
    const CausalGraph gt = chain_gt();
    FunctionBackend down([](const ChatRequest&) -> std::string { throw Error(ErrorCode::kTransportFailure, "down"); });
    const SearchResult r = run_search(ImageRef{"img.jpg", "", "image/jpeg", std::nullopt}, gt, down, small_params());
    CHECK(r.degraded);
    CHECK(r.trajectory.degraded);
    CHECK_FALSE(r.degraded_reason.empty());
    CHECK(r.trajectory.value == 0.0);

    const CausalGraph empty = build_graph({{EntityId{0}, "a", kLaptop}}, {});
    try {
      run_search(ImageRef{}, empty, down, small_params());
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyGroundTruth);
    }
  }

  TEST_CASE("default params") {
    const SearchParams p;
    CHECK(p.step_limit == 12);
    CHECK(p.branching == 10);
    CHECK(p.iterations == 20);
    CHECK(p.uct_w == doctest::Approx(1.41421356));
    CHECK(p.sample_temperature == 0.8);
    SearchParams bad;
    bad.branching = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = SearchParams{};
    bad.uct_w = -1;
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("vanilla baseline") {
    const CausalGraph gt = chain_gt();
    const ImageRef img{"img.jpg", "", "image/jpeg", std::nullopt};
    FunctionBackend perfect([](const ChatRequest&) { return format_causal_output({kFirst, kSecond}); });
    CHECK(vanilla_baseline(img, gt, perfect).value == 1.0);
    FunctionBackend empty([](const ChatRequest&) { return std::string("<causal pairs>[]</causal pairs>"); });
    CHECK(vanilla_baseline(img, gt, empty).value == 0.0);
    FunctionBackend half([](const ChatRequest&) { return format_causal_output({kFirst}); });
    const Trajectory t = vanilla_baseline(img, gt, half);
    CHECK(t.value == 0.5);
    CHECK(t.steps.size() == 1);
    FunctionBackend junk([](const ChatRequest&) { return std::string("garbage"); });
    CHECK(vanilla_baseline(img, gt, junk).value == 0.0);
    FunctionBackend down([](const ChatRequest&) -> std::string { throw Error(ErrorCode::kTimeout, "slow"); });
    try {
      vanilla_baseline(img, gt, down);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBackendFailure);
    }
  }

  TEST_CASE("filtering") {
    const FilterResult r = filter_values({{0.42, 0.29}, {0.3, 0.3}, {0.0, 0.0}, {0.1, 0.5}});
    CHECK(r.kept == std::vector<std::size_t>{0});
    CHECK(r.stats.total == 4);
    CHECK(r.stats.kept == 1);
    CHECK(r.stats.zero_pairs == 1);
    CHECK(r.stats.toct_without_zero.count == 3);
    const ValueSummary s = summarize({3, 1, 2, 10});
    CHECK(s.mean == 4.0);
    CHECK(s.median == 2.5);
    CHECK(summarize({}).count == 0);
  }
}
