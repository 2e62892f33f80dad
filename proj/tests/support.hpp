#pragma once

// Test helpers: random generators, brute-force reference implementations and
// a scripted search world whose whole tree can be enumerated.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "vcd/backend.hpp"
#include "vcd/geometry.hpp"
#include "vcd/graph.hpp"
#include "vcd/parser.hpp"
#include "vcd/search.hpp"
#include "vcd/state.hpp"

namespace vcd::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(n) - 1)); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline BoundingBox random_box(Rng& rng, double extent = 400.0) {
  const double x = rng.uniform(0.0, extent);
  const double y = rng.uniform(0.0, extent);
  return BoundingBox(x, y, x + rng.uniform(1.0, extent / 2), y + rng.uniform(1.0, extent / 2));
}

inline BoundingBox jittered(Rng& rng, const BoundingBox& b, double frac) {
  const double dx = b.width() * frac;
  const double dy = b.height() * frac;
  const double x1 = std::max(0.0, b.x1() + rng.uniform(-dx, dx));
  const double y1 = std::max(0.0, b.y1() + rng.uniform(-dy, dy));
  const double x2 = std::max(x1 + 1.0, b.x2() + rng.uniform(-dx, dx));
  const double y2 = std::max(y1 + 1.0, b.y2() + rng.uniform(-dy, dy));
  return BoundingBox(x1, y1, x2, y2);
}

// Reference GIoU in extended precision, written from the definition.
inline double reference_giou(const BoundingBox& a, const BoundingBox& b) {
  using L = long double;
  const L iw = std::max<L>(0, std::min<L>(a.x2(), b.x2()) - std::max<L>(a.x1(), b.x1()));
  const L ih = std::max<L>(0, std::min<L>(a.y2(), b.y2()) - std::max<L>(a.y1(), b.y1()));
  const L inter = iw * ih;
  const L area_a = (L(a.x2()) - a.x1()) * (L(a.y2()) - a.y1());
  const L area_b = (L(b.x2()) - b.x1()) * (L(b.y2()) - b.y1());
  const L uni = area_a + area_b - inter;
  const L hull = (std::max<L>(a.x2(), b.x2()) - std::min<L>(a.x1(), b.x1())) *
                 (std::max<L>(a.y2(), b.y2()) - std::min<L>(a.y1(), b.y1()));
  return static_cast<double>(inter / uni - (hull - uni) / hull);
}

inline double reference_iou(const BoundingBox& a, const BoundingBox& b) {
  using L = long double;
  const L iw = std::max<L>(0, std::min<L>(a.x2(), b.x2()) - std::max<L>(a.x1(), b.x1()));
  const L ih = std::max<L>(0, std::min<L>(a.y2(), b.y2()) - std::max<L>(a.y1(), b.y1()));
  const L inter = iw * ih;
  const L uni = L(a.area()) + L(b.area()) - inter;
  return static_cast<double>(inter / uni);
}

// Exhaustive assignment ------------------------------------------------------

struct BruteAssignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // ascending by row
  double total = 0.0;
};

/// Every injective assignment of min(rows, cols) pairs; minimum row-order sum,
/// ties within `tol` broken by the lexicographically smallest pair sequence.
inline BruteAssignment brute_assignment(const std::vector<std::vector<double>>& c, double tol = 0.0) {
  const std::size_t rows = c.size();
  const std::size_t cols = rows ? c[0].size() : 0;
  const std::size_t need = std::min(rows, cols);
  std::vector<BruteAssignment> all;
  std::vector<std::pair<std::size_t, std::size_t>> cur;
  std::vector<char> used(cols, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t r) {
    if (cur.size() + (rows - r) < need) return;
    if (r == rows) {
      BruteAssignment a{cur, 0.0};
      for (const auto& [i, j] : cur) a.total += c[i][j];
      all.push_back(std::move(a));
      return;
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      cur.emplace_back(r, j);
      rec(r + 1);
      cur.pop_back();
      used[j] = 0;
    }
    rec(r + 1);  // row left unassigned
  };
  if (need == 0) return {};
  rec(0);
  double best = all.front().total;
  for (const auto& a : all) best = std::min(best, a.total);
  const BruteAssignment* pick = nullptr;
  for (const auto& a : all) {
    if (a.total > best + tol) continue;
    if (!pick || a.pairs < pick->pairs) pick = &a;
  }
  return *pick;
}

// Brute-force matcher + edge counter ----------------------------------------

struct BruteScore {
  std::map<std::int64_t, std::int64_t> pred_to_gt;
  std::size_t matched = 0;
  std::size_t pred_edges = 0;
  std::size_t gt_edges = 0;
  double recall = 0.0;
  double precision = 0.0;
};

inline std::map<std::int64_t, std::int64_t> brute_match(const CausalGraph& pred, const CausalGraph& gt,
                                                        double threshold) {
  std::map<std::int64_t, std::int64_t> out;
  const auto& pe = pred.entities();
  const auto& ge = gt.entities();
  if (pe.empty() || ge.empty()) return out;
  std::vector<std::vector<double>> g(pe.size(), std::vector<double>(ge.size()));
  std::vector<std::vector<double>> cost(pe.size(), std::vector<double>(ge.size()));
  double scale = 1.0;
  for (std::size_t i = 0; i < pe.size(); ++i) {
    for (std::size_t j = 0; j < ge.size(); ++j) {
      g[i][j] = giou(pe[i].box, ge[j].box);
      cost[i][j] = 1.0 - g[i][j];
      scale = std::max(scale, std::abs(cost[i][j]));
    }
  }
  const BruteAssignment a = brute_assignment(cost, 1e-9 * scale);
  for (const auto& [i, j] : a.pairs) {
    if (g[i][j] >= threshold) out[pe[i].id.value] = ge[j].id.value;
  }
  return out;
}

inline BruteScore brute_score(const CausalGraph& pred, const CausalGraph& gt, double threshold) {
  BruteScore s;
  s.pred_to_gt = brute_match(pred, gt, threshold);
  s.gt_edges = gt.edges().size();
  s.pred_edges = pred.edges().size();
  for (const auto& e : pred.edges()) {
    const auto c = s.pred_to_gt.find(e.cause.value);
    const auto f = s.pred_to_gt.find(e.effect.value);
    if (c == s.pred_to_gt.end() || f == s.pred_to_gt.end()) continue;
    for (const auto& ge : gt.edges()) {
      if (ge.cause.value == c->second && ge.effect.value == f->second) ++s.matched;
    }
  }
  s.recall = static_cast<double>(s.matched) / static_cast<double>(s.gt_edges);
  s.precision = s.pred_edges ? static_cast<double>(s.matched) / static_cast<double>(s.pred_edges) : 0.0;
  return s;
}

// Random graphs ---------------------------------------------------------------

inline CausalGraph random_graph(Rng& rng, std::size_t max_entities, std::size_t max_edges, std::int64_t id_base,
                                std::size_t min_edges = 1) {
  const std::size_t n = static_cast<std::size_t>(rng.integer(2, static_cast<std::int64_t>(max_entities)));
  std::vector<Entity> entities;
  for (std::size_t i = 0; i < n; ++i) {
    entities.push_back({EntityId{id_base + static_cast<std::int64_t>(i)}, "e" + std::to_string(i), random_box(rng)});
  }
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) all.emplace_back(i, j);
  std::shuffle(all.begin(), all.end(), rng.engine());
  const std::size_t m = std::min<std::size_t>(
      all.size(), static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(min_edges),
                                                       static_cast<std::int64_t>(max_edges))));
  std::vector<CausalEdge> edges;
  for (std::size_t k = 0; k < m; ++k) edges.push_back({entities[all[k].first].id, entities[all[k].second].id, {}});
  return build_graph(std::move(entities), std::move(edges));
}

/// Prediction derived from `gt`: jittered copies of a subset of entities, a
/// few random extra entities, gt edges kept or reversed, and random extras.
inline CausalGraph perturbed_prediction(Rng& rng, const CausalGraph& gt, std::size_t max_entities,
                                        std::size_t max_edges) {
  std::vector<Entity> entities;
  std::map<std::int64_t, EntityId> copy_of;
  std::int64_t next = 100;
  for (const auto& e : gt.entities()) {
    if (entities.size() >= max_entities || rng.chance(0.2)) continue;
    const BoundingBox box = jittered(rng, e.box, rng.uniform(0.0, 0.4));
    entities.push_back({EntityId{next}, e.label, box});
    copy_of[e.id.value] = EntityId{next++};
  }
  while (entities.size() < max_entities && rng.chance(0.3)) {
    entities.push_back({EntityId{next++}, "x", random_box(rng)});
  }
  std::set<std::pair<EntityId, EntityId>> edges_set;
  std::vector<CausalEdge> edges;
  const auto add = [&](EntityId a, EntityId b) {
    if (a == b || edges.size() >= max_edges || !edges_set.emplace(a, b).second) return;
    edges.push_back({a, b, {}});
  };
  for (const auto& e : gt.edges()) {
    const auto a = copy_of.find(e.cause.value);
    const auto b = copy_of.find(e.effect.value);
    if (a == copy_of.end() || b == copy_of.end() || rng.chance(0.2)) continue;
    if (rng.chance(0.3)) {
      add(b->second, a->second);
    } else {
      add(a->second, b->second);
    }
  }
  if (entities.size() >= 2) {
    const std::size_t extra = static_cast<std::size_t>(rng.integer(0, 3));
    for (std::size_t k = 0; k < extra; ++k) {
      add(entities[rng.index(entities.size())].id, entities[rng.index(entities.size())].id);
    }
  }
  return build_graph(std::move(entities), std::move(edges));
}

// Scripted search world -------------------------------------------------------
//
// A deterministic model: every distinct request (purpose, prompt, image
// handles) owns 1..3 completions. Sampled calls with seed s return option
// s % n; greedy calls return option 0. Coordinates are integers so the crop
// round trip is exact.

struct WorldOption {
  bool end_trace = false;
  std::string region_name;
  std::optional<BoundingBox> region_box;
  std::vector<NamedBoxPair> pairs;  // full-image coordinates
};

class SearchWorld final : public Backend {
 public:
  explicit SearchWorld(std::uint64_t seed) : seed_(seed) {
    Rng rng(seed);
    const std::size_t n_obj = static_cast<std::size_t>(rng.integer(3, 5));
    for (std::size_t i = 0; i < n_obj; ++i) pool_.push_back(make_entity(rng, "obj" + std::to_string(i), i, 100.0));
    for (std::size_t i = 0; i < 2; ++i) pool_.push_back(make_entity(rng, "noise" + std::to_string(i), i, 700.0));
    std::vector<std::pair<std::size_t, std::size_t>> dag;
    for (std::size_t i = 0; i < n_obj; ++i)
      for (std::size_t j = i + 1; j < n_obj; ++j) dag.emplace_back(i, j);
    std::shuffle(dag.begin(), dag.end(), rng.engine());
    dag.resize(std::min<std::size_t>(dag.size(), static_cast<std::size_t>(rng.integer(2, 4))));
    std::vector<Entity> entities;
    for (std::size_t i = 0; i < n_obj; ++i) {
      entities.push_back({EntityId{static_cast<std::int64_t>(i)}, pool_[i].first, pool_[i].second});
    }
    std::vector<CausalEdge> edges;
    for (const auto& [a, b] : dag) {
      edges.push_back({EntityId{static_cast<std::int64_t>(a)}, EntityId{static_cast<std::int64_t>(b)}, {}});
      gt_edges_.emplace_back(pool_[a].first, pool_[b].first);
    }
    gt_pairs_ = dag;
    gt_ = build_graph(std::move(entities), std::move(edges));
  }

  const CausalGraph& gt() const { return gt_; }
  const std::vector<std::pair<std::string, std::string>>& gt_edge_names() const { return gt_edges_; }

  std::vector<WorldOption> options(const ChatRequest& req) const {
    std::string key = req.purpose + "\x1f" + req.user_text;
    for (const auto& img : req.images) key += "\x1f" + img.handle();
    Rng rng(fnv1a(key) ^ seed_);
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 3));
    std::vector<WorldOption> out(n);
    for (auto& o : out) {
      if (req.purpose == "region") {
        if (rng.chance(0.25)) {
          o.end_trace = true;
        } else {
          o.region_name = "area" + std::to_string(rng.integer(0, 999));
          const double ox = static_cast<double>(rng.integer(0, 99));
          const double oy = static_cast<double>(rng.integer(0, 99));
          o.region_box = BoundingBox(ox, oy, ox + 2000.0, oy + 2000.0);
        }
      } else if (req.purpose == "entity") {
        const std::size_t k = static_cast<std::size_t>(rng.integer(1, 3));
        for (std::size_t i = 0; i < k; ++i) {
          std::size_t a = rng.index(pool_.size());
          std::size_t b = rng.index(pool_.size() - 1);
          if (b >= a) ++b;
          if (rng.chance(0.5)) {
            std::tie(a, b) = gt_pairs_[rng.index(gt_pairs_.size())];
            if (rng.chance(0.5)) std::swap(a, b);
          }
          o.pairs.push_back({pool_[a].first, pool_[a].second, pool_[b].first, pool_[b].second, false});
        }
      } else {
        for (const auto& c : candidates(req.user_text)) {
          if (!rng.chance(0.6)) continue;
          NamedBoxPair p = c;
          p.ordered = true;
          if (rng.chance(0.5)) {
            std::swap(p.first_name, p.second_name);
            std::swap(p.first_box, p.second_box);
          }
          o.pairs.push_back(std::move(p));
        }
      }
    }
    return out;
  }

  static std::size_t pick(const ChatRequest& req, std::size_t n) {
    if (req.decode.temperature == 0.0 || !req.decode.seed) return 0;
    return static_cast<std::size_t>(*req.decode.seed) % n;
  }

  std::string render(const ChatRequest& req, const WorldOption& o) const {
    if (req.purpose == "region") {
      if (o.end_trace) return "END TRACE";
      const BoundingBox& b = *o.region_box;
      return "<think>\nlook there\n</think>\n<region name>\n" + o.region_name + "\n</region name>\n<bounding box>\n" +
             box_text(b.x1(), b.y1(), b.x2(), b.y2()) + "\n</bounding box>";
    }
    double dx = 0.0;
    double dy = 0.0;
    if (req.purpose == "entity" && !req.images.empty() && req.images[0].crop) {
      dx = req.images[0].crop->x1();
      dy = req.images[0].crop->y1();
    }
    std::string list = "[";
    for (std::size_t i = 0; i < o.pairs.size(); ++i) {
      const auto& p = o.pairs[i];
      if (i) list += ", ";
      list += "{\"" + p.first_name + "\": " +
              box_text(p.first_box.x1() - dx, p.first_box.y1() - dy, p.first_box.x2() - dx, p.first_box.y2() - dy) +
              ", \"" + p.second_name + "\": " +
              box_text(p.second_box.x1() - dx, p.second_box.y1() - dy, p.second_box.x2() - dx,
                       p.second_box.y2() - dy) +
              "}";
    }
    list += "]";
    const std::string tag = req.purpose == "entity" ? "entity pairs" : "causal pairs";
    return "<" + tag + ">\n" + list + "\n</" + tag + ">";
  }

  ChatResponse complete(const ChatRequest& req) override {
    ++calls_;
    const auto opts = options(req);
    return {render(req, opts[pick(req, opts.size())]), {}, {}};
  }

  std::size_t calls() const { return calls_; }

 private:
  static std::pair<std::string, BoundingBox> make_entity(Rng& rng, std::string name, std::size_t slot, double y) {
    const double x = 100.0 + 250.0 * static_cast<double>(slot);
    const double yy = y + static_cast<double>(rng.integer(0, 50));
    const double w = static_cast<double>(rng.integer(80, 200));
    const double h = static_cast<double>(rng.integer(80, 200));
    return {std::move(name), BoundingBox(x, yy, x + w, yy + h)};
  }

  static std::string box_text(double x1, double y1, double x2, double y2) {
    const auto i = [](double v) { return std::to_string(static_cast<std::int64_t>(std::llround(v))); };
    return "[" + i(x1) + ", " + i(y1) + ", " + i(x2) + ", " + i(y2) + "]";
  }

  static std::vector<NamedBoxPair> candidates(const std::string& prompt) {
    static const std::string marker = "Entity pairs: ";
    const auto at = prompt.find(marker);
    if (at == std::string::npos) return {};
    const auto start = at + marker.size();
    const auto line = prompt.substr(start, prompt.find('\n', start) - start);
    std::vector<NamedBoxPair> out;
    for (const auto& rec : nlohmann::ordered_json::parse(line)) {
      auto it = rec.begin();
      const auto box = [](const nlohmann::ordered_json& a) {
        return BoundingBox(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>());
      };
      NamedBoxPair p{it.key(), box(it.value()), "", box(it.value()), false};
      ++it;
      p.second_name = it.key();
      p.second_box = box(it.value());
      out.push_back(std::move(p));
    }
    return out;
  }

  std::uint64_t seed_;
  std::vector<std::pair<std::string, BoundingBox>> pool_;
  std::vector<std::pair<std::string, std::string>> gt_edges_;
  std::vector<std::pair<std::size_t, std::size_t>> gt_pairs_;
  CausalGraph gt_;
  std::atomic<std::size_t> calls_{0};
};

// Independent model of the world's search tree. The oracle keeps its own
// state and transitions; the library is only used to phrase the questions.

struct OracleState {
  std::vector<ExploredRegion> regions;
  std::vector<NamedBoxPair> found;
  std::vector<NamedBoxPair> candidates;
  int phase = 0;  // 0 region, 1 entity, 2 causality
  std::size_t steps = 0;
  bool ended = false;

  friend bool operator==(const OracleState&, const OracleState&) = default;
};

inline ReasoningState to_library(const OracleState& s) {
  ReasoningState r;
  r.explored_regions = s.regions;
  r.discovered_causality = s.found;
  r.candidate_pairs = s.candidates;
  r.step_index = s.steps;
  r.ended = s.ended;
  if (s.steps > 0) r.last_action = static_cast<Action>((s.phase + 2) % 3);
  return r;
}

inline OracleState oracle_step(const OracleState& s, const WorldOption& o) {
  OracleState n = s;
  ++n.steps;
  if (s.phase == 0) {
    n.candidates.clear();
    if (o.end_trace) {
      n.ended = true;
    } else {
      n.regions.push_back({o.region_name, *o.region_box});
    }
  } else if (s.phase == 1) {
    n.candidates = o.pairs;
  } else {
    n.candidates.clear();
    for (const auto& p : o.pairs) {
      if (std::find(n.found.begin(), n.found.end(), p) == n.found.end()) n.found.push_back(p);
    }
  }
  n.phase = (s.phase + 1) % 3;
  return n;
}

inline double oracle_recall(const SearchWorld& w, const OracleState& s) {
  std::size_t hit = 0;
  for (const auto& [cause, effect] : w.gt_edge_names()) {
    const bool present = std::any_of(s.found.begin(), s.found.end(), [&](const NamedBoxPair& p) {
      return p.first_name == cause && p.second_name == effect;
    });
    if (present) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(w.gt_edge_names().size());
}

struct EnumeratedTree {
  std::size_t nodes = 0;
  std::vector<double> leaf_values;

  double best() const { return *std::max_element(leaf_values.begin(), leaf_values.end()); }
  /// Largest leaf value strictly below the best, or the best when all agree.
  double second_best() const {
    double b = best();
    double s = -1.0;
    for (double v : leaf_values)
      if (v < b) s = std::max(s, v);
    return s < 0.0 ? b : s;
  }
};

inline EnumeratedTree enumerate_world(const SearchWorld& w, const ImageRef& image, const SearchParams& p) {
  EnumeratedTree tree;
  std::function<void(const OracleState&)> visit = [&](const OracleState& s) {
    ++tree.nodes;
    if (s.ended || s.steps >= p.step_limit) {
      tree.leaf_values.push_back(oracle_recall(w, s));
      return;
    }
    const Action action = static_cast<Action>(s.phase);
    std::vector<OracleState> children;
    for (std::size_t k = 0; k < p.branching; ++k) {
      const auto seed = p.seed + static_cast<std::int64_t>(k);
      const ChatRequest req = action_request(action, to_library(s), image, p, p.sample_temperature, seed);
      const auto opts = w.options(req);
      OracleState child = oracle_step(s, opts[SearchWorld::pick(req, opts.size())]);
      if (std::find(children.begin(), children.end(), child) == children.end()) children.push_back(std::move(child));
    }
    for (const auto& c : children) visit(c);
  };
  visit(OracleState{});
  return tree;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vcd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Reference dataset record; entities 1-4 are filler.
inline const char* kSampleRecord = R"({
  "dataset_id": "COCO",
  "img_id": 0,
  "entities": [
    {"entity_id": 0, "entity_name": "woman", "bbox": [502.6, 105.47, 25.83, 132.38]},
    {"entity_id": 1, "entity_name": "handbag", "bbox": [510.2, 160.0, 40.5, 38.0]},
    {"entity_id": 2, "entity_name": "table", "bbox": [100.0, 300.0, 250.0, 90.0]},
    {"entity_id": 3, "entity_name": "cup", "bbox": [180.0, 260.0, 35.0, 40.0]},
    {"entity_id": 4, "entity_name": "chair", "bbox": [620.0, 240.0, 120.0, 150.0]}
  ],
  "causal_relationships": {
    "carry_on": [[0, 1]],
    "support": [[2, 3]]
  }
})";

}  // namespace vcd::testing
