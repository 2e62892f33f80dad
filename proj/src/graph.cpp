#include "vcd/graph.hpp"

#include <deque>
#include <unordered_set>

#include "vcd/error.hpp"

namespace vcd {
namespace {

std::string id_str(EntityId id) { return std::to_string(id.value); }

struct PairHash {
  std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& p) const noexcept {
    return std::hash<std::int64_t>{}(p.first) * 1000003u ^ std::hash<std::int64_t>{}(p.second);
  }
};

}  // namespace

CausalGraph CausalGraph::build(std::vector<Entity> entities, std::vector<CausalEdge> edges) {
  CausalGraph g;
  g.index_.reserve(entities.size());
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (!g.index_.emplace(entities[i].id, i).second) {
      throw Error(ErrorCode::kDuplicateEntityId, "entity id " + id_str(entities[i].id));
    }
  }
  g.out_.resize(entities.size());
  std::unordered_set<std::pair<std::int64_t, std::int64_t>, PairHash> seen;
  for (const auto& e : edges) {
    if (e.cause == e.effect) {
      throw Error(ErrorCode::kSelfLoopEdge, "edge " + id_str(e.cause) + "->" + id_str(e.effect));
    }
    const auto c = g.index_.find(e.cause);
    if (c == g.index_.end() || !g.index_.contains(e.effect)) {
      throw Error(ErrorCode::kDanglingEdgeEndpoint, "edge " + id_str(e.cause) + "->" + id_str(e.effect));
    }
    if (!seen.emplace(e.cause.value, e.effect.value).second) {
      throw Error(ErrorCode::kDuplicateEdge, "edge " + id_str(e.cause) + "->" + id_str(e.effect));
    }
    g.out_[c->second].push_back(e.effect);
  }
  g.entities_ = std::move(entities);
  g.edges_ = std::move(edges);
  return g;
}

const Entity& CausalGraph::entity(EntityId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kUnknownEntity, "entity id " + id_str(id));
  return entities_[it->second];
}

const std::vector<EntityId>& CausalGraph::successors(EntityId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kUnknownEntity, "entity id " + id_str(id));
  return out_[it->second];
}

bool CausalGraph::has_edge(EntityId cause, EntityId effect) const {
  const auto it = index_.find(cause);
  if (it == index_.end()) return false;
  for (const EntityId s : out_[it->second]) {
    if (s == effect) return true;
  }
  return false;
}

std::set<EntityId> removal_effects(const CausalGraph& graph, EntityId id) {
  std::set<EntityId> reached;
  std::deque<EntityId> frontier{id};
  graph.successors(id);  // throws UnknownEntity
  while (!frontier.empty()) {
    const EntityId cur = frontier.front();
    frontier.pop_front();
    for (const EntityId next : graph.successors(cur)) {
      if (next != id && reached.insert(next).second) frontier.push_back(next);
    }
  }
  return reached;
}

}  // namespace vcd
