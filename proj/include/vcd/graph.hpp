#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "vcd/geometry.hpp"

namespace vcd {

struct EntityId {
  std::int64_t value = 0;

  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

struct Entity {
  EntityId id;
  std::string label;
  BoundingBox box;
};

struct CausalEdge {
  EntityId cause;
  EntityId effect;
  std::optional<std::string> predicate;  // ground truth only
};

}  // namespace vcd

template <>
struct std::hash<vcd::EntityId> {
  std::size_t operator()(const vcd::EntityId& id) const noexcept { return std::hash<std::int64_t>{}(id.value); }
};

namespace vcd {

/// Entities plus directed causal edges. Identity is the entity id; labels and
/// predicates are metadata. Cycles are allowed. Immutable once built.
class CausalGraph {
 public:
  CausalGraph() = default;

  /// Validates ids, endpoints, self-loops and duplicate (cause, effect) pairs.
  static CausalGraph build(std::vector<Entity> entities, std::vector<CausalEdge> edges);

  const std::vector<Entity>& entities() const noexcept { return entities_; }
  const std::vector<CausalEdge>& edges() const noexcept { return edges_; }

  bool contains(EntityId id) const { return index_.contains(id); }
  const Entity& entity(EntityId id) const;
  bool has_edge(EntityId cause, EntityId effect) const;
  const std::vector<EntityId>& successors(EntityId id) const;

 private:
  std::vector<Entity> entities_;
  std::vector<CausalEdge> edges_;
  std::unordered_map<EntityId, std::size_t> index_;
  std::vector<std::vector<EntityId>> out_;
};

inline CausalGraph build_graph(std::vector<Entity> entities, std::vector<CausalEdge> edges) {
  return CausalGraph::build(std::move(entities), std::move(edges));
}

/// Entities whose state changes when `id` is removed: everything reachable
/// from `id` along directed edges, excluding `id` itself.
std::set<EntityId> removal_effects(const CausalGraph& graph, EntityId id);

}  // namespace vcd
