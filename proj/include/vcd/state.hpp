#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vcd/geometry.hpp"
#include "vcd/parser.hpp"

namespace vcd {

/// The three reasoning actions, executed in the fixed loop
/// region selection -> entity recognition -> causality orientation -> ...
enum class Action { kRegionSelection, kEntityRecognition, kCausalityOrientation };

Action successor(Action a);
std::string_view to_string(Action a);
std::optional<Action> action_from_string(std::string_view s);

struct ExploredRegion {
  std::string name;
  BoundingBox box;

  friend bool operator==(const ExploredRegion&, const ExploredRegion&) = default;
};

/// Search state: explored regions, confirmed causal pairs and the last action.
/// `candidate_pairs` carries the most recent entity-recognition output (in
/// full-image coordinates) to the following causality-orientation step.
struct ReasoningState {
  std::vector<ExploredRegion> explored_regions;
  std::vector<NamedBoxPair> discovered_causality;
  std::vector<NamedBoxPair> candidate_pairs;
  std::optional<Action> last_action;
  std::size_t step_index = 0;
  bool ended = false;  // END TRACE was emitted

  Action next_action() const { return last_action ? successor(*last_action) : Action::kRegionSelection; }
  std::optional<BoundingBox> current_region() const;

  friend bool operator==(const ReasoningState&, const ReasoningState&) = default;
};

// Transitions; each advances step_index and sets last_action.
ReasoningState after_region(const ReasoningState& s, const RegionChoice& choice);
ReasoningState after_entities(const ReasoningState& s, std::vector<NamedBoxPair> candidates);
/// Appends newly confirmed pairs, skipping ones already discovered.
ReasoningState after_causality(const ReasoningState& s, const std::vector<NamedBoxPair>& confirmed);

}  // namespace vcd
