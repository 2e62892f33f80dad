#include "vcd/state.hpp"

#include <algorithm>

#include "vcd/error.hpp"

namespace vcd {

Action successor(Action a) {
  switch (a) {
    case Action::kRegionSelection: return Action::kEntityRecognition;
    case Action::kEntityRecognition: return Action::kCausalityOrientation;
    case Action::kCausalityOrientation: return Action::kRegionSelection;
  }
  return Action::kRegionSelection;
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::kRegionSelection: return "region";
    case Action::kEntityRecognition: return "entity";
    case Action::kCausalityOrientation: return "causality";
  }
  return "region";
}

std::optional<Action> action_from_string(std::string_view s) {
  if (s == "region") return Action::kRegionSelection;
  if (s == "entity") return Action::kEntityRecognition;
  if (s == "causality") return Action::kCausalityOrientation;
  return std::nullopt;
}

std::optional<BoundingBox> ReasoningState::current_region() const {
  if (explored_regions.empty()) return std::nullopt;
  return explored_regions.back().box;
}

ReasoningState after_region(const ReasoningState& s, const RegionChoice& choice) {
  ReasoningState next = s;
  next.last_action = Action::kRegionSelection;
  ++next.step_index;
  next.candidate_pairs.clear();
  if (choice.end_trace) {
    next.ended = true;
  } else {
    next.explored_regions.push_back(ExploredRegion{*choice.name, *choice.box});
  }
  return next;
}

ReasoningState after_entities(const ReasoningState& s, std::vector<NamedBoxPair> candidates) {
  ReasoningState next = s;
  next.last_action = Action::kEntityRecognition;
  ++next.step_index;
  next.candidate_pairs = std::move(candidates);
  return next;
}

ReasoningState after_causality(const ReasoningState& s, const std::vector<NamedBoxPair>& confirmed) {
  ReasoningState next = s;
  next.last_action = Action::kCausalityOrientation;
  ++next.step_index;
  next.candidate_pairs.clear();
  for (const auto& p : confirmed) {
    if (std::find(next.discovered_causality.begin(), next.discovered_causality.end(), p) ==
        next.discovered_causality.end()) {
      next.discovered_causality.push_back(p);
    }
  }
  return next;
}

}  // namespace vcd
