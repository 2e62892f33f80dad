#include "vcd/prompts.hpp"

#include <array>

#include "vcd/error.hpp"

namespace vcd {

const std::string_view kRegionSelectionTemplate =
    R"(You are analyzing the causal relationships between entities in the image through multiple steps.
Your current reasoning trajectory is as follows:

Explored regions: {explored regions}.

Identified causal pairs: {causal pairs}.

Now we hope to look for new regions to discover more potential correlated entity pairs.
Please select the next most worthy region to focus on and explain your thinking process.
Note: the next region should be DIFFERENT from the previous explored regions.

-- If you think the exploration regions and identified causal pairs are SUFFICIENTLY COMPREHENSIVE, you should DIRECTLY output "END TRACE" and nothing else.

Otherwise, your output format should be as follows:

<think>
(State the reason as concisely as possible for selecting the new focused region.)
</think>

<region name>
(Output the name of the focused region and nothing else.)
</region name>

<bounding box>
(Output the bounding box of the focused region with format [x1, y1, x2, y2] and nothing else, where (x1, y1) is the top-left coordinate and (x2, y2) is the bottom-right coordinate of the bounding box.)
</bounding box>)";

const std::string_view kEntityRecognitionTemplate =
    R"(Your task is to identify all entity pairs that may have correlations in the image.
Each pair should have obvious potential correlations such as spatial dependence, support, grasping, placement, inclusion, etc.
Think and output all these correlated entity pairs and their bounding boxes.

Your output format should be as follows:

<think>
(Provide the concise thinking process for identifying correlated entity pairs.)
</think>

<entity pairs>
(Output all the correlated entity pairs in the format of "[{"entity1": [x1, y1, x2, y2], "entity2": [x1, y1, x2, y2]}, {"entity3": [x1, y1, x2, y2], "entity4": [x1, y1, x2, y2]}, ...]". You should use ACTUAL ENTITY NAME to replace the placeholders "entity1", "entity2", ... in the format. (x1, y1) is the top-left coordinate and (x2, y2) is the bottom-right coordinate of the bounding box.)
</entity pairs>)";

const std::string_view kCausalityOrientationTemplate =
    R"(Based on the image, your task is to determine whether causal relationships exist between the following entity pairs.
Entity pairs: {entity pairs}

The causality criteria are as follows:
For example, if the entity pairs are {{"A": [x1, y1, x2, y2], "B": [x1, y1, x2, y2]}} or {{"B": [x1, y1, x2, y2], "A": [x1, y1, x2, y2]}}:
- A is in direct contact with B.
- A's presence maintains B's current state.
- Removing A would cause B to lose its current state.
Then A is the cause and B is the effect.
(x1, y1) is the top-left coordinate and (x2, y2) is the bottom-right coordinate of the bounding box.

Your output format should be as follows:

<think>
(Consider entity pairs and keep the reasoning as concise as possible.)
</think>

<causal pairs>
(Output entity pairs with causal relationships only and if necessary, swap the ORDER of entities pairs to ensure the cause precedes the effect.)
</causal pairs>)";

const std::string_view kEndToEndTemplate =
    R"(Identify all causal relationships between entities in the image based on the following criteria:
- A is in direct contact with B.
- A's presence maintains B's current state.
- Removing A would cause B to lose its current state.
Then A is the cause and B is the effect.

Please provide your reasoning process and output all the entity pairs with causal relationships and their bounding boxes in the following format:

<think>
(Provide your reasoning process for analyzing the image.)
</think>

<causal pairs>
(Output all the entity pairs with causal relationships and their bounding boxes in the format of "[{"cause": [x1, y1, x2, y2], "effect": [x1, y1, x2, y2]}, {"cause": [x1, y1, x2, y2], "effect": [x1, y1, x2, y2]}, ...]". You should use ACTUAL ENTITY NAME to replace the placeholders "cause" and "effect" in the format. (x1, y1) is the top-left coordinate and (x2, y2) is the bottom-right coordinate of the bounding box.)
</causal pairs>)";

namespace {
constexpr std::array<std::string_view, 3> kPlaceholders = {"explored regions", "causal pairs", "entity pairs"};
}  // namespace

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& fields) {
  std::string out(tmpl);
  for (const std::string_view name : kPlaceholders) {
    const std::string token = "{" + std::string(name) + "}";
    std::size_t pos = out.find(token);
    if (pos == std::string::npos) continue;
    const auto it = fields.find(std::string(name));
    if (it == fields.end()) throw Error(ErrorCode::kTemplateFieldMissing, "no value for " + token);
    while (pos != std::string::npos) {
      out.replace(pos, token.size(), it->second);
      pos = out.find(token, pos + it->second.size());
    }
  }
  return out;
}

Prompt render_prompt(Action action, const ReasoningState& state) {
  switch (action) {
    case Action::kRegionSelection: {
      std::vector<std::pair<std::string, BoundingBox>> regions;
      regions.reserve(state.explored_regions.size());
      for (const auto& r : state.explored_regions) regions.emplace_back(r.name, r.box);
      return {"", fill_template(kRegionSelectionTemplate, {{"explored regions", format_named_boxes(regions)},
                                                           {"causal pairs", format_pairs_list(state.discovered_causality)}})};
    }
    case Action::kEntityRecognition:
      return {"", fill_template(kEntityRecognitionTemplate, {})};
    case Action::kCausalityOrientation: {
      std::map<std::string, std::string> fields;
      if (state.last_action == Action::kEntityRecognition) {
        fields["entity pairs"] = format_pairs_list(state.candidate_pairs);
      }
      return {"", fill_template(kCausalityOrientationTemplate, fields)};
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown action");
}

Prompt end_to_end_prompt() { return {"", std::string(kEndToEndTemplate)}; }

}  // namespace vcd
