#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcd/backend.hpp"
#include "vcd/graph.hpp"
#include "vcd/reward.hpp"
#include "vcd/state.hpp"

namespace vcd {

enum class LeafValue { kRecall, kReward };

struct SearchParams {
  std::size_t step_limit = 12;  // T, shared by tree depth and rollouts
  std::size_t branching = 10;
  std::size_t iterations = 20;
  double uct_w = std::sqrt(2.0);
  std::int64_t seed = 0;           // sample k of an expansion uses seed + k
  double sample_temperature = 0.8;  // rollouts are always greedy
  int max_tokens = 4096;
  double crop_padding = 0.1;
  bool include_full_image = false;  // also send the full image to entity recognition
  double threshold = 0.5;           // entity matching threshold for leaf values
  LeafValue leaf_value = LeafValue::kRecall;
  RewardConfig reward;  // used when leaf_value == kReward
  bool verify = false;  // tree-walk check after every iteration

  /// Throws InvalidArgument when a count is zero or w is negative.
  void validate() const;
};

/// One executed action: the prompt sent, the raw model text and the state it
/// produced.
struct StepRecord {
  Action action = Action::kRegionSelection;
  std::string prompt;
  std::string response;
  ReasoningState state;
};

struct SearchNode {
  ReasoningState state;
  std::optional<StepRecord> step;  // the step that produced this node; empty at the root
  SearchNode* parent = nullptr;
  std::vector<std::unique_ptr<SearchNode>> children;
  double q = 0.0;
  std::size_t visits = 0;
  bool expanded = false;
  bool terminal = false;
  std::vector<StepRecord> rollout;  // greedy continuation recorded on first evaluation

  const std::string& incoming_result() const;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  ReasoningState final_state;
  CausalGraph final_graph;
  double value = 0.0;
  bool degraded = false;

  /// Responses joined in order.
  std::string concatenated() const;
};

/// Everything an expansion or rollout needs.
struct SearchContext {
  ImageRef image;
  const CausalGraph* gt = nullptr;
  Backend* backend = nullptr;
  SearchParams params;
};

double uct_score(double q, std::size_t visits, std::size_t parent_visits, double w);

/// Root-to-leaf path. Unvisited children come first (earliest created), then
/// the maximum UCT score. Stops at an unexpanded or terminal node.
std::vector<SearchNode*> select(SearchNode& root, double w);

/// Samples `branching` completions for the node's next action and adds one
/// child per distinct parsed result. A node whose completions are all
/// malformed becomes terminal. Backend errors surface as BackendFailure after
/// the successful samples have been attached. Returns the number of children.
std::size_t expand(SearchNode& node, const SearchContext& ctx);

/// Greedy continuation to END TRACE or the step limit; stores the rollout on
/// the node and returns the leaf value. A backend failure ends the rollout at
/// the deepest completed state; `failed` is set when that happens.
double simulate(SearchNode& node, const SearchContext& ctx, bool* failed = nullptr);

/// Evaluated node: running mean of its values. Ancestors: visit-weighted mean
/// of their visited children.
void backpropagate(const std::vector<SearchNode*>& path, double value);

double state_value(const ReasoningState& state, const CausalGraph& gt, const SearchParams& params);

/// Prompt and images for one action.
ChatRequest action_request(Action action, const ReasoningState& state, const ImageRef& image,
                           const SearchParams& params, double temperature, std::optional<std::int64_t> seed);

/// Parses a completion for `action` and applies it to `state`. Returns nullopt
/// for malformed output.
std::optional<ReasoningState> apply_action(Action action, const ReasoningState& state, const std::string& text,
                                           const SearchParams& params);

struct TreeCheck {
  bool ok = true;
  std::size_t nodes = 0;
  std::string message;  // first violation
};

/// Root visits equal `iterations`; each expanded node's Q equals the
/// visit-weighted mean of its visited children and its visits equal theirs
/// (plus one for the evaluation it received before expansion).
TreeCheck verify_tree(const SearchNode& root, std::size_t iterations);

/// Greedy descent by Q (ties: more visits, then earliest created); a
/// non-terminal end node contributes its recorded rollout.
Trajectory extract_trajectory(const SearchNode& root, const CausalGraph& gt, const SearchParams& params);

struct SearchResult {
  Trajectory trajectory;
  std::unique_ptr<SearchNode> root;
  std::size_t iterations_completed = 0;
  bool degraded = false;
  std::string degraded_reason;
  std::size_t verify_failures = 0;
  std::string first_verify_failure;
};

/// Throws EmptyGroundTruth for an empty ground truth.
SearchResult run_search(const ImageRef& image, const CausalGraph& gt, Backend& backend, const SearchParams& params);

/// One end-to-end greedy call. Malformed output scores as an empty graph.
/// Throws BackendFailure.
Trajectory vanilla_baseline(const ImageRef& image, const CausalGraph& gt, Backend& backend, double threshold = 0.5,
                            int max_tokens = 4096);

/// Nested {action, response, q, n, terminal, children} records.
nlohmann::json dump_tree(const SearchNode& root);

struct ValueSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

struct FilterStats {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t zero_pairs = 0;  // both values zero
  ValueSummary vanilla_with_zero;
  ValueSummary toct_with_zero;
  ValueSummary vanilla_without_zero;
  ValueSummary toct_without_zero;
};

struct FilterResult {
  std::vector<std::size_t> kept;  // indices into the input
  FilterStats stats;
};

ValueSummary summarize(std::vector<double> values);

/// (searched value, vanilla value) pairs; keeps strictly better searches.
FilterResult filter_values(const std::vector<std::pair<double, double>>& values);
FilterResult filter_trajectories(const std::vector<std::pair<Trajectory, Trajectory>>& pairs);

}  // namespace vcd
