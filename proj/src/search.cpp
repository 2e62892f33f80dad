#include "vcd/search.hpp"

#include <algorithm>
#include <limits>

#include "vcd/error.hpp"
#include "vcd/metrics.hpp"
#include "vcd/parallel.hpp"
#include "vcd/parser.hpp"
#include "vcd/prompts.hpp"

namespace vcd {
namespace {

bool is_terminal_state(const ReasoningState& s, const SearchParams& p) {
  return s.ended || s.step_index >= p.step_limit;
}

Grammar grammar_for(Action a) {
  switch (a) {
    case Action::kRegionSelection: return Grammar::kRegion;
    case Action::kEntityRecognition: return Grammar::kEntity;
    case Action::kCausalityOrientation: return Grammar::kCausality;
  }
  return Grammar::kRegion;
}

std::string join_prompt(const Prompt& p) {
  return p.system_text.empty() ? p.user_text : p.system_text + "\n" + p.user_text;
}

// Converts backend-side errors into the search's single failure code.
[[noreturn]] void rethrow_as_backend_failure(const std::exception& e) {
  throw Error(ErrorCode::kBackendFailure, e.what());
}

}  // namespace

void SearchParams::validate() const {
  if (step_limit == 0 || branching == 0 || iterations == 0) {
    throw Error(ErrorCode::kInvalidArgument, "step limit, branching and iterations must be positive");
  }
  if (!(uct_w >= 0.0) || !std::isfinite(uct_w)) throw Error(ErrorCode::kInvalidArgument, "exploration weight must be >= 0");
  if (!(crop_padding >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "crop padding must be >= 0");
}

const std::string& SearchNode::incoming_result() const {
  static const std::string empty;
  return step ? step->response : empty;
}

std::string Trajectory::concatenated() const {
  std::string out;
  for (const auto& s : steps) {
    if (!out.empty()) out += "\n\n";
    out += s.response;
  }
  return out;
}

double uct_score(double q, std::size_t visits, std::size_t parent_visits, double w) {
  if (visits == 0) throw Error(ErrorCode::kUnvisitedNode, "UCT is undefined for an unvisited node");
  if (parent_visits == 0) throw Error(ErrorCode::kInvalidArgument, "parent has no visits");
  return q + w * std::sqrt(std::log(static_cast<double>(parent_visits)) / static_cast<double>(visits));
}

std::vector<SearchNode*> select(SearchNode& root, double w) {
  std::vector<SearchNode*> path{&root};
  SearchNode* node = &root;
  while (node->expanded && !node->terminal && !node->children.empty()) {
    SearchNode* pick = nullptr;
    for (auto& c : node->children) {
      if (c->visits == 0) {
        pick = c.get();
        break;
      }
    }
    if (!pick) {
      double best = -std::numeric_limits<double>::infinity();
      for (auto& c : node->children) {
        const double s = uct_score(c->q, c->visits, node->visits, w);
        if (s > best) {
          best = s;
          pick = c.get();
        }
      }
    }
    path.push_back(pick);
    node = pick;
  }
  return path;
}

ChatRequest action_request(Action action, const ReasoningState& state, const ImageRef& image,
                           const SearchParams& params, double temperature, std::optional<std::int64_t> seed) {
  const Prompt prompt = render_prompt(action, state);
  ChatRequest req;
  req.system_text = prompt.system_text;
  req.user_text = prompt.user_text;
  req.purpose = std::string(to_string(action));
  req.decode.temperature = temperature;
  req.decode.max_tokens = params.max_tokens;
  req.decode.seed = seed;
  if (action == Action::kEntityRecognition && state.current_region()) {
    ImageRef crop = image;
    crop.crop = padded_crop(*state.current_region(), params.crop_padding);
    req.images.push_back(std::move(crop));
    if (params.include_full_image) req.images.push_back(image);
  } else {
    req.images.push_back(image);
  }
  return req;
}

std::optional<ReasoningState> apply_action(Action action, const ReasoningState& state, const std::string& text,
                                           const SearchParams& params) {
  try {
    switch (action) {
      case Action::kRegionSelection:
        return after_region(state, parse_region_choice(text));
      case Action::kEntityRecognition: {
        auto pairs = parse_entity_pairs(text);
        if (const auto region = state.current_region()) {
          const BoundingBox crop = padded_crop(*region, params.crop_padding);
          for (auto& p : pairs) {
            p.first_box = translated(p.first_box, crop.x1(), crop.y1());
            p.second_box = translated(p.second_box, crop.x1(), crop.y1());
          }
        }
        return after_entities(state, std::move(pairs));
      }
      case Action::kCausalityOrientation:
        return after_causality(state, parse_causal_pairs(text));
    }
  } catch (const Error&) {
  }
  return std::nullopt;
}

double state_value(const ReasoningState& state, const CausalGraph& gt, const SearchParams& params) {
  if (params.leaf_value == LeafValue::kReward) {
    return causal_reward(format_causal_output(state.discovered_causality), gt, params.reward).total;
  }
  const CausalGraph pred = graph_from_pairs(state.discovered_causality);
  return evaluate_pair(pred, gt, params.threshold).score.recall;
}

std::size_t expand(SearchNode& node, const SearchContext& ctx) {
  const SearchParams& p = ctx.params;
  if (node.terminal || is_terminal_state(node.state, p)) {
    node.terminal = true;
    node.expanded = true;
    return 0;
  }
  const Action action = node.state.next_action();
  struct Sample {
    std::string prompt;
    std::string text;
    bool ok = false;
  };
  std::vector<Sample> samples(p.branching);
  std::optional<std::string> failure;
  std::mutex failure_mutex;
  parallel_for(p.branching, ctx.backend->max_concurrency(), [&](std::size_t k) {
    const ChatRequest req =
        action_request(action, node.state, ctx.image, p, p.sample_temperature, p.seed + static_cast<std::int64_t>(k));
    samples[k].prompt = req.system_text.empty() ? req.user_text : req.system_text + "\n" + req.user_text;
    try {
      samples[k].text = ctx.backend->complete(req).text;
      samples[k].ok = true;
    } catch (const std::exception& e) {
      std::scoped_lock lock(failure_mutex);
      if (!failure) failure = e.what();
    }
  });

  node.expanded = true;
  std::size_t answered = 0;
  for (auto& s : samples) {
    if (!s.ok) continue;
    ++answered;
    auto next = apply_action(action, node.state, s.text, p);
    if (!next) continue;
    const bool duplicate = std::any_of(node.children.begin(), node.children.end(),
                                       [&](const auto& c) { return c->state == *next; });
    if (duplicate) continue;
    auto child = std::make_unique<SearchNode>();
    child->state = *next;
    child->parent = &node;
    child->terminal = is_terminal_state(child->state, p);
    child->step = StepRecord{action, std::move(s.prompt), std::move(s.text), std::move(*next)};
    node.children.push_back(std::move(child));
  }
  if (failure) {
    if (node.children.empty()) node.expanded = false;
    throw Error(ErrorCode::kBackendFailure, *failure);
  }
  if (node.children.empty() && answered > 0) node.terminal = true;
  return node.children.size();
}

double simulate(SearchNode& node, const SearchContext& ctx, bool* failed) {
  const SearchParams& p = ctx.params;
  ReasoningState state = node.state;
  std::vector<StepRecord> rollout;
  if (!node.terminal) {
    while (!is_terminal_state(state, p)) {
      const Action action = state.next_action();
      const ChatRequest req = action_request(action, state, ctx.image, p, 0.0, std::nullopt);
      std::string text;
      try {
        text = ctx.backend->complete(req).text;
      } catch (const std::exception&) {
        if (failed) *failed = true;
        break;
      }
      auto next = apply_action(action, state, text, p);
      if (!next) break;
      state = *next;
      rollout.push_back(StepRecord{action, join_prompt({req.system_text, req.user_text}), std::move(text), state});
    }
  }
  if (node.visits == 0) node.rollout = std::move(rollout);
  return state_value(state, *ctx.gt, p);
}

void backpropagate(const std::vector<SearchNode*>& path, double value) {
  if (path.empty()) return;
  SearchNode* leaf = path.back();
  leaf->visits += 1;
  leaf->q += (value - leaf->q) / static_cast<double>(leaf->visits);
  for (auto it = path.rbegin() + 1; it != path.rend(); ++it) {
    SearchNode* n = *it;
    double num = 0.0;
    double den = 0.0;
    for (const auto& c : n->children) {
      num += c->q * static_cast<double>(c->visits);
      den += static_cast<double>(c->visits);
    }
    if (den > 0.0) n->q = num / den;
    n->visits += 1;
  }
}

TreeCheck verify_tree(const SearchNode& root, std::size_t iterations) {
  TreeCheck check;
  if (root.visits != iterations) {
    check.ok = false;
    check.message = "root visits " + std::to_string(root.visits) + " != iterations " + std::to_string(iterations);
  }
  std::vector<const SearchNode*> stack{&root};
  while (!stack.empty()) {
    const SearchNode* n = stack.back();
    stack.pop_back();
    ++check.nodes;
    if (!std::isfinite(n->q)) {
      if (check.ok) check.message = "non-finite Q";
      check.ok = false;
    }
    std::size_t child_visits = 0;
    double num = 0.0;
    for (const auto& c : n->children) {
      child_visits += c->visits;
      num += c->q * static_cast<double>(c->visits);
      stack.push_back(c.get());
    }
    if (child_visits == 0) continue;
    const std::size_t expected = child_visits + (n == &root ? 0 : 1);
    if (n->visits != expected) {
      if (check.ok) {
        check.message = "node visits " + std::to_string(n->visits) + " != " + std::to_string(expected);
      }
      check.ok = false;
    }
    const double weighted = num / static_cast<double>(child_visits);
    if (std::abs(weighted - n->q) > 1e-12) {
      if (check.ok) check.message = "Q " + std::to_string(n->q) + " != weighted child mean " + std::to_string(weighted);
      check.ok = false;
    }
  }
  return check;
}

Trajectory extract_trajectory(const SearchNode& root, const CausalGraph& gt, const SearchParams& params) {
  Trajectory t;
  const SearchNode* node = &root;
  while (true) {
    const SearchNode* best = nullptr;
    for (const auto& c : node->children) {
      if (c->visits == 0) continue;
      if (!best || c->q > best->q || (c->q == best->q && c->visits > best->visits)) best = c.get();
    }
    if (!best) break;
    t.steps.push_back(*best->step);
    node = best;
  }
  t.final_state = node->state;
  if (!node->terminal) {
    for (const auto& s : node->rollout) {
      t.steps.push_back(s);
      t.final_state = s.state;
    }
  }
  t.final_graph = graph_from_pairs(t.final_state.discovered_causality);
  t.value = state_value(t.final_state, gt, params);
  return t;
}

SearchResult run_search(const ImageRef& image, const CausalGraph& gt, Backend& backend, const SearchParams& params) {
  params.validate();
  if (gt.edges().empty()) throw Error(ErrorCode::kEmptyGroundTruth, "ground truth has no causal edges");
  SearchContext ctx{image, &gt, &backend, params};
  SearchResult result;
  result.root = std::make_unique<SearchNode>();
  SearchNode& root = *result.root;

  for (std::size_t it = 0; it < params.iterations; ++it) {
    std::vector<SearchNode*> path = select(root, params.uct_w);
    SearchNode* leaf = path.back();
    const bool fresh = leaf->visits == 0 && leaf != &root;
    if (!fresh && !leaf->terminal && !leaf->expanded) {
      try {
        expand(*leaf, ctx);
      } catch (const Error& e) {
        result.degraded = true;
        result.degraded_reason = e.what();
        if (leaf->children.empty()) break;
      }
      if (!leaf->children.empty()) path.push_back(leaf->children.front().get());
    }
    bool failed = false;
    const double value = simulate(*path.back(), ctx, &failed);
    if (failed && !result.degraded) {
      result.degraded = true;
      result.degraded_reason = "backend failure during rollout";
    }
    backpropagate(path, value);
    ++result.iterations_completed;
    if (params.verify) {
      const TreeCheck check = verify_tree(root, result.iterations_completed);
      if (!check.ok) {
        if (result.verify_failures == 0) result.first_verify_failure = check.message;
        ++result.verify_failures;
      }
    }
    if (result.degraded && root.children.empty()) break;
  }
  result.trajectory = extract_trajectory(root, gt, params);
  result.trajectory.degraded = result.degraded;
  return result;
}

Trajectory vanilla_baseline(const ImageRef& image, const CausalGraph& gt, Backend& backend, double threshold,
                            int max_tokens) {
  if (gt.edges().empty()) throw Error(ErrorCode::kEmptyGroundTruth, "ground truth has no causal edges");
  const Prompt prompt = end_to_end_prompt();
  ChatRequest req;
  req.system_text = prompt.system_text;
  req.user_text = prompt.user_text;
  req.purpose = "e2e";
  req.decode.temperature = 0.0;
  req.decode.max_tokens = max_tokens;
  req.images.push_back(image);
  std::string text;
  try {
    text = backend.complete(req).text;
  } catch (const std::exception& e) {
    rethrow_as_backend_failure(e);
  }
  std::vector<NamedBoxPair> pairs;
  try {
    pairs = parse_causal_pairs(text);
  } catch (const Error&) {
  }
  Trajectory t;
  t.final_state.discovered_causality = pairs;
  t.final_graph = graph_from_pairs(pairs);
  t.steps.push_back(StepRecord{Action::kCausalityOrientation, join_prompt(prompt), text, t.final_state});
  t.value = evaluate_pair(t.final_graph, gt, threshold).score.recall;
  return t;
}

nlohmann::json dump_tree(const SearchNode& root) {
  nlohmann::json j;
  j["action"] = root.step ? nlohmann::json(std::string(to_string(root.step->action))) : nlohmann::json(nullptr);
  j["response"] = root.incoming_result();
  j["q"] = root.q;
  j["n"] = root.visits;
  j["terminal"] = root.terminal;
  j["step_index"] = root.state.step_index;
  j["children"] = nlohmann::json::array();
  for (const auto& c : root.children) j["children"].push_back(dump_tree(*c));
  return j;
}

ValueSummary summarize(std::vector<double> values) {
  ValueSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

FilterResult filter_values(const std::vector<std::pair<double, double>>& values) {
  FilterResult r;
  r.stats.total = values.size();
  std::vector<double> toct_all, vanilla_all, toct_nz, vanilla_nz;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto [toct, vanilla] = values[i];
    if (toct > vanilla) r.kept.push_back(i);
    toct_all.push_back(toct);
    vanilla_all.push_back(vanilla);
    if (toct == 0.0 && vanilla == 0.0) {
      ++r.stats.zero_pairs;
    } else {
      toct_nz.push_back(toct);
      vanilla_nz.push_back(vanilla);
    }
  }
  r.stats.kept = r.kept.size();
  r.stats.toct_with_zero = summarize(std::move(toct_all));
  r.stats.vanilla_with_zero = summarize(std::move(vanilla_all));
  r.stats.toct_without_zero = summarize(std::move(toct_nz));
  r.stats.vanilla_without_zero = summarize(std::move(vanilla_nz));
  return r;
}

FilterResult filter_trajectories(const std::vector<std::pair<Trajectory, Trajectory>>& pairs) {
  std::vector<std::pair<double, double>> values;
  values.reserve(pairs.size());
  for (const auto& [toct, vanilla] : pairs) values.emplace_back(toct.value, vanilla.value);
  return filter_values(values);
}

}  // namespace vcd
