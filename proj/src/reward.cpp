#include "vcd/reward.hpp"

#include <cmath>
#include <sstream>

#include "vcd/metrics.hpp"
#include "vcd/parallel.hpp"
#include "vcd/parser.hpp"

namespace vcd {

void RewardWeights::validate() const {
  for (const double w : {recall, precision, format}) {
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::kInvalidArgument, "reward weights must be >= 0");
  }
  if (sum() <= 0.0) throw Error(ErrorCode::kInvalidArgument, "reward weights must not all be zero");
}

RewardWeights RewardWeights::parse(const std::string& csv) {
  std::vector<double> v;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad weight '" + tok + "'");
    }
  }
  if (v.size() != 3) throw Error(ErrorCode::kInvalidArgument, "expected three weights lambda_r,lambda_p,lambda_f");
  RewardWeights w{v[0], v[1], v[2]};
  w.validate();
  return w;
}

RewardBreakdown causal_reward(const std::string& prediction_text, const CausalGraph& gt, const RewardConfig& config) {
  if (gt.edges().empty()) throw Error(ErrorCode::kEmptyGroundTruth, "ground truth has no causal edges");
  RewardBreakdown b;
  std::vector<NamedBoxPair> pairs;
  if (config.graded_format) {
    LenientPairs lenient = parse_pairs_lenient(prediction_text, Grammar::kE2E);
    b.format_term = format_compliance_fraction(prediction_text, Grammar::kE2E);
    pairs = std::move(lenient.pairs);
  } else {
    b.format_term = format_compliance(prediction_text, Grammar::kE2E);
    if (b.format_term > 0.0) pairs = parse_causal_pairs(prediction_text);
  }
  if (b.format_term > 0.0) {
    const CausalGraph pred = graph_from_pairs(pairs);
    const EntityMatching m = match_entities(pred.entities(), gt.entities(), config.threshold, config.gating);
    const GraphScore s = score_graph(pred, gt, m);
    b.recall_term = s.recall;
    b.precision_term = s.precision;
  }
  const RewardWeights& w = config.weights;
  b.total = w.recall * b.recall_term + w.precision * b.precision_term + w.format * b.format_term;
  return b;
}

std::vector<ScoreResult> score_batch(const std::vector<ScoreItem>& items, const GroundTruthIndex& gt,
                                     const RewardConfig& config, std::size_t jobs) {
  std::vector<ScoreResult> out(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto it = gt.find(items[i].img_id);
    if (it == gt.end()) {
      out[i].error = ItemError{ErrorCode::kUnknownGroundTruthRef,
                               "no ground truth for img_id " + std::to_string(items[i].img_id)};
      return;
    }
    try {
      out[i].breakdown = causal_reward(items[i].prediction_text, it->second, config);
    } catch (const Error& e) {
      out[i].error = ItemError{e.code(), e.what()};
    }
  });
  return out;
}

}  // namespace vcd
