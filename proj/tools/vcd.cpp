// Command-line entry point: evaluate, sweep, score, search, stats, serve.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vcd/app.hpp"
#include "vcd/error.hpp"

namespace {

std::vector<double> parse_thresholds(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

vcd::Aggregation parse_mode(const std::string& s) {
  return s == "micro" ? vcd::Aggregation::kMicro : vcd::Aggregation::kMacro;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual causal discovery: evaluation, reward scoring and tree-of-thought trajectory search"};
  app.require_subcommand(1);

  std::size_t jobs = 1;
  std::int64_t seed = 0;
  app.add_option("--jobs", jobs, "Worker threads for per-image work")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed for sampled model calls");

  // evaluate
  vcd::EvalOptions eval;
  std::string eval_mode = "macro";
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Graph recall / precision / F1 of predictions");
  evaluate->add_option("pred", eval.pred_file, "Predictions (dataset records or model outputs)")->required();
  evaluate->add_option("gt", eval.gt_file, "Ground-truth dataset")->required();
  evaluate->add_option("--threshold", eval.threshold, "GIoU matching threshold")->check(CLI::Range(-1.0, 1.0));
  evaluate->add_option("--mode", eval_mode, "Aggregation")->check(CLI::IsMember({"macro", "micro"}));
  evaluate->add_option("--out", eval_out, "Write the JSONL report here instead of stdout");

  // sweep
  vcd::SweepOptions sweep;
  std::string sweep_mode = "macro";
  std::string sweep_thresholds = "0.3,0.4,0.5,0.6,0.7";
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Recall over a threshold grid and its stability index");
  sweep_cmd->add_option("pred", sweep.pred_file)->required();
  sweep_cmd->add_option("gt", sweep.gt_file)->required();
  sweep_cmd->add_option("--thresholds", sweep_thresholds, "Comma-separated ascending thresholds");
  sweep_cmd->add_option("--mode", sweep_mode)->check(CLI::IsMember({"macro", "micro"}));
  sweep_cmd->add_option("--out", sweep_out);

  // score
  vcd::ScoreOptions score;
  std::string score_weights = "0.5,0.4,0.1";
  std::string score_out;
  auto* score_cmd = app.add_subcommand("score", "Causal reward of model outputs");
  score_cmd->add_option("pred", score.pred_file, "{img_id, prediction_text} records")->required();
  score_cmd->add_option("gt", score.gt_file)->required();
  score_cmd->add_option("--weights", score_weights, "lambda_r,lambda_p,lambda_f");
  score_cmd->add_option("--threshold", score.reward.threshold)->check(CLI::Range(-1.0, 1.0));
  score_cmd->add_flag("--graded-format", score.reward.graded_format, "Format term as fraction of valid records");
  score_cmd->add_option("--out", score_out);

  // search
  vcd::SearchOptions search;
  std::string leaf = "recall";
  std::size_t limit = 0;
  auto* search_cmd = app.add_subcommand("search", "Tree-of-thought search plus vanilla baseline, filtered");
  search_cmd->add_option("dataset", search.dataset)->required();
  search_cmd->add_option("--backend-config", search.backend_config, "Backend JSON config")->required();
  search_cmd->add_option("--out", search.out_dir, "Output directory")->required();
  search_cmd->add_option("--images", search.images_dir, "Directory holding the images");
  search_cmd->add_option("--image-pattern", search.image_pattern, "File name pattern, {img_id} substituted");
  search_cmd->add_option("--iterations", search.params.iterations)->check(CLI::PositiveNumber);
  search_cmd->add_option("--branching", search.params.branching)->check(CLI::PositiveNumber);
  search_cmd->add_option("--step-limit", search.params.step_limit)->check(CLI::PositiveNumber);
  search_cmd->add_option("--uct-w", search.params.uct_w)->check(CLI::NonNegativeNumber);
  search_cmd->add_option("--threshold", search.params.threshold)->check(CLI::Range(-1.0, 1.0));
  search_cmd->add_option("--temperature", search.params.sample_temperature)->check(CLI::NonNegativeNumber);
  search_cmd->add_option("--crop-padding", search.params.crop_padding)->check(CLI::NonNegativeNumber);
  search_cmd->add_flag("--include-full-image", search.params.include_full_image);
  search_cmd->add_option("--leaf-value", leaf)->check(CLI::IsMember({"recall", "reward"}));
  search_cmd->add_option("--limit", limit, "Only the first N images");
  search_cmd->add_flag("--dump-trees", search.dump_trees);
  search_cmd->add_flag("--verify", search.params.verify, "Check tree invariants after every iteration");

  // stats
  vcd::StatsOptions stats;
  std::string stats_report;
  std::string stats_out;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics and validation report");
  stats_cmd->add_option("dataset", stats.dataset)->required();
  stats_cmd->add_option("--report", stats_report, "Write validation entries (JSONL) here");
  stats_cmd->add_option("--out", stats_out, "Write statistics JSON here");
  stats_cmd->add_option("--top", stats.top_k);

  // serve
  vcd::ServeOptions serve;
  std::string serve_weights = "0.5,0.4,0.1";
  std::string token_env;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP reward service");
  serve_cmd->add_option("dataset", serve.service.dataset, "Ground-truth dataset")->required();
  serve_cmd->add_option("--host", serve.service.host);
  serve_cmd->add_option("--port", serve.service.port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--weights", serve_weights);
  serve_cmd->add_option("--threshold", serve.service.defaults.threshold)->check(CLI::Range(-1.0, 1.0));
  serve_cmd->add_option("--batch-cap", serve.service.batch_cap)->check(CLI::PositiveNumber);
  serve_cmd->add_option("--body-limit", serve.service.body_limit, "Request size cap in bytes")
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--threads", serve.service.threads)->check(CLI::PositiveNumber);
  serve_cmd->add_option("--token-env", token_env, "Environment variable holding the shared bearer token");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evaluate) {
      eval.mode = parse_mode(eval_mode);
      eval.jobs = jobs;
      if (!eval_out.empty()) eval.out = eval_out;
      return vcd::cmd_evaluate(eval, std::cout, std::cerr);
    }
    if (*sweep_cmd) {
      sweep.mode = parse_mode(sweep_mode);
      sweep.thresholds = parse_thresholds(sweep_thresholds);
      sweep.jobs = jobs;
      if (!sweep_out.empty()) sweep.out = sweep_out;
      return vcd::cmd_sweep(sweep, std::cout, std::cerr);
    }
    if (*score_cmd) {
      score.reward.weights = vcd::RewardWeights::parse(score_weights);
      score.jobs = jobs;
      if (!score_out.empty()) score.out = score_out;
      return vcd::cmd_score(score, std::cout, std::cerr);
    }
    if (*search_cmd) {
      search.params.seed = seed;
      search.params.leaf_value = leaf == "reward" ? vcd::LeafValue::kReward : vcd::LeafValue::kRecall;
      search.jobs = jobs;
      if (limit > 0) search.limit = limit;
      return vcd::cmd_search(search, std::cout, std::cerr);
    }
    if (*stats_cmd) {
      if (!stats_report.empty()) stats.report = stats_report;
      if (!stats_out.empty()) stats.out = stats_out;
      return vcd::cmd_stats(stats, std::cout, std::cerr);
    }
    if (*serve_cmd) {
      serve.service.defaults.weights = vcd::RewardWeights::parse(serve_weights);
      serve.service.jobs = 1;
      if (!token_env.empty()) serve.token_env = token_env;
      return vcd::cmd_serve(serve, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 2;
}
