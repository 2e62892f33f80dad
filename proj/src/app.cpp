#include "vcd/app.hpp"

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include <pthread.h>

#include "vcd/error.hpp"
#include "vcd/parallel.hpp"
#include "vcd/parser.hpp"

namespace vcd {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view mode_name(Aggregation m) { return m == Aggregation::kMacro ? "macro" : "micro"; }

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kUnwritablePath, path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kUnwritablePath, path.string());
}

// Writes through a temporary so a crash never leaves a half-written marker.
void write_atomically(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_file(tmp, text);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kUnwritablePath, path.string() + ": " + ec.message());
}

void emit_jsonl(const std::optional<fs::path>& out_path, const std::string& jsonl, std::ostream& out) {
  if (out_path) {
    write_file(*out_path, jsonl);
  } else {
    out << jsonl;
  }
}

std::vector<DatasetRecord> unique_by_img_id(std::vector<DatasetRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const DatasetRecord& a, const DatasetRecord& b) { return a.img_id < b.img_id; });
  records.erase(std::unique(records.begin(), records.end(),
                            [](const DatasetRecord& a, const DatasetRecord& b) { return a.img_id == b.img_id; }),
                records.end());
  return records;
}

}  // namespace

// ReportLine ----------------------------------------------------------------

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void ReportLine::key(std::string_view k) {
  if (body_.size() > 1) body_ += ", ";
  body_ += nlohmann::json(std::string(k)).dump();
  body_ += ": ";
}

ReportLine& ReportLine::str(std::string_view k, std::string_view value) {
  key(k);
  body_ += nlohmann::json(std::string(value)).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  return *this;
}

ReportLine& ReportLine::num(std::string_view k, double value) {
  key(k);
  body_ += std::isfinite(value) ? fixed6(value) : "null";
  return *this;
}

ReportLine& ReportLine::integer(std::string_view k, std::int64_t value) {
  key(k);
  body_ += std::to_string(value);
  return *this;
}

ReportLine& ReportLine::boolean(std::string_view k, bool value) {
  key(k);
  body_ += value ? "true" : "false";
  return *this;
}

ReportLine& ReportLine::nums(std::string_view k, const std::vector<double>& values) {
  key(k);
  body_ += "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) body_ += ", ";
    body_ += fixed6(values[i]);
  }
  body_ += "]";
  return *this;
}

ReportLine& ReportLine::strs(std::string_view k, const std::vector<std::string>& values) {
  key(k);
  body_ += "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) body_ += ", ";
    body_ += nlohmann::json(values[i]).dump();
  }
  body_ += "]";
  return *this;
}

ReportLine& ReportLine::null(std::string_view k) {
  key(k);
  body_ += "null";
  return *this;
}

// Predictions ---------------------------------------------------------------

PredictionSet load_predictions(const fs::path& path) {
  PredictionSet set;
  JsonDocuments split = split_json_records(read_text_file(path));
  for (std::size_t i = 0; i < split.docs.size(); ++i) {
    if (split.errors[i]) {
      set.report.push_back({i, std::nullopt, Severity::kError, "malformed_json", *split.errors[i]});
      continue;
    }
    const ojson& doc = split.docs[i];
    std::optional<std::int64_t> id;
    CausalGraph graph;
    bool unparseable = false;
    if (doc.is_object() && doc.contains("prediction_text")) {
      if (!doc.contains("img_id") || !doc["img_id"].is_number_integer() || !doc["prediction_text"].is_string()) {
        set.report.push_back({i, std::nullopt, Severity::kError, "malformed_record",
                              "model output needs integer img_id and string prediction_text"});
        continue;
      }
      id = doc["img_id"].get<std::int64_t>();
      try {
        graph = graph_from_pairs(parse_causal_pairs(doc["prediction_text"].get<std::string>()));
      } catch (const Error&) {
        unparseable = true;
      }
    } else {
      auto rec = parse_record(doc, i, set.report);
      if (!rec) continue;
      id = rec->img_id;
      graph = std::move(rec->graph);
    }
    if (set.graphs.contains(*id)) {
      set.report.push_back(
          {i, id, Severity::kWarning, "duplicate_img_id", "prediction for this img_id already given; ignored"});
      continue;
    }
    set.graphs.emplace(*id, std::move(graph));
    set.unparseable.emplace(*id, unparseable);
  }
  return set;
}

// evaluate ------------------------------------------------------------------

EvalReport evaluate_sets(const PredictionSet& pred, const std::vector<DatasetRecord>& gt_records, double threshold,
                         Aggregation mode, std::size_t jobs) {
  const std::vector<DatasetRecord> gt = unique_by_img_id(gt_records);
  EvalReport report;
  std::vector<const DatasetRecord*> scored;
  for (const auto& r : gt) {
    if (r.graph.edges().empty()) {
      report.skipped.push_back(r.img_id);
    } else {
      scored.push_back(&r);
    }
  }
  report.images.resize(scored.size());
  const CausalGraph empty;
  parallel_for(scored.size(), jobs, [&](std::size_t i) {
    const DatasetRecord& r = *scored[i];
    ImageEval& ie = report.images[i];
    ie.img_id = r.img_id;
    const auto it = pred.graphs.find(r.img_id);
    const CausalGraph& p = it == pred.graphs.end() ? empty : it->second;
    if (it == pred.graphs.end()) ie.flags.push_back("missing_prediction");
    if (const auto u = pred.unparseable.find(r.img_id); u != pred.unparseable.end() && u->second) {
      ie.flags.push_back("unparseable_prediction");
    }
    const PairEvaluation ev = evaluate_pair(p, r.graph, threshold);
    ie.score = ev.score;
    ie.reachable_recall = ev.reachable_recall;
    if (ev.score.empty_prediction) ie.flags.push_back("empty_prediction");
  });
  std::set<std::int64_t> gt_ids;
  for (const auto& r : gt) gt_ids.insert(r.img_id);
  for (const auto& [id, g] : pred.graphs) {
    if (!gt_ids.contains(id)) report.unknown_predictions.push_back(id);
  }
  if (report.images.empty()) throw Error(ErrorCode::kEmptyBatch, "no ground-truth image with causal edges");

  std::vector<GraphScore> scores;
  double reach_macro = 0.0;
  double reach_edges = 0.0;
  double gt_edges = 0.0;
  for (const auto& ie : report.images) {
    scores.push_back(ie.score);
    reach_macro += ie.reachable_recall;
    reach_edges += ie.reachable_recall * static_cast<double>(ie.score.gt_edges);
    gt_edges += static_cast<double>(ie.score.gt_edges);
  }
  report.aggregate = aggregate(scores, mode);
  report.reachable_recall =
      mode == Aggregation::kMacro ? reach_macro / static_cast<double>(report.images.size()) : reach_edges / gt_edges;
  if (report.reachable_recall > 0.0) {
    report.reasoning_loss = reasoning_loss(report.aggregate.recall, report.reachable_recall);
  }
  return report;
}

std::string eval_report_jsonl(const EvalReport& report, double threshold, Aggregation mode) {
  std::string out;
  for (const auto& ie : report.images) {
    out += ReportLine()
               .str("type", "image")
               .integer("img_id", ie.img_id)
               .num("recall", ie.score.recall)
               .num("precision", ie.score.precision)
               .num("f1", ie.score.f1)
               .num("reachable_recall", ie.reachable_recall)
               .integer("matched_edges", static_cast<std::int64_t>(ie.score.matched_edges))
               .integer("pred_edges", static_cast<std::int64_t>(ie.score.pred_edges))
               .integer("gt_edges", static_cast<std::int64_t>(ie.score.gt_edges))
               .strs("flags", ie.flags)
               .text();
    out += '\n';
  }
  for (const auto id : report.unknown_predictions) {
    out += ReportLine().str("type", "unknown_prediction").integer("img_id", id).text() + "\n";
  }
  for (const auto id : report.skipped) {
    out += ReportLine().str("type", "skipped").integer("img_id", id).str("reason", "empty_ground_truth").text() + "\n";
  }
  ReportLine agg;
  agg.str("type", "aggregate")
      .str("mode", mode_name(mode))
      .num("threshold", threshold)
      .integer("images", static_cast<std::int64_t>(report.images.size()))
      .num("recall", report.aggregate.recall)
      .num("precision", report.aggregate.precision)
      .num("f1", report.aggregate.f1)
      .num("reachable_recall", report.reachable_recall);
  if (report.reasoning_loss) {
    agg.num("reasoning_loss", *report.reasoning_loss);
  } else {
    agg.null("reasoning_loss");
  }
  out += agg.text() + "\n";
  return out;
}

std::string eval_report_table(const EvalReport& report, double threshold, Aggregation mode) {
  std::ostringstream os;
  os << pad("img_id", 12) << pad("recall", 10) << pad("precision", 11) << pad("f1", 10) << pad("reach", 10)
     << "  flags\n";
  for (const auto& ie : report.images) {
    std::string flags;
    for (const auto& f : ie.flags) flags += (flags.empty() ? "" : ",") + f;
    os << pad(std::to_string(ie.img_id), 12) << pad(fixed6(ie.score.recall), 10)
       << pad(fixed6(ie.score.precision), 11) << pad(fixed6(ie.score.f1), 10) << pad(fixed6(ie.reachable_recall), 10)
       << "  " << flags << '\n';
  }
  os << "\n" << mode_name(mode) << " over " << report.images.size() << " images at threshold " << fixed6(threshold)
     << "\n";
  os << "  recall     " << fixed6(report.aggregate.recall) << "\n";
  os << "  precision  " << fixed6(report.aggregate.precision) << "\n";
  os << "  f1         " << fixed6(report.aggregate.f1) << "\n";
  os << "  reachable  " << fixed6(report.reachable_recall) << "\n";
  os << "  loss       " << (report.reasoning_loss ? fixed6(*report.reasoning_loss) : std::string("n/a")) << "\n";
  if (!report.unknown_predictions.empty()) {
    os << report.unknown_predictions.size() << " prediction(s) name img_ids absent from the ground truth\n";
  }
  if (!report.skipped.empty()) os << report.skipped.size() << " ground-truth image(s) without edges skipped\n";
  return os.str();
}

int cmd_evaluate(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const PredictionSet pred = load_predictions(opts.pred_file);
    const LoadResult gt = load_dataset(opts.gt_file);
    for (const auto& e : pred.report) err << "prediction record " << e.record << ": " << e.rule << ": " << e.message << "\n";
    if (gt.errors() > 0) err << gt.errors() << " ground-truth record error(s); invalid records skipped\n";
    const EvalReport report = evaluate_sets(pred, gt.records, opts.threshold, opts.mode, opts.jobs);
    emit_jsonl(opts.out, eval_report_jsonl(report, opts.threshold, opts.mode), out);
    out << eval_report_table(report, opts.threshold, opts.mode);
    return 0;
  } catch (const std::exception& e) {
    err << "evaluate: " << e.what() << "\n";
    return 1;
  }
}

// sweep ---------------------------------------------------------------------

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.thresholds.empty()) throw Error(ErrorCode::kInvalidArgument, "no thresholds");
    for (std::size_t i = 1; i < opts.thresholds.size(); ++i) {
      if (!(opts.thresholds[i] > opts.thresholds[i - 1])) {
        throw Error(ErrorCode::kInvalidArgument, "thresholds must be strictly ascending");
      }
    }
    const PredictionSet pred = load_predictions(opts.pred_file);
    const LoadResult gt_load = load_dataset(opts.gt_file);
    if (gt_load.errors() > 0) err << gt_load.errors() << " ground-truth record error(s); invalid records skipped\n";

    std::vector<EvalReport> per_threshold;
    for (const double t : opts.thresholds) {
      per_threshold.push_back(evaluate_sets(pred, gt_load.records, t, opts.mode, opts.jobs));
    }
    std::string jsonl;
    const auto& images = per_threshold.front().images;
    for (std::size_t i = 0; i < images.size(); ++i) {
      std::vector<double> recalls;
      for (const auto& r : per_threshold) recalls.push_back(r.images[i].score.recall);
      const SweepReport s = make_sweep_report(opts.thresholds, recalls);
      ReportLine line;
      line.str("type", "image").integer("img_id", images[i].img_id).nums("recalls", recalls);
      if (s.rsi_defined) {
        line.num("rsi", s.rsi);
      } else {
        line.null("rsi");
      }
      jsonl += line.text() + "\n";
    }
    std::vector<double> recalls;
    for (const auto& r : per_threshold) recalls.push_back(r.aggregate.recall);
    const SweepReport agg = make_sweep_report(opts.thresholds, recalls);
    ReportLine line;
    line.str("type", "aggregate")
        .str("mode", mode_name(opts.mode))
        .integer("images", static_cast<std::int64_t>(images.size()))
        .nums("thresholds", opts.thresholds)
        .nums("recalls", recalls);
    if (agg.rsi_defined) {
      line.num("rsi", agg.rsi);
    } else {
      line.null("rsi");
    }
    jsonl += line.text() + "\n";
    emit_jsonl(opts.out, jsonl, out);

    out << pad("threshold", 10) << pad("recall", 10) << "\n";
    for (std::size_t i = 0; i < opts.thresholds.size(); ++i) {
      out << pad(fixed6(opts.thresholds[i]), 10) << pad(fixed6(recalls[i]), 10) << "\n";
    }
    out << "RSI " << (agg.rsi_defined ? fixed6(agg.rsi) : std::string("n/a (all recalls zero)")) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "sweep: " << e.what() << "\n";
    return 1;
  }
}

// score ---------------------------------------------------------------------

int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    opts.reward.weights.validate();
    const JsonDocuments split = split_json_records(read_text_file(opts.pred_file));
    std::vector<ScoreItem> items;
    for (std::size_t i = 0; i < split.docs.size(); ++i) {
      const ojson& d = split.docs[i];
      if (split.errors[i] || !d.is_object() || !d.contains("img_id") || !d["img_id"].is_number_integer() ||
          !d.contains("prediction_text") || !d["prediction_text"].is_string()) {
        throw Error(ErrorCode::kSchemaViolation,
                    "record " + std::to_string(i) + " needs integer img_id and string prediction_text");
      }
      items.push_back({d["img_id"].get<std::int64_t>(), d["prediction_text"].get<std::string>()});
    }
    const LoadResult gt = load_dataset(opts.gt_file);
    if (gt.errors() > 0) err << gt.errors() << " ground-truth record error(s); invalid records skipped\n";
    GroundTruthIndex index;
    for (const auto& r : unique_by_img_id(gt.records)) index.emplace(r.img_id, r.graph);
    const auto results = score_batch(items, index, opts.reward, opts.jobs);

    std::string jsonl;
    double total = 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      ReportLine line;
      line.integer("index", static_cast<std::int64_t>(i)).integer("img_id", items[i].img_id);
      if (results[i].ok()) {
        const RewardBreakdown& b = *results[i].breakdown;
        line.num("recall", b.recall_term).num("precision", b.precision_term).num("format", b.format_term).num(
            "total", b.total);
        total += b.total;
        ++ok;
      } else {
        line.str("error", to_string(results[i].error->code)).str("message", results[i].error->message);
      }
      jsonl += line.text() + "\n";
    }
    emit_jsonl(opts.out, jsonl, out);
    out << "scored " << ok << " of " << items.size() << " item(s); mean total "
        << fixed6(ok ? total / static_cast<double>(ok) : 0.0) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "score: " << e.what() << "\n";
    return 1;
  }
}

// search --------------------------------------------------------------------

std::string image_path_for(const SearchOptions& opts, std::int64_t img_id) {
  std::string name = opts.image_pattern;
  const std::string key = "{img_id}";
  for (auto pos = name.find(key); pos != std::string::npos; pos = name.find(key, pos)) {
    name.replace(pos, key.size(), std::to_string(img_id));
  }
  return (opts.images_dir / name).string();
}

std::string filter_stats_table(const FilterStats& s) {
  std::ostringstream os;
  os << "kept " << s.kept << " of " << s.total << " trajectories; " << s.zero_pairs << " pair(s) with both values 0\n";
  os << pad("", 14) << pad("Vanilla", 10) << pad("ToCT", 10) << "\n";
  os << pad("w/ ZERO mean", 14) << pad(fixed6(s.vanilla_with_zero.mean), 10) << pad(fixed6(s.toct_with_zero.mean), 10)
     << "\n";
  os << pad("median", 14) << pad(fixed6(s.vanilla_with_zero.median), 10) << pad(fixed6(s.toct_with_zero.median), 10)
     << "\n";
  os << pad("w/o ZERO mean", 14) << pad(fixed6(s.vanilla_without_zero.mean), 10)
     << pad(fixed6(s.toct_without_zero.mean), 10) << "\n";
  os << pad("median", 14) << pad(fixed6(s.vanilla_without_zero.median), 10)
     << pad(fixed6(s.toct_without_zero.median), 10) << "\n";
  return os.str();
}

namespace {

ojson summary_json(const ValueSummary& v) { return ojson{{"count", v.count}, {"mean", v.mean}, {"median", v.median}}; }

ojson filter_stats_json(const FilterStats& s) {
  ojson j;
  j["total"] = s.total;
  j["kept"] = s.kept;
  j["zero_pairs"] = s.zero_pairs;
  j["with_zero"] = {{"vanilla", summary_json(s.vanilla_with_zero)}, {"toct", summary_json(s.toct_with_zero)}};
  j["without_zero"] = {{"vanilla", summary_json(s.vanilla_without_zero)}, {"toct", summary_json(s.toct_without_zero)}};
  return j;
}

}  // namespace

int cmd_search(const SearchOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const BackendConfig config = load_backend_config(opts.backend_config);
    const auto backend = make_backend(config);
    return cmd_search(opts, *backend, out, err);
  } catch (const std::exception& e) {
    err << "search: " << e.what() << "\n";
    return 1;
  }
}

int cmd_search(const SearchOptions& opts, Backend& backend, std::ostream& out, std::ostream& err) {
  try {
    opts.params.validate();
    const LoadResult load = load_dataset(opts.dataset);
    if (load.errors() > 0) err << load.errors() << " dataset record error(s); invalid records skipped\n";
    std::vector<DatasetRecord> records;
    for (auto& r : unique_by_img_id(load.records)) {
      if (r.graph.edges().empty()) continue;
      records.push_back(std::move(r));
      if (opts.limit && records.size() >= *opts.limit) break;
    }
    const fs::path results_dir = opts.out_dir / "results";
    fs::create_directories(results_dir);
    if (opts.dump_trees) fs::create_directories(opts.out_dir / "trees");

    std::vector<std::optional<ojson>> results(records.size());
    std::vector<std::string> failures(records.size());
    std::mutex log_mutex;
    parallel_for(records.size(), opts.jobs, [&](std::size_t i) {
      const DatasetRecord& rec = records[i];
      const fs::path marker = results_dir / (std::to_string(rec.img_id) + ".json");
      if (fs::exists(marker)) {
        try {
          results[i] = ojson::parse(read_text_file(marker));
          return;
        } catch (const std::exception&) {
          // unreadable marker: recompute
        }
      }
      try {
        ImageRef image;
        image.path = image_path_for(opts, rec.img_id);
        if (image.path.ends_with(".png")) image.mime = "image/png";
        SearchResult sr = run_search(image, rec.graph, backend, opts.params);
        const Trajectory vanilla =
            vanilla_baseline(image, rec.graph, backend, opts.params.threshold, opts.params.max_tokens);
        ojson j;
        j["img_id"] = rec.img_id;
        j["toct_value"] = sr.trajectory.value;
        j["vanilla_value"] = vanilla.value;
        j["degraded"] = sr.degraded;
        j["iterations"] = sr.iterations_completed;
        j["sft"] = sft_record_json(SftExample{rec.img_id, image, sr.trajectory}, opts.params.crop_padding);
        j["vanilla_response"] = vanilla.steps.front().response;
        if (opts.dump_trees) {
          write_file(opts.out_dir / "trees" / (std::to_string(rec.img_id) + ".json"), dump_tree(*sr.root).dump(1));
        }
        write_atomically(marker, j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
        results[i] = std::move(j);
        if (sr.degraded) {
          std::scoped_lock lock(log_mutex);
          err << "img " << rec.img_id << ": search degraded: " << sr.degraded_reason << "\n";
        }
      } catch (const std::exception& e) {
        failures[i] = e.what();
        std::scoped_lock lock(log_mutex);
        err << "img " << rec.img_id << ": skipped: " << e.what() << "\n";
      }
    });

    std::vector<std::pair<double, double>> values;
    std::vector<std::size_t> slot;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!results[i]) continue;
      values.emplace_back((*results[i])["toct_value"].get<double>(), (*results[i])["vanilla_value"].get<double>());
      slot.push_back(i);
    }
    const FilterResult filtered = filter_values(values);
    std::vector<char> kept(values.size(), 0);
    for (const auto k : filtered.kept) kept[k] = 1;

    std::string sft;
    std::string trajectories;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const ojson& r = *results[slot[k]];
      trajectories += ReportLine()
                          .integer("img_id", r["img_id"].get<std::int64_t>())
                          .num("toct", values[k].first)
                          .num("vanilla", values[k].second)
                          .boolean("kept", kept[k] != 0)
                          .boolean("degraded", r["degraded"].get<bool>())
                          .text() +
                      "\n";
      if (kept[k]) sft += r["sft"].dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
    }
    std::string errors;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!failures[i].empty()) {
        errors += ReportLine().integer("img_id", records[i].img_id).str("error", failures[i]).text() + "\n";
      }
    }
    write_file(opts.out_dir / "trajectories.jsonl", trajectories);
    write_file(opts.out_dir / "sft.jsonl", sft);
    write_file(opts.out_dir / "errors.jsonl", errors);
    write_file(opts.out_dir / "filter_stats.json", filter_stats_json(filtered.stats).dump(2) + "\n");

    out << filter_stats_table(filtered.stats);
    const std::size_t failed = records.size() - values.size();
    if (failed > 0) out << failed << " image(s) failed; see errors.jsonl\n";
    return 0;
  } catch (const std::exception& e) {
    err << "search: " << e.what() << "\n";
    return 1;
  }
}

// stats ---------------------------------------------------------------------

int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const LoadResult load = load_dataset(opts.dataset);
    if (opts.report) write_file(*opts.report, report_jsonl(load.report));
    const DatasetStats s = dataset_stats(unique_by_img_id(load.records), opts.top_k);
    const std::string j = stats_to_json(s).dump() + "\n";
    if (opts.out) write_file(*opts.out, j);
    out << "records read      " << load.records_seen << " (" << load.records.size() << " valid, " << load.errors()
        << " errors, " << load.warnings() << " warnings)\n";
    out << "images            " << s.images << "\n";
    out << "entities          " << s.entities << "\n";
    out << "categories        " << s.categories << "\n";
    out << "relationships     " << s.relationships << "\n";
    out << "per image (mean)  " << fixed6(s.relationships_per_image) << "\n";
    out << "\nrelationships per image histogram\n";
    for (const auto& [k, v] : s.relationship_histogram) out << pad(std::to_string(k), 6) << "  " << v << "\n";
    out << "\ntop entities\n";
    for (const auto& [name, c] : s.top_entities) out << pad(std::to_string(c), 8) << "  " << name << "\n";
    out << "\ntop predicates\n";
    for (const auto& [name, c] : s.top_predicates) out << pad(std::to_string(c), 8) << "  " << name << "\n";
    if (!opts.out) out << "\n" << j;
    return 0;
  } catch (const std::exception& e) {
    err << "stats: " << e.what() << "\n";
    return 1;
  }
}

// serve ---------------------------------------------------------------------

int cmd_serve(const ServeOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    ServiceConfig config = opts.service;
    if (opts.token_env) {
      const char* token = std::getenv(opts.token_env->c_str());
      if (!token || !*token) throw Error(ErrorCode::kConfigError, "token variable " + *opts.token_env + " is unset");
      config.token = token;
    }
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    RewardService service(config);
    const fs::path dataset = config.dataset;
    service.load_async([dataset, &err] {
      const LoadResult load = load_dataset(dataset);
      if (load.errors() > 0) err << load.errors() << " dataset record error(s); invalid records skipped\n";
      return ground_truth_index(load.records);
    });
    const int port = service.start();
    out << "listening on " << config.host << ":" << port << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    out << "shutting down" << std::endl;
    service.stop();
    return 0;
  } catch (const std::exception& e) {
    err << "serve: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vcd
