#include "vcd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "vcd/error.hpp"

namespace vcd {
namespace {

using ojson = nlohmann::ordered_json;

constexpr double kMinEntityArea = 30.0 * 30.0;

struct Reporter {
  std::vector<ValidationEntry>& out;
  std::size_t record;
  std::optional<std::int64_t> img_id;
  std::size_t errors = 0;

  void error(std::string rule, std::string message) {
    out.push_back({record, img_id, Severity::kError, std::move(rule), std::move(message)});
    ++errors;
  }
  void warn(std::string rule, std::string message) {
    out.push_back({record, img_id, Severity::kWarning, std::move(rule), std::move(message)});
  }
};

bool is_integer(const ojson& j) { return j.is_number_integer(); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadableFile, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kUnreadableFile, path.string());
  return ss.str();
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kUnwritablePath, path.string());
  return out;
}

std::vector<std::pair<std::string, std::size_t>> top_counts(const std::map<std::string, std::size_t>& counts,
                                                            std::size_t k) {
  std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (v.size() > k) v.resize(k);
  return v;
}

}  // namespace

std::string_view to_string(Severity s) { return s == Severity::kError ? "error" : "warning"; }

bool same_content(const DatasetRecord& a, const DatasetRecord& b) {
  return a.dataset_id == b.dataset_id && a.img_id == b.img_id && a.entities == b.entities &&
         a.causal_relationships == b.causal_relationships;
}

std::size_t LoadResult::errors() const {
  return static_cast<std::size_t>(
      std::count_if(report.begin(), report.end(), [](const auto& e) { return e.severity == Severity::kError; }));
}

std::size_t LoadResult::warnings() const { return report.size() - errors(); }

std::optional<DatasetRecord> parse_record(const ojson& j, std::size_t index, std::vector<ValidationEntry>& report) {
  Reporter rep{report, index, std::nullopt};
  if (!j.is_object()) {
    rep.error("malformed_record", "record is not a JSON object");
    return std::nullopt;
  }
  if (j.contains("img_id") && is_integer(j["img_id"])) rep.img_id = j["img_id"].get<std::int64_t>();

  auto field = [&](const char* name, bool (ojson::*check)() const noexcept, const char* type) -> const ojson* {
    if (!j.contains(name)) {
      rep.error("missing_field", std::string("missing \"") + name + "\"");
      return nullptr;
    }
    const ojson& v = j[name];
    if (!(v.*check)()) {
      rep.error("field_type", std::string("\"") + name + "\" must be " + type);
      return nullptr;
    }
    return &v;
  };
  const ojson* dataset_id = field("dataset_id", &ojson::is_string, "a string");
  const ojson* img_id = field("img_id", &ojson::is_number_integer, "an integer");
  const ojson* entities = field("entities", &ojson::is_array, "an array");
  const ojson* relationships = field("causal_relationships", &ojson::is_object, "an object");

  DatasetRecord rec;
  if (dataset_id) rec.dataset_id = dataset_id->get<std::string>();
  if (img_id) rec.img_id = img_id->get<std::int64_t>();

  std::set<std::int64_t> ids;
  if (entities) {
    for (std::size_t k = 0; k < entities->size(); ++k) {
      const ojson& e = (*entities)[k];
      const std::string where = "entity #" + std::to_string(k);
      if (!e.is_object() || !e.contains("entity_id") || !is_integer(e["entity_id"]) || !e.contains("entity_name") ||
          !e["entity_name"].is_string() || !e.contains("bbox")) {
        rep.error("malformed_entity", where + " needs integer entity_id, string entity_name and bbox");
        continue;
      }
      DatasetEntity ent;
      ent.entity_id = e["entity_id"].get<std::int64_t>();
      ent.entity_name = e["entity_name"].get<std::string>();
      if (!ids.insert(ent.entity_id).second) {
        rep.error("duplicate_entity_id", "entity_id " + std::to_string(ent.entity_id) + " repeats");
      }
      if (ent.entity_name.find_first_not_of(" \t\r\n") == std::string::npos) {
        rep.error("empty_entity_name", where + " has an empty name");
      }
      const ojson& b = e["bbox"];
      bool bbox_ok = b.is_array() && b.size() == 4;
      if (bbox_ok) {
        for (std::size_t c = 0; c < 4; ++c) {
          if (!b[c].is_number() || !std::isfinite(b[c].get<double>())) {
            bbox_ok = false;
            break;
          }
          ent.bbox[c] = b[c].get<double>();
        }
      }
      if (!bbox_ok) {
        rep.error("malformed_bbox", where + " bbox must be four finite numbers [x, y, w, h]");
      } else if (ent.bbox[2] <= 0.0 || ent.bbox[3] <= 0.0) {
        rep.error("non_positive_extent", where + " has non-positive width or height");
      } else if (ent.bbox[0] < 0.0 || ent.bbox[1] < 0.0) {
        rep.error("negative_coordinate", where + " has a negative origin");
      } else if (ent.bbox[2] * ent.bbox[3] < kMinEntityArea) {
        rep.warn("small_entity", where + " is smaller than 30x30 pixels");
      }
      rec.entities.push_back(std::move(ent));
    }
  }

  std::size_t pair_count = 0;
  std::set<IdPair> seen_pairs;
  const bool no_entities = entities && entities->empty();
  if (relationships) {
    for (const auto& [predicate, list] : relationships->items()) {
      std::vector<IdPair> pairs;
      if (!list.is_array()) {
        rep.error("malformed_relationship", "\"" + predicate + "\" must map to a list of [cause, effect] pairs");
        rec.causal_relationships.emplace_back(predicate, std::move(pairs));
        continue;
      }
      for (const auto& item : list) {
        if (!item.is_array() || item.size() != 2 || !is_integer(item[0]) || !is_integer(item[1])) {
          rep.error("malformed_relationship", "\"" + predicate + "\" entry " + item.dump() + " is not an id pair");
          continue;
        }
        const IdPair p{item[0].get<std::int64_t>(), item[1].get<std::int64_t>()};
        ++pair_count;
        pairs.push_back(p);
        if (no_entities || !entities) continue;
        const std::string text = "[" + std::to_string(p.first) + ", " + std::to_string(p.second) + "]";
        if (!ids.contains(p.first) || !ids.contains(p.second)) {
          rep.error("dangling_relationship", "\"" + predicate + "\" " + text + " names an unknown entity");
        } else if (p.first == p.second) {
          rep.error("self_loop_relationship", "\"" + predicate + "\" " + text + " is a self loop");
        } else if (!seen_pairs.insert(p).second) {
          rep.warn("duplicate_relationship", "\"" + predicate + "\" " + text + " repeats an earlier pair");
        }
      }
      rec.causal_relationships.emplace_back(predicate, std::move(pairs));
    }
  }
  if (no_entities) {
    if (pair_count > 0) {
      rep.error("empty_entities", "relationships given but the entity list is empty");
    } else if (relationships) {
      rep.warn("empty_record", "no entities and no relationships");
    }
  }
  if (rep.errors > 0) return std::nullopt;

  std::vector<Entity> graph_entities;
  graph_entities.reserve(rec.entities.size());
  for (const auto& e : rec.entities) {
    graph_entities.push_back(
        Entity{EntityId{e.entity_id}, e.entity_name, xywh_to_corners(e.bbox[0], e.bbox[1], e.bbox[2], e.bbox[3])});
  }
  std::vector<CausalEdge> edges;
  std::set<IdPair> added;
  for (const auto& [predicate, pairs] : rec.causal_relationships) {
    for (const auto& p : pairs) {
      if (added.insert(p).second) edges.push_back(CausalEdge{EntityId{p.first}, EntityId{p.second}, predicate});
    }
  }
  rec.graph = CausalGraph::build(std::move(graph_entities), std::move(edges));
  return rec;
}

JsonDocuments split_json_records(std::string_view text) {
  JsonDocuments out;
  ojson whole = ojson::parse(text.begin(), text.end(), nullptr, false);
  if (!whole.is_discarded() && (whole.is_array() || whole.is_object())) {
    if (whole.is_array()) {
      for (auto& r : whole) out.docs.push_back(std::move(r));
    } else {
      out.docs.push_back(std::move(whole));
    }
    out.errors.resize(out.docs.size());
    return out;
  }
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    ojson doc = ojson::parse(line.begin(), line.end(), nullptr, false);
    if (doc.is_discarded()) {
      out.docs.emplace_back();
      out.errors.emplace_back("line " + std::to_string(line_no) + " is not valid JSON");
    } else {
      out.docs.push_back(std::move(doc));
      out.errors.emplace_back();
    }
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) { return read_text(path); }

LoadResult parse_dataset(std::string_view text) {
  LoadResult result;
  JsonDocuments split = split_json_records(text);
  auto& docs = split.docs;
  auto& parse_errors = split.errors;
  result.records_seen = docs.size();
  std::unordered_map<std::int64_t, std::size_t> first_seen;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (parse_errors[i]) {
      result.report.push_back({i, std::nullopt, Severity::kError, "malformed_json", *parse_errors[i]});
      continue;
    }
    auto rec = parse_record(docs[i], i, result.report);
    if (!rec) continue;
    const auto [it, inserted] = first_seen.emplace(rec->img_id, i);
    if (!inserted) {
      result.report.push_back({i, rec->img_id, Severity::kWarning, "duplicate_img_id",
                               "img_id already used by record " + std::to_string(it->second)});
    }
    result.records.push_back(std::move(*rec));
  }
  return result;
}

LoadResult load_dataset(const std::filesystem::path& path) { return parse_dataset(read_text(path)); }

ojson record_to_json(const DatasetRecord& record) {
  ojson j;
  j["dataset_id"] = record.dataset_id;
  j["img_id"] = record.img_id;
  j["entities"] = ojson::array();
  for (const auto& e : record.entities) {
    ojson ej;
    ej["entity_id"] = e.entity_id;
    ej["entity_name"] = e.entity_name;
    ej["bbox"] = e.bbox;
    j["entities"].push_back(std::move(ej));
  }
  j["causal_relationships"] = ojson::object();
  for (const auto& [predicate, pairs] : record.causal_relationships) {
    ojson list = ojson::array();
    for (const auto& [a, b] : pairs) list.push_back({a, b});
    j["causal_relationships"][predicate] = std::move(list);
  }
  return j;
}

void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorCode::kUnwritablePath, path.string());
}

std::string report_jsonl(const std::vector<ValidationEntry>& report) {
  std::string out;
  for (const auto& e : report) {
    ojson j;
    j["record"] = e.record;
    j["img_id"] = e.img_id ? ojson(*e.img_id) : ojson(nullptr);
    j["severity"] = to_string(e.severity);
    j["rule"] = e.rule;
    j["message"] = e.message;
    out += j.dump();
    out += '\n';
  }
  return out;
}

GroundTruthIndex ground_truth_index(const std::vector<DatasetRecord>& records) {
  GroundTruthIndex index;
  for (const auto& r : records) index.emplace(r.img_id, r.graph);
  return index;
}

DatasetStats dataset_stats(const std::vector<DatasetRecord>& records, std::size_t top_k) {
  DatasetStats s;
  std::map<std::string, std::size_t> names;
  std::map<std::string, std::size_t> predicates;
  for (const auto& r : records) {
    ++s.images;
    s.entities += r.graph.entities().size();
    for (const auto& e : r.graph.entities()) ++names[e.label];
    s.relationships += r.graph.edges().size();
    ++s.relationship_histogram[r.graph.edges().size()];
    for (const auto& e : r.graph.edges()) ++predicates[e.predicate.value_or("")];
  }
  s.categories = names.size();
  s.relationships_per_image = s.images ? static_cast<double>(s.relationships) / static_cast<double>(s.images) : 0.0;
  s.top_entities = top_counts(names, top_k);
  s.top_predicates = top_counts(predicates, top_k);
  return s;
}

ojson stats_to_json(const DatasetStats& s) {
  ojson j;
  j["images"] = s.images;
  j["entities"] = s.entities;
  j["categories"] = s.categories;
  j["relationships"] = s.relationships;
  j["relationships_per_image"] = s.relationships_per_image;
  ojson hist = ojson::object();
  for (const auto& [k, v] : s.relationship_histogram) hist[std::to_string(k)] = v;
  j["relationship_histogram"] = hist;
  auto pairs = [](const auto& v) {
    ojson a = ojson::array();
    for (const auto& [name, count] : v) a.push_back({{"name", name}, {"count", count}});
    return a;
  };
  j["top_entities"] = pairs(s.top_entities);
  j["top_predicates"] = pairs(s.top_predicates);
  return j;
}

ojson sft_record_json(const SftExample& example, double crop_padding) {
  ojson j;
  j["img_id"] = example.img_id;
  j["image"] = example.image.handle();
  j["turns"] = ojson::array();
  for (const auto& step : example.trajectory.steps) {
    ImageRef seen = example.image;
    if (step.action == Action::kEntityRecognition && step.state.current_region()) {
      seen.crop = padded_crop(*step.state.current_region(), crop_padding);
    }
    ojson t;
    t["action"] = to_string(step.action);
    t["image"] = seen.handle();
    t["prompt"] = step.prompt;
    t["response"] = step.response;
    j["turns"].push_back(std::move(t));
  }
  j["trajectory"] = example.trajectory.concatenated();
  j["value"] = example.trajectory.value;
  return j;
}

std::size_t export_sft_corpus(const std::vector<SftExample>& examples, const std::filesystem::path& path,
                              double crop_padding) {
  auto out = open_for_write(path);
  for (const auto& ex : examples) out << sft_record_json(ex, crop_padding).dump() << '\n';
  if (!out) throw Error(ErrorCode::kUnwritablePath, path.string());
  return examples.size();
}

std::vector<SftRecord> read_sft_corpus(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::vector<SftRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = ojson::parse(line);
      SftRecord r;
      r.img_id = j.at("img_id").get<std::int64_t>();
      r.image = j.at("image").get<std::string>();
      for (const auto& t : j.at("turns")) {
        r.turns.push_back(SftTurn{t.at("action").get<std::string>(), t.at("image").get<std::string>(),
                                  t.at("prompt").get<std::string>(), t.at("response").get<std::string>()});
      }
      r.trajectory = j.at("trajectory").get<std::string>();
      r.value = j.at("value").get<double>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace vcd
