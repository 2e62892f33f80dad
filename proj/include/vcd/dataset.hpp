#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcd/backend.hpp"
#include "vcd/graph.hpp"
#include "vcd/search.hpp"

namespace vcd {

struct DatasetEntity {
  std::int64_t entity_id = 0;
  std::string entity_name;
  std::array<double, 4> bbox{};  // x, y, w, h as stored on disk

  friend bool operator==(const DatasetEntity&, const DatasetEntity&) = default;
};

using IdPair = std::pair<std::int64_t, std::int64_t>;

struct DatasetRecord {
  std::string dataset_id;
  std::int64_t img_id = 0;
  std::vector<DatasetEntity> entities;
  std::vector<std::pair<std::string, std::vector<IdPair>>> causal_relationships;  // file order
  CausalGraph graph;  // corner boxes, predicate-labeled edges
};

bool same_content(const DatasetRecord& a, const DatasetRecord& b);

enum class Severity { kError, kWarning };
std::string_view to_string(Severity s);

struct ValidationEntry {
  std::size_t record = 0;  // position in the input
  std::optional<std::int64_t> img_id;
  Severity severity = Severity::kError;
  std::string rule;
  std::string message;
};

struct LoadResult {
  std::vector<DatasetRecord> records;  // valid records only
  std::vector<ValidationEntry> report;
  std::size_t records_seen = 0;

  std::size_t errors() const;
  std::size_t warnings() const;
};

/// Whole-text JSON array or object, else one document per non-blank line.
/// Lines that fail to parse carry an error message instead of a document.
struct JsonDocuments {
  std::vector<nlohmann::ordered_json> docs;
  std::vector<std::optional<std::string>> errors;
};
JsonDocuments split_json_records(std::string_view text);

/// Throws UnreadableFile.
std::string read_text_file(const std::filesystem::path& path);

/// Rules (severity): malformed_json, malformed_record, missing_field,
/// field_type, malformed_entity, empty_entity_name, malformed_bbox,
/// non_positive_extent, negative_coordinate, duplicate_entity_id,
/// malformed_relationship, dangling_relationship, self_loop_relationship,
/// empty_entities (errors; the record is skipped); small_entity,
/// duplicate_relationship, empty_record, duplicate_img_id (warnings).
LoadResult parse_dataset(std::string_view text);

/// A JSON array of records or one record per line. Throws UnreadableFile.
LoadResult load_dataset(const std::filesystem::path& path);

/// Validates one record; returns it when no error was found.
std::optional<DatasetRecord> parse_record(const nlohmann::ordered_json& j, std::size_t index,
                                          std::vector<ValidationEntry>& report);

nlohmann::ordered_json record_to_json(const DatasetRecord& record);

/// One record per line. Throws UnwritablePath.
void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);

std::string report_jsonl(const std::vector<ValidationEntry>& report);

GroundTruthIndex ground_truth_index(const std::vector<DatasetRecord>& records);

struct DatasetStats {
  std::size_t images = 0;
  std::size_t entities = 0;
  std::size_t categories = 0;  // distinct entity names
  std::size_t relationships = 0;
  double relationships_per_image = 0.0;
  std::map<std::size_t, std::size_t> relationship_histogram;  // edges per image -> images
  std::vector<std::pair<std::string, std::size_t>> top_entities;
  std::vector<std::pair<std::string, std::size_t>> top_predicates;
};

/// Top lists are ordered by count, then name.
DatasetStats dataset_stats(const std::vector<DatasetRecord>& records, std::size_t top_k = 10);
nlohmann::ordered_json stats_to_json(const DatasetStats& stats);

// SFT corpus ---------------------------------------------------------------

struct SftExample {
  std::int64_t img_id = 0;
  ImageRef image;
  Trajectory trajectory;
};

struct SftTurn {
  std::string action;
  std::string image;  // handle of the image the step saw
  std::string prompt;
  std::string response;
};

struct SftRecord {
  std::int64_t img_id = 0;
  std::string image;
  std::vector<SftTurn> turns;
  std::string trajectory;  // responses concatenated in order
  double value = 0.0;
};

nlohmann::ordered_json sft_record_json(const SftExample& example, double crop_padding = 0.1);

/// Writes one conversation record per example; returns the count.
/// Throws UnwritablePath.
std::size_t export_sft_corpus(const std::vector<SftExample>& examples, const std::filesystem::path& path,
                              double crop_padding = 0.1);

/// Throws UnreadableFile or SchemaViolation.
std::vector<SftRecord> read_sft_corpus(const std::filesystem::path& path);

}  // namespace vcd
