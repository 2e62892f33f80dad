#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vcd/geometry.hpp"
#include "vcd/graph.hpp"

namespace vcd {

// Tags of the four output grammars, verbatim.
inline constexpr std::string_view kThinkTag = "think";
inline constexpr std::string_view kCausalPairsTag = "causal pairs";
inline constexpr std::string_view kEntityPairsTag = "entity pairs";
inline constexpr std::string_view kRegionNameTag = "region name";
inline constexpr std::string_view kBoundingBoxTag = "bounding box";
inline constexpr std::string_view kEndTrace = "END TRACE";

struct TaggedBlock {
  std::string tag;
  std::string body;  // verbatim, between <tag> and </tag>
};

/// First `<tag>...</tag>` block in `text`, or nullopt when either tag is absent.
std::optional<TaggedBlock> find_block(std::string_view text, std::string_view tag);

struct NamedBoxPair {
  std::string first_name;
  BoundingBox first_box;
  std::string second_name;
  BoundingBox second_box;
  bool ordered = true;  // first is the cause

  friend bool operator==(const NamedBoxPair&, const NamedBoxPair&) = default;
};

struct RegionChoice {
  bool end_trace = false;
  std::optional<std::string> name;
  std::optional<BoundingBox> box;

  friend bool operator==(const RegionChoice&, const RegionChoice&) = default;
};

enum class Grammar { kE2E, kRegion, kEntity, kCausality };

std::string_view to_string(Grammar g);
std::optional<Grammar> grammar_from_string(std::string_view s);

/// `<causal pairs>` list of two-key objects; the first key is the cause.
/// Key order is preserved exactly and duplicate names are kept.
/// Throws MissingTag, MalformedList, WrongKeyCount or BadBox.
std::vector<NamedBoxPair> parse_causal_pairs(std::string_view text);

/// As parse_causal_pairs over `<entity pairs>`, direction-agnostic.
std::vector<NamedBoxPair> parse_entity_pairs(std::string_view text);

/// "END TRACE" (whole output, surrounding whitespace ignored) or the
/// `<region name>` + `<bounding box>` blocks. Throws MissingTag or BadBox.
RegionChoice parse_region_choice(std::string_view text);

/// 1 when the grammar's parse succeeds, else 0. Never throws.
double format_compliance(std::string_view text, Grammar grammar);

/// Fraction of well-formed records (1 for a well-formed empty list, 0 when the
/// block or list structure is unusable). Region grammar is binary.
double format_compliance_fraction(std::string_view text, Grammar grammar);

/// Records of a pair block that individually satisfy the grammar.
struct LenientPairs {
  std::vector<NamedBoxPair> pairs;
  std::size_t records = 0;
  bool list_ok = false;
};
LenientPairs parse_pairs_lenient(std::string_view text, Grammar grammar);

struct GraphParts {
  std::vector<Entity> entities;
  std::vector<CausalEdge> edges;
};

/// Deduplicates entities on exact (name, box) equality and edges on
/// (cause, effect). A pair whose two sides are the same entity is dropped.
GraphParts entities_from_pairs(const std::vector<NamedBoxPair>& pairs);
CausalGraph graph_from_pairs(const std::vector<NamedBoxPair>& pairs);

// Serializers producing text the parsers accept.
std::string format_number(double v);
std::string format_box(const BoundingBox& box);
std::string format_pairs_list(const std::vector<NamedBoxPair>& pairs);
std::string format_named_boxes(const std::vector<std::pair<std::string, BoundingBox>>& boxes);
std::string format_causal_output(const std::vector<NamedBoxPair>& pairs, std::string_view think = "");
std::string format_entity_output(const std::vector<NamedBoxPair>& pairs, std::string_view think = "");
std::string format_region_output(const RegionChoice& choice, std::string_view think = "");

}  // namespace vcd
