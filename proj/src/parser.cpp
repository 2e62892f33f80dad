#include "vcd/parser.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "vcd/error.hpp"

namespace vcd {
namespace {

// Minimal DOM that keeps object members in source order, duplicates included.
// nlohmann's DOM types collapse duplicate keys, and two entities may share a
// name, so the DOM is built from SAX events.
struct Node {
  enum class Kind { kNull, kBool, kNumber, kString, kArray, kObject };
  Kind kind = Kind::kNull;
  double number = 0.0;
  std::string text;
  std::vector<Node> items;
  std::vector<std::pair<std::string, Node>> members;
};

class DomBuilder : public nlohmann::json_sax<nlohmann::json> {
 public:
  bool null() override { return put(Node{}); }
  bool boolean(bool) override { return put(Node{Node::Kind::kBool}); }
  bool number_integer(number_integer_t v) override { return put_number(static_cast<double>(v)); }
  bool number_unsigned(number_unsigned_t v) override { return put_number(static_cast<double>(v)); }
  bool number_float(number_float_t v, const string_t&) override { return put_number(v); }
  bool string(string_t& v) override {
    Node n{Node::Kind::kString};
    n.text = v;
    return put(std::move(n));
  }
  bool binary(binary_t&) override { return false; }
  bool start_object(std::size_t) override { return open(Node::Kind::kObject); }
  bool key(string_t& k) override {
    stack_.back().pending_key = k;
    return true;
  }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override { return open(Node::Kind::kArray); }
  bool end_array() override { return close(); }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

  Node take() { return std::move(root_); }

 private:
  struct Frame {
    Node node;
    std::string pending_key;
  };
  static constexpr std::size_t kMaxDepth = 64;

  bool put_number(double v) {
    Node n{Node::Kind::kNumber};
    n.number = v;
    return put(std::move(n));
  }
  bool put(Node n) {
    if (stack_.empty()) {
      root_ = std::move(n);
      return true;
    }
    Frame& f = stack_.back();
    if (f.node.kind == Node::Kind::kArray) {
      f.node.items.push_back(std::move(n));
    } else {
      f.node.members.emplace_back(std::move(f.pending_key), std::move(n));
    }
    return true;
  }
  bool open(Node::Kind kind) {
    if (stack_.size() >= kMaxDepth) return false;
    stack_.push_back(Frame{Node{kind}, {}});
    return true;
  }
  bool close() {
    Node done = std::move(stack_.back().node);
    stack_.pop_back();
    return put(std::move(done));
  }

  std::vector<Frame> stack_;
  Node root_;
};

std::optional<Node> parse_json(std::string_view body) {
  DomBuilder b;
  const bool ok = nlohmann::json::sax_parse(body.begin(), body.end(), &b, nlohmann::json::input_format_t::json, true);
  if (!ok) return std::nullopt;
  return b.take();
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

std::optional<BoundingBox> box_from(const Node& n) {
  if (n.kind != Node::Kind::kArray || n.items.size() != 4) return std::nullopt;
  double v[4];
  for (int i = 0; i < 4; ++i) {
    if (n.items[i].kind != Node::Kind::kNumber || !std::isfinite(n.items[i].number)) return std::nullopt;
    v[i] = n.items[i].number;
  }
  if (!BoundingBox::valid(v[0], v[1], v[2], v[3])) return std::nullopt;
  return BoundingBox(v[0], v[1], v[2], v[3]);
}

// Validates one record; returns the error it would raise, if any.
std::optional<ErrorCode> record_error(const Node& rec) {
  if (rec.kind != Node::Kind::kObject) return ErrorCode::kMalformedList;
  if (rec.members.size() != 2) return ErrorCode::kWrongKeyCount;
  for (const auto& [name, value] : rec.members) {
    if (trim(name).empty()) return ErrorCode::kMalformedList;
    if (!box_from(value)) return ErrorCode::kBadBox;
  }
  return std::nullopt;
}

NamedBoxPair pair_from(const Node& rec, bool ordered) {
  const auto& [n1, v1] = rec.members[0];
  const auto& [n2, v2] = rec.members[1];
  return NamedBoxPair{n1, *box_from(v1), n2, *box_from(v2), ordered};
}

std::string_view pair_tag(Grammar g) {
  return g == Grammar::kEntity ? kEntityPairsTag : kCausalPairsTag;
}

std::vector<NamedBoxPair> parse_pairs(std::string_view text, std::string_view tag, bool ordered) {
  const auto block = find_block(text, tag);
  if (!block) throw Error(ErrorCode::kMissingTag, "missing <" + std::string(tag) + "> block");
  const auto doc = parse_json(block->body);
  if (!doc || doc->kind != Node::Kind::kArray) {
    throw Error(ErrorCode::kMalformedList, "<" + std::string(tag) + "> body is not a JSON list");
  }
  std::vector<NamedBoxPair> out;
  out.reserve(doc->items.size());
  for (std::size_t i = 0; i < doc->items.size(); ++i) {
    if (const auto err = record_error(doc->items[i])) {
      throw Error(*err, "record " + std::to_string(i));
    }
    out.push_back(pair_from(doc->items[i], ordered));
  }
  return out;
}

std::string quote(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

std::string with_think(std::string_view think, std::string body) {
  if (think.empty()) return body;
  return "<think>\n" + std::string(think) + "\n</think>\n\n" + body;
}

}  // namespace

std::optional<TaggedBlock> find_block(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto start = text.find(open);
  if (start == std::string_view::npos) return std::nullopt;
  const auto body_start = start + open.size();
  const auto end = text.find(close, body_start);
  if (end == std::string_view::npos) return std::nullopt;
  return TaggedBlock{std::string(tag), std::string(text.substr(body_start, end - body_start))};
}

std::string_view to_string(Grammar g) {
  switch (g) {
    case Grammar::kE2E: return "e2e";
    case Grammar::kRegion: return "region";
    case Grammar::kEntity: return "entity";
    case Grammar::kCausality: return "causality";
  }
  return "e2e";
}

std::optional<Grammar> grammar_from_string(std::string_view s) {
  if (s == "e2e") return Grammar::kE2E;
  if (s == "region") return Grammar::kRegion;
  if (s == "entity") return Grammar::kEntity;
  if (s == "causality") return Grammar::kCausality;
  return std::nullopt;
}

std::vector<NamedBoxPair> parse_causal_pairs(std::string_view text) {
  return parse_pairs(text, kCausalPairsTag, true);
}

std::vector<NamedBoxPair> parse_entity_pairs(std::string_view text) {
  return parse_pairs(text, kEntityPairsTag, false);
}

RegionChoice parse_region_choice(std::string_view text) {
  if (trim(text) == kEndTrace) return RegionChoice{true, std::nullopt, std::nullopt};
  const auto name = find_block(text, kRegionNameTag);
  if (!name) throw Error(ErrorCode::kMissingTag, "missing <region name> block");
  const auto box = find_block(text, kBoundingBoxTag);
  if (!box) throw Error(ErrorCode::kMissingTag, "missing <bounding box> block");
  const std::string_view region = trim(name->body);
  if (region.empty()) throw Error(ErrorCode::kMissingTag, "empty <region name> block");
  const auto doc = parse_json(box->body);
  std::optional<BoundingBox> b = doc ? box_from(*doc) : std::nullopt;
  if (!b) throw Error(ErrorCode::kBadBox, "invalid <bounding box> body");
  return RegionChoice{false, std::string(region), *b};
}

double format_compliance(std::string_view text, Grammar grammar) {
  try {
    switch (grammar) {
      case Grammar::kE2E:
      case Grammar::kCausality:
        parse_causal_pairs(text);
        break;
      case Grammar::kEntity:
        parse_entity_pairs(text);
        break;
      case Grammar::kRegion:
        parse_region_choice(text);
        break;
    }
    return 1.0;
  } catch (const Error&) {
    return 0.0;
  }
}

LenientPairs parse_pairs_lenient(std::string_view text, Grammar grammar) {
  LenientPairs out;
  const auto block = find_block(text, pair_tag(grammar));
  if (!block) return out;
  const auto doc = parse_json(block->body);
  if (!doc || doc->kind != Node::Kind::kArray) return out;
  out.list_ok = true;
  out.records = doc->items.size();
  for (const auto& rec : doc->items) {
    if (!record_error(rec)) out.pairs.push_back(pair_from(rec, grammar != Grammar::kEntity));
  }
  return out;
}

double format_compliance_fraction(std::string_view text, Grammar grammar) {
  if (grammar == Grammar::kRegion) return format_compliance(text, grammar);
  const LenientPairs p = parse_pairs_lenient(text, grammar);
  if (!p.list_ok) return 0.0;
  if (p.records == 0) return 1.0;
  return static_cast<double>(p.pairs.size()) / static_cast<double>(p.records);
}

GraphParts entities_from_pairs(const std::vector<NamedBoxPair>& pairs) {
  GraphParts parts;
  std::map<std::pair<std::string, BoundingBox>, EntityId> ids;
  const auto intern = [&](const std::string& name, const BoundingBox& box) {
    const auto [it, inserted] = ids.try_emplace({name, box}, EntityId{static_cast<std::int64_t>(ids.size())});
    if (inserted) parts.entities.push_back(Entity{it->second, name, box});
    return it->second;
  };
  std::set<std::pair<EntityId, EntityId>> seen;
  for (const auto& p : pairs) {
    const EntityId cause = intern(p.first_name, p.first_box);
    const EntityId effect = intern(p.second_name, p.second_box);
    if (cause == effect) continue;
    if (seen.emplace(cause, effect).second) parts.edges.push_back(CausalEdge{cause, effect, std::nullopt});
  }
  return parts;
}

CausalGraph graph_from_pairs(const std::vector<NamedBoxPair>& pairs) {
  GraphParts parts = entities_from_pairs(pairs);
  return CausalGraph::build(std::move(parts.entities), std::move(parts.edges));
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_box(const BoundingBox& box) {
  return "[" + format_number(box.x1()) + ", " + format_number(box.y1()) + ", " + format_number(box.x2()) + ", " +
         format_number(box.y2()) + "]";
}

std::string format_pairs_list(const std::vector<NamedBoxPair>& pairs) {
  std::string out = "[";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i) out += ", ";
    const auto& p = pairs[i];
    out += "{" + quote(p.first_name) + ": " + format_box(p.first_box) + ", " + quote(p.second_name) + ": " +
           format_box(p.second_box) + "}";
  }
  return out + "]";
}

std::string format_named_boxes(const std::vector<std::pair<std::string, BoundingBox>>& boxes) {
  std::string out = "[";
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) out += ", ";
    out += "{" + quote(boxes[i].first) + ": " + format_box(boxes[i].second) + "}";
  }
  return out + "]";
}

std::string format_causal_output(const std::vector<NamedBoxPair>& pairs, std::string_view think) {
  return with_think(think, "<causal pairs>\n" + format_pairs_list(pairs) + "\n</causal pairs>");
}

std::string format_entity_output(const std::vector<NamedBoxPair>& pairs, std::string_view think) {
  return with_think(think, "<entity pairs>\n" + format_pairs_list(pairs) + "\n</entity pairs>");
}

std::string format_region_output(const RegionChoice& choice, std::string_view think) {
  if (choice.end_trace) return std::string(kEndTrace);
  if (!choice.name || !choice.box) throw Error(ErrorCode::kInvalidArgument, "region choice without name or box");
  return with_think(think, "<region name>\n" + *choice.name + "\n</region name>\n\n<bounding box>\n" +
                               format_box(*choice.box) + "\n</bounding box>");
}

}  // namespace vcd
