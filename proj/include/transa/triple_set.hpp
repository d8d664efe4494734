#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace transa {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

/// Raised for unreadable or malformed dataset input.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  bool operator==(const Triple&) const = default;
};

enum class Label : std::int8_t { negative = -1, positive = 1 };

enum class ColumnOrder { hrt, htr };

inline ColumnOrder parse_column_order(std::string_view s) {
  if (s == "hrt") return ColumnOrder::hrt;
  if (s == "htr") return ColumnOrder::htr;
  throw std::invalid_argument("unknown column order '" + std::string(s) + "' (expected hrt or htr)");
}

struct RawTriple {
  std::string head;
  std::string relation;
  std::string tail;
  std::optional<Label> label;
};

/// Reads one triple per line, tab separated. A fourth field, when present,
/// must be 1 or -1.
inline std::vector<RawTriple> load_triples(std::istream& in, ColumnOrder order,
                                           const std::string& source = "<stream>") {
  std::vector<RawTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const auto where = source + ":" + std::to_string(line_no);
    if (fields.size() != 3 && fields.size() != 4)
      throw DataError(where + ": expected 3 or 4 tab-separated fields, got " +
                      std::to_string(fields.size()));
    for (std::size_t i = 0; i < 3; ++i)
      if (fields[i].empty()) throw DataError(where + ": empty field " + std::to_string(i + 1));

    RawTriple t;
    t.head = fields[0];
    if (order == ColumnOrder::hrt) {
      t.relation = fields[1];
      t.tail = fields[2];
    } else {
      t.tail = fields[1];
      t.relation = fields[2];
    }
    if (fields.size() == 4) {
      if (fields[3] == "1" || fields[3] == "+1")
        t.label = Label::positive;
      else if (fields[3] == "-1")
        t.label = Label::negative;
      else
        throw DataError(where + ": unknown label token '" + fields[3] + "'");
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<RawTriple> load_triples(const std::filesystem::path& path, ColumnOrder order) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return load_triples(in, order, path.string());
}

/// Name <-> dense id mapping, ids assigned in first-seen order.
class Vocabulary {
 public:
  std::uint32_t intern(const std::string& name) {
    auto [it, inserted] = ids_.try_emplace(name, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }

  std::optional<std::uint32_t> find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t at(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw std::out_of_range("unknown name '" + std::string(name) + "'");
  }

  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> names_;
};

/// One split of a dataset. `labels` is either empty (all positive) or
/// parallel to `triples`.
struct Split {
  std::vector<Triple> triples;
  std::vector<Label> labels;

  bool labeled() const noexcept { return !labels.empty(); }
  bool is_positive(std::size_t i) const { return labels.empty() || labels[i] == Label::positive; }
  std::size_t size() const noexcept { return triples.size(); }
  std::size_t positive_count() const {
    if (labels.empty()) return triples.size();
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::positive));
  }
  bool has_negatives() const {
    return std::find(labels.begin(), labels.end(), Label::negative) != labels.end();
  }
};

/// Membership structure over a set of triples, with per-(head, relation) and
/// per-(relation, tail) neighbor lists for filtered ranking.
class TripleIndex {
 public:
  TripleIndex() = default;
  TripleIndex(std::size_t num_entities, std::size_t num_relations)
      : num_entities_(num_entities), num_relations_(num_relations) {}

  void insert(const Triple& t) {
    if (!members_.insert(key(t)).second) return;
    tails_[pair_key(t.head, t.relation)].push_back(t.tail);
    heads_[pair_key(t.tail, t.relation)].push_back(t.head);
  }

  bool contains(const Triple& t) const { return members_.contains(key(t)); }
  std::size_t size() const noexcept { return members_.size(); }

  const std::vector<EntityId>& tails_of(EntityId head, RelationId relation) const {
    auto it = tails_.find(pair_key(head, relation));
    return it == tails_.end() ? empty_ : it->second;
  }
  const std::vector<EntityId>& heads_of(RelationId relation, EntityId tail) const {
    auto it = heads_.find(pair_key(tail, relation));
    return it == heads_.end() ? empty_ : it->second;
  }

 private:
  std::uint64_t key(const Triple& t) const {
    return (static_cast<std::uint64_t>(t.head) * num_relations_ + t.relation) * num_entities_ + t.tail;
  }
  std::uint64_t pair_key(EntityId e, RelationId r) const {
    return static_cast<std::uint64_t>(e) * num_relations_ + r;
  }

  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::unordered_set<std::uint64_t> members_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> heads_;
  inline static const std::vector<EntityId> empty_{};
};

/// Integer-encoded dataset. Treated as immutable once built.
struct TripleSet {
  Vocabulary entities;
  Vocabulary relations;
  Split train;
  Split valid;
  Split test;
  TripleIndex all_positive;    // positives of train, valid and test
  TripleIndex train_positive;  // positives of train only

  std::size_t num_entities() const noexcept { return entities.size(); }
  std::size_t num_relations() const noexcept { return relations.size(); }
};

inline TripleSet build_tripleset(const std::vector<RawTriple>& train, const std::vector<RawTriple>& valid,
                                 const std::vector<RawTriple>& test) {
  if (train.empty()) throw DataError("training split is empty");
  TripleSet ts;
  // Vocabularies first so the index can size its key space.
  for (const auto* split : {&train, &valid, &test})
    for (const auto& t : *split) {
      ts.entities.intern(t.head);
      ts.entities.intern(t.tail);
      ts.relations.intern(t.relation);
    }

  auto encode = [&](const std::vector<RawTriple>& raw, Split& out, bool allow_labels) {
    const bool any_label = std::any_of(raw.begin(), raw.end(), [](const RawTriple& t) { return t.label.has_value(); });
    for (const auto& t : raw) {
      out.triples.push_back({ts.entities.at(t.head), ts.relations.at(t.relation), ts.entities.at(t.tail)});
      if (any_label) out.labels.push_back(t.label.value_or(Label::positive));
    }
    if (!allow_labels && out.has_negatives()) throw DataError("training split may not contain negative triples");
    if (!allow_labels) out.labels.clear();
  };
  encode(train, ts.train, false);
  encode(valid, ts.valid, true);
  encode(test, ts.test, true);

  ts.all_positive = TripleIndex(ts.num_entities(), ts.num_relations());
  ts.train_positive = TripleIndex(ts.num_entities(), ts.num_relations());
  for (const auto& t : ts.train.triples) {
    ts.all_positive.insert(t);
    ts.train_positive.insert(t);
  }
  for (const auto* split : {&ts.valid, &ts.test})
    for (std::size_t i = 0; i < split->size(); ++i)
      if (split->is_positive(i)) ts.all_positive.insert(split->triples[i]);
  return ts;
}

struct DatasetFiles {
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
};

/// Locates train/valid/test files in a benchmark directory. Exact names
/// (train.txt, valid.txt or dev.txt, test.txt) win over suffix matches such
/// as `wordnet-mlj12-train.txt`.
inline DatasetFiles locate_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  auto find = [&](std::initializer_list<const char*> names) -> fs::path {
    for (const char* n : names)
      if (fs::is_regular_file(dir / n)) return dir / n;
    std::vector<fs::path> hits;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto fname = entry.path().filename().string();
      for (const char* n : names) {
        std::string suffix = std::string("-") + n;
        if (fname.size() > suffix.size() && fname.ends_with(suffix)) hits.push_back(entry.path());
      }
    }
    if (hits.size() == 1) return hits.front();
    throw DataError("missing dataset file: expected " + (dir / *names.begin()).string());
  };
  return {find({"train.txt"}), find({"valid.txt", "dev.txt"}), find({"test.txt"})};
}

inline TripleSet load_dataset(const std::filesystem::path& dir, ColumnOrder order = ColumnOrder::hrt) {
  const auto files = locate_dataset(dir);
  return build_tripleset(load_triples(files.train, order), load_triples(files.valid, order),
                         load_triples(files.test, order));
}

/// Averaged triple number per entity, counting positives of every split.
inline double atpe(const TripleSet& ts) {
  if (ts.num_entities() == 0) throw std::invalid_argument("atpe: empty entity set");
  const auto total = ts.train.positive_count() + ts.valid.positive_count() + ts.test.positive_count();
  return static_cast<double>(total) / static_cast<double>(ts.num_entities());
}

enum class RelationCategory { one_to_one, one_to_many, many_to_one, many_to_many };

inline const char* to_string(RelationCategory c) {
  switch (c) {
    case RelationCategory::one_to_one: return "1-1";
    case RelationCategory::one_to_many: return "1-N";
    case RelationCategory::many_to_one: return "N-1";
    case RelationCategory::many_to_many: return "N-N";
  }
  return "?";
}

struct RelationStats {
  RelationId relation = 0;
  std::size_t triples = 0;
  std::size_t distinct_heads = 0;
  std::size_t distinct_tails = 0;
  RelationCategory category = RelationCategory::one_to_one;

  /// Mean tails per head.
  double tph() const { return static_cast<double>(triples) / static_cast<double>(distinct_heads); }
  /// Mean heads per tail.
  double hpt() const { return static_cast<double>(triples) / static_cast<double>(distinct_tails); }
};

/// 1.5 threshold on tph/hpt, evaluated exactly: count/distinct < 3/2 <=> 2*count < 3*distinct.
inline RelationCategory categorize(std::size_t triples, std::size_t heads, std::size_t tails) {
  const bool many_tails = 2 * triples >= 3 * heads;
  const bool many_heads = 2 * triples >= 3 * tails;
  if (!many_tails && !many_heads) return RelationCategory::one_to_one;
  if (many_tails && !many_heads) return RelationCategory::one_to_many;
  if (!many_tails && many_heads) return RelationCategory::many_to_one;
  return RelationCategory::many_to_many;
}

/// Training-split statistics for every relation; nullopt for relations with
/// no training triple.
inline std::vector<std::optional<RelationStats>> all_relation_stats(const TripleSet& ts) {
  const auto nrel = ts.num_relations();
  std::vector<std::size_t> count(nrel, 0);
  std::vector<std::unordered_set<EntityId>> heads(nrel), tails(nrel);
  for (const auto& t : ts.train.triples) {
    ++count[t.relation];
    heads[t.relation].insert(t.head);
    tails[t.relation].insert(t.tail);
  }
  std::vector<std::optional<RelationStats>> out(nrel);
  for (RelationId r = 0; r < nrel; ++r) {
    if (count[r] == 0) continue;
    RelationStats s;
    s.relation = r;
    s.triples = count[r];
    s.distinct_heads = heads[r].size();
    s.distinct_tails = tails[r].size();
    s.category = categorize(s.triples, s.distinct_heads, s.distinct_tails);
    out[r] = s;
  }
  return out;
}

inline RelationStats relation_stats(const TripleSet& ts, RelationId relation) {
  if (relation >= ts.num_relations()) throw std::out_of_range("relation_stats: unknown relation id");
  auto all = all_relation_stats(ts);
  if (!all[relation])
    throw std::invalid_argument("relation_stats: relation '" + ts.relations.name(relation) +
                                "' has no training triples");
  return *all[relation];
}

}  // namespace transa
