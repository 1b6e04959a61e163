#pragma once
// In-memory triple store: interned entity/relation tables plus forward and
// reverse adjacency indexes. Immutable after construction; share freely.

#include <array>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "srkbqa/serialize.hpp"
#include "srkbqa/types.hpp"

namespace srkbqa {

class KnowledgeBase {
 public:
  // One (relation, sorted tails) group of an entity's adjacency.
  using EdgeGroup = std::pair<RelationId, EntitySet>;

  // Parses `head<TAB>relation<TAB>tail` lines. With add_inverses every
  // relation r also gets `r__inv` and a reversed copy of each edge, so all
  // traversal downstream is forward-only.
  static KnowledgeBase ingest_triples(const std::string& path, bool add_inverses = true) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open triple file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.empty()) throw Error("empty triple file: " + path);

    std::vector<std::array<std::string, 3>> rows;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= bytes.size()) {
      std::size_t end = bytes.find('\n', start);
      const bool last = (end == std::string::npos);
      if (last) end = bytes.size();
      ++line_no;
      std::string line = bytes.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        // A trailing newline leaves one empty final fragment; anything else
        // empty is malformed.
        if (start == bytes.size()) break;
        throw ParseError("expected 3 tab-separated fields, got empty line", line_no);
      }
      std::array<std::string, 3> fields;
      std::size_t field = 0, fstart = 0;
      for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
          if (field >= 3) throw ParseError("expected 3 tab-separated fields, got more", line_no);
          fields[field++] = line.substr(fstart, i - fstart);
          fstart = i + 1;
        }
      }
      if (field != 3) throw ParseError("expected 3 tab-separated fields, got " + std::to_string(field), line_no);
      for (const auto& f : fields)
        if (f.empty()) throw ParseError("empty field in triple", line_no);
      rows.push_back(std::move(fields));
      if (last) break;
      start = end + 1;
    }
    if (rows.empty()) throw Error("empty triple file: " + path);
    return from_triples(rows, add_inverses);
  }

  static KnowledgeBase from_triples(const std::vector<std::array<std::string, 3>>& rows,
                                    bool add_inverses = true) {
    KnowledgeBase kb;
    std::map<std::pair<EntityId, RelationId>, std::set<EntityId>> fwd;
    for (const auto& row : rows) {
      const EntityId h = kb.intern_entity(row[0]);
      const RelationId r = kb.intern_relation(row[1], add_inverses);
      const EntityId t = kb.intern_entity(row[2]);
      fwd[{h, r}].insert(t);
      if (add_inverses) fwd[{t, kb.inverse_ids_[r]}].insert(h);
    }
    kb.freeze(fwd);
    return kb;
  }

  std::size_t entity_count() const { return entity_names_.size(); }
  std::size_t relation_count() const { return relation_names_.size(); }
  std::size_t triple_count() const { return triple_count_; }

  std::optional<EntityId> find_entity(std::string_view name) const {
    auto it = entity_ids_.find(std::string(name));
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<RelationId> find_relation(std::string_view name) const {
    auto it = relation_ids_.find(std::string(name));
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& entity_name(EntityId e) const {
    check_entity(e);
    return entity_names_[e];
  }

  const std::string& relation_name(RelationId r) const {
    check_relation(r);
    return relation_names_[r];
  }

  bool has_inverse(RelationId r) const {
    check_relation(r);
    return inverse_ids_[r] != kNoInverse;
  }

  RelationId inverse_of(RelationId r) const {
    check_relation(r);
    if (inverse_ids_[r] == kNoInverse)
      throw Error("relation has no materialized inverse: " + relation_names_[r]);
    return inverse_ids_[r];
  }

  const std::vector<EdgeGroup>& out_edges(EntityId e) const {
    check_entity(e);
    return out_[e];
  }

  // Reverse adjacency groups of e: (relation, sorted heads of (h, r, e)).
  const std::vector<EdgeGroup>& in_edges(EntityId e) const {
    check_entity(e);
    return in_[e];
  }

  // Sorted tails of (e, r); empty set if no such edges.
  const EntitySet& tails(EntityId e, RelationId r) const {
    check_entity(e);
    check_relation(r);
    return find_group(out_[e], r);
  }

  // Sorted heads of edges (h, r, e); reverse lookup.
  const EntitySet& heads(EntityId e, RelationId r) const {
    check_entity(e);
    check_relation(r);
    return find_group(in_[e], r);
  }

  // Relation-ids r such that some frontier entity has an outgoing r edge.
  std::vector<RelationId> candidate_relations(const EntitySet& frontier) const {
    std::vector<RelationId> out;
    for (EntityId e : frontier) {
      check_entity(e);
      for (const auto& [r, tails] : out_[e])
        if (!tails.empty()) out.push_back(r);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Union of adjacency(e, r) over the frontier; sorted, deduplicated.
  EntitySet follow(const EntitySet& frontier, RelationId r) const {
    check_relation(r);
    EntitySet out;
    for (EntityId e : frontier) {
      check_entity(e);
      const EntitySet& t = find_group(out_[e], r);
      out.insert(out.end(), t.begin(), t.end());
    }
    sort_unique(out);
    return out;
  }

  // Union of {h : (h, r, e)} over the frontier (traversal against storage
  // direction; used by shortest-path enumeration).
  EntitySet follow_back(const EntitySet& frontier, RelationId r) const {
    check_relation(r);
    EntitySet out;
    for (EntityId e : frontier) {
      check_entity(e);
      const EntitySet& h = find_group(in_[e], r);
      out.insert(out.end(), h.begin(), h.end());
    }
    sort_unique(out);
    return out;
  }

  // All stored triples (inverses included), sorted by (head, rel, tail).
  std::vector<Triple> all_triples() const {
    std::vector<Triple> out;
    out.reserve(triple_count_);
    for (EntityId e = 0; e < entity_names_.size(); ++e)
      for (const auto& [r, tails] : out_[e])
        for (EntityId t : tails) out.push_back({e, r, t});
    return out;
  }

  // Deduplicated undirected neighbor sets (used by the PPR baseline).
  std::vector<EntitySet> undirected_neighbors() const {
    std::vector<EntitySet> nbr(entity_names_.size());
    for (EntityId e = 0; e < entity_names_.size(); ++e) {
      for (const auto& [r, tails] : out_[e])
        nbr[e].insert(nbr[e].end(), tails.begin(), tails.end());
      for (const auto& [r, heads] : in_[e])
        nbr[e].insert(nbr[e].end(), heads.begin(), heads.end());
      sort_unique(nbr[e]);
    }
    return nbr;
  }

  void save(const std::string& path) const {
    ByteWriter w;
    w.raw("SRKB", 4);
    w.u32(1);
    w.u64(entity_names_.size());
    for (const auto& n : entity_names_) w.str(n);
    w.u64(relation_names_.size());
    for (std::size_t i = 0; i < relation_names_.size(); ++i) {
      w.str(relation_names_[i]);
      w.u32(inverse_ids_[i]);
    }
    std::uint64_t groups = 0;
    for (const auto& e : out_) groups += e.size();
    w.u64(groups);
    for (EntityId e = 0; e < entity_names_.size(); ++e) {
      for (const auto& [r, tails] : out_[e]) {
        w.u32(e);
        w.u32(r);
        w.u64(tails.size());
        for (EntityId t : tails) w.u32(t);
      }
    }
    w.u64(triple_count_);
    w.write_file(path);
  }

  static KnowledgeBase load(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    r.expect_magic("SRKB", 1);
    KnowledgeBase kb;
    const std::uint64_t ents = r.u64();
    for (std::uint64_t i = 0; i < ents; ++i) {
      kb.entity_names_.push_back(r.str());
      kb.entity_ids_[kb.entity_names_.back()] = static_cast<EntityId>(i);
    }
    const std::uint64_t rels = r.u64();
    for (std::uint64_t i = 0; i < rels; ++i) {
      kb.relation_names_.push_back(r.str());
      kb.relation_ids_[kb.relation_names_.back()] = static_cast<RelationId>(i);
      kb.inverse_ids_.push_back(r.u32());
    }
    std::map<std::pair<EntityId, RelationId>, std::set<EntityId>> fwd;
    const std::uint64_t groups = r.u64();
    for (std::uint64_t g = 0; g < groups; ++g) {
      const EntityId e = r.u32();
      const RelationId rel = r.u32();
      const std::uint64_t n = r.u64();
      auto& tails = fwd[{e, rel}];
      for (std::uint64_t i = 0; i < n; ++i) tails.insert(r.u32());
    }
    kb.freeze(fwd);
    const std::uint64_t expect = r.u64();
    if (expect != kb.triple_count_) throw Error("corrupt KB artifact: triple count mismatch");
    if (!r.at_end()) throw Error("corrupt KB artifact: trailing bytes");
    for (RelationId i = 0; i < kb.relation_names_.size(); ++i) {
      const RelationId inv = kb.inverse_ids_[i];
      if (inv != kNoInverse && (inv >= kb.relation_names_.size() || kb.inverse_ids_[inv] != i))
        throw Error("corrupt KB artifact: broken inverse pairing");
    }
    return kb;
  }

 private:
  static constexpr RelationId kNoInverse = kEndRelation - 1;

  EntityId intern_entity(const std::string& name) {
    auto it = entity_ids_.find(name);
    if (it != entity_ids_.end()) return it->second;
    const EntityId id = static_cast<EntityId>(entity_names_.size());
    entity_names_.push_back(name);
    entity_ids_.emplace(name, id);
    return id;
  }

  RelationId intern_relation_raw(const std::string& name) {
    auto it = relation_ids_.find(name);
    if (it != relation_ids_.end()) return it->second;
    const RelationId id = static_cast<RelationId>(relation_names_.size());
    relation_names_.push_back(name);
    relation_ids_.emplace(name, id);
    inverse_ids_.push_back(kNoInverse);
    return id;
  }

  RelationId intern_relation(const std::string& name, bool add_inverses) {
    const RelationId id = intern_relation_raw(name);
    if (add_inverses && inverse_ids_[id] == kNoInverse) {
      const RelationId inv = intern_relation_raw(name + "__inv");
      if (inverse_ids_[inv] != kNoInverse && inverse_ids_[inv] != id)
        throw Error("conflicting inverse naming for relation: " + name);
      inverse_ids_[id] = inv;
      inverse_ids_[inv] = id;
    }
    return id;
  }

  void freeze(const std::map<std::pair<EntityId, RelationId>, std::set<EntityId>>& fwd) {
    out_.assign(entity_names_.size(), {});
    in_.assign(entity_names_.size(), {});
    triple_count_ = 0;
    std::map<std::pair<EntityId, RelationId>, std::set<EntityId>> rev;
    for (const auto& [key, tails] : fwd) {
      out_[key.first].emplace_back(key.second, EntitySet(tails.begin(), tails.end()));
      triple_count_ += tails.size();
      for (EntityId t : tails) rev[{t, key.second}].insert(key.first);
    }
    for (const auto& [key, heads] : rev)
      in_[key.first].emplace_back(key.second, EntitySet(heads.begin(), heads.end()));
  }

  static const EntitySet& find_group(const std::vector<EdgeGroup>& groups, RelationId r) {
    static const EntitySet empty;
    auto it = std::lower_bound(groups.begin(), groups.end(), r,
                               [](const EdgeGroup& g, RelationId key) { return g.first < key; });
    if (it == groups.end() || it->first != r) return empty;
    return it->second;
  }

  void check_entity(EntityId e) const {
    if (e >= entity_names_.size()) throw Error("invalid entity id: " + std::to_string(e));
  }

  void check_relation(RelationId r) const {
    if (r >= relation_names_.size()) throw Error("invalid relation id: " + std::to_string(r));
  }

  std::vector<std::string> entity_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, RelationId> relation_ids_;
  std::vector<RelationId> inverse_ids_;
  std::vector<std::vector<EdgeGroup>> out_;
  std::vector<std::vector<EdgeGroup>> in_;
  std::uint64_t triple_count_ = 0;
};

inline std::vector<RelationId> candidate_relations(const KnowledgeBase& kb, const EntitySet& frontier) {
  return kb.candidate_relations(frontier);
}

inline EntitySet follow(const KnowledgeBase& kb, const EntitySet& frontier, RelationId r) {
  return kb.follow(frontier, r);
}

}  // namespace srkbqa
