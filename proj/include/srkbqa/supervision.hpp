#pragma once
// Supervision construction: all-shortest-path weak labels from QA pairs,
// per-step decomposition with negative sampling, and distant-supervision
// pseudo labels chained through shared entities.

#include <algorithm>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "srkbqa/encoder.hpp"
#include "srkbqa/kb.hpp"
#include "srkbqa/rng.hpp"
#include "srkbqa/types.hpp"

namespace srkbqa {

struct Question {
  std::string id;
  std::string text;
  EntitySet topic_entities;
  EntitySet answers;
};

struct PathInstance {
  std::string question_id;
  std::string question_text;
  EntityId topic = 0;
  std::vector<RelationId> path;
};

struct StepInstance {
  QuestionState state;
  RelationId gold = kEndRelation;
  std::vector<RelationId> negatives;  // sorted; subset of the frontier's candidates
};

// Per-entity BFS hop counts from `source`; -1 where unreachable. `forward`
// walks stored edges head->tail, otherwise tail->head.
inline std::vector<int> bfs_distances(const KnowledgeBase& kb, EntityId source, bool forward) {
  kb.entity_name(source);  // validates
  std::vector<int> dist(kb.entity_count(), -1);
  dist[source] = 0;
  std::deque<EntityId> queue{source};
  while (!queue.empty()) {
    const EntityId u = queue.front();
    queue.pop_front();
    EntitySet next;
    const auto& groups = forward ? kb.out_edges(u) : kb.in_edges(u);
    for (const auto& g : groups) next.insert(next.end(), g.second.begin(), g.second.end());
    sort_unique(next);
    for (EntityId v : next) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

namespace detail {

// Depth-first over layered frontiers restricted to entities that lie on some
// shortest topic->answer path (forward distance t, backward distance d-t).
// Sequences are discovered in lexicographic relation-id order, so stopping at
// `cap` keeps the lexicographically smallest ones.
inline void enumerate_shortest_dfs(const KnowledgeBase& kb, const EntitySet& frontier, int t,
                                   int d, const std::vector<int>& dist_f,
                                   const std::vector<int>& dist_b,
                                   std::vector<RelationId>& seq,
                                   std::vector<std::vector<RelationId>>& out, std::size_t cap) {
  if (out.size() >= cap) return;
  if (t == d) {
    out.push_back(seq);
    return;
  }
  for (RelationId r : kb.candidate_relations(frontier)) {
    EntitySet next;
    for (EntityId u : kb.follow(frontier, r))
      if (dist_f[u] == t + 1 && dist_b[u] == d - t - 1) next.push_back(u);
    if (next.empty()) continue;
    seq.push_back(r);
    enumerate_shortest_dfs(kb, next, t + 1, d, dist_f, dist_b, seq, out, cap);
    seq.pop_back();
    if (out.size() >= cap) return;
  }
}

}  // namespace detail

// All shortest relation sequences from topic to answer, lexicographically
// first `cap` of them; nullopt when the answer is unreachable.
inline std::optional<std::vector<std::vector<RelationId>>> shortest_relation_sequences(
    const KnowledgeBase& kb, EntityId topic, EntityId answer, std::size_t cap,
    const std::vector<int>* topic_distances = nullptr) {
  std::vector<int> local;
  if (!topic_distances) {
    local = bfs_distances(kb, topic, /*forward=*/true);
    topic_distances = &local;
  }
  kb.entity_name(answer);  // validates
  const int d = (*topic_distances)[answer];
  if (d < 0) return std::nullopt;
  std::vector<std::vector<RelationId>> out;
  if (d == 0) {
    out.push_back({});
    return out;
  }
  const std::vector<int> dist_b = bfs_distances(kb, answer, /*forward=*/false);
  std::vector<RelationId> seq;
  detail::enumerate_shortest_dfs(kb, EntitySet{topic}, 0, d, *topic_distances, dist_b, seq, out,
                                 cap);
  return out;
}

struct WeakLabelResult {
  std::vector<PathInstance> instances;
  std::size_t unreachable_pairs = 0;
};

// For every (topic, answer) pair with finite distance, emit all shortest
// relation paths (capped per pair), deduplicated per (topic, sequence).
inline WeakLabelResult build_weak_labels(const KnowledgeBase& kb,
                                         const std::vector<Question>& questions,
                                         std::size_t max_paths_per_pair = 10) {
  WeakLabelResult result;
  for (const auto& q : questions) {
    for (EntityId topic : q.topic_entities) {
      const std::vector<int> dist_f = bfs_distances(kb, topic, /*forward=*/true);
      std::set<std::vector<RelationId>> seqs;
      for (EntityId answer : q.answers) {
        auto paths = shortest_relation_sequences(kb, topic, answer, max_paths_per_pair, &dist_f);
        if (!paths) {
          ++result.unreachable_pairs;
          continue;
        }
        for (auto& p : *paths) seqs.insert(std::move(p));
      }
      for (const auto& seq : seqs)
        result.instances.push_back({q.id, q.text, topic, seq});
    }
  }
  return result;
}

// Splits a path into |path|+1 training steps: gold r_{t+1} given the first t
// relations, closing with gold END. Negatives are drawn without replacement
// from the frontier's other candidate relations.
inline std::vector<StepInstance> decompose_path(const KnowledgeBase& kb, const PathInstance& inst,
                                                std::size_t negatives_per_step,
                                                std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  std::vector<StepInstance> out;
  EntitySet frontier{inst.topic};
  kb.entity_name(inst.topic);  // validates
  for (std::size_t t = 0; t <= inst.path.size(); ++t) {
    const RelationId gold = t < inst.path.size() ? inst.path[t] : kEndRelation;
    std::vector<RelationId> avail;
    for (RelationId r : kb.candidate_relations(frontier))
      if (r != gold) avail.push_back(r);
    const std::size_t k = std::min(negatives_per_step, avail.size());
    rng.partial_shuffle(avail, k);
    std::vector<RelationId> negatives(avail.begin(), avail.begin() + static_cast<long>(k));
    std::sort(negatives.begin(), negatives.end());
    StepInstance step;
    step.state.text = inst.question_text;
    step.state.history.assign(inst.path.begin(), inst.path.begin() + static_cast<long>(t));
    step.gold = gold;
    step.negatives = std::move(negatives);
    out.push_back(std::move(step));
    if (t < inst.path.size()) {
      frontier = kb.follow(frontier, inst.path[t]);
      if (frontier.empty())
        throw Error("decompose_path: path not instantiable from topic " +
                    kb.entity_name(inst.topic));
    }
  }
  return out;
}

// One sentence-level relation extraction: (sentence, head, relation, tail).
struct DistantTuple {
  std::string sentence;
  std::string head;
  std::string relation;
  std::string tail;
};

struct PseudoLabels {
  KnowledgeBase kb;  // graph formed by the tuples themselves
  std::vector<Question> questions;
  std::vector<PathInstance> instances;
  std::size_t skipped_tuples = 0;
};

// Builds pseudo (question, path) labels: each tuple yields a 1-hop instance,
// and each chained pair (e1 -r1-> e2, e2 -r2-> e3) yields a 2-hop instance
// whose question text is the two sentences concatenated.
inline PseudoLabels build_pseudo_labels(const std::vector<DistantTuple>& tuples) {
  PseudoLabels out;
  std::vector<DistantTuple> valid;
  for (const auto& t : tuples) {
    if (t.sentence.empty() || t.head.empty() || t.relation.empty() || t.tail.empty()) {
      ++out.skipped_tuples;
      continue;
    }
    valid.push_back(t);
  }
  std::vector<std::array<std::string, 3>> rows;
  rows.reserve(valid.size());
  for (const auto& t : valid) rows.push_back({t.head, t.relation, t.tail});
  if (!rows.empty()) out.kb = KnowledgeBase::from_triples(rows, /*add_inverses=*/false);

  auto add = [&](const std::string& id, const std::string& text, EntityId topic, EntityId answer,
                 std::vector<RelationId> path) {
    Question q;
    q.id = id;
    q.text = text;
    q.topic_entities = {topic};
    q.answers = {answer};
    out.questions.push_back(q);
    out.instances.push_back({id, text, topic, std::move(path)});
  };

  std::unordered_map<std::string, std::vector<std::size_t>> by_head;
  for (std::size_t i = 0; i < valid.size(); ++i) by_head[valid[i].head].push_back(i);

  for (std::size_t i = 0; i < valid.size(); ++i) {
    const auto& t = valid[i];
    const EntityId h = *out.kb.find_entity(t.head);
    const EntityId a = *out.kb.find_entity(t.tail);
    const RelationId r = *out.kb.find_relation(t.relation);
    add("pseudo1-" + std::to_string(i), t.sentence, h, a, {r});
  }
  for (std::size_t i = 0; i < valid.size(); ++i) {
    auto it = by_head.find(valid[i].tail);
    if (it == by_head.end()) continue;
    for (std::size_t j : it->second) {
      if (j == i) continue;
      const auto& t1 = valid[i];
      const auto& t2 = valid[j];
      const EntityId e1 = *out.kb.find_entity(t1.head);
      const EntityId e3 = *out.kb.find_entity(t2.tail);
      const RelationId r1 = *out.kb.find_relation(t1.relation);
      const RelationId r2 = *out.kb.find_relation(t2.relation);
      add("pseudo2-" + std::to_string(i) + "-" + std::to_string(j), t1.sentence + " " + t2.sentence,
          e1, e3, {r1, r2});
    }
  }
  return out;
}

}  // namespace srkbqa
