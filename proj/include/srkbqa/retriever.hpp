#pragma once
// Top-K relation-path expansion with a learned stop: every live item offers
// an END closure plus one extension per candidate relation, the pool is
// pruned to the K best by joint probability, and the search ends when every
// surviving item has stopped.

#include <algorithm>
#include <string>
#include <vector>

#include "srkbqa/encoder.hpp"
#include "srkbqa/kb.hpp"
#include "srkbqa/types.hpp"

namespace srkbqa {

struct ScoredPath {
  EntityId topic = 0;
  std::vector<RelationId> relations;
  std::vector<double> step_probs;  // one per relation plus the final END step
  double joint_prob = 1.0;
  bool ended = false;
};

struct RetrievalConfig {
  int beam_width = 10;
  int max_hops = 3;
  // When set, candidate relations scoring at or below 0.5 are pruned whenever
  // some relation exceeds 0.5 (the greedy stop rule); END stays available
  // either way. When clear, pure beam ranking decides everything.
  bool threshold_stop = true;
};

inline double joint_from_steps(const std::vector<double>& step_probs) {
  double p = 1.0;
  for (double s : step_probs) p *= s;
  return p;
}

// Ranking order shared by beam pruning and final output: joint probability
// descending, ties by lexicographic relation-id sequence, finished first.
inline bool rank_less(const ScoredPath& a, const ScoredPath& b) {
  if (a.joint_prob != b.joint_prob) return a.joint_prob > b.joint_prob;
  if (a.relations != b.relations) return a.relations < b.relations;
  return a.ended && !b.ended;
}

namespace detail {

struct BeamItem {
  ScoredPath path;
  EntitySet frontier;
};

}  // namespace detail

inline std::vector<ScoredPath> expand_beam(const KnowledgeBase& kb, const ScorerParams& params,
                                           const std::string& question_text, EntityId topic,
                                           const RetrievalConfig& cfg) {
  if (topic >= kb.entity_count())
    throw Error("topic entity not in KB: id " + std::to_string(topic));
  if (cfg.beam_width < 1 || cfg.max_hops < 1)
    throw Error("beam_width and max_hops must be >= 1");

  std::vector<detail::BeamItem> pool;
  pool.push_back({ScoredPath{topic, {}, {}, 1.0, false}, EntitySet{topic}});

  bool any_live = true;
  while (any_live) {
    std::vector<detail::BeamItem> next;
    for (const auto& item : pool) {
      if (item.path.ended) {
        next.push_back(item);
        continue;
      }
      const QuestionState state{question_text, item.path.relations};
      const Vec q = encode_question(params, state, kb);
      const double s_end = score(q, params.end_embedding);

      detail::BeamItem finished = item;
      const double p_end = expansion_probability(s_end, s_end);
      finished.path.step_probs.push_back(p_end);
      finished.path.joint_prob *= p_end;
      finished.path.ended = true;
      finished.frontier.clear();
      next.push_back(std::move(finished));

      if (static_cast<int>(item.path.relations.size()) >= cfg.max_hops) continue;

      const auto cands = kb.candidate_relations(item.frontier);
      std::vector<std::pair<RelationId, double>> scored;
      scored.reserve(cands.size());
      bool any_above = false;
      for (RelationId r : cands) {
        const double p = expansion_probability(score(q, encode_relation(params, r, kb)), s_end);
        any_above = any_above || p > 0.5;
        scored.emplace_back(r, p);
      }
      for (const auto& [r, p] : scored) {
        if (cfg.threshold_stop && any_above && p <= 0.5) continue;
        EntitySet tails = kb.follow(item.frontier, r);
        if (tails.empty()) continue;  // uninstantiable: induces no tree
        detail::BeamItem child = item;
        child.path.relations.push_back(r);
        child.path.step_probs.push_back(p);
        child.path.joint_prob *= p;
        child.frontier = std::move(tails);
        next.push_back(std::move(child));
      }
    }

    std::sort(next.begin(), next.end(), [](const detail::BeamItem& a, const detail::BeamItem& b) {
      return rank_less(a.path, b.path);
    });
    // Defensive dedup by (relation sequence, ended); a path is defined purely
    // by its relations, and duplicates land adjacent after ranking because
    // equal sequences replay to bit-equal probabilities.
    next.erase(std::unique(next.begin(), next.end(),
                           [](const detail::BeamItem& a, const detail::BeamItem& b) {
                             return a.path.ended == b.path.ended &&
                                    a.path.relations == b.path.relations;
                           }),
               next.end());
    if (next.size() > static_cast<std::size_t>(cfg.beam_width))
      next.resize(static_cast<std::size_t>(cfg.beam_width));
    pool = std::move(next);

    any_live = false;
    for (const auto& item : pool)
      if (!item.path.ended) any_live = true;
  }

  std::vector<ScoredPath> out;
  out.reserve(pool.size());
  for (auto& item : pool) out.push_back(std::move(item.path));
  return out;
}

// Recomputes the joint probability of a relation sequence from scratch,
// including the final END step.
inline double path_probability(const KnowledgeBase& kb, const ScorerParams& params,
                               const std::string& question_text,
                               const std::vector<RelationId>& relations) {
  QuestionState state{question_text, {}};
  double joint = 1.0;
  for (RelationId r : relations) {
    if (r >= kb.relation_count()) throw Error("invalid relation id in path: " + std::to_string(r));
    const Vec q = encode_question(params, state, kb);
    const double s_end = score(q, params.end_embedding);
    joint *= expansion_probability(score(q, encode_relation(params, r, kb)), s_end);
    state.history.push_back(r);
  }
  const Vec q = encode_question(params, state, kb);
  const double s_end = score(q, params.end_embedding);
  joint *= expansion_probability(s_end, s_end);
  return joint;
}

inline double path_probability(const KnowledgeBase& kb, const ScorerParams& params,
                               const std::string& question_text, const ScoredPath& path) {
  return path_probability(kb, params, question_text, path.relations);
}

// Concatenation of expand_beam over every topic entity: n topics with beam
// width K yield at most nK paths, each tagged with its topic.
inline std::vector<ScoredPath> retrieve(const KnowledgeBase& kb, const ScorerParams& params,
                                        const std::string& question_text,
                                        const EntitySet& topic_entities,
                                        const RetrievalConfig& cfg) {
  if (topic_entities.empty()) throw Error("question has no topic entities");
  std::vector<ScoredPath> out;
  for (EntityId topic : topic_entities) {
    auto paths = expand_beam(kb, params, question_text, topic, cfg);
    for (auto& p : paths) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace srkbqa
