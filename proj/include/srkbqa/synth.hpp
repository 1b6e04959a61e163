#pragma once
// Synthetic KB + question generator for end-to-end pipeline tests. Entities
// sit in hop_weights.size()+1 layers and base edges only cross from layer t
// to t+1, drawing relations from layer t's own slice of the relation
// vocabulary. A question's later-hop tokens therefore never name a relation
// that is available at an earlier step, and planted chains are forward-only,
// so a bag-of-words scorer can separate every step's gold relation from its
// frontier negatives (inverses all share the "inv" name token). Questions
// carry fused positional hop tokens ("hop1alpha", "hop2echo"), and every
// planted relation sequence is verified to be a shortest route that weak
// supervision would emit (within the first ten lexicographic sequences).

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "srkbqa/kb.hpp"
#include "srkbqa/rng.hpp"
#include "srkbqa/supervision.hpp"
#include "srkbqa/types.hpp"

namespace srkbqa {

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_entities = 300;
  std::size_t n_relations = 12;
  std::size_t n_questions = 500;
  std::vector<double> hop_weights = {1.0, 1.0, 1.0};  // weight of 1-hop, 2-hop, ...
  double two_topic_fraction = 0.1;
  std::size_t edges_per_entity = 2;

  void validate() const {
    if (n_entities < 2) throw Error("synth: need at least 2 entities");
    if (n_relations < 1) throw Error("synth: need at least 1 relation");
    if (edges_per_entity < 1) throw Error("synth: need at least 1 edge per entity");
    if (hop_weights.empty()) throw Error("synth: hop_weights must not be empty");
    if (n_entities < hop_weights.size() + 1)
      throw Error("synth: need at least one entity per layer");
    double total = 0.0;
    for (double w : hop_weights) {
      if (w < 0.0) throw Error("synth: hop weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw Error("synth: hop weights must not all be zero");
    if (!(two_topic_fraction >= 0.0 && two_topic_fraction <= 1.0))
      throw Error("synth: two_topic_fraction must lie in [0, 1]");
  }
};

struct SynthData {
  std::vector<std::array<std::string, 3>> triples;  // base edges; KB adds inverses
  KnowledgeBase kb;
  std::vector<Question> questions;
  std::size_t skipped_questions = 0;  // slots that failed every planting attempt
};

namespace detail {

inline std::string synth_relation_name(std::size_t i) {
  static const char* kBase[] = {"alpha",  "bravo",   "charlie", "delta",  "echo",   "foxtrot",
                                "golf",   "hotel",   "india",   "juliett", "kilo",   "lima",
                                "mike",   "november", "oscar",  "papa",   "quebec", "romeo",
                                "sierra", "tango",   "uniform", "victor", "whiskey", "xray",
                                "yankee", "zulu"};
  constexpr std::size_t kBaseCount = sizeof(kBase) / sizeof(kBase[0]);
  std::string name = kBase[i % kBaseCount];
  if (i >= kBaseCount) name += std::to_string(i / kBaseCount);
  return name;
}

inline std::size_t weighted_choice(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = rng.uniform_real() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

// "alpha__inv" -> "hop2alphainv": one lowercase alnum token per step.
inline std::string fused_hop_token(std::size_t step, const std::string& relation_name) {
  std::string out = "hop" + std::to_string(step + 1);
  for (char c : relation_name)
    if (c != '_') out += c;
  return out;
}

inline std::string question_segment(const KnowledgeBase& kb, EntityId topic,
                                    const std::vector<RelationId>& seq) {
  std::string text = "start " + kb.entity_name(topic);
  for (std::size_t t = 0; t < seq.size(); ++t)
    text += " " + fused_hop_token(t, kb.relation_name(seq[t]));
  return text;
}

inline EntitySet follow_chain(const KnowledgeBase& kb, EntityId topic,
                              const std::vector<RelationId>& seq) {
  EntitySet frontier{topic};
  for (RelationId r : seq) frontier = follow(kb, frontier, r);
  return frontier;
}

// The planted sequence must be one weak supervision would emit for some
// answer: shortest, and within the first `cap` lexicographic sequences.
inline bool plant_verified(const KnowledgeBase& kb, EntityId topic,
                           const std::vector<RelationId>& seq, const EntitySet& answers,
                           std::size_t cap, EntityId& verified_answer) {
  const std::vector<int> dist = bfs_distances(kb, topic, true);
  for (EntityId a : answers) {
    if (dist[a] != static_cast<int>(seq.size())) continue;
    const auto seqs = shortest_relation_sequences(kb, topic, a, cap, &dist);
    if (!seqs) continue;
    for (const auto& s : *seqs) {
      if (s == seq) {
        verified_answer = a;
        return true;
      }
    }
  }
  return false;
}

}  // namespace detail

inline SynthData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SynthData data;

  const std::size_t depth = cfg.hop_weights.size();
  const std::size_t layers = depth + 1;
  const std::size_t per_layer = (cfg.n_entities + layers - 1) / layers;
  std::vector<std::vector<std::size_t>> members(layers);
  for (std::size_t e = 0; e < cfg.n_entities; ++e) members[e / per_layer].push_back(e);

  // Relation slice for the layer t -> t+1 transition; disjoint when the
  // vocabulary is large enough, shared round-robin otherwise.
  const std::size_t per_slice = (cfg.n_relations + depth - 1) / depth;
  std::vector<std::vector<std::size_t>> slice(depth);
  for (std::size_t t = 0; t < depth; ++t) {
    const std::size_t lo = t * per_slice;
    const std::size_t hi = std::min((t + 1) * per_slice, cfg.n_relations);
    for (std::size_t r = lo; r < hi; ++r) slice[t].push_back(r);
    if (slice[t].empty()) slice[t].push_back(t % cfg.n_relations);
  }

  // Base edges over the generator's own indices; no duplicate (h, r, t).
  struct BaseEdge {
    std::size_t head, rel, tail;
  };
  std::vector<std::vector<BaseEdge>> out(cfg.n_entities), in(cfg.n_entities);
  std::set<std::array<std::size_t, 3>> seen;
  for (std::size_t t = 0; t < depth; ++t) {
    for (std::size_t h : members[t]) {
      std::size_t placed = 0;
      for (std::size_t tries = 0; placed < cfg.edges_per_entity && tries < 200; ++tries) {
        const std::size_t r = slice[t][rng.uniform_index(slice[t].size())];
        const std::size_t tail = members[t + 1][rng.uniform_index(members[t + 1].size())];
        if (!seen.insert({h, r, tail}).second) continue;
        data.triples.push_back({"e" + std::to_string(h), detail::synth_relation_name(r),
                                "e" + std::to_string(tail)});
        out[h].push_back({h, r, tail});
        in[tail].push_back({h, r, tail});
        ++placed;
      }
    }
  }
  data.kb = KnowledgeBase::from_triples(data.triples, true);

  auto entity_of = [&](std::size_t idx) {
    const auto id = data.kb.find_entity("e" + std::to_string(idx));
    if (!id) throw Error("synth: generated entity missing from the KB");
    return *id;
  };
  auto relation_of = [&](std::size_t idx) {
    const auto id = data.kb.find_relation(detail::synth_relation_name(idx));
    if (!id) throw Error("synth: generated relation missing from the KB");
    return *id;
  };

  constexpr std::size_t kAttemptsPerQuestion = 50;
  constexpr std::size_t kSequenceCap = 10;
  std::set<std::string> seen_text;  // distinct questions only, so splits never overlap
  std::size_t failed_slots = 0;
  const std::size_t max_failed_slots = cfg.n_questions * 40;
  while (data.questions.size() < cfg.n_questions && failed_slots < max_failed_slots) {
    const std::size_t hops = detail::weighted_choice(rng, cfg.hop_weights) + 1;
    const bool two_topic = rng.bernoulli(cfg.two_topic_fraction);

    bool emitted = false;
    for (std::size_t attempt = 0; attempt < kAttemptsPerQuestion && !emitted; ++attempt) {
      // Forward walk over base edges from a bottom-layer entity.
      std::size_t cur = members[0][rng.uniform_index(members[0].size())];
      const std::size_t topic_idx = cur;
      std::vector<RelationId> seq;
      bool dead = false;
      for (std::size_t t = 0; t < hops; ++t) {
        if (out[cur].empty()) {
          dead = true;
          break;
        }
        const auto& e = out[cur][rng.uniform_index(out[cur].size())];
        seq.push_back(relation_of(e.rel));
        cur = e.tail;
      }
      if (dead) continue;

      const EntityId topic = entity_of(topic_idx);
      const EntitySet answers = detail::follow_chain(data.kb, topic, seq);
      EntityId verified = 0;
      if (!detail::plant_verified(data.kb, topic, seq, answers, kSequenceCap, verified)) continue;

      Question q;
      q.text = detail::question_segment(data.kb, topic, seq);
      q.topic_entities = {topic};
      q.answers = answers;

      if (two_topic) {
        const std::size_t hops2 = detail::weighted_choice(rng, cfg.hop_weights) + 1;
        // Walk upstream over base edges so the second chain is forward too.
        std::size_t cur2 = static_cast<std::size_t>(
            std::stoul(data.kb.entity_name(verified).substr(1)));
        std::vector<RelationId> rev;
        bool dead2 = false;
        for (std::size_t t = 0; t < hops2; ++t) {
          if (in[cur2].empty()) {
            dead2 = true;
            break;
          }
          const auto& e = in[cur2][rng.uniform_index(in[cur2].size())];
          rev.push_back(relation_of(e.rel));
          cur2 = e.head;
        }
        if (dead2) continue;
        const EntityId topic2 = entity_of(cur2);
        if (topic2 == topic || topic2 == verified) continue;
        std::vector<RelationId> seq2(rev.rbegin(), rev.rend());

        EntityId dummy = 0;
        if (!detail::plant_verified(data.kb, topic2, seq2, {verified}, kSequenceCap, dummy))
          continue;

        const EntitySet answers2 = detail::follow_chain(data.kb, topic2, seq2);
        const EntitySet joint = set_intersection_sorted(answers, answers2);
        if (joint.empty()) continue;  // unreachable: verified sits in both
        q.text += " " + detail::question_segment(data.kb, topic2, seq2);
        q.topic_entities = {topic, topic2};
        sort_unique(q.topic_entities);
        q.answers = joint;
      }

      if (!seen_text.insert(q.text).second) continue;

      q.id = "q" + std::to_string(data.questions.size());
      data.questions.push_back(std::move(q));
      emitted = true;
    }
    if (!emitted) ++failed_slots;  // re-draw hop count and try a fresh slot
  }
  data.skipped_questions = cfg.n_questions - data.questions.size();
  return data;
}

}  // namespace srkbqa
