#pragma once
// Differentiable subgraph reasoner: question-conditioned relational mass
// propagation. Mass starts uniform on the topic roots and flows for a fixed
// number of rounds along out-edges weighted by a per-node softmax over
// question-relation affinities; sinks retain their mass, so the total is
// conserved and the final vector is a distribution over subgraph entities.
//
// The architecture is deliberately simple — the retriever treats the
// reasoner as a pluggable component, and this one exists to honor the
// interface (distribution over entities + exact gradients), not to replicate
// any particular heavyweight reader.

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "srkbqa/encoder.hpp"
#include "srkbqa/kb.hpp"
#include "srkbqa/serialize.hpp"
#include "srkbqa/subgraph.hpp"
#include "srkbqa/types.hpp"
#include "srkbqa/vecmath.hpp"

namespace srkbqa {

struct ReasonerParams {
  std::size_t in_dim = 64;   // scorer embedding width feeding the projection
  std::size_t key_dim = 32;  // relation key width
  int step_count = 3;
  std::size_t relation_count = 0;
  std::vector<double> relation_keys;        // relation_count x key_dim
  std::vector<double> question_projection;  // in_dim x key_dim, row-major
  double scale = 1.0;
  double bias = 0.0;
};

struct AnswerDistribution {
  EntitySet entity_ids;       // sorted
  std::vector<double> probs;  // aligned with entity_ids, sums to 1
  bool underflow_fallback = false;
};

inline ReasonerParams init_reasoner(std::size_t relation_count, std::size_t in_dim,
                                    std::size_t key_dim, int step_count, std::uint64_t seed) {
  if (step_count < 1) throw Error("init_reasoner: step_count must be >= 1");
  ReasonerParams p;
  p.in_dim = in_dim;
  p.key_dim = key_dim;
  p.step_count = step_count;
  p.relation_count = relation_count;
  Rng rng(seed);
  p.relation_keys.resize(relation_count * key_dim);
  for (auto& x : p.relation_keys) x = rng.uniform_real(-0.1, 0.1);
  p.question_projection.resize(in_dim * key_dim);
  for (auto& x : p.question_projection) x = rng.uniform_real(-0.1, 0.1);
  p.scale = 1.0;
  p.bias = 0.0;
  return p;
}

namespace detail {

struct ReasonerForward {
  std::vector<EntityId> entities;              // sorted node ids
  std::unordered_map<EntityId, std::size_t> index;
  std::vector<std::size_t> edge_head;          // per edge, node index
  std::vector<std::size_t> edge_tail;
  std::vector<RelationId> edge_rel;
  std::vector<std::pair<std::size_t, std::size_t>> head_ranges;  // per node: [begin, end) into edges
  std::vector<double> logits;                  // per edge
  std::vector<double> weights;                 // per edge, softmax within head group
  Vec q_emb;                                   // scorer-side question embedding (treated constant)
  Vec z;                                       // projected question, key_dim
  std::vector<std::vector<double>> mass;       // step_count+1 vectors of node mass
  double raw_total = 1.0;                      // final-step mass sum before normalization
  bool underflow_fallback = false;
};

inline ReasonerForward reasoner_forward(const ReasonerParams& rp, const ScorerParams& sp,
                                        const std::string& question_text, const Subgraph& g) {
  if (g.entities.empty()) throw Error("reasoner: empty subgraph");
  ReasonerForward f;
  f.entities = g.entities;
  f.index.reserve(f.entities.size());
  for (std::size_t i = 0; i < f.entities.size(); ++i) f.index.emplace(f.entities[i], i);

  EntitySet roots;
  for (EntityId r : g.topic_roots)
    if (f.index.count(r)) roots.push_back(r);
  if (roots.empty()) throw Error("reasoner: no topic root present in subgraph");

  // g.edges are sorted by (head, rel, tail) and endpoints are guaranteed to
  // be members, so head groups are contiguous.
  f.head_ranges.assign(f.entities.size(), {0, 0});
  for (const auto& e : g.edges) {
    if (e.rel >= rp.relation_count)
      throw Error("reasoner: relation id outside key table: " + std::to_string(e.rel));
    f.edge_head.push_back(f.index.at(e.head));
    f.edge_tail.push_back(f.index.at(e.tail));
    f.edge_rel.push_back(e.rel);
  }
  for (std::size_t e = 0; e < f.edge_head.size();) {
    std::size_t j = e;
    while (j < f.edge_head.size() && f.edge_head[j] == f.edge_head[e]) ++j;
    f.head_ranges[f.edge_head[e]] = {e, j};
    e = j;
  }

  // Question conditioning: z = projection^T * q_emb.
  QuestionState state{question_text, {}};
  static const KnowledgeBase kEmptyKb;
  f.q_emb = encode_question(sp, state, kEmptyKb);
  if (f.q_emb.size() != rp.in_dim)
    throw Error("reasoner: scorer width does not match question projection");
  f.z.assign(rp.key_dim, 0.0);
  for (std::size_t i = 0; i < rp.in_dim; ++i) {
    const double qi = f.q_emb[i];
    if (qi == 0.0) continue;
    const double* row = rp.question_projection.data() + i * rp.key_dim;
    for (std::size_t j = 0; j < rp.key_dim; ++j) f.z[j] += qi * row[j];
  }

  // Per-edge logits and per-head softmax weights (fixed across steps).
  f.logits.resize(f.edge_head.size());
  f.weights.resize(f.edge_head.size());
  for (std::size_t e = 0; e < f.edge_head.size(); ++e) {
    const double* key = rp.relation_keys.data() + static_cast<std::size_t>(f.edge_rel[e]) * rp.key_dim;
    double s = 0.0;
    for (std::size_t j = 0; j < rp.key_dim; ++j) s += f.z[j] * key[j];
    f.logits[e] = rp.scale * s + rp.bias;
  }
  for (std::size_t h = 0; h < f.entities.size(); ++h) {
    const auto [b, e] = f.head_ranges[h];
    if (b == e) continue;
    double mx = f.logits[b];
    for (std::size_t k = b + 1; k < e; ++k) mx = std::max(mx, f.logits[k]);
    double total = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      f.weights[k] = std::exp(f.logits[k] - mx);
      total += f.weights[k];
    }
    for (std::size_t k = b; k < e; ++k) f.weights[k] /= total;
  }

  // Propagation.
  std::vector<double> m(f.entities.size(), 0.0);
  for (EntityId r : roots) m[f.index.at(r)] = 1.0 / static_cast<double>(roots.size());
  f.mass.push_back(m);
  for (int step = 0; step < rp.step_count; ++step) {
    std::vector<double> next(f.entities.size(), 0.0);
    for (std::size_t h = 0; h < f.entities.size(); ++h) {
      if (m[h] == 0.0) continue;
      const auto [b, e] = f.head_ranges[h];
      if (b == e) {
        next[h] += m[h];  // sink keeps its mass
        continue;
      }
      for (std::size_t k = b; k < e; ++k) next[f.edge_tail[k]] += m[h] * f.weights[k];
    }
    m = std::move(next);
    f.mass.push_back(m);
  }

  // Mass is conserved, so this fires only on pathological float underflow.
  double total = 0.0;
  for (double x : m) total += x;
  if (!(total > 1e-12)) {
    f.underflow_fallback = true;
    std::fill(f.mass.back().begin(), f.mass.back().end(), 0.0);
    for (EntityId r : roots)
      f.mass.back()[f.index.at(r)] = 1.0 / static_cast<double>(roots.size());
  } else {
    f.raw_total = total;
    for (auto& x : f.mass.back()) x /= total;
  }
  return f;
}

}  // namespace detail

// p(a | q, G) over the subgraph's entities.
inline AnswerDistribution answer_distribution(const ReasonerParams& rp, const ScorerParams& sp,
                                              const std::string& question_text,
                                              const Subgraph& g) {
  const auto f = detail::reasoner_forward(rp, sp, question_text, g);
  AnswerDistribution dist;
  dist.entity_ids = f.entities;
  dist.probs = f.mass.back();
  dist.underflow_fallback = f.underflow_fallback;
  return dist;
}

// Mass assigned to `answer` when reasoning over the single tree induced by
// (topic, path); 0 when the path is uninstantiable or the answer is outside
// the tree.
inline double tree_likelihood(const ReasonerParams& rp, const ScorerParams& sp,
                              const std::string& question_text, EntityId topic,
                              const std::vector<RelationId>& path, const KnowledgeBase& kb,
                              EntityId answer) {
  const Tree tree = induce_tree(kb, topic, path);
  if (!tree.instantiable) return 0.0;
  const Subgraph g = tree_to_subgraph(tree);
  const AnswerDistribution dist = answer_distribution(rp, sp, question_text, g);
  auto it = std::lower_bound(dist.entity_ids.begin(), dist.entity_ids.end(), answer);
  if (it == dist.entity_ids.end() || *it != answer) return 0.0;
  return dist.probs[static_cast<std::size_t>(it - dist.entity_ids.begin())];
}

struct ReasonerGrad {
  std::vector<double> relation_keys;
  std::vector<double> question_projection;
  double scale = 0.0;
  double bias = 0.0;

  explicit ReasonerGrad(const ReasonerParams& p)
      : relation_keys(p.relation_keys.size(), 0.0),
        question_projection(p.question_projection.size(), 0.0) {}

  double norm_squared() const {
    return l2_norm_squared(relation_keys) + l2_norm_squared(question_projection) + scale * scale +
           bias * bias;
  }

  void rescale(double c) {
    for (auto& x : relation_keys) x *= c;
    for (auto& x : question_projection) x *= c;
    scale *= c;
    bias *= c;
  }
};

inline void apply_reasoner_grad(ReasonerParams& p, const ReasonerGrad& g, double lr) {
  for (std::size_t i = 0; i < p.relation_keys.size(); ++i) p.relation_keys[i] -= lr * g.relation_keys[i];
  for (std::size_t i = 0; i < p.question_projection.size(); ++i)
    p.question_projection[i] -= lr * g.question_projection[i];
  p.scale -= lr * g.scale;
  p.bias -= lr * g.bias;
}

struct ReasonerLoss {
  double loss = 0.0;
  bool skipped = false;  // no gold answer carries mass in the subgraph
};

// -log sum of final mass on `answers`, with exact gradients w.r.t. the
// reasoner parameters accumulated into `grad` (scaled by coeff). The scorer
// side of the question embedding is treated as a constant: this term never
// produces a ScorerParams update.
inline ReasonerLoss reasoner_loss_grad(const ReasonerParams& rp, const ScorerParams& sp,
                                       const std::string& question_text, const Subgraph& g,
                                       const EntitySet& answers, ReasonerGrad* grad,
                                       double coeff = 1.0) {
  const auto f = detail::reasoner_forward(rp, sp, question_text, g);
  const auto& final_mass = f.mass.back();

  double hit = 0.0;
  std::vector<std::size_t> answer_idx;
  for (EntityId a : answers) {
    auto it = f.index.find(a);
    if (it == f.index.end()) continue;
    answer_idx.push_back(it->second);
    hit += final_mass[it->second];
  }
  ReasonerLoss out;
  if (hit <= 0.0 || f.underflow_fallback) {
    out.skipped = true;
    return out;
  }
  out.loss = -std::log(hit);
  if (!grad) return out;

  // Backprop through the renormalization, the propagation rounds, the
  // per-head softmaxes and the bilinear logits.
  const std::size_t n = f.entities.size();
  const int T = rp.step_count;

  std::vector<double> dm(n, 0.0);
  const double inv_hit = -coeff / hit;
  for (std::size_t idx : answer_idx) dm[idx] += inv_hit;

  // Normalization backward: probs = raw / raw_total (raw_total is 1 up to
  // rounding since propagation conserves mass, but fold it in exactly):
  // d/draw_i = (dprob_i - sum_j dprob_j probs_j) / raw_total.
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) weighted += dm[i] * f.mass.back()[i];
  for (std::size_t i = 0; i < n; ++i) dm[i] = (dm[i] - weighted) / f.raw_total;

  Vec dz(rp.key_dim, 0.0);
  for (int t = T; t >= 1; --t) {
    const auto& m_prev = f.mass[static_cast<std::size_t>(t - 1)];
    std::vector<double> dprev(n, 0.0);
    for (std::size_t h = 0; h < n; ++h) {
      const auto [b, e] = f.head_ranges[h];
      if (b == e) {
        dprev[h] += dm[h];
        continue;
      }
      double dw_dot_w = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        dprev[h] += f.weights[k] * dm[f.edge_tail[k]];
        dw_dot_w += f.weights[k] * (m_prev[h] * dm[f.edge_tail[k]]);
      }
      if (m_prev[h] == 0.0 && dw_dot_w == 0.0) continue;
      for (std::size_t k = b; k < e; ++k) {
        const double dw = m_prev[h] * dm[f.edge_tail[k]];
        const double dlogit = f.weights[k] * (dw - dw_dot_w);
        if (dlogit == 0.0) continue;
        const double* key =
            rp.relation_keys.data() + static_cast<std::size_t>(f.edge_rel[k]) * rp.key_dim;
        double zk = 0.0;
        for (std::size_t j = 0; j < rp.key_dim; ++j) zk += f.z[j] * key[j];
        grad->scale += dlogit * zk;
        grad->bias += dlogit;
        double* gkey =
            grad->relation_keys.data() + static_cast<std::size_t>(f.edge_rel[k]) * rp.key_dim;
        for (std::size_t j = 0; j < rp.key_dim; ++j) {
          gkey[j] += dlogit * rp.scale * f.z[j];
          dz[j] += dlogit * rp.scale * key[j];
        }
      }
    }
    dm = std::move(dprev);
  }

  for (std::size_t i = 0; i < rp.in_dim; ++i) {
    const double qi = f.q_emb[i];
    if (qi == 0.0) continue;
    double* row = grad->question_projection.data() + i * rp.key_dim;
    for (std::size_t j = 0; j < rp.key_dim; ++j) row[j] += qi * dz[j];
  }
  return out;
}

inline void save_reasoner(const ReasonerParams& p, const std::string& path) {
  ByteWriter w;
  w.raw("SRRS", 4);
  w.u32(1);
  w.u64(p.in_dim);
  w.u64(p.key_dim);
  w.u32(static_cast<std::uint32_t>(p.step_count));
  w.u64(p.relation_count);
  w.f64(p.scale);
  w.f64(p.bias);
  for (double x : p.relation_keys) w.f64(x);
  for (double x : p.question_projection) w.f64(x);
  w.write_file(path);
}

inline ReasonerParams load_reasoner(const std::string& path) {
  ByteReader r = ByteReader::from_file(path);
  r.expect_magic("SRRS", 1);
  ReasonerParams p;
  p.in_dim = r.u64();
  p.key_dim = r.u64();
  p.step_count = static_cast<int>(r.u32());
  p.relation_count = r.u64();
  p.scale = r.f64();
  p.bias = r.f64();
  p.relation_keys.resize(p.relation_count * p.key_dim);
  for (auto& x : p.relation_keys) x = r.f64();
  p.question_projection.resize(p.in_dim * p.key_dim);
  for (auto& x : p.question_projection) x = r.f64();
  if (!r.at_end()) throw Error("corrupt reasoner checkpoint: trailing bytes");
  return p;
}

}  // namespace srkbqa
