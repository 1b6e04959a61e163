#pragma once
// Trainable dual encoder: bag-of-token-embedding towers for question states
// and relation names, scored by dot product, with a learned END embedding
// acting as the adaptive stop threshold. The towers share one token table.

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "srkbqa/kb.hpp"
#include "srkbqa/rng.hpp"
#include "srkbqa/serialize.hpp"
#include "srkbqa/tokenizer.hpp"
#include "srkbqa/types.hpp"
#include "srkbqa/vecmath.hpp"

namespace srkbqa {

// Segment boundary marker inserted before each expanded relation's tokens.
// Contains characters the tokenizer never emits, so it cannot collide.
inline constexpr const char* kSeparatorToken = "<sep>";

struct ScorerParams {
  std::vector<std::string> vocab;  // index 0 is kSeparatorToken
  std::unordered_map<std::string, std::uint32_t> vocab_index;
  std::size_t dim = 64;
  std::vector<double> token_embeddings;  // vocab.size() x dim, row-major
  Vec end_embedding;

  std::uint32_t token_id(const std::string& tok) const {
    auto it = vocab_index.find(tok);
    return it == vocab_index.end() ? kOov : it->second;
  }

  static constexpr std::uint32_t kOov = 0xFFFFFFFF;
};

// Question plus the relation history expanded so far; the encoder input is
// the concatenation [question; <sep>; name(r1); <sep>; name(r2); ...].
struct QuestionState {
  std::string text;
  std::vector<RelationId> history;
};

inline std::vector<std::string> collect_vocab(const KnowledgeBase& kb,
                                              const std::vector<std::string>& question_texts) {
  std::vector<std::string> out;
  std::unordered_map<std::string, bool> seen;
  auto add_all = [&](const std::string& text) {
    for (auto& tok : tokenize(text)) {
      if (!seen.emplace(tok, true).second) continue;
      out.push_back(tok);
    }
  };
  for (RelationId r = 0; r < kb.relation_count(); ++r) add_all(kb.relation_name(r));
  for (const auto& q : question_texts) add_all(q);
  return out;
}

inline ScorerParams init_scorer(const std::vector<std::string>& tokens, std::size_t dim,
                                std::uint64_t seed) {
  ScorerParams p;
  p.dim = dim;
  p.vocab.push_back(kSeparatorToken);
  for (const auto& t : tokens) {
    if (p.vocab_index.count(t) || t == kSeparatorToken) continue;
    p.vocab_index.emplace(t, static_cast<std::uint32_t>(p.vocab.size()));
    p.vocab.push_back(t);
  }
  p.vocab_index.emplace(kSeparatorToken, 0);
  Rng rng(seed);
  p.token_embeddings.resize(p.vocab.size() * dim);
  for (auto& x : p.token_embeddings) x = rng.uniform_real(-0.1, 0.1);
  p.end_embedding.resize(dim);
  for (auto& x : p.end_embedding) x = rng.uniform_real(-0.1, 0.1);
  return p;
}

// In-vocabulary token ids of a question state, in sequence order.
inline std::vector<std::uint32_t> state_token_ids(const ScorerParams& params,
                                                  const QuestionState& state,
                                                  const KnowledgeBase& kb) {
  std::vector<std::uint32_t> ids;
  for (const auto& tok : tokenize(state.text)) {
    const auto id = params.token_id(tok);
    if (id != ScorerParams::kOov) ids.push_back(id);
  }
  for (RelationId r : state.history) {
    ids.push_back(0);  // separator
    for (const auto& tok : tokenize(kb.relation_name(r))) {
      const auto id = params.token_id(tok);
      if (id != ScorerParams::kOov) ids.push_back(id);
    }
  }
  return ids;
}

inline std::vector<std::uint32_t> relation_token_ids(const ScorerParams& params, RelationId r,
                                                     const KnowledgeBase& kb) {
  std::vector<std::uint32_t> ids;
  for (const auto& tok : tokenize(kb.relation_name(r))) {
    const auto id = params.token_id(tok);
    if (id != ScorerParams::kOov) ids.push_back(id);
  }
  return ids;
}

// Mean of the token rows; the denominator counts only in-vocabulary tokens.
// No tokens at all -> zero vector.
inline Vec mean_embedding(const ScorerParams& params, const std::vector<std::uint32_t>& ids) {
  Vec v(params.dim, 0.0);
  if (ids.empty()) return v;
  for (std::uint32_t id : ids) {
    const double* row = params.token_embeddings.data() + static_cast<std::size_t>(id) * params.dim;
    for (std::size_t i = 0; i < params.dim; ++i) v[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (auto& x : v) x *= inv;
  return v;
}

inline Vec encode_question(const ScorerParams& params, const QuestionState& state,
                           const KnowledgeBase& kb) {
  return mean_embedding(params, state_token_ids(params, state, kb));
}

inline Vec encode_relation(const ScorerParams& params, RelationId r, const KnowledgeBase& kb) {
  if (r == kEndRelation) return params.end_embedding;
  return mean_embedding(params, relation_token_ids(params, r, kb));
}

inline double score(const Vec& q_emb, const Vec& r_emb) { return dot(q_emb, r_emb); }

// p(expand r) = sigma(s_r - s_end): strictly above 0.5 exactly when the
// relation outscores the END threshold.
inline double expansion_probability(double s_r, double s_end) {
  if (!std::isfinite(s_r) || !std::isfinite(s_end))
    throw Error("non-finite score in expansion_probability");
  return sigmoid(s_r - s_end);
}

// s(q, r) - s(q, END) for one state; identically 0 for r = END.
inline double score_gap(const ScorerParams& params, const KnowledgeBase& kb,
                        const QuestionState& state, RelationId r) {
  if (r == kEndRelation) return 0.0;
  const Vec q = encode_question(params, state, kb);
  return score(q, encode_relation(params, r, kb)) - score(q, params.end_embedding);
}

// Dense gradient buffer matching ScorerParams' trainable tensors.
struct ScorerGrad {
  std::vector<double> token_embeddings;
  Vec end_embedding;

  explicit ScorerGrad(const ScorerParams& p)
      : token_embeddings(p.token_embeddings.size(), 0.0), end_embedding(p.dim, 0.0) {}

  double norm_squared() const {
    return l2_norm_squared(token_embeddings) + l2_norm_squared(end_embedding);
  }

  void scale(double c) {
    for (auto& x : token_embeddings) x *= c;
    for (auto& x : end_embedding) x *= c;
  }
};

// Adds coeff * d(s_r - s_END)/d(params) to grad. Exactly zero for r = END.
inline void accumulate_gap_grad(const ScorerParams& params, const KnowledgeBase& kb,
                                const QuestionState& state, RelationId r, double coeff,
                                ScorerGrad& grad) {
  if (r == kEndRelation || coeff == 0.0) return;
  const auto q_ids = state_token_ids(params, state, kb);
  const auto r_ids = relation_token_ids(params, r, kb);
  const Vec q = mean_embedding(params, q_ids);
  const Vec h = mean_embedding(params, r_ids);

  // gap = <q, h - end>
  if (!q_ids.empty()) {
    Vec diff(params.dim);
    for (std::size_t i = 0; i < params.dim; ++i) diff[i] = h[i] - params.end_embedding[i];
    const double w = coeff / static_cast<double>(q_ids.size());
    for (std::uint32_t id : q_ids) {
      double* row = grad.token_embeddings.data() + static_cast<std::size_t>(id) * params.dim;
      for (std::size_t i = 0; i < params.dim; ++i) row[i] += w * diff[i];
    }
  }
  if (!r_ids.empty()) {
    const double w = coeff / static_cast<double>(r_ids.size());
    for (std::uint32_t id : r_ids) {
      double* row = grad.token_embeddings.data() + static_cast<std::size_t>(id) * params.dim;
      for (std::size_t i = 0; i < params.dim; ++i) row[i] += w * q[i];
    }
  }
  for (std::size_t i = 0; i < params.dim; ++i) grad.end_embedding[i] -= coeff * q[i];
}

inline void apply_scorer_grad(ScorerParams& params, const ScorerGrad& grad, double lr) {
  for (std::size_t i = 0; i < params.token_embeddings.size(); ++i)
    params.token_embeddings[i] -= lr * grad.token_embeddings[i];
  for (std::size_t i = 0; i < params.dim; ++i) params.end_embedding[i] -= lr * grad.end_embedding[i];
}

inline void save_scorer(const ScorerParams& p, const std::string& path) {
  ByteWriter w;
  w.raw("SRSC", 4);
  w.u32(1);
  w.u64(p.dim);
  w.u64(p.vocab.size());
  for (const auto& t : p.vocab) w.str(t);
  for (double x : p.token_embeddings) w.f64(x);
  for (double x : p.end_embedding) w.f64(x);
  w.write_file(path);
}

inline ScorerParams load_scorer(const std::string& path) {
  ByteReader r = ByteReader::from_file(path);
  r.expect_magic("SRSC", 1);
  ScorerParams p;
  p.dim = r.u64();
  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    p.vocab.push_back(r.str());
    p.vocab_index.emplace(p.vocab.back(), static_cast<std::uint32_t>(i));
  }
  if (p.vocab.empty() || p.vocab[0] != kSeparatorToken)
    throw Error("corrupt scorer checkpoint: missing separator token");
  p.token_embeddings.resize(n * p.dim);
  for (auto& x : p.token_embeddings) x = r.f64();
  p.end_embedding.resize(p.dim);
  for (auto& x : p.end_embedding) x = r.f64();
  if (!r.at_end()) throw Error("corrupt scorer checkpoint: trailing bytes");
  return p;
}

}  // namespace srkbqa
