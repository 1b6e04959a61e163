#pragma once
// Training loops: weakly supervised scorer pretraining, reasoner training on
// retrieved subgraphs, and alternating end-to-end fine-tuning where the
// reasoner's per-path likelihood feeds back into the retriever through a
// stop-gradient (the likelihood weights the path prior but contributes no
// parameter gradient of its own).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "srkbqa/encoder.hpp"
#include "srkbqa/kb.hpp"
#include "srkbqa/parallel.hpp"
#include "srkbqa/reasoner.hpp"
#include "srkbqa/retriever.hpp"
#include "srkbqa/rng.hpp"
#include "srkbqa/subgraph.hpp"
#include "srkbqa/supervision.hpp"
#include "srkbqa/types.hpp"
#include "srkbqa/vecmath.hpp"

namespace srkbqa {

inline constexpr double kGradClipNorm = 5.0;

struct TrainConfig {
  double learning_rate = 5e-3;  // end-to-end stages default to 5e-4 instead
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t rng_seed = 0;
  std::size_t negatives_per_step = 15;

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
    if (epochs < 0) throw Error("epochs must be >= 0");
    if (batch_size < 1) throw Error("batch_size must be >= 1");
  }
};

struct EpochReport {
  int epoch = 0;
  double retriever_loss = 0.0;
  double reasoner_loss = 0.0;
  double coverage_hits_at_k = 0.0;
  double wall_time_s = 0.0;
  std::size_t skipped_instances = 0;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scorer pretraining on decomposed step instances.
// ---------------------------------------------------------------------------

// Instances grouped by the KB their relation ids refer to (weakly supervised
// labels use the main KB; distant-supervision pseudo labels bring their own).
struct InstanceGroup {
  const KnowledgeBase* kb = nullptr;
  const std::vector<StepInstance>* instances = nullptr;
};

// Per-instance objective: pull the gold relation above END, push sampled
// negatives below END. An END-gold step has no gold term (its probability is
// pinned at 0.5 by construction) — only its negatives contribute.
inline double step_instance_loss(const ScorerParams& params, const KnowledgeBase& kb,
                                 const StepInstance& inst, ScorerGrad* grad, double coeff = 1.0) {
  double loss = 0.0;
  if (inst.gold != kEndRelation) {
    const double gap = score_gap(params, kb, inst.state, inst.gold);
    loss += softplus_neg(gap);
    if (grad) accumulate_gap_grad(params, kb, inst.state, inst.gold, coeff * (sigmoid(gap) - 1.0), *grad);
  }
  for (RelationId neg : inst.negatives) {
    const double gap = score_gap(params, kb, inst.state, neg);
    loss += softplus_neg(-gap);
    if (grad) accumulate_gap_grad(params, kb, inst.state, neg, coeff * sigmoid(gap), *grad);
  }
  return loss;
}

struct PretrainResult {
  ScorerParams params;
  std::vector<double> epoch_losses;  // mean instance loss per epoch
};

inline PretrainResult pretrain_retriever_grouped(const std::vector<InstanceGroup>& groups,
                                                 const TrainConfig& cfg, std::size_t dim = 64) {
  cfg.validate();
  std::size_t total = 0;
  for (const auto& g : groups) total += g.instances->size();
  if (total == 0) throw Error("pretrain_retriever: no training instances");

  // Shared vocabulary across every group's relation names and question texts.
  std::vector<std::string> vocab;
  {
    std::unordered_map<std::string, bool> seen;
    for (const auto& g : groups) {
      std::vector<std::string> texts;
      std::unordered_map<std::string, bool> text_seen;
      for (const auto& inst : *g.instances)
        if (text_seen.emplace(inst.state.text, true).second) texts.push_back(inst.state.text);
      for (auto& tok : collect_vocab(*g.kb, texts))
        if (seen.emplace(tok, true).second) vocab.push_back(tok);
    }
  }

  PretrainResult result;
  result.params = init_scorer(vocab, dim, cfg.rng_seed);

  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t i = 0; i < groups[g].instances->size(); ++i) order.emplace_back(g, i);

  Rng shuffle_rng(detail::mix_seed(cfg.rng_seed, 0xA11CE));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      ScorerGrad grad(result.params);
      const double coeff = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& g = groups[order[i].first];
        epoch_loss += step_instance_loss(result.params, *g.kb, (*g.instances)[order[i].second],
                                         &grad, coeff);
      }
      const double n2 = grad.norm_squared();
      if (n2 > kGradClipNorm * kGradClipNorm) grad.scale(kGradClipNorm / std::sqrt(n2));
      apply_scorer_grad(result.params, grad, cfg.learning_rate);
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

inline PretrainResult pretrain_retriever(const KnowledgeBase& kb,
                                         const std::vector<StepInstance>& instances,
                                         const TrainConfig& cfg, std::size_t dim = 64) {
  return pretrain_retriever_grouped({{&kb, &instances}}, cfg, dim);
}

// ---------------------------------------------------------------------------
// Subgraph sampling (answer-free by construction).
// ---------------------------------------------------------------------------

// What the retriever is allowed to see while sampling: no answer set.
struct RetrievalQuery {
  std::string text;
  EntitySet topic_entities;
};

inline RetrievalQuery strip_answers(const Question& q) { return {q.text, q.topic_entities}; }

struct SampledSubgraph {
  std::vector<ScoredPath> paths;  // nK paths, grouped by topic
  std::vector<Tree> trees;        // aligned with paths
  Subgraph merged;
};

inline SampledSubgraph sample_subgraph(const KnowledgeBase& kb, const ScorerParams& sparams,
                                       const RetrievalQuery& query, const RetrievalConfig& rcfg) {
  SampledSubgraph out;
  out.paths = retrieve(kb, sparams, query.text, query.topic_entities, rcfg);
  out.trees.reserve(out.paths.size());
  for (const auto& p : out.paths) out.trees.push_back(induce_tree(kb, p.topic, p.relations));

  std::vector<Subgraph> per_topic;
  std::size_t i = 0;
  while (i < out.trees.size()) {
    std::size_t j = i;
    std::vector<Tree> group;
    while (j < out.trees.size() && out.trees[j].root == out.trees[i].root)
      group.push_back(out.trees[j++]);
    per_topic.push_back(union_trees(group));
    i = j;
  }
  out.merged = merge_subgraphs(per_topic);
  return out;
}

// ---------------------------------------------------------------------------
// Reasoner training on cached retrievals.
// ---------------------------------------------------------------------------

struct TrainReasonerResult {
  ReasonerParams params;
  std::vector<double> epoch_losses;
  std::size_t answer_free_subgraphs = 0;  // questions whose sampled G missed every answer
  std::size_t zero_mass_instances = 0;    // answer present but unreachable in step budget
};

inline TrainReasonerResult train_reasoner(const KnowledgeBase& kb,
                                          const std::vector<Question>& questions,
                                          const ScorerParams& sparams, const TrainConfig& cfg,
                                          const RetrievalConfig& rcfg = {},
                                          std::size_t key_dim = 32, int step_count = 3) {
  cfg.validate();
  if (questions.empty()) throw Error("train_reasoner: no questions");

  std::vector<Subgraph> merged(questions.size());
  parallel_for(questions.size(), [&](std::size_t i) {
    merged[i] = sample_subgraph(kb, sparams, strip_answers(questions[i]), rcfg).merged;
  });

  TrainReasonerResult result;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const EntitySet present = set_intersection_sorted(questions[i].answers, merged[i].entities);
    if (present.empty())
      ++result.answer_free_subgraphs;
    else
      usable.push_back(i);
  }
  if (usable.empty())
    throw Error("train_reasoner: no retrieved subgraph contains an answer; retriever unusable");

  result.params =
      init_reasoner(kb.relation_count(), sparams.dim, key_dim, step_count, cfg.rng_seed);

  Rng shuffle_rng(detail::mix_seed(cfg.rng_seed, 0xBEA7));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(usable);
    double epoch_loss = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < usable.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(usable.size(), start + static_cast<std::size_t>(cfg.batch_size));
      ReasonerGrad grad(result.params);
      std::size_t batch_counted = 0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& q = questions[usable[i]];
        const auto r = reasoner_loss_grad(result.params, sparams, q.text, merged[usable[i]],
                                          q.answers, &grad, 1.0);
        if (r.skipped) {
          ++result.zero_mass_instances;
          continue;
        }
        epoch_loss += r.loss;
        ++batch_counted;
      }
      counted += batch_counted;
      if (batch_counted == 0) continue;
      grad.rescale(1.0 / static_cast<double>(batch_counted));
      const double n2 = grad.norm_squared();
      if (n2 > kGradClipNorm * kGradClipNorm) grad.rescale(kGradClipNorm / std::sqrt(n2));
      apply_reasoner_grad(result.params, grad, cfg.learning_rate);
    }
    result.epoch_losses.push_back(counted ? epoch_loss / static_cast<double>(counted) : 0.0);
  }
  return result;
}

// ---------------------------------------------------------------------------
// End-to-end fine-tuning (stop-gradient posterior feedback).
// ---------------------------------------------------------------------------

struct E2eInstanceResult {
  double loss = 0.0;
  bool skipped = false;  // every path had zero answer likelihood
};

// -log sum_k SG(L_k) p_theta(p_k|q), where L_k sums the reasoner's single-tree
// answer mass over the gold set (clamped to [0,1]) and is treated as a
// constant. Gradients flow only into the scorer parameters; the final END
// factor of each path has identically zero gradient and is skipped.
inline E2eInstanceResult retriever_e2e_loss(const KnowledgeBase& kb, const ScorerParams& sparams,
                                            const ReasonerParams& rparams,
                                            const std::string& question_text,
                                            const EntitySet& answers,
                                            const std::vector<ScoredPath>& paths,
                                            ScorerGrad* grad, double coeff = 1.0) {
  E2eInstanceResult out;
  if (paths.empty()) {
    out.skipped = true;
    return out;
  }

  const std::size_t n = paths.size();
  std::vector<double> likelihood(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0.0;
    for (EntityId a : answers)
      sum += tree_likelihood(rparams, sparams, question_text, paths[k].topic, paths[k].relations,
                             kb, a);
    likelihood[k] = std::clamp(sum, 0.0, 1.0);
  }

  // Fresh replay of every path's step probabilities at the current scorer.
  std::vector<std::vector<double>> step_probs(n);
  std::vector<double> joint(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    QuestionState state{question_text, {}};
    double p = 1.0;
    for (RelationId r : paths[k].relations) {
      const Vec q = encode_question(sparams, state, kb);
      const double s_end = score(q, sparams.end_embedding);
      const double pr = expansion_probability(score(q, encode_relation(sparams, r, kb)), s_end);
      step_probs[k].push_back(pr);
      p *= pr;
      state.history.push_back(r);
    }
    p *= 0.5;  // END closure: sigma(0), exactly parameter-free
    joint[k] = p;
  }

  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += likelihood[k] * joint[k];
  if (total <= 0.0) {
    out.skipped = true;
    return out;
  }
  out.loss = -std::log(total);
  if (!grad) return out;

  for (std::size_t k = 0; k < n; ++k) {
    if (likelihood[k] <= 0.0) continue;
    const double path_weight = likelihood[k] * joint[k] / total;
    QuestionState state{question_text, {}};
    for (std::size_t t = 0; t < paths[k].relations.size(); ++t) {
      const double c = -coeff * path_weight * (1.0 - step_probs[k][t]);
      accumulate_gap_grad(sparams, kb, state, paths[k].relations[t], c, *grad);
      state.history.push_back(paths[k].relations[t]);
    }
  }
  return out;
}

struct E2eSample {
  std::vector<SampledSubgraph> per_question;
  std::vector<char> covered;  // any retrieved tree reaches a gold answer
  double coverage = 0.0;
};

inline E2eSample e2e_sample_phase(const KnowledgeBase& kb, const std::vector<Question>& questions,
                                  const ScorerParams& sparams, const RetrievalConfig& rcfg) {
  E2eSample s;
  s.per_question.resize(questions.size());
  parallel_for(questions.size(), [&](std::size_t i) {
    s.per_question[i] = sample_subgraph(kb, sparams, strip_answers(questions[i]), rcfg);
  });
  s.covered.assign(questions.size(), 0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    for (const auto& tree : s.per_question[i].trees) {
      bool hit = false;
      for (const auto& layer : tree.layers) {
        if (!set_intersection_sorted(layer, questions[i].answers).empty()) {
          hit = true;
          break;
        }
      }
      if (hit) {
        s.covered[i] = 1;
        break;
      }
    }
    hits += s.covered[i];
  }
  s.coverage = questions.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(questions.size());
  return s;
}

struct PhaseResult {
  double mean_loss = 0.0;
  std::size_t skipped = 0;
};

// Reasoner half of the alternation: updates rparams only.
inline PhaseResult e2e_reasoner_phase(const std::vector<Question>& questions,
                                      const E2eSample& sample, const ScorerParams& sparams,
                                      ReasonerParams& rparams, const TrainConfig& cfg, int epoch) {
  PhaseResult out;
  std::vector<std::size_t> order(questions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(detail::mix_seed(cfg.rng_seed, 2 * static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order);

  double loss_sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
    ReasonerGrad grad(rparams);
    std::size_t batch_counted = 0;
    for (std::size_t i = start; i < end; ++i) {
      const auto& q = questions[order[i]];
      const auto r = reasoner_loss_grad(rparams, sparams, q.text,
                                        sample.per_question[order[i]].merged, q.answers, &grad, 1.0);
      if (r.skipped) {
        ++out.skipped;
        continue;
      }
      loss_sum += r.loss;
      ++batch_counted;
    }
    counted += batch_counted;
    if (batch_counted == 0) continue;
    grad.rescale(1.0 / static_cast<double>(batch_counted));
    const double n2 = grad.norm_squared();
    if (n2 > kGradClipNorm * kGradClipNorm) grad.rescale(kGradClipNorm / std::sqrt(n2));
    apply_reasoner_grad(rparams, grad, cfg.learning_rate);
  }
  out.mean_loss = counted ? loss_sum / static_cast<double>(counted) : 0.0;
  return out;
}

// Retriever half of the alternation: updates sparams only.
inline PhaseResult e2e_retriever_phase(const KnowledgeBase& kb,
                                       const std::vector<Question>& questions,
                                       const E2eSample& sample, ScorerParams& sparams,
                                       const ReasonerParams& rparams, const TrainConfig& cfg,
                                       int epoch) {
  PhaseResult out;
  std::vector<std::size_t> order(questions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(detail::mix_seed(cfg.rng_seed, 2 * static_cast<std::uint64_t>(epoch) + 1));
  rng.shuffle(order);

  double loss_sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
    ScorerGrad grad(sparams);
    std::size_t batch_counted = 0;
    double batch_loss = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const auto& q = questions[order[i]];
      const auto r = retriever_e2e_loss(kb, sparams, rparams, q.text, q.answers,
                                        sample.per_question[order[i]].paths, &grad, 1.0);
      if (r.skipped) {
        ++out.skipped;
        continue;
      }
      batch_loss += r.loss;
      ++batch_counted;
    }
    counted += batch_counted;
    loss_sum += batch_loss;
    if (batch_counted == 0) continue;
    grad.scale(1.0 / static_cast<double>(batch_counted));
    const double n2 = grad.norm_squared();
    if (n2 > kGradClipNorm * kGradClipNorm) grad.scale(kGradClipNorm / std::sqrt(n2));
    apply_scorer_grad(sparams, grad, cfg.learning_rate);
  }
  out.mean_loss = counted ? loss_sum / static_cast<double>(counted) : 0.0;
  return out;
}

// Alternating fine-tune (sample G -> update reasoner -> update retriever,
// once per epoch), emitting one report per epoch.
inline std::vector<EpochReport> finetune_e2e(const KnowledgeBase& kb,
                                             const std::vector<Question>& questions,
                                             ScorerParams& sparams, ReasonerParams& rparams,
                                             const TrainConfig& cfg,
                                             const RetrievalConfig& rcfg = {}) {
  cfg.validate();
  if (questions.empty()) throw Error("finetune_e2e: no questions");
  if (sparams.vocab.empty()) throw Error("finetune_e2e: scorer not pretrained");
  if (rparams.relation_count != kb.relation_count())
    throw Error("finetune_e2e: reasoner was trained against a different KB");

  std::vector<EpochReport> reports;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochReport rep;
    rep.epoch = epoch;

    const E2eSample sample = e2e_sample_phase(kb, questions, sparams, rcfg);
    rep.coverage_hits_at_k = sample.coverage;

    const PhaseResult reasoner = e2e_reasoner_phase(questions, sample, sparams, rparams, cfg, epoch);
    rep.reasoner_loss = reasoner.mean_loss;

    const PhaseResult retriever = e2e_retriever_phase(kb, questions, sample, sparams, rparams, cfg, epoch);
    rep.retriever_loss = retriever.mean_loss;

    rep.skipped_instances = reasoner.skipped + retriever.skipped;
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace srkbqa
