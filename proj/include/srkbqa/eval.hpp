#pragma once
// Evaluation: answer-coverage of retrieved paths (Hits@K over induced trees),
// reasoner QA metrics (hits@1, thresholded macro F1), dev-set threshold
// search, and a personalized-PageRank coverage baseline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "srkbqa/encoder.hpp"
#include "srkbqa/kb.hpp"
#include "srkbqa/parallel.hpp"
#include "srkbqa/reasoner.hpp"
#include "srkbqa/retriever.hpp"
#include "srkbqa/subgraph.hpp"
#include "srkbqa/supervision.hpp"
#include "srkbqa/training.hpp"
#include "srkbqa/types.hpp"

namespace srkbqa {

struct CoverageOptions {
  bool leaf_only = false;           // count a hit only in the final tree layer
  bool on_merged_subgraph = false;  // judge membership on the merged subgraph instead
};

struct CoverageReport {
  std::vector<std::size_t> k_values;
  std::vector<double> hit_fraction;   // aligned with k_values
  std::vector<double> mean_entities;  // merged-subgraph entity count at each budget
  std::size_t question_count = 0;
};

namespace detail {

inline bool trees_cover(const std::vector<Tree>& trees, const EntitySet& answers, bool leaf_only) {
  for (const auto& tree : trees) {
    if (leaf_only) {
      if (!tree.layers.empty() && !set_intersection_sorted(tree.layers.back(), answers).empty())
        return true;
      continue;
    }
    for (const auto& layer : tree.layers)
      if (!set_intersection_sorted(layer, answers).empty()) return true;
  }
  return false;
}

// Merge the per-topic unions of a tree list (identical to the sampling path).
inline Subgraph merge_trees(const std::vector<Tree>& trees) {
  std::vector<Subgraph> per_topic;
  std::size_t i = 0;
  while (i < trees.size()) {
    std::size_t j = i;
    std::vector<Tree> group;
    while (j < trees.size() && trees[j].root == trees[i].root) group.push_back(trees[j++]);
    per_topic.push_back(union_trees(group));
    i = j;
  }
  return merge_subgraphs(per_topic);
}

// Top-k prefix per topic group of a ranked, topic-grouped path list.
inline std::vector<Tree> top_k_trees(const KnowledgeBase& kb, const std::vector<ScoredPath>& paths,
                                     std::size_t k) {
  std::vector<Tree> trees;
  std::size_t p = 0;
  while (p < paths.size()) {
    const EntityId topic = paths[p].topic;
    std::size_t taken = 0;
    while (p < paths.size() && paths[p].topic == topic) {
      if (taken < k) {
        trees.push_back(induce_tree(kb, paths[p].topic, paths[p].relations));
        ++taken;
      }
      ++p;
    }
  }
  return trees;
}

}  // namespace detail

// Hits@K over precomputed retrievals: a question counts as covered when any
// of its top-K-per-topic paths' induced trees contains any gold answer.
inline CoverageReport answer_coverage(const KnowledgeBase& kb,
                                      const std::vector<Question>& questions,
                                      const std::vector<std::vector<ScoredPath>>& retrievals,
                                      std::size_t k, const CoverageOptions& opts = {}) {
  if (questions.size() != retrievals.size())
    throw Error("answer_coverage: question/retrieval count mismatch");
  if (questions.empty()) throw Error("answer_coverage: no questions");
  if (k == 0) throw Error("answer_coverage: beam budget must be >= 1");
  if (opts.on_merged_subgraph && opts.leaf_only)
    throw Error("answer_coverage: leaf_only needs tree layers");

  std::vector<double> hits(questions.size(), 0.0);
  std::vector<double> sizes(questions.size(), 0.0);
  parallel_for(questions.size(), [&](std::size_t qi) {
    const std::vector<Tree> trees = detail::top_k_trees(kb, retrievals[qi], k);
    const Subgraph merged = detail::merge_trees(trees);
    sizes[qi] = static_cast<double>(merged.entities.size());
    if (opts.on_merged_subgraph)
      hits[qi] = set_intersection_sorted(merged.entities, questions[qi].answers).empty() ? 0.0 : 1.0;
    else
      hits[qi] = detail::trees_cover(trees, questions[qi].answers, opts.leaf_only) ? 1.0 : 0.0;
  });

  CoverageReport report;
  report.k_values = {k};
  report.question_count = questions.size();
  double h = 0.0, s = 0.0;
  for (std::size_t qi = 0; qi < questions.size(); ++qi) {
    h += hits[qi];
    s += sizes[qi];
  }
  report.hit_fraction = {h / static_cast<double>(questions.size())};
  report.mean_entities = {s / static_cast<double>(questions.size())};
  return report;
}

// Retrieves once at the largest budget and evaluates every smaller budget on
// the per-topic top-k prefix of that beam, so coverage is monotone in k by
// construction (the K1 tree set is a subset of the K2 set for K1 <= K2).
inline CoverageReport coverage_at_k(const KnowledgeBase& kb, const ScorerParams& sparams,
                                    const std::vector<Question>& questions,
                                    std::vector<std::size_t> k_values,
                                    const RetrievalConfig& base_cfg = {},
                                    const CoverageOptions& opts = {}) {
  if (questions.empty()) throw Error("coverage_at_k: no questions");
  if (k_values.empty()) throw Error("coverage_at_k: no beam budgets");
  sort_unique(k_values);
  if (k_values.front() == 0) throw Error("coverage_at_k: beam budget must be >= 1");

  RetrievalConfig cfg = base_cfg;
  cfg.beam_width = k_values.back();

  std::vector<std::vector<ScoredPath>> retrievals(questions.size());
  parallel_for(questions.size(), [&](std::size_t i) {
    retrievals[i] = retrieve(kb, sparams, questions[i].text, questions[i].topic_entities, cfg);
  });

  CoverageReport report;
  report.k_values = k_values;
  report.question_count = questions.size();
  for (std::size_t k : k_values) {
    const CoverageReport one = answer_coverage(kb, questions, retrievals, k, opts);
    report.hit_fraction.push_back(one.hit_fraction[0]);
    report.mean_entities.push_back(one.mean_entities[0]);
  }
  return report;
}

// Coverage of plain personalized-PageRank subgraphs at entity budgets, for
// baseline comparisons on the same questions.
inline CoverageReport ppr_coverage(const KnowledgeBase& kb, const std::vector<Question>& questions,
                                   std::vector<std::size_t> entity_budgets, double damping = 0.85,
                                   std::size_t iterations = 20) {
  if (questions.empty()) throw Error("ppr_coverage: no questions");
  if (entity_budgets.empty()) throw Error("ppr_coverage: no entity budgets");
  sort_unique(entity_budgets);
  if (entity_budgets.front() == 0) throw Error("ppr_coverage: entity budget must be >= 1");

  CoverageReport report;
  report.k_values = entity_budgets;
  report.question_count = questions.size();
  report.hit_fraction.assign(entity_budgets.size(), 0.0);
  report.mean_entities.assign(entity_budgets.size(), 0.0);

  std::vector<std::vector<double>> hits(entity_budgets.size(),
                                        std::vector<double>(questions.size(), 0.0));
  std::vector<std::vector<double>> sizes(entity_budgets.size(),
                                         std::vector<double>(questions.size(), 0.0));
  parallel_for(questions.size(), [&](std::size_t qi) {
    for (std::size_t bi = 0; bi < report.k_values.size(); ++bi) {
      const Subgraph g =
          ppr_subgraph(kb, questions[qi].topic_entities, report.k_values[bi], damping, iterations);
      sizes[bi][qi] = static_cast<double>(g.entities.size());
      hits[bi][qi] = set_intersection_sorted(g.entities, questions[qi].answers).empty() ? 0.0 : 1.0;
    }
  });

  for (std::size_t bi = 0; bi < entity_budgets.size(); ++bi) {
    double h = 0.0, s = 0.0;
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
      h += hits[bi][qi];
      s += sizes[bi][qi];
    }
    report.hit_fraction[bi] = h / static_cast<double>(questions.size());
    report.mean_entities[bi] = s / static_cast<double>(questions.size());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reasoner QA metrics.
// ---------------------------------------------------------------------------

struct QaReport {
  double hits_at_1 = 0.0;
  double precision = 0.0;  // macro over questions
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
  std::size_t question_count = 0;
  std::size_t unanswerable = 0;  // empty predicted set
};

namespace detail {

struct QaOutcome {
  double hit1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool empty_prediction = false;
};

inline QaOutcome score_distribution(const AnswerDistribution& dist, const EntitySet& answers,
                                    double threshold) {
  QaOutcome out;
  if (!dist.entity_ids.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.probs.size(); ++i)
      if (dist.probs[i] > dist.probs[best]) best = i;  // ties keep the lowest id
    out.hit1 = set_contains(answers, dist.entity_ids[best]) ? 1.0 : 0.0;
  }

  EntitySet predicted;
  for (std::size_t i = 0; i < dist.entity_ids.size(); ++i)
    if (dist.probs[i] >= threshold) predicted.push_back(dist.entity_ids[i]);
  out.empty_prediction = predicted.empty();

  if (predicted.empty() && answers.empty()) {
    out.precision = out.recall = out.f1 = 1.0;
    return out;
  }
  if (predicted.empty() || answers.empty()) return out;  // all zeros
  const EntitySet correct = set_intersection_sorted(predicted, answers);
  out.precision = static_cast<double>(correct.size()) / static_cast<double>(predicted.size());
  out.recall = static_cast<double>(correct.size()) / static_cast<double>(answers.size());
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

}  // namespace detail

// One merged-subgraph answer distribution per question (answer-stripped).
inline std::vector<AnswerDistribution> answer_distributions(
    const KnowledgeBase& kb, const ScorerParams& sparams, const ReasonerParams& rparams,
    const std::vector<Question>& questions, const RetrievalConfig& rcfg = {}) {
  std::vector<AnswerDistribution> dists(questions.size());
  parallel_for(questions.size(), [&](std::size_t i) {
    const SampledSubgraph s = sample_subgraph(kb, sparams, strip_answers(questions[i]), rcfg);
    dists[i] = answer_distribution(rparams, sparams, questions[i].text, s.merged);
  });
  return dists;
}

inline QaReport qa_metrics(const std::vector<AnswerDistribution>& distributions,
                           const std::vector<Question>& questions, double threshold) {
  if (distributions.size() != questions.size())
    throw Error("qa_metrics: question/distribution count mismatch");
  if (questions.empty()) throw Error("qa_metrics: no questions");
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw Error("qa_metrics: threshold must lie in [0, 1]");

  QaReport rep;
  rep.threshold = threshold;
  rep.question_count = questions.size();
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto o = detail::score_distribution(distributions[i], questions[i].answers, threshold);
    rep.hits_at_1 += o.hit1;
    rep.precision += o.precision;
    rep.recall += o.recall;
    rep.f1 += o.f1;
    if (o.empty_prediction) ++rep.unanswerable;
  }
  const double n = static_cast<double>(questions.size());
  rep.hits_at_1 /= n;
  rep.precision /= n;
  rep.recall /= n;
  rep.f1 /= n;
  return rep;
}

// Candidate grid i*step for i = 0,1,... while the value stays below 1, then
// exactly 1.0 (101 candidates at step 0.01).
inline std::vector<double> threshold_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw Error("threshold_grid: step must lie in (0, 1]");
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    const double v = static_cast<double>(i) * step;
    if (v >= 1.0 - 1e-12) break;
    grid.push_back(v);
  }
  grid.push_back(1.0);
  return grid;
}

// Grid threshold maximizing macro F1 on the dev questions; ties go to the
// smallest threshold.
inline double search_threshold(const std::vector<AnswerDistribution>& distributions,
                               const std::vector<Question>& questions, double grid_step = 0.01) {
  if (distributions.size() != questions.size())
    throw Error("search_threshold: question/distribution count mismatch");
  if (questions.empty()) throw Error("search_threshold: no questions");

  double best_threshold = 0.0;
  double best_f1 = -1.0;
  for (double threshold : threshold_grid(grid_step)) {
    const QaReport rep = qa_metrics(distributions, questions, threshold);
    if (rep.f1 > best_f1) {
      best_f1 = rep.f1;
      best_threshold = threshold;
    }
  }
  return best_threshold;
}

}  // namespace srkbqa
