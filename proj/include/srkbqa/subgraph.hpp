#pragma once
// Tree induction from relation paths, per-topic tree unions, cross-topic
// subgraph merging through shared entities, and the personalized-PageRank
// baseline subgraph extractor.

#include <algorithm>
#include <deque>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "srkbqa/kb.hpp"
#include "srkbqa/types.hpp"

namespace srkbqa {

struct Tree {
  EntityId root = 0;
  std::vector<RelationId> relations;
  std::vector<EntitySet> layers;  // layers[0] = {root}
  std::vector<Triple> edges;      // sorted, deduplicated, layer-respecting
  bool instantiable = true;       // false iff some layer came out empty
};

struct Subgraph {
  EntitySet entities;          // sorted
  std::vector<Triple> edges;   // sorted, endpoints always in `entities`
  EntitySet topic_roots;       // subset of `entities`
};

// Instantiates a relation path from its topic entity into layered entity
// sets. An empty layer stops the fill-in and flags the tree uninstantiable.
inline Tree induce_tree(const KnowledgeBase& kb, EntityId topic,
                        const std::vector<RelationId>& path) {
  Tree tree;
  tree.root = topic;
  tree.relations = path;
  tree.layers.push_back(EntitySet{topic});
  kb.entity_name(topic);  // validates the id
  for (RelationId r : path) {
    const EntitySet& frontier = tree.layers.back();
    for (EntityId h : frontier)
      for (EntityId t : kb.tails(h, r)) tree.edges.push_back({h, r, t});
    EntitySet next = kb.follow(frontier, r);
    const bool empty = next.empty();
    tree.layers.push_back(std::move(next));
    if (empty) {
      tree.instantiable = false;
      break;
    }
  }
  std::sort(tree.edges.begin(), tree.edges.end());
  tree.edges.erase(std::unique(tree.edges.begin(), tree.edges.end()), tree.edges.end());
  return tree;
}

// Union of trees sharing one root into a single per-topic subgraph.
inline Subgraph union_trees(const std::vector<Tree>& trees) {
  if (trees.empty()) throw Error("union_trees: empty tree list");
  for (const auto& t : trees)
    if (t.root != trees[0].root) throw Error("union_trees: trees have differing roots");
  Subgraph g;
  for (const auto& t : trees) {
    for (const auto& layer : t.layers) g.entities.insert(g.entities.end(), layer.begin(), layer.end());
    g.edges.insert(g.edges.end(), t.edges.begin(), t.edges.end());
  }
  sort_unique(g.entities);
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  g.topic_roots = EntitySet{trees[0].root};
  return g;
}

inline Subgraph tree_to_subgraph(const Tree& tree) { return union_trees({tree}); }

namespace detail {

inline Subgraph plain_union(const std::vector<Subgraph>& subgraphs) {
  Subgraph out;
  for (const auto& g : subgraphs) {
    out.entities.insert(out.entities.end(), g.entities.begin(), g.entities.end());
    out.edges.insert(out.edges.end(), g.edges.begin(), g.edges.end());
    out.topic_roots.insert(out.topic_roots.end(), g.topic_roots.begin(), g.topic_roots.end());
  }
  sort_unique(out.entities);
  sort_unique(out.topic_roots);
  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  return out;
}

// Entities reachable from `starts` following the supplied successor lists
// (starts included).
inline std::unordered_set<EntityId> reach(const EntitySet& starts,
                                          const std::unordered_map<EntityId, EntitySet>& next) {
  std::unordered_set<EntityId> seen(starts.begin(), starts.end());
  std::deque<EntityId> queue(starts.begin(), starts.end());
  while (!queue.empty()) {
    const EntityId u = queue.front();
    queue.pop_front();
    auto it = next.find(u);
    if (it == next.end()) continue;
    for (EntityId v : it->second)
      if (seen.insert(v).second) queue.push_back(v);
  }
  return seen;
}

}  // namespace detail

// Fuses per-topic subgraphs through their shared entities: with M = entities
// appearing in at least two subgraphs, each subgraph keeps what lies on a
// root->m trace or an m->leaf trace (any m in M), and the kept parts are
// unioned. No shared entity (or a merge that would strand every topic root)
// falls back to the plain union.
inline Subgraph merge_subgraphs(const std::vector<Subgraph>& subgraphs) {
  if (subgraphs.empty()) throw Error("merge_subgraphs: empty subgraph list");
  if (subgraphs.size() == 1) return subgraphs[0];

  std::unordered_map<EntityId, int> occurrences;
  for (const auto& g : subgraphs)
    for (EntityId e : g.entities) ++occurrences[e];
  EntitySet merged_entities_m;
  for (const auto& [e, n] : occurrences)
    if (n >= 2) merged_entities_m.push_back(e);
  sort_unique(merged_entities_m);
  if (merged_entities_m.empty()) return detail::plain_union(subgraphs);

  Subgraph out;
  for (const auto& g : subgraphs) {
    std::unordered_map<EntityId, EntitySet> succ, pred;
    for (const auto& e : g.edges) {
      succ[e.head].push_back(e.tail);
      pred[e.tail].push_back(e.head);
    }
    EntitySet m_local = set_intersection_sorted(merged_entities_m, g.entities);
    const auto from_root = detail::reach(g.topic_roots, succ);
    const auto to_m = detail::reach(m_local, pred);
    const auto from_m = detail::reach(m_local, succ);
    for (EntityId e : g.entities)
      if ((from_root.count(e) && to_m.count(e)) || from_m.count(e)) out.entities.push_back(e);
    for (const auto& e : g.edges)
      if ((from_root.count(e.head) && to_m.count(e.tail)) || from_m.count(e.head))
        out.edges.push_back(e);
    for (EntityId r : g.topic_roots)
      if ((from_root.count(r) && to_m.count(r)) || from_m.count(r)) out.topic_roots.push_back(r);
  }
  sort_unique(out.entities);
  sort_unique(out.topic_roots);
  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  if (out.topic_roots.empty()) return detail::plain_union(subgraphs);
  return out;
}

// Personalized-PageRank scores over the KB's undirected, deduplicated
// adjacency, seeded uniformly on the topics. Mass leaving a dangling node is
// redistributed to the seeds, so the vector sums to 1 after every iteration.
inline std::vector<double> ppr_scores(const KnowledgeBase& kb, const EntitySet& topics,
                                      double damping, int iterations) {
  if (topics.empty()) throw Error("ppr_scores: no topic entities");
  EntitySet seeds = topics;
  sort_unique(seeds);
  for (EntityId t : seeds) kb.entity_name(t);  // validates
  if (damping < 0.0 || damping > 1.0) throw Error("ppr_scores: damping must be in [0,1]");
  if (iterations < 0) throw Error("ppr_scores: negative iteration count");

  const auto neighbors = kb.undirected_neighbors();
  const std::size_t n = kb.entity_count();
  std::vector<double> seed(n, 0.0);
  for (EntityId t : seeds) seed[t] = 1.0 / static_cast<double>(seeds.size());

  std::vector<double> x = seed;
  std::vector<double> next(n);
  for (int it = 0; it < iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double dangling = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
      if (x[e] == 0.0) continue;
      const auto& nbr = neighbors[e];
      if (nbr.empty()) {
        dangling += x[e];
        continue;
      }
      const double share = x[e] / static_cast<double>(nbr.size());
      for (EntityId u : nbr) next[u] += share;
    }
    for (std::size_t e = 0; e < n; ++e)
      x[e] = (1.0 - damping) * seed[e] + damping * (next[e] + dangling * seed[e]);
  }
  return x;
}

// Keeps the top max_entities entities by PPR score (topics always kept, only
// strictly positive scores rank) plus every KB edge among the kept set.
inline Subgraph ppr_subgraph(const KnowledgeBase& kb, const EntitySet& topics,
                             std::size_t max_entities, double damping = 0.85,
                             int iterations = 20) {
  if (max_entities == 0) throw Error("ppr_subgraph: max_entities must be positive");
  const auto scores = ppr_scores(kb, topics, damping, iterations);

  std::vector<EntityId> ranked;
  for (EntityId e = 0; e < kb.entity_count(); ++e)
    if (scores[e] > 0.0) ranked.push_back(e);
  std::sort(ranked.begin(), ranked.end(), [&](EntityId a, EntityId b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  EntitySet topic_set = topics;
  sort_unique(topic_set);
  EntitySet kept = topic_set;
  for (EntityId e : ranked) {
    if (kept.size() >= max_entities) break;
    if (!set_contains(topic_set, e)) kept.push_back(e);
  }
  sort_unique(kept);

  Subgraph g;
  g.entities = kept;
  g.topic_roots = topics;
  sort_unique(g.topic_roots);
  for (EntityId h : kept)
    for (const auto& [r, tails] : kb.out_edges(h))
      for (EntityId t : tails)
        if (set_contains(kept, t)) g.edges.push_back({h, r, t});
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

}  // namespace srkbqa
