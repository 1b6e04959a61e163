#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "srkbqa/reasoner.hpp"
#include "srkbqa/rng.hpp"

using namespace srkbqa;
using namespace fixtures;

namespace {

// dim-wide scorer whose only real token "q" embeds to a constant row.
ScorerParams flat_scorer(std::size_t dim, double q_value) {
  ScorerParams p;
  p.dim = dim;
  p.vocab = {kSeparatorToken, "q"};
  p.vocab_index = {{kSeparatorToken, 0u}, {"q", 1u}};
  p.token_embeddings.assign(2 * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) p.token_embeddings[dim + i] = q_value;
  p.end_embedding.assign(dim, 0.0);
  return p;
}

Subgraph whole_kb_subgraph(const KnowledgeBase& kb, EntityId topic) {
  Subgraph g;
  g.entities.resize(kb.entity_count());
  std::iota(g.entities.begin(), g.entities.end(), 0);
  g.edges = kb.all_triples();
  g.topic_roots = {topic};
  return g;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("reasoner init is shaped, bounded, and seed-deterministic") {
  const auto p = init_reasoner(5, 8, 4, 3, 42);
  REQUIRE(p.relation_count == 5);
  REQUIRE(p.relation_keys.size() == 5 * 4);
  REQUIRE(p.question_projection.size() == 8 * 4);
  REQUIRE(p.scale == 1.0);
  REQUIRE(p.bias == 0.0);
  for (double x : p.relation_keys) {
    REQUIRE(x >= -0.1);
    REQUIRE(x <= 0.1);
  }
  const auto q = init_reasoner(5, 8, 4, 3, 42);
  REQUIRE(p.relation_keys == q.relation_keys);
  REQUIRE(p.question_projection == q.question_projection);
  const auto r = init_reasoner(5, 8, 4, 3, 43);
  REQUIRE(p.relation_keys != r.relation_keys);
  REQUIRE_THROWS_AS(init_reasoner(5, 8, 4, 0, 42), Error);
}

TEST_CASE("a single-entity graph keeps all mass on the root") {
  const auto sp = flat_scorer(4, 0.0);
  const auto rp = init_reasoner(2, 4, 3, 3, 0);
  Subgraph g;
  g.entities = {7};
  g.topic_roots = {7};
  const auto dist = answer_distribution(rp, sp, "q", g);
  REQUIRE(dist.entity_ids == EntitySet{7});
  REQUIRE(dist.probs == std::vector<double>{1.0});
  REQUIRE_FALSE(dist.underflow_fallback);
}

TEST_CASE("sinks retain their mass across remaining rounds") {
  const auto sp = flat_scorer(4, 0.0);
  const auto rp = init_reasoner(1, 4, 3, 3, 0);
  Subgraph g;
  g.entities = {0, 1};
  g.edges = {{0, 0, 1}};
  g.topic_roots = {0};
  const auto dist = answer_distribution(rp, sp, "q", g);
  REQUIRE(dist.probs[0] == 0.0);
  REQUIRE(dist.probs[1] == 1.0);
}

TEST_CASE("step count bounds how far mass travels down a chain") {
  const auto sp = flat_scorer(4, 0.0);
  Subgraph g;
  g.entities = {0, 1, 2};
  g.edges = {{0, 0, 1}, {1, 0, 2}};
  g.topic_roots = {0};
  const auto one = answer_distribution(init_reasoner(1, 4, 3, 1, 0), sp, "q", g);
  REQUIRE(one.probs == std::vector<double>{0.0, 1.0, 0.0});
  const auto two = answer_distribution(init_reasoner(1, 4, 3, 2, 0), sp, "q", g);
  REQUIRE(two.probs == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("a zero question embedding splits branches uniformly") {
  const auto sp = flat_scorer(4, 0.0);  // z = 0 -> equal logits regardless of keys
  const auto rp = init_reasoner(2, 4, 3, 2, 9);
  Subgraph g;
  g.entities = {0, 1, 2};
  g.edges = {{0, 0, 1}, {0, 1, 2}};
  g.topic_roots = {0};
  const auto dist = answer_distribution(rp, sp, "q", g);
  REQUIRE(dist.probs[0] == 0.0);
  REQUIRE(std::abs(dist.probs[1] - 0.5) < 1e-15);
  REQUIRE(std::abs(dist.probs[2] - 0.5) < 1e-15);
}

TEST_CASE("edge weights follow the question-keyed softmax exactly") {
  // One-dimensional everything: z = 1, logits are the raw keys {ln 2, 0},
  // so the branch split must be exp(ln 2) : 1 = 2/3 : 1/3.
  const auto sp = flat_scorer(1, 1.0);
  ReasonerParams rp;
  rp.in_dim = 1;
  rp.key_dim = 1;
  rp.step_count = 1;
  rp.relation_count = 2;
  rp.relation_keys = {std::log(2.0), 0.0};
  rp.question_projection = {1.0};
  Subgraph g;
  g.entities = {0, 1, 2};
  g.edges = {{0, 0, 1}, {0, 1, 2}};
  g.topic_roots = {0};
  const auto dist = answer_distribution(rp, sp, "q", g);
  REQUIRE(std::abs(dist.probs[1] - 2.0 / 3.0) < 1e-15);
  REQUIRE(std::abs(dist.probs[2] - 1.0 / 3.0) < 1e-15);
}

TEST_CASE("multiple roots share the initial mass") {
  const auto sp = flat_scorer(4, 0.0);
  const auto rp = init_reasoner(1, 4, 3, 3, 0);
  Subgraph g;
  g.entities = {0, 1, 2, 3};
  g.edges = {{0, 0, 1}, {2, 0, 3}};
  g.topic_roots = {0, 2};
  const auto dist = answer_distribution(rp, sp, "q", g);
  REQUIRE(dist.probs == std::vector<double>{0.0, 0.5, 0.0, 0.5});
}

TEST_CASE("mass is conserved on random whole-graph runs") {
  Rng rng(555);
  for (int trial = 0; trial < 6; ++trial) {
    const auto c = oracles::random_case(rng);
    const auto sp = oracles::random_scorer(c.kb, c.question, 100 + trial);
    const auto rp = init_reasoner(c.kb.relation_count(), sp.dim, 8, 3, 200 + trial);
    const auto g = whole_kb_subgraph(c.kb, c.topic);
    const auto dist = answer_distribution(rp, sp, c.question, g);
    REQUIRE(std::is_sorted(dist.entity_ids.begin(), dist.entity_ids.end()));
    REQUIRE(dist.entity_ids.size() == dist.probs.size());
    double total = 0.0;
    for (double p : dist.probs) {
      REQUIRE(p >= 0.0);
      total += p;
    }
    REQUIRE(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("reasoner rejects malformed subgraphs") {
  const auto sp = flat_scorer(4, 0.0);
  const auto rp = init_reasoner(1, 4, 3, 3, 0);
  Subgraph empty;
  REQUIRE_THROWS_AS(answer_distribution(rp, sp, "q", empty), Error);

  Subgraph no_root;
  no_root.entities = {0, 1};
  no_root.edges = {{0, 0, 1}};
  no_root.topic_roots = {5};
  REQUIRE_THROWS_AS(answer_distribution(rp, sp, "q", no_root), Error);

  Subgraph alien_rel;
  alien_rel.entities = {0, 1};
  alien_rel.edges = {{0, 9, 1}};  // only key 0 exists
  alien_rel.topic_roots = {0};
  REQUIRE_THROWS_AS(answer_distribution(rp, sp, "q", alien_rel), Error);

  Subgraph width;
  width.entities = {0};
  width.topic_roots = {0};
  const auto wide = flat_scorer(9, 0.0);  // 9 != rp.in_dim
  REQUIRE_THROWS_AS(answer_distribution(rp, wide, "q", width), Error);
}

TEST_CASE("tree likelihood reads mass off the induced tree") {
  const auto kb = award_kb();
  const auto sp = flat_scorer(4, 0.0);
  const auto rp = init_reasoner(kb.relation_count(), 4, 3, 3, 0);
  const std::vector<RelationId> path{kWinInv, kGraduate};
  const double lik = tree_likelihood(rp, sp, "q", kTuringAward, path, kb, kMcGill);
  REQUIRE(std::abs(lik - 1.0 / 3.0) < 1e-15);
  // Mass parks on the leaves, so non-leaf and off-tree entities carry none.
  REQUIRE(tree_likelihood(rp, sp, "q", kTuringAward, path, kb, kBengio) == 0.0);
  REQUIRE(tree_likelihood(rp, sp, "q", kTuringAward, path, kb, kCanada) == 0.0);
}

TEST_CASE("tree likelihood is zero for uninstantiable paths") {
  const auto kb = award_kb();
  const auto sp = flat_scorer(4, 0.0);
  const auto rp = init_reasoner(kb.relation_count(), 4, 3, 3, 0);
  const std::vector<RelationId> dead{kWinInv, kWinInv};
  REQUIRE(tree_likelihood(rp, sp, "q", kTuringAward, dead, kb, kTuringAward) == 0.0);
}

TEST_CASE("loss skips instances whose answers carry no mass") {
  const auto sp = flat_scorer(4, 0.0);
  const auto rp = init_reasoner(1, 4, 3, 2, 0);
  Subgraph g;
  g.entities = {0, 1, 2};
  g.edges = {{0, 0, 1}, {1, 0, 2}};
  g.topic_roots = {0};
  ReasonerGrad grad(rp);
  const auto drained = reasoner_loss_grad(rp, sp, "q", g, {0}, &grad);
  REQUIRE(drained.skipped);
  REQUIRE(drained.loss == 0.0);
  const auto absent = reasoner_loss_grad(rp, sp, "q", g, {42}, &grad);
  REQUIRE(absent.skipped);
  REQUIRE(grad.norm_squared() == 0.0);
}

TEST_CASE("loss value is the negative log of the answer mass") {
  const auto sp = flat_scorer(4, 0.0);
  const auto rp = init_reasoner(2, 4, 3, 1, 9);
  Subgraph g;
  g.entities = {0, 1, 2};
  g.edges = {{0, 0, 1}, {0, 1, 2}};
  g.topic_roots = {0};
  const auto out = reasoner_loss_grad(rp, sp, "q", g, {1}, nullptr);
  REQUIRE_FALSE(out.skipped);
  REQUIRE(std::abs(out.loss - (-std::log(0.5))) < 1e-12);
  const auto both = reasoner_loss_grad(rp, sp, "q", g, {1, 2}, nullptr);
  REQUIRE(std::abs(both.loss) < 1e-12);  // all mass counted
}

TEST_CASE("reasoner gradients match central differences") {
  Rng rng(777);
  int checked = 0;
  for (int trial = 0; checked < 8 && trial < 40; ++trial) {
    const auto c = oracles::random_case(rng);
    const auto sp = oracles::random_scorer(c.kb, c.question, 300 + trial, 6);
    auto rp = init_reasoner(c.kb.relation_count(), sp.dim, 5, 2, 400 + trial);
    const auto g = whole_kb_subgraph(c.kb, c.topic);
    const auto probe = answer_distribution(rp, sp, c.question, g);
    const auto best = std::max_element(probe.probs.begin(), probe.probs.end());
    if (!(*best > 1e-6)) continue;
    const EntitySet answers{
        probe.entity_ids[static_cast<std::size_t>(best - probe.probs.begin())]};

    ReasonerGrad grad(rp);
    const auto out = reasoner_loss_grad(rp, sp, c.question, g, answers, &grad);
    REQUIRE_FALSE(out.skipped);
    // Shifting every logit in a softmax group is a no-op, so the bias
    // gradient cancels structurally.
    REQUIRE(std::abs(grad.bias) < 1e-12);
    const auto loss = [&]() {
      return reasoner_loss_grad(rp, sp, c.question, g, answers, nullptr).loss;
    };
    REQUIRE(oracles::max_reasoner_grad_err(rp, grad, loss) < 1e-3);
    ++checked;
  }
  REQUIRE(checked == 8);
}

TEST_CASE("applying the gradient reduces the loss") {
  Rng rng(31);
  const auto c = oracles::random_case(rng);
  const auto sp = oracles::random_scorer(c.kb, c.question, 77);
  auto rp = init_reasoner(c.kb.relation_count(), sp.dim, 8, 2, 78);
  const auto g = whole_kb_subgraph(c.kb, c.topic);
  const auto probe = answer_distribution(rp, sp, c.question, g);
  const auto best = std::max_element(probe.probs.begin(), probe.probs.end());
  const EntitySet answers{
      probe.entity_ids[static_cast<std::size_t>(best - probe.probs.begin())]};
  ReasonerGrad grad(rp);
  const double before = reasoner_loss_grad(rp, sp, c.question, g, answers, &grad).loss;
  apply_reasoner_grad(rp, grad, 0.05);
  const double after = reasoner_loss_grad(rp, sp, c.question, g, answers, nullptr).loss;
  REQUIRE(after <= before);
}

TEST_CASE("reasoner checkpoints roundtrip bit-exactly") {
  const auto p = init_reasoner(4, 6, 3, 2, 2024);
  const std::string path = "/tmp/srkbqa_test_reasoner.ckpt";
  save_reasoner(p, path);
  const auto q = load_reasoner(path);
  REQUIRE(q.in_dim == p.in_dim);
  REQUIRE(q.key_dim == p.key_dim);
  REQUIRE(q.step_count == p.step_count);
  REQUIRE(q.relation_count == p.relation_count);
  REQUIRE(q.scale == p.scale);
  REQUIRE(q.bias == p.bias);
  REQUIRE(q.relation_keys == p.relation_keys);
  REQUIRE(q.question_projection == p.question_projection);

  const std::string again = "/tmp/srkbqa_test_reasoner2.ckpt";
  save_reasoner(q, again);
  REQUIRE(read_file(path) == read_file(again));

  // Corruption: trailing junk, truncation, and a wrong magic all fail.
  {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    f << 'x';
  }
  REQUIRE_THROWS_AS(load_reasoner(path), Error);
  const std::string bytes = read_file(again);
  write_temp(bytes.substr(0, bytes.size() / 2), "reasoner_trunc.ckpt");
  REQUIRE_THROWS_AS(load_reasoner("/tmp/srkbqa_test_reasoner_trunc.ckpt"), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  write_temp(bad, "reasoner_magic.ckpt");
  REQUIRE_THROWS_AS(load_reasoner("/tmp/srkbqa_test_reasoner_magic.ckpt"), Error);
}
