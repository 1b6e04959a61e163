#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "srkbqa/encoder.hpp"
#include "srkbqa/tokenizer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace srkbqa;
using namespace fixtures;

namespace {

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void set_row(ScorerParams& p, const std::string& token, const Vec& v) {
  const auto id = p.token_id(token);
  REQUIRE(id != ScorerParams::kOov);
  for (std::size_t i = 0; i < p.dim; ++i) p.token_embeddings[id * p.dim + i] = v[i];
}

// dim-3 hand-set parameters over the award KB used by several tests.
ScorerParams hand_params() {
  ScorerParams p = init_scorer({"q", "win", "inv", "citizen", "graduate"}, 3, 0);
  set_row(p, kSeparatorToken, {0, 4, 0});
  set_row(p, "q", {1, 0, 0});
  set_row(p, "win", {0, 0, 0});
  set_row(p, "inv", {4, 0, 0});
  set_row(p, "citizen", {0, -4, 0});
  set_row(p, "graduate", {0, 4, 6});
  p.end_embedding = {0, 2, 6};
  return p;
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits on every non-alphanumeric run") {
  REQUIRE(tokenize("Who won, the U.S.-2020 prize?") ==
          std::vector<std::string>{"who", "won", "the", "u", "s", "2020", "prize"});
  REQUIRE(tokenize("graduate__inv") == std::vector<std::string>{"graduate", "inv"});
  REQUIRE(tokenize("") == std::vector<std::string>{});
  REQUIRE(tokenize("?!...") == std::vector<std::string>{});
  REQUIRE(tokenize("a1b2") == std::vector<std::string>{"a1b2"});
  REQUIRE(tokenize("  spaced\tout\nwords ") == std::vector<std::string>{"spaced", "out", "words"});
}

TEST_CASE("vocabulary collects relation tokens then question tokens, first seen wins") {
  const KnowledgeBase kb = award_kb();
  const auto vocab = collect_vocab(kb, {"who won the win prize"});
  // Relations in id order: win, win__inv, citizen, citizen__inv, graduate, graduate__inv.
  const std::vector<std::string> expected = {"win",      "inv", "citizen", "graduate",
                                             "who",      "won", "the",     "prize"};
  REQUIRE(vocab == expected);
}

TEST_CASE("init_scorer reserves the separator at index 0 and is deterministic") {
  const auto p1 = init_scorer({"a", "<sep>", "b"}, 8, 42);
  REQUIRE(p1.vocab == std::vector<std::string>{"<sep>", "a", "b"});
  REQUIRE(p1.token_id("<sep>") == 0);
  REQUIRE(p1.token_embeddings.size() == 3 * 8);
  for (double x : p1.token_embeddings) {
    REQUIRE(x >= -0.1);
    REQUIRE(x <= 0.1);
  }
  const auto p2 = init_scorer({"a", "<sep>", "b"}, 8, 42);
  REQUIRE(p1.token_embeddings == p2.token_embeddings);
  REQUIRE(p1.end_embedding == p2.end_embedding);
  const auto p3 = init_scorer({"a", "b"}, 8, 43);
  REQUIRE(p1.token_embeddings != p3.token_embeddings);
}

TEST_CASE("state token ids interleave separators before each history relation") {
  const KnowledgeBase kb = award_kb();
  const ScorerParams p = hand_params();
  const QuestionState state{"q", {kWinInv, kGraduate}};
  // "q" + <sep> win inv + <sep> graduate
  REQUIRE(state_token_ids(p, state, kb) ==
          std::vector<std::uint32_t>{p.token_id("q"), 0, p.token_id("win"), p.token_id("inv"), 0,
                                     p.token_id("graduate")});
}

TEST_CASE("mean embedding averages only in-vocabulary tokens") {
  const KnowledgeBase kb = award_kb();
  const ScorerParams p = hand_params();

  // "zzz" is out of vocabulary: the mean is over the single token "q".
  const Vec q1 = encode_question(p, {"q zzz", {}}, kb);
  REQUIRE(q1 == Vec{1, 0, 0});

  // Entirely out-of-vocabulary input encodes to the zero vector.
  const Vec q2 = encode_question(p, {"zzz yyy", {}}, kb);
  REQUIRE(q2 == Vec{0, 0, 0});

  // "q" + <sep> + "win" + "inv": mean of [1,0,0],[0,4,0],[0,0,0],[4,0,0].
  const Vec q3 = encode_question(p, {"q", {kWinInv}}, kb);
  REQUIRE(q3 == Vec{1.25, 1.0, 0.0});
}

TEST_CASE("relation encoding averages name tokens; END uses its own embedding") {
  const KnowledgeBase kb = award_kb();
  const ScorerParams p = hand_params();
  REQUIRE(encode_relation(p, kWinInv, kb) == Vec{2, 0, 0});
  REQUIRE(encode_relation(p, kGraduate, kb) == Vec{0, 4, 6});
  REQUIRE(encode_relation(p, kEndRelation, kb) == p.end_embedding);
}

TEST_CASE("expansion probability is a sigmoid of the score gap") {
  const KnowledgeBase kb = award_kb();
  const ScorerParams p = hand_params();
  const Vec q = encode_question(p, {"q", {}}, kb);
  const double s_end = score(q, p.end_embedding);
  const double s_win_inv = score(q, encode_relation(p, kWinInv, kb));
  REQUIRE(s_end == 0.0);
  REQUIRE(s_win_inv == 2.0);
  REQUIRE(expansion_probability(s_win_inv, s_end) ==
          Catch::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));

  // END against itself is exactly one half: sigma(0).
  REQUIRE(expansion_probability(s_end, s_end) == 0.5);
  REQUIRE(expansion_probability(123.456, 123.456) == 0.5);

  // Clamped strictly inside (0, 1) even at extreme gaps.
  REQUIRE(expansion_probability(1e6, 0.0) < 1.0);
  REQUIRE(expansion_probability(-1e6, 0.0) > 0.0);
  REQUIRE_THROWS_AS(expansion_probability(std::nan(""), 0.0), Error);
}

TEST_CASE("score gap of END is exactly zero") {
  const KnowledgeBase kb = award_kb();
  const ScorerParams p = hand_params();
  REQUIRE(score_gap(p, kb, {"q", {kWinInv}}, kEndRelation) == 0.0);
}

TEST_CASE("gap gradient matches central finite differences") {
  const KnowledgeBase kb = award_kb();
  ScorerParams p = init_scorer(collect_vocab(kb, {"who won the award"}), 5, 7);
  const QuestionState state{"who won the award", {kWinInv}};
  const RelationId rel = kGraduate;

  ScorerGrad grad(p);
  accumulate_gap_grad(p, kb, state, rel, 1.0, grad);
  const double err = oracles::max_scorer_grad_err(
      p, grad, [&] { return score_gap(p, kb, state, rel); });
  REQUIRE(err < 1e-6);
}

TEST_CASE("gap gradient for END accumulates nothing") {
  const KnowledgeBase kb = award_kb();
  const ScorerParams p = hand_params();
  ScorerGrad grad(p);
  accumulate_gap_grad(p, kb, {"q", {kWinInv}}, kEndRelation, 3.0, grad);
  REQUIRE(grad.norm_squared() == 0.0);
}

TEST_CASE("apply_scorer_grad takes a gradient descent step") {
  const KnowledgeBase kb = award_kb();
  ScorerParams p = hand_params();
  const QuestionState state{"q", {}};
  const double before = score_gap(p, kb, state, kWinInv);
  ScorerGrad grad(p);
  accumulate_gap_grad(p, kb, state, kWinInv, 1.0, grad);  // d(gap)/d(params)
  apply_scorer_grad(p, grad, 0.01);                        // step against the gradient
  REQUIRE(score_gap(p, kb, state, kWinInv) < before);
}

TEST_CASE("scorer checkpoints round-trip byte-identically") {
  const KnowledgeBase kb = award_kb();
  const ScorerParams p = init_scorer(collect_vocab(kb, {"who won"}), 16, 11);
  const std::string p1 = "/tmp/srkbqa_test_scorer1.bin";
  const std::string p2 = "/tmp/srkbqa_test_scorer2.bin";
  save_scorer(p, p1);
  const ScorerParams loaded = load_scorer(p1);
  save_scorer(loaded, p2);
  REQUIRE(read_bytes(p1) == read_bytes(p2));
  REQUIRE(loaded.vocab == p.vocab);
  REQUIRE(loaded.dim == p.dim);
  REQUIRE(loaded.token_embeddings == p.token_embeddings);
  REQUIRE(loaded.end_embedding == p.end_embedding);

  std::ofstream(p2, std::ios::binary | std::ios::app) << "junk";
  REQUIRE_THROWS_AS(load_scorer(p2), Error);
}
