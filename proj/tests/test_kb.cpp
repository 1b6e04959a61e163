#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "srkbqa/kb.hpp"
#include "fixtures.hpp"

using namespace srkbqa;
using namespace fixtures;

namespace {

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace

TEST_CASE("interning follows first-seen order and materializes inverses") {
  const KnowledgeBase kb = award_kb();
  REQUIRE(kb.entity_count() == 8);
  REQUIRE(kb.relation_count() == 6);
  REQUIRE(kb.triple_count() == 18);

  REQUIRE(kb.entity_name(kBengio) == "Bengio");
  REQUIRE(kb.entity_name(kTuringAward) == "TuringAward");
  REQUIRE(kb.entity_name(kHinton) == "Hinton");
  REQUIRE(kb.entity_name(kPearl) == "Pearl");
  REQUIRE(kb.entity_name(kCanada) == "Canada");
  REQUIRE(kb.entity_name(kUcla) == "UCLA");
  REQUIRE(kb.entity_name(kMcGill) == "McGill");
  REQUIRE(kb.entity_name(kEdinburgh) == "Edinburgh");

  REQUIRE(kb.relation_name(kWin) == "win");
  REQUIRE(kb.relation_name(kWinInv) == "win__inv");
  REQUIRE(kb.relation_name(kCitizen) == "citizen");
  REQUIRE(kb.relation_name(kCitizenInv) == "citizen__inv");
  REQUIRE(kb.relation_name(kGraduate) == "graduate");
  REQUIRE(kb.relation_name(kGraduateInv) == "graduate__inv");

  REQUIRE(kb.find_entity("Pearl") == kPearl);
  REQUIRE_FALSE(kb.find_entity("Lovelace").has_value());
  REQUIRE(kb.find_relation("graduate__inv") == kGraduateInv);
  REQUIRE_FALSE(kb.find_relation("advisor").has_value());

  for (RelationId r = 0; r < kb.relation_count(); ++r) REQUIRE(kb.has_inverse(r));
  REQUIRE(kb.inverse_of(kWin) == kWinInv);
  REQUIRE(kb.inverse_of(kWinInv) == kWin);
  REQUIRE(kb.inverse_of(kGraduate) == kGraduateInv);
}

TEST_CASE("adjacency groups are sorted and queryable in both directions") {
  const KnowledgeBase kb = award_kb();

  const auto& ta_out = kb.out_edges(kTuringAward);
  REQUIRE(ta_out.size() == 1);
  REQUIRE(ta_out[0].first == kWinInv);
  REQUIRE(ta_out[0].second == EntitySet{kBengio, kHinton, kPearl});

  const auto& ta_in = kb.in_edges(kTuringAward);
  REQUIRE(ta_in.size() == 1);
  REQUIRE(ta_in[0].first == kWin);
  REQUIRE(ta_in[0].second == EntitySet{kBengio, kHinton, kPearl});

  const auto& bengio_out = kb.out_edges(kBengio);
  REQUIRE(bengio_out.size() == 3);
  for (std::size_t i = 1; i < bengio_out.size(); ++i)
    REQUIRE(bengio_out[i - 1].first < bengio_out[i].first);

  REQUIRE(kb.tails(kBengio, kWin) == EntitySet{kTuringAward});
  REQUIRE(kb.tails(kBengio, kGraduateInv).empty());
  REQUIRE(kb.heads(kCanada, kCitizen) == EntitySet{kBengio, kHinton});
  REQUIRE(kb.heads(kUcla, kGraduate) == EntitySet{kPearl});
}

TEST_CASE("frontier queries union and deduplicate") {
  const KnowledgeBase kb = award_kb();

  REQUIRE(kb.candidate_relations({kTuringAward}) == std::vector<RelationId>{kWinInv});
  REQUIRE(kb.candidate_relations({kBengio}) ==
          std::vector<RelationId>{kWin, kCitizen, kGraduate});
  REQUIRE(kb.candidate_relations({kBengio, kHinton, kPearl}) ==
          std::vector<RelationId>{kWin, kCitizen, kGraduate});
  REQUIRE(kb.candidate_relations({kUcla}) ==
          std::vector<RelationId>{kCitizenInv, kGraduateInv});

  REQUIRE(kb.follow({kTuringAward}, kWinInv) == EntitySet{kBengio, kHinton, kPearl});
  REQUIRE(kb.follow({kBengio, kHinton, kPearl}, kGraduate) ==
          EntitySet{kUcla, kMcGill, kEdinburgh});
  REQUIRE(kb.follow({kBengio}, kGraduateInv).empty());
  REQUIRE(kb.follow_back({kTuringAward}, kWin) == EntitySet{kBengio, kHinton, kPearl});
  REQUIRE(kb.follow_back({kUcla, kCanada}, kCitizen) == EntitySet{kBengio, kHinton, kPearl});
}

TEST_CASE("all_triples is sorted and inverse-complete") {
  const KnowledgeBase kb = award_kb();
  const auto triples = kb.all_triples();
  REQUIRE(triples.size() == 18);
  for (std::size_t i = 1; i < triples.size(); ++i) REQUIRE(triples[i - 1] < triples[i]);
  const Triple fwd{kBengio, kWin, kTuringAward};
  const Triple rev{kTuringAward, kWinInv, kBengio};
  REQUIRE(std::find(triples.begin(), triples.end(), fwd) != triples.end());
  REQUIRE(std::find(triples.begin(), triples.end(), rev) != triples.end());
}

TEST_CASE("undirected neighbors merge both directions") {
  const KnowledgeBase kb = award_kb();
  const auto nbr = kb.undirected_neighbors();
  REQUIRE(nbr[kTuringAward] == EntitySet{kBengio, kHinton, kPearl});
  REQUIRE(nbr[kBengio] == EntitySet{kTuringAward, kCanada, kMcGill});
  REQUIRE(nbr[kUcla] == EntitySet{kPearl});
}

TEST_CASE("duplicate rows collapse to one edge") {
  const std::vector<std::array<std::string, 3>> rows = {
      {"a", "r", "b"}, {"a", "r", "b"}, {"a", "r", "b"}};
  const KnowledgeBase kb = KnowledgeBase::from_triples(rows, true);
  REQUIRE(kb.triple_count() == 2);  // forward + inverse
  REQUIRE(kb.tails(0, 0) == EntitySet{1});
}

TEST_CASE("construction without inverses") {
  const KnowledgeBase kb = KnowledgeBase::from_triples(award_rows(), false);
  REQUIRE(kb.relation_count() == 3);
  REQUIRE(kb.triple_count() == 9);
  REQUIRE_FALSE(kb.has_inverse(0));
  REQUIRE_THROWS_AS(kb.inverse_of(0), Error);
  // Reverse adjacency still works without materialized inverse relations.
  REQUIRE(kb.heads(kb.find_entity("TuringAward").value(), 0).size() == 3);
}

TEST_CASE("file ingestion tolerates CRLF and missing trailing newline") {
  const KnowledgeBase base = award_kb();

  const auto check = [&](const KnowledgeBase& kb) {
    REQUIRE(kb.entity_count() == base.entity_count());
    REQUIRE(kb.relation_count() == base.relation_count());
    REQUIRE(kb.triple_count() == base.triple_count());
  };

  check(KnowledgeBase::ingest_triples(write_temp(award_tsv(), "kb_plain.tsv")));

  std::string crlf;
  for (char c : award_tsv()) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  check(KnowledgeBase::ingest_triples(write_temp(crlf, "kb_crlf.tsv")));

  std::string no_trailing = award_tsv();
  no_trailing.pop_back();
  check(KnowledgeBase::ingest_triples(write_temp(no_trailing, "kb_nonl.tsv")));
}

TEST_CASE("malformed triple files raise parse errors with line numbers") {
  const auto expect_line = [](const std::string& contents, std::size_t line) {
    const std::string path = write_temp(contents, "kb_bad.tsv");
    try {
      KnowledgeBase::ingest_triples(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      REQUIRE(e.line() == line);
    }
  };

  expect_line("a\tb\n", 1);                      // two fields
  expect_line("a\tb\tc\td\n", 1);                // four fields
  expect_line("a\tb\tc\n\nd\te\tf\n", 2);        // blank line mid-file
  expect_line("a\t\tc\n", 1);                    // empty field
  expect_line("\n", 1);                          // nothing but a newline

  REQUIRE_THROWS_AS(KnowledgeBase::ingest_triples(write_temp("", "kb_empty.tsv")), Error);
  REQUIRE_THROWS_AS(KnowledgeBase::ingest_triples("/nonexistent/kb.tsv"), Error);
}

TEST_CASE("binary save/load round-trips byte-identically") {
  const KnowledgeBase kb = award_kb();
  const std::string p1 = "/tmp/srkbqa_test_kb1.bin";
  const std::string p2 = "/tmp/srkbqa_test_kb2.bin";
  kb.save(p1);
  const KnowledgeBase loaded = KnowledgeBase::load(p1);
  loaded.save(p2);
  REQUIRE(read_bytes(p1) == read_bytes(p2));

  REQUIRE(loaded.entity_count() == kb.entity_count());
  REQUIRE(loaded.relation_count() == kb.relation_count());
  REQUIRE(loaded.triple_count() == kb.triple_count());
  REQUIRE(loaded.all_triples() == kb.all_triples());
  REQUIRE(loaded.inverse_of(kWin) == kWinInv);
  REQUIRE(loaded.find_entity("Pearl") == kPearl);
}

TEST_CASE("corrupt KB artifacts are rejected") {
  const KnowledgeBase kb = award_kb();
  const std::string path = "/tmp/srkbqa_test_kb_corrupt.bin";
  kb.save(path);
  const std::string good = read_bytes(path);

  write_bytes(path, good.substr(0, good.size() / 2));
  REQUIRE_THROWS_AS(KnowledgeBase::load(path), Error);

  write_bytes(path, good + "x");
  REQUIRE_THROWS_AS(KnowledgeBase::load(path), Error);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  write_bytes(path, bad_magic);
  REQUIRE_THROWS_AS(KnowledgeBase::load(path), Error);
}

TEST_CASE("invalid ids are rejected") {
  const KnowledgeBase kb = award_kb();
  REQUIRE_THROWS_AS(kb.entity_name(99), Error);
  REQUIRE_THROWS_AS(kb.relation_name(99), Error);
  REQUIRE_THROWS_AS(kb.out_edges(99), Error);
  REQUIRE_THROWS_AS(kb.follow({99}, kWin), Error);
  REQUIRE_THROWS_AS(kb.tails(kBengio, 99), Error);
}
