#pragma once
// Shared test fixture: a small awards KB with two-hop structure and a branch
// (Pearl/UCLA) that multi-topic merging should prune.

#include <array>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "srkbqa/kb.hpp"
#include "srkbqa/types.hpp"

namespace fixtures {

inline const std::vector<std::array<std::string, 3>>& award_rows() {
  static const std::vector<std::array<std::string, 3>> rows = {
      {"Bengio", "win", "TuringAward"},   {"Hinton", "win", "TuringAward"},
      {"Pearl", "win", "TuringAward"},    {"Bengio", "citizen", "Canada"},
      {"Hinton", "citizen", "Canada"},    {"Pearl", "citizen", "UCLA"},
      {"Bengio", "graduate", "McGill"},   {"Hinton", "graduate", "Edinburgh"},
      {"Pearl", "graduate", "UCLA"},
  };
  return rows;
}

inline std::string award_tsv() {
  std::string out;
  for (const auto& r : award_rows()) out += r[0] + "\t" + r[1] + "\t" + r[2] + "\n";
  return out;
}

inline std::string write_temp(const std::string& contents, const std::string& name) {
  const std::string path = "/tmp/srkbqa_test_" + name;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << contents;
  return path;
}

inline srkbqa::KnowledgeBase award_kb() {
  return srkbqa::KnowledgeBase::from_triples(award_rows(), true);
}

// Interning order is pinned by the row order above.
inline constexpr srkbqa::EntityId kBengio = 0;
inline constexpr srkbqa::EntityId kTuringAward = 1;
inline constexpr srkbqa::EntityId kHinton = 2;
inline constexpr srkbqa::EntityId kPearl = 3;
inline constexpr srkbqa::EntityId kCanada = 4;
inline constexpr srkbqa::EntityId kUcla = 5;
inline constexpr srkbqa::EntityId kMcGill = 6;
inline constexpr srkbqa::EntityId kEdinburgh = 7;

inline constexpr srkbqa::RelationId kWin = 0;
inline constexpr srkbqa::RelationId kWinInv = 1;
inline constexpr srkbqa::RelationId kCitizen = 2;
inline constexpr srkbqa::RelationId kCitizenInv = 3;
inline constexpr srkbqa::RelationId kGraduate = 4;
inline constexpr srkbqa::RelationId kGraduateInv = 5;

}  // namespace fixtures
