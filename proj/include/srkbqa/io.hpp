#pragma once
// File formats: JSONL question sets, JSONL distant-supervision tuples, TSV
// triple dumps, subgraph exports, and JSON report serialization.

#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "srkbqa/eval.hpp"
#include "srkbqa/kb.hpp"
#include "srkbqa/retriever.hpp"
#include "srkbqa/subgraph.hpp"
#include "srkbqa/supervision.hpp"
#include "srkbqa/training.hpp"
#include "srkbqa/types.hpp"

namespace srkbqa {

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
  if (!out) throw Error("write failed: " + path);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Question sets (JSONL: {"id", "question", "topic_entities", "answers"}).
// ---------------------------------------------------------------------------

struct LoadedQuestions {
  std::vector<Question> questions;
  std::size_t dropped_names = 0;      // entity surfaces absent from the KB
  std::size_t dropped_questions = 0;  // no topic entity resolved
};

inline LoadedQuestions load_questions(const std::string& path, const KnowledgeBase& kb) {
  LoadedQuestions out;
  std::set<std::string> ids;
  const auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) {
      if (i + 1 == lines.size()) break;  // trailing newline
      throw ParseError("empty line in question file", line_no);
    }
    const nlohmann::json j = nlohmann::json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw ParseError("malformed JSON object in question file", line_no);
    if (!j.contains("id") || !j["id"].is_string() || !j.contains("question") ||
        !j["question"].is_string() || !j.contains("topic_entities") ||
        !j["topic_entities"].is_array() || !j.contains("answers") || !j["answers"].is_array())
      throw ParseError("question object needs id, question, topic_entities, answers", line_no);

    Question q;
    q.id = j["id"].get<std::string>();
    q.text = j["question"].get<std::string>();
    if (!ids.insert(q.id).second) throw ParseError("duplicate question id: " + q.id, line_no);

    for (const auto& t : j["topic_entities"]) {
      if (!t.is_string()) throw ParseError("topic_entities must hold strings", line_no);
      if (auto e = kb.find_entity(t.get<std::string>()))
        q.topic_entities.push_back(*e);
      else
        ++out.dropped_names;
    }
    for (const auto& a : j["answers"]) {
      if (!a.is_string()) throw ParseError("answers must hold strings", line_no);
      if (auto e = kb.find_entity(a.get<std::string>()))
        q.answers.push_back(*e);
      else
        ++out.dropped_names;
    }
    sort_unique(q.topic_entities);
    sort_unique(q.answers);
    if (q.topic_entities.empty()) {
      ++out.dropped_questions;
      continue;
    }
    out.questions.push_back(std::move(q));
  }
  return out;
}

inline void write_questions_jsonl(const std::string& path, const KnowledgeBase& kb,
                                  const std::vector<Question>& questions) {
  std::string body;
  for (const auto& q : questions) {
    nlohmann::json j;
    j["id"] = q.id;
    j["question"] = q.text;
    auto& topics = j["topic_entities"] = nlohmann::json::array();
    for (EntityId e : q.topic_entities) topics.push_back(kb.entity_name(e));
    auto& answers = j["answers"] = nlohmann::json::array();
    for (EntityId e : q.answers) answers.push_back(kb.entity_name(e));
    body += j.dump();
    body += '\n';
  }
  detail::write_text(path, body);
}

// ---------------------------------------------------------------------------
// Distant-supervision tuples (JSONL: {"sentence", "head", "relation", "tail"}).
// ---------------------------------------------------------------------------

struct LoadedTuples {
  std::vector<DistantTuple> tuples;
  std::size_t skipped_lines = 0;
};

inline LoadedTuples load_distant_tuples(const std::string& path) {
  LoadedTuples out;
  const auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      if (i + 1 == lines.size()) break;
      ++out.skipped_lines;
      continue;
    }
    const nlohmann::json j = nlohmann::json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("sentence") ||
        !j["sentence"].is_string() || !j.contains("head") || !j["head"].is_string() ||
        !j.contains("relation") || !j["relation"].is_string() || !j.contains("tail") ||
        !j["tail"].is_string()) {
      ++out.skipped_lines;
      continue;
    }
    out.tuples.push_back({j["sentence"].get<std::string>(), j["head"].get<std::string>(),
                          j["relation"].get<std::string>(), j["tail"].get<std::string>()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Triples and subgraphs.
// ---------------------------------------------------------------------------

inline void write_triples_tsv(const std::string& path,
                              const std::vector<std::array<std::string, 3>>& rows) {
  std::string body;
  for (const auto& r : rows) {
    body += r[0];
    body += '\t';
    body += r[1];
    body += '\t';
    body += r[2];
    body += '\n';
  }
  detail::write_text(path, body);
}

// TSV of the subgraph's triples plus a JSON sidecar naming the topic roots.
inline void save_subgraph(const std::string& path, const KnowledgeBase& kb, const Subgraph& g) {
  std::vector<std::array<std::string, 3>> rows;
  rows.reserve(g.edges.size());
  for (const auto& t : g.edges)
    rows.push_back({kb.entity_name(t.head), kb.relation_name(t.rel), kb.entity_name(t.tail)});
  write_triples_tsv(path, rows);

  nlohmann::json meta;
  auto& roots = meta["topic_roots"] = nlohmann::json::array();
  for (EntityId e : g.topic_roots) roots.push_back(kb.entity_name(e));
  auto& entities = meta["entities"] = nlohmann::json::array();
  for (EntityId e : g.entities) entities.push_back(kb.entity_name(e));
  detail::write_text(path + ".meta.json", meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Retrieval dumps and reports.
// ---------------------------------------------------------------------------

inline void write_paths_jsonl(const std::string& path, const KnowledgeBase& kb,
                              const std::vector<Question>& questions,
                              const std::vector<std::vector<ScoredPath>>& all_paths) {
  if (questions.size() != all_paths.size())
    throw Error("write_paths_jsonl: question/path count mismatch");
  std::string body;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    nlohmann::json j;
    j["id"] = questions[i].id;
    j["question"] = questions[i].text;
    auto& paths = j["paths"] = nlohmann::json::array();
    for (const auto& p : all_paths[i]) {
      nlohmann::json pj;
      pj["topic"] = kb.entity_name(p.topic);
      auto& rels = pj["relations"] = nlohmann::json::array();
      for (RelationId r : p.relations) rels.push_back(kb.relation_name(r));
      pj["step_probs"] = p.step_probs;
      pj["joint_prob"] = p.joint_prob;
      paths.push_back(std::move(pj));
    }
    body += j.dump();
    body += '\n';
  }
  detail::write_text(path, body);
}

inline nlohmann::json epoch_reports_to_json(const std::vector<EpochReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["retriever_loss"] = r.retriever_loss;
    j["reasoner_loss"] = r.reasoner_loss;
    j["coverage_hits_at_k"] = r.coverage_hits_at_k;
    j["wall_time_s"] = r.wall_time_s;
    j["skipped_instances"] = r.skipped_instances;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline nlohmann::json coverage_to_json(const CoverageReport& r) {
  nlohmann::json j;
  j["k_values"] = r.k_values;
  j["hit_fraction"] = r.hit_fraction;
  j["mean_entities"] = r.mean_entities;
  j["question_count"] = r.question_count;
  return j;
}

inline nlohmann::json qa_to_json(const QaReport& r) {
  nlohmann::json j;
  j["hits_at_1"] = r.hits_at_1;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["threshold"] = r.threshold;
  j["question_count"] = r.question_count;
  j["unanswerable"] = r.unanswerable;
  return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  detail::write_text(path, j.dump(2) + "\n");
}

// Long-format CSV (epoch, metric, value) for plotting.
inline void write_epoch_csv(const std::string& path, const std::vector<EpochReport>& reports) {
  std::string body = "epoch,metric,value\n";
  char buf[64];
  const auto row = [&](int epoch, const char* metric, double value) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.17g\n", epoch, metric, value);
    body += buf;
  };
  for (const auto& r : reports) {
    row(r.epoch, "retriever_loss", r.retriever_loss);
    row(r.epoch, "reasoner_loss", r.reasoner_loss);
    row(r.epoch, "coverage_hits_at_k", r.coverage_hits_at_k);
    row(r.epoch, "wall_time_s", r.wall_time_s);
    row(r.epoch, "skipped_instances", static_cast<double>(r.skipped_instances));
  }
  detail::write_text(path, body);
}

}  // namespace srkbqa
