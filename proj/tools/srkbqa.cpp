// Command-line pipeline: ingest -> (synth) -> pretrain -> train-reasoner ->
// finetune -> retrieve -> eval. Every artifact-producing run writes exactly
// one manifest with SHA-256 digests of its inputs and outputs, so stage
// mismatches are auditable. Exit codes: 0 success, 1 internal error, 2
// usage/input error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "srkbqa/srkbqa.hpp"

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string sha256_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw srkbqa::Error("cannot open file for digest: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

// One manifest per run: command, resolved config, input/output digests, seed,
// wall time.
class Manifest {
 public:
  Manifest(std::string command, std::uint64_t seed) : t0_(Clock::now()) {
    j_["command"] = std::move(command);
    j_["seed"] = seed;
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
  }

  void config(json cfg) { j_["config"] = std::move(cfg); }

  void input(const std::string& path) {
    j_["inputs"].push_back({{"path", path}, {"sha256", sha256_hex(path)}});
  }

  void output(const std::string& path) {
    j_["outputs"].push_back({{"path", path}, {"sha256", sha256_hex(path)}});
  }

  void write(const std::string& path) {
    j_["wall_time_s"] = std::chrono::duration<double>(Clock::now() - t0_).count();
    srkbqa::write_json(path, j_);
  }

 private:
  json j_;
  Clock::time_point t0_;
};

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw srkbqa::Error("cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw srkbqa::Error("config file must hold one JSON object: " + path);
  return j;
}

// Precedence: compiled defaults < --config JSON < explicit flags.
template <typename T>
void config_default(const CLI::Option* opt, const json& cfg, const char* key, T& var) {
  if (opt->count() == 0 && cfg.contains(key)) var = cfg.at(key).get<T>();
}

std::string join_dir(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw srkbqa::Error("cannot create output directory: " + dir);
}

srkbqa::LoadedQuestions load_questions_checked(const std::string& path,
                                               const srkbqa::KnowledgeBase& kb) {
  auto lq = srkbqa::load_questions(path, kb);
  if (lq.dropped_names || lq.dropped_questions)
    std::fprintf(stderr, "warning: %zu entity names unresolved, %zu questions dropped\n",
                 lq.dropped_names, lq.dropped_questions);
  if (lq.questions.empty()) throw srkbqa::Error("no usable questions in " + path);
  return lq;
}

std::vector<srkbqa::StepInstance> decompose_all(const srkbqa::KnowledgeBase& kb,
                                                const std::vector<srkbqa::PathInstance>& instances,
                                                int negatives, std::uint64_t seed) {
  std::vector<srkbqa::StepInstance> steps;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto s = srkbqa::decompose_path(kb, instances[i], negatives, seed + i);
    steps.insert(steps.end(), s.begin(), s.end());
  }
  return steps;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trainable subgraph retriever for multi-hop KBQA"};
  app.require_subcommand(1);

  // --- ingest ----------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Intern a TSV triple dump into a KB artifact");
  struct {
    std::string triples, out;
    bool no_inverses = false;
  } ing;
  ingest->add_option("--triples", ing.triples, "head\\trelation\\ttail TSV file")->required();
  ingest->add_option("--out", ing.out, "KB artifact path")->required();
  ingest->add_flag("--no-inverses", ing.no_inverses, "do not materialize inverse relations");
  ingest->callback([&] {
    Manifest man("ingest", 0);
    man.input(ing.triples);
    const auto kb = srkbqa::KnowledgeBase::ingest_triples(ing.triples, !ing.no_inverses);
    kb.save(ing.out);
    man.config({{"no_inverses", ing.no_inverses}});
    man.output(ing.out);
    man.write(ing.out + ".manifest.json");
    std::printf("{\"entities\": %zu, \"relations\": %zu}\n", kb.entity_count(),
                kb.relation_count());
  });

  // --- synth -----------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic KB and question splits");
  struct {
    std::string out, config;
    std::uint64_t seed = 0;
    std::size_t entities = 300, relations = 12, questions = 500, train = 400;
  } sy;
  synth->add_option("--out", sy.out, "output directory")->required();
  auto* sy_seed = synth->add_option("--seed", sy.seed, "generator seed");
  auto* sy_ent = synth->add_option("--entities", sy.entities, "entity count");
  auto* sy_rel = synth->add_option("--relations", sy.relations, "base relation count");
  auto* sy_q = synth->add_option("--questions", sy.questions, "total questions");
  auto* sy_tr = synth->add_option("--train", sy.train, "questions in the train split");
  synth->add_option("--config", sy.config, "JSON config file");
  synth->callback([&] {
    const json cfg = load_config_file(sy.config);
    config_default(sy_seed, cfg, "seed", sy.seed);
    config_default(sy_ent, cfg, "entities", sy.entities);
    config_default(sy_rel, cfg, "relations", sy.relations);
    config_default(sy_q, cfg, "questions", sy.questions);
    config_default(sy_tr, cfg, "train", sy.train);

    srkbqa::SynthConfig scfg;
    scfg.seed = sy.seed;
    scfg.n_entities = sy.entities;
    scfg.n_relations = sy.relations;
    scfg.n_questions = sy.questions;
    const auto data = srkbqa::generate_synthetic(scfg);
    if (data.questions.size() < sy.train)
      throw srkbqa::Error("generator produced fewer questions than the train split");

    ensure_dir(sy.out);
    Manifest man("synth", sy.seed);
    man.config({{"seed", sy.seed},
                {"entities", sy.entities},
                {"relations", sy.relations},
                {"questions", sy.questions},
                {"train", sy.train},
                {"skipped_questions", data.skipped_questions}});

    const std::string kb_tsv = join_dir(sy.out, "kb.tsv");
    const std::string kb_bin = join_dir(sy.out, "kb.bin");
    const std::string train_path = join_dir(sy.out, "train.jsonl");
    const std::string test_path = join_dir(sy.out, "test.jsonl");
    srkbqa::write_triples_tsv(kb_tsv, data.triples);
    data.kb.save(kb_bin);
    const std::vector<srkbqa::Question> train(data.questions.begin(),
                                              data.questions.begin() + sy.train);
    const std::vector<srkbqa::Question> test(data.questions.begin() + sy.train,
                                             data.questions.end());
    srkbqa::write_questions_jsonl(train_path, data.kb, train);
    srkbqa::write_questions_jsonl(test_path, data.kb, test);
    for (const auto& p : {kb_tsv, kb_bin, train_path, test_path}) man.output(p);
    man.write(join_dir(sy.out, "manifest.json"));
    std::printf("{\"questions\": %zu, \"skipped\": %zu}\n", data.questions.size(),
                data.skipped_questions);
  });

  // --- pretrain ----------------------------------------------------------------
  auto* pretrain = app.add_subcommand("pretrain", "Weakly supervised scorer pretraining");
  struct {
    std::string kb, qa, out, distant, config;
    std::uint64_t seed = 0;
    double learning_rate = 0.1;
    int epochs = 40, batch_size = 16, negatives = 15;
    std::size_t dim = 64, max_paths = 10;
  } pt;
  pretrain->add_option("--kb", pt.kb, "KB artifact")->required();
  pretrain->add_option("--qa", pt.qa, "training questions (JSONL)")->required();
  pretrain->add_option("--out", pt.out, "output directory")->required();
  pretrain->add_option("--distant", pt.distant, "distant-supervision tuples (JSONL)");
  auto* pt_seed = pretrain->add_option("--seed", pt.seed, "training seed");
  auto* pt_lr = pretrain->add_option("--learning-rate", pt.learning_rate, "SGD step size");
  auto* pt_ep = pretrain->add_option("--epochs", pt.epochs, "training epochs");
  auto* pt_bs = pretrain->add_option("--batch-size", pt.batch_size, "minibatch size");
  auto* pt_neg = pretrain->add_option("--negatives", pt.negatives, "negatives per step");
  auto* pt_dim = pretrain->add_option("--dim", pt.dim, "embedding width");
  auto* pt_mp = pretrain->add_option("--max-paths", pt.max_paths, "weak-label paths per pair");
  pretrain->add_option("--config", pt.config, "JSON config file");
  pretrain->callback([&] {
    const json cfg = load_config_file(pt.config);
    config_default(pt_seed, cfg, "seed", pt.seed);
    config_default(pt_lr, cfg, "learning_rate", pt.learning_rate);
    config_default(pt_ep, cfg, "epochs", pt.epochs);
    config_default(pt_bs, cfg, "batch_size", pt.batch_size);
    config_default(pt_neg, cfg, "negatives", pt.negatives);
    config_default(pt_dim, cfg, "dim", pt.dim);
    config_default(pt_mp, cfg, "max_paths", pt.max_paths);

    Manifest man("pretrain", pt.seed);
    man.input(pt.kb);
    man.input(pt.qa);
    const auto kb = srkbqa::KnowledgeBase::load(pt.kb);
    const auto lq = load_questions_checked(pt.qa, kb);

    const auto labels = srkbqa::build_weak_labels(kb, lq.questions, pt.max_paths);
    if (labels.unreachable_pairs)
      std::fprintf(stderr, "warning: %zu topic/answer pairs unreachable\n",
                   labels.unreachable_pairs);
    const auto steps = decompose_all(kb, labels.instances, pt.negatives, pt.seed + 1000);

    srkbqa::TrainConfig tcfg;
    tcfg.learning_rate = pt.learning_rate;
    tcfg.epochs = pt.epochs;
    tcfg.batch_size = pt.batch_size;
    tcfg.rng_seed = pt.seed;
    tcfg.negatives_per_step = pt.negatives;

    std::vector<srkbqa::InstanceGroup> groups = {{&kb, &steps}};
    srkbqa::PseudoLabels pseudo;
    std::vector<srkbqa::StepInstance> pseudo_steps;
    if (!pt.distant.empty()) {
      man.input(pt.distant);
      const auto tuples = srkbqa::load_distant_tuples(pt.distant);
      pseudo = srkbqa::build_pseudo_labels(tuples.tuples);
      if (tuples.skipped_lines || pseudo.skipped_tuples)
        std::fprintf(stderr, "warning: skipped %zu lines, %zu tuples in distant data\n",
                     tuples.skipped_lines, pseudo.skipped_tuples);
      pseudo_steps = decompose_all(pseudo.kb, pseudo.instances, pt.negatives, pt.seed + 2000);
      groups.push_back({&pseudo.kb, &pseudo_steps});
    }

    const auto result = srkbqa::pretrain_retriever_grouped(groups, tcfg, pt.dim);
    ensure_dir(pt.out);
    const std::string ckpt = join_dir(pt.out, "scorer.ckpt");
    const std::string losses = join_dir(pt.out, "losses.json");
    srkbqa::save_scorer(result.params, ckpt);
    srkbqa::write_json(losses, {{"epoch_losses", result.epoch_losses}});

    man.config({{"seed", pt.seed},
                {"learning_rate", pt.learning_rate},
                {"epochs", pt.epochs},
                {"batch_size", pt.batch_size},
                {"negatives", pt.negatives},
                {"dim", pt.dim},
                {"max_paths", pt.max_paths},
                {"distant", pt.distant},
                {"instances", steps.size() + pseudo_steps.size()}});
    man.output(ckpt);
    man.output(losses);
    man.write(join_dir(pt.out, "manifest.json"));
    std::printf("{\"instances\": %zu, \"final_loss\": %.6f}\n",
                steps.size() + pseudo_steps.size(),
                result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back());
  });

  // --- train-reasoner ---------------------------------------------------------
  auto* treas = app.add_subcommand("train-reasoner", "Train the reasoner on sampled subgraphs");
  struct {
    std::string kb, qa, scorer, out, config;
    std::uint64_t seed = 0;
    double learning_rate = 0.01;
    int epochs = 8, batch_size = 16, k = 10, max_hops = 3, steps = 3;
    std::size_t key_dim = 32;
    bool no_threshold_stop = false;
  } tr;
  treas->add_option("--kb", tr.kb, "KB artifact")->required();
  treas->add_option("--qa", tr.qa, "training questions (JSONL)")->required();
  treas->add_option("--scorer", tr.scorer, "pretrained scorer checkpoint")->required();
  treas->add_option("--out", tr.out, "output directory")->required();
  auto* tr_seed = treas->add_option("--seed", tr.seed, "training seed");
  auto* tr_lr = treas->add_option("--learning-rate", tr.learning_rate, "SGD step size");
  auto* tr_ep = treas->add_option("--epochs", tr.epochs, "training epochs");
  auto* tr_bs = treas->add_option("--batch-size", tr.batch_size, "minibatch size");
  auto* tr_k = treas->add_option("--k", tr.k, "beam width per topic");
  auto* tr_mh = treas->add_option("--max-hops", tr.max_hops, "maximum path length");
  auto* tr_kd = treas->add_option("--key-dim", tr.key_dim, "relation key width");
  auto* tr_st = treas->add_option("--steps", tr.steps, "propagation steps");
  treas->add_flag("--no-threshold-stop", tr.no_threshold_stop, "rank-only beam pruning");
  treas->add_option("--config", tr.config, "JSON config file");
  treas->callback([&] {
    const json cfg = load_config_file(tr.config);
    config_default(tr_seed, cfg, "seed", tr.seed);
    config_default(tr_lr, cfg, "learning_rate", tr.learning_rate);
    config_default(tr_ep, cfg, "epochs", tr.epochs);
    config_default(tr_bs, cfg, "batch_size", tr.batch_size);
    config_default(tr_k, cfg, "k", tr.k);
    config_default(tr_mh, cfg, "max_hops", tr.max_hops);
    config_default(tr_kd, cfg, "key_dim", tr.key_dim);
    config_default(tr_st, cfg, "steps", tr.steps);

    Manifest man("train-reasoner", tr.seed);
    man.input(tr.kb);
    man.input(tr.qa);
    man.input(tr.scorer);
    const auto kb = srkbqa::KnowledgeBase::load(tr.kb);
    const auto lq = load_questions_checked(tr.qa, kb);
    const auto sp = srkbqa::load_scorer(tr.scorer);

    srkbqa::TrainConfig tcfg;
    tcfg.learning_rate = tr.learning_rate;
    tcfg.epochs = tr.epochs;
    tcfg.batch_size = tr.batch_size;
    tcfg.rng_seed = tr.seed;
    srkbqa::RetrievalConfig rcfg;
    rcfg.beam_width = tr.k;
    rcfg.max_hops = tr.max_hops;
    rcfg.threshold_stop = !tr.no_threshold_stop;

    const auto result = srkbqa::train_reasoner(kb, lq.questions, sp, tcfg, rcfg, tr.key_dim,
                                               tr.steps);
    ensure_dir(tr.out);
    const std::string ckpt = join_dir(tr.out, "reasoner.ckpt");
    const std::string losses = join_dir(tr.out, "losses.json");
    srkbqa::save_reasoner(result.params, ckpt);
    srkbqa::write_json(losses, {{"epoch_losses", result.epoch_losses},
                                {"answer_free_subgraphs", result.answer_free_subgraphs},
                                {"zero_mass_instances", result.zero_mass_instances}});

    man.config({{"seed", tr.seed},
                {"learning_rate", tr.learning_rate},
                {"epochs", tr.epochs},
                {"batch_size", tr.batch_size},
                {"k", tr.k},
                {"max_hops", tr.max_hops},
                {"key_dim", tr.key_dim},
                {"steps", tr.steps},
                {"threshold_stop", !tr.no_threshold_stop}});
    man.output(ckpt);
    man.output(losses);
    man.write(join_dir(tr.out, "manifest.json"));
    std::printf("{\"answer_free_subgraphs\": %zu, \"final_loss\": %.6f}\n",
                result.answer_free_subgraphs,
                result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back());
  });

  // --- finetune ----------------------------------------------------------------
  auto* fine = app.add_subcommand("finetune", "Alternating end-to-end fine-tuning");
  struct {
    std::string kb, qa, scorer, reasoner, out, csv, config;
    std::uint64_t seed = 0;
    double learning_rate = 1e-3;
    int epochs = 5, batch_size = 16, k = 10, max_hops = 3;
    bool no_threshold_stop = false;
  } ft;
  fine->add_option("--kb", ft.kb, "KB artifact")->required();
  fine->add_option("--qa", ft.qa, "training questions (JSONL)")->required();
  fine->add_option("--scorer", ft.scorer, "pretrained scorer checkpoint")->required();
  fine->add_option("--reasoner", ft.reasoner, "trained reasoner checkpoint")->required();
  fine->add_option("--out", ft.out, "output directory")->required();
  fine->add_option("--csv", ft.csv, "also write epoch reports as CSV");
  auto* ft_seed = fine->add_option("--seed", ft.seed, "training seed");
  auto* ft_lr = fine->add_option("--learning-rate", ft.learning_rate, "SGD step size");
  auto* ft_ep = fine->add_option("--epochs", ft.epochs, "fine-tune epochs");
  auto* ft_bs = fine->add_option("--batch-size", ft.batch_size, "minibatch size");
  auto* ft_k = fine->add_option("--k", ft.k, "beam width per topic");
  auto* ft_mh = fine->add_option("--max-hops", ft.max_hops, "maximum path length");
  fine->add_flag("--no-threshold-stop", ft.no_threshold_stop, "rank-only beam pruning");
  fine->add_option("--config", ft.config, "JSON config file");
  fine->callback([&] {
    const json cfg = load_config_file(ft.config);
    config_default(ft_seed, cfg, "seed", ft.seed);
    config_default(ft_lr, cfg, "learning_rate", ft.learning_rate);
    config_default(ft_ep, cfg, "epochs", ft.epochs);
    config_default(ft_bs, cfg, "batch_size", ft.batch_size);
    config_default(ft_k, cfg, "k", ft.k);
    config_default(ft_mh, cfg, "max_hops", ft.max_hops);

    Manifest man("finetune", ft.seed);
    man.input(ft.kb);
    man.input(ft.qa);
    man.input(ft.scorer);
    man.input(ft.reasoner);
    const auto kb = srkbqa::KnowledgeBase::load(ft.kb);
    const auto lq = load_questions_checked(ft.qa, kb);
    auto sp = srkbqa::load_scorer(ft.scorer);
    auto rp = srkbqa::load_reasoner(ft.reasoner);

    srkbqa::TrainConfig tcfg;
    tcfg.learning_rate = ft.learning_rate;
    tcfg.epochs = ft.epochs;
    tcfg.batch_size = ft.batch_size;
    tcfg.rng_seed = ft.seed;
    srkbqa::RetrievalConfig rcfg;
    rcfg.beam_width = ft.k;
    rcfg.max_hops = ft.max_hops;
    rcfg.threshold_stop = !ft.no_threshold_stop;

    const auto reports = srkbqa::finetune_e2e(kb, lq.questions, sp, rp, tcfg, rcfg);
    ensure_dir(ft.out);
    const std::string sckpt = join_dir(ft.out, "scorer.ckpt");
    const std::string rckpt = join_dir(ft.out, "reasoner.ckpt");
    const std::string rep_path = join_dir(ft.out, "reports.json");
    srkbqa::save_scorer(sp, sckpt);
    srkbqa::save_reasoner(rp, rckpt);
    srkbqa::write_json(rep_path, srkbqa::epoch_reports_to_json(reports));
    if (!ft.csv.empty()) srkbqa::write_epoch_csv(ft.csv, reports);

    man.config({{"seed", ft.seed},
                {"learning_rate", ft.learning_rate},
                {"epochs", ft.epochs},
                {"batch_size", ft.batch_size},
                {"k", ft.k},
                {"max_hops", ft.max_hops},
                {"threshold_stop", !ft.no_threshold_stop}});
    man.output(sckpt);
    man.output(rckpt);
    man.output(rep_path);
    if (!ft.csv.empty()) man.output(ft.csv);
    man.write(join_dir(ft.out, "manifest.json"));
    std::puts(srkbqa::epoch_reports_to_json(reports).dump(2).c_str());
  });

  // --- retrieve ----------------------------------------------------------------
  auto* retr = app.add_subcommand("retrieve", "Beam-search relation paths for questions");
  struct {
    std::string kb, qa, scorer, out, config;
    int k = 10, max_hops = 3;
    bool no_threshold_stop = false;
  } rv;
  retr->add_option("--kb", rv.kb, "KB artifact")->required();
  retr->add_option("--qa", rv.qa, "questions (JSONL)")->required();
  retr->add_option("--scorer", rv.scorer, "scorer checkpoint")->required();
  retr->add_option("--out", rv.out, "paths JSONL output")->required();
  auto* rv_k = retr->add_option("--k", rv.k, "beam width per topic");
  auto* rv_mh = retr->add_option("--max-hops", rv.max_hops, "maximum path length");
  retr->add_flag("--no-threshold-stop", rv.no_threshold_stop, "rank-only beam pruning");
  retr->add_option("--config", rv.config, "JSON config file");
  retr->callback([&] {
    const json cfg = load_config_file(rv.config);
    config_default(rv_k, cfg, "k", rv.k);
    config_default(rv_mh, cfg, "max_hops", rv.max_hops);

    Manifest man("retrieve", 0);
    man.input(rv.kb);
    man.input(rv.qa);
    man.input(rv.scorer);
    const auto kb = srkbqa::KnowledgeBase::load(rv.kb);
    const auto lq = load_questions_checked(rv.qa, kb);
    const auto sp = srkbqa::load_scorer(rv.scorer);

    srkbqa::RetrievalConfig rcfg;
    rcfg.beam_width = rv.k;
    rcfg.max_hops = rv.max_hops;
    rcfg.threshold_stop = !rv.no_threshold_stop;

    std::vector<std::vector<srkbqa::ScoredPath>> paths(lq.questions.size());
    srkbqa::parallel_for(lq.questions.size(), [&](std::size_t i) {
      paths[i] = srkbqa::retrieve(kb, sp, lq.questions[i].text, lq.questions[i].topic_entities,
                                  rcfg);
    });
    srkbqa::write_paths_jsonl(rv.out, kb, lq.questions, paths);

    man.config({{"k", rv.k}, {"max_hops", rv.max_hops}, {"threshold_stop", !rv.no_threshold_stop}});
    man.output(rv.out);
    man.write(rv.out + ".manifest.json");
    std::size_t total = 0;
    for (const auto& p : paths) total += p.size();
    std::printf("{\"questions\": %zu, \"paths\": %zu}\n", lq.questions.size(), total);
  });

  // --- eval ----------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "Coverage (and QA metrics) on a question set");
  struct {
    std::string kb, qa, scorer, reasoner, out, baseline = "sr", config;
    std::vector<std::size_t> k = {1, 10};
    std::vector<std::size_t> max_entities = {50};
    int max_hops = 3;
    double grid_step = 0.01;
    bool no_threshold_stop = false;
  } el;
  ev->add_option("--kb", el.kb, "KB artifact")->required();
  ev->add_option("--qa", el.qa, "questions (JSONL)")->required();
  ev->add_option("--scorer", el.scorer, "scorer checkpoint")->required();
  ev->add_option("--reasoner", el.reasoner, "reasoner checkpoint (enables QA metrics)");
  ev->add_option("--out", el.out, "write the report (and manifest) here");
  auto* ev_k = ev->add_option("--k", el.k, "beam budgets for coverage");
  auto* ev_me = ev->add_option("--max-entities", el.max_entities, "PPR entity budgets");
  auto* ev_mh = ev->add_option("--max-hops", el.max_hops, "maximum path length");
  auto* ev_gs = ev->add_option("--grid-step", el.grid_step, "threshold search grid step");
  ev->add_option("--baseline", el.baseline, "coverage baseline to include")
      ->check(CLI::IsMember({"sr", "ppr"}));
  ev->add_flag("--no-threshold-stop", el.no_threshold_stop, "rank-only beam pruning");
  ev->add_option("--config", el.config, "JSON config file");
  ev->callback([&] {
    const json cfg = load_config_file(el.config);
    config_default(ev_k, cfg, "k", el.k);
    config_default(ev_me, cfg, "max_entities", el.max_entities);
    config_default(ev_mh, cfg, "max_hops", el.max_hops);
    config_default(ev_gs, cfg, "grid_step", el.grid_step);

    Manifest man("eval", 0);
    man.input(el.kb);
    man.input(el.qa);
    man.input(el.scorer);
    const auto kb = srkbqa::KnowledgeBase::load(el.kb);
    const auto lq = load_questions_checked(el.qa, kb);
    const auto sp = srkbqa::load_scorer(el.scorer);

    if (el.k.empty()) throw srkbqa::Error("eval needs at least one coverage budget");
    srkbqa::RetrievalConfig rcfg;
    rcfg.beam_width = static_cast<int>(*std::max_element(el.k.begin(), el.k.end()));
    rcfg.max_hops = el.max_hops;
    rcfg.threshold_stop = !el.no_threshold_stop;

    json report;
    report["coverage"] =
        srkbqa::coverage_to_json(srkbqa::coverage_at_k(kb, sp, lq.questions, el.k, rcfg));
    if (el.baseline == "ppr")
      report["ppr_coverage"] =
          srkbqa::coverage_to_json(srkbqa::ppr_coverage(kb, lq.questions, el.max_entities));
    if (!el.reasoner.empty()) {
      man.input(el.reasoner);
      const auto rp = srkbqa::load_reasoner(el.reasoner);
      const auto dists = srkbqa::answer_distributions(kb, sp, rp, lq.questions, rcfg);
      const double threshold = srkbqa::search_threshold(dists, lq.questions, el.grid_step);
      report["qa"] = srkbqa::qa_to_json(srkbqa::qa_metrics(dists, lq.questions, threshold));
    }
    std::puts(report.dump(2).c_str());
    if (!el.out.empty()) {
      srkbqa::write_json(el.out, report);
      man.config({{"k", el.k},
                  {"max_entities", el.max_entities},
                  {"max_hops", el.max_hops},
                  {"grid_step", el.grid_step},
                  {"baseline", el.baseline},
                  {"threshold_stop", !el.no_threshold_stop}});
      man.output(el.out);
      man.write(el.out + ".manifest.json");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const srkbqa::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}
