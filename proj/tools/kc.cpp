// kc: command-line front end for the knowledge-component pipeline.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include "kc/common/error.hpp"
#include "kc/common/io.hpp"
#include "kc/corpus/corpus.hpp"
#include "kc/discovery/discover.hpp"
#include "kc/eval/rubric.hpp"
#include "kc/genkit/prompts.hpp"
#include "kc/pipeline/config.hpp"
#include "kc/pipeline/pipeline.hpp"
#include "kc/pipeline/stages.hpp"

namespace fs = std::filesystem;
using namespace kc;

namespace {

// Flags shared by every command that works inside a run.
struct RunFlags {
  std::string config;
  std::string corpus;
  std::string output_root;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 4;
  bool replay = false;
  bool force = false;

  void attach(CLI::App* cmd, bool llm) {
    cmd->add_option("--config", config, "TOML config file");
    cmd->add_option("--corpus", corpus, "submissions JSONL (overrides corpus.path)");
    cmd->add_option("--output-root", output_root, "run store directory (overrides output_root)");
    cmd->add_option("--run-seed", seed, "base seed for the run (overrides seed)");
    cmd->add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);
    cmd->add_flag("--force", force, "rerun stages whose outputs are current");
    if (llm) cmd->add_flag("--replay", replay, "answer LLM requests from stored transcripts only");
  }

  pipeline::PipelineConfig load() const {
    auto c = config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(config);
    if (!corpus.empty()) c.corpus_path = corpus;
    if (!output_root.empty()) c.output_root = output_root;
    if (seed) c.seed = *seed;
    return c;
  }

  pipeline::RunOptions options() const {
    pipeline::RunOptions o;
    o.parallelism = jobs;
    o.replay = replay;
    o.force = force;
    o.progress = [](const std::string& s) { std::cerr << "kc: " << s << "\n"; };
    return o;
  }
};

void report_run(const pipeline::PipelineConfig& c, const pipeline::RunManifest& m) {
  std::cout << "run " << m.run_id << "  manifest " << pipeline::manifest_path(c.output_root, m.run_id).string() << "\n";
  for (const auto& [stage, rec] : m.stages) {
    std::cout << "  " << stage << ": " << rec.status;
    if (!rec.log.empty()) std::cout << " (" << rec.log.size() << " logged)";
    std::cout << "\n";
    for (const auto& [name, ref] : rec.outputs)
      std::cout << "    " << name << " " << (c.output_root / ref.path).string() << "\n";
  }
}

int run_stages(const RunFlags& f, std::vector<pipeline::Stage> stages) {
  const auto c = f.load();
  const auto m = pipeline::run_pipeline(c, stages, f.options());
  report_run(c, m);
  return 0;
}

std::vector<Json> read_jsonl(const fs::path& path) {
  std::vector<Json> out;
  for_each_jsonl(path, [&](std::size_t, const Json& j) { out.push_back(j); });
  return out;
}

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, j.dump(2) + "\n");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

void print_log(const std::vector<Json>& log) {
  for (const auto& entry : log) std::cerr << "kc: skipped " << canonical_dump(entry) << "\n";
}

// Assignments from a single JSON object, a JSON array or JSONL.
std::vector<discovery::KcAssignment> read_assignments(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<discovery::KcAssignment> out;
  try {
    const auto j = Json::parse(text);
    if (j.is_array())
      for (const auto& a : j) out.push_back(discovery::assignment_from_json(a));
    else
      out.push_back(discovery::assignment_from_json(j));
    return out;
  } catch (const Json::parse_error&) {
  }
  for (const auto& j : read_jsonl(path)) out.push_back(discovery::assignment_from_json(j));
  return out;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"kc: mine pattern-based knowledge components from student code and generate worked examples"};
  app.require_subcommand(1);
  int status = 0;

  // corpus sample
  auto* corpus_cmd = app.add_subcommand("corpus", "corpus utilities");
  corpus_cmd->require_subcommand(1);
  auto* sample_cmd = corpus_cmd->add_subcommand("sample", "sample last incorrect attempts per problem");
  std::vector<std::string> s_problems;
  std::size_t s_n = 50;
  std::uint64_t s_seed = 0;
  std::string s_in, s_problems_file, s_out;
  sample_cmd->add_option("--problem", s_problems, "problem id (repeatable)")->required();
  sample_cmd->add_option("--n", s_n, "submissions per problem")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--seed", s_seed, "sampling seed")->required();
  sample_cmd->add_option("--in", s_in, "submissions JSONL")->required();
  sample_cmd->add_option("--problems", s_problems_file, "problems JSONL (default: problems.jsonl beside --in)");
  sample_cmd->add_option("--out", s_out, "output JSONL")->required();
  sample_cmd->callback([&] {
    const auto corpus = corpus::load_corpus(s_in, s_problems_file);
    std::vector<Json> log;
    const auto picked = pipeline::sample_corpus(corpus, s_problems, s_n, s_seed, &log);
    std::vector<Json> lines;
    for (const auto& s : picked) lines.push_back(corpus::to_json(s));
    write_text(s_out, to_jsonl(lines));
    for (const auto& entry : log) std::cerr << "kc: " << canonical_dump(entry) << "\n";
    std::cout << picked.size() << " submissions written to " << s_out << "\n";
  });

  // ast extract
  auto* ast_cmd = app.add_subcommand("ast", "syntax tree utilities");
  ast_cmd->require_subcommand(1);
  auto* extract_cmd = ast_cmd->add_subcommand("extract", "normalized candidate subtrees per submission");
  std::string a_in, a_problems, a_out;
  ast::SubtreeBounds a_bounds;
  std::size_t a_jobs = 4;
  extract_cmd->add_option("--in", a_in, "submissions JSONL")->required();
  extract_cmd->add_option("--problems", a_problems, "problems JSONL (default: beside --in)");
  extract_cmd->add_option("--out", a_out, "output JSONL, one record per submission")->required();
  extract_cmd->add_option("--min-nodes", a_bounds.min_nodes, "smallest subtree kept")->check(CLI::PositiveNumber);
  extract_cmd->add_option("--max-nodes", a_bounds.max_nodes, "largest subtree kept")->check(CLI::PositiveNumber);
  extract_cmd->add_option("--jobs", a_jobs, "parallel workers")->check(CLI::PositiveNumber);
  extract_cmd->callback([&] {
    if (a_bounds.min_nodes > a_bounds.max_nodes) throw UsageError("--min-nodes exceeds --max-nodes");
    const auto corpus = corpus::load_corpus(a_in, a_problems);
    const auto ex = pipeline::extract_corpus(corpus.submissions, a_bounds, a_jobs);
    std::vector<Json> lines;
    std::size_t count = 0;
    for (const auto& p : ex.programs) {
      lines.push_back(pipeline::to_json(p));
      count += p.subtrees.size();
    }
    write_text(a_out, to_jsonl(lines));
    print_log(ex.log);
    std::cout << count << " subtrees from " << ex.programs.size() << " submissions (" << ex.log.size()
              << " skipped) written to " << a_out << "\n";
  });

  // sann train
  auto* sann_cmd = app.add_subcommand("sann", "subtree attention network");
  sann_cmd->require_subcommand(1);
  auto* train_cmd = sann_cmd->add_subcommand("train", "train the correctness model");
  std::string t_subtrees, t_labels, t_out;
  std::uint64_t t_seed = 0;
  sann::Hyperparams t_hp;
  train_cmd->add_option("--subtrees", t_subtrees, "output of `kc ast extract`")->required();
  train_cmd->add_option("--labels", t_labels, "JSONL with submission_id and is_correct (the corpus works)")->required();
  train_cmd->add_option("--seed", t_seed, "training seed")->required();
  train_cmd->add_option("--out", t_out, "model file")->required();
  train_cmd->add_option("--epochs", t_hp.epochs, "passes over the data");
  train_cmd->add_option("--lr", t_hp.learning_rate, "learning rate");
  train_cmd->add_option("--d-emb", t_hp.d_emb, "embedding width");
  train_cmd->add_option("--d-enc", t_hp.d_enc, "encoding width");
  train_cmd->add_option("--batch-size", t_hp.batch_size, "mini-batch size");
  train_cmd->callback([&] {
    std::map<std::string, bool> label;
    for_each_jsonl(t_labels, [&](std::size_t line, const Json& j) {
      if (!j.contains("submission_id") || !j.contains("is_correct"))
        throw DataError(t_labels + ": line " + std::to_string(line) + ": needs submission_id and is_correct");
      label[j["submission_id"].get<std::string>()] = j["is_correct"].get<bool>();
    });
    std::vector<sann::LabeledProgram> programs;
    for_each_jsonl(t_subtrees, [&](std::size_t line, const Json& j) {
      auto p = pipeline::extracted_from_json(j);
      const auto it = label.find(p.submission_id);
      if (it == label.end())
        throw DataError(t_subtrees + ": line " + std::to_string(line) + ": no label for " + p.submission_id);
      programs.push_back(sann::LabeledProgram{p.submission_id, std::move(p.subtrees), it->second});
    });
    const auto r = sann::train_sann(programs, t_hp, t_seed);
    sann::save_model(t_out, r.model);
    std::printf("trained on %zu programs, holdout %zu; train accuracy %.3f, holdout accuracy %.3f, final loss %.4f\n",
                r.report.train_size, r.report.holdout_size, r.report.train_accuracy, r.report.holdout_accuracy,
                r.report.loss_trace.empty() ? 0.0 : r.report.loss_trace.back());
    std::cout << "model " << t_out << " checksum " << r.model.checksum() << "\n";
  });

  // discover
  auto* discover_cmd = app.add_subcommand("discover", "learn the KC inventory");
  RunFlags d_run;
  d_run.attach(discover_cmd, false);
  std::string d_sann, d_out, d_vae_out, d_problems;
  std::uint64_t d_seed = 0;
  std::size_t d_k = 50;
  double d_threshold = 0.5;
  discover_cmd->add_option("--sann", d_sann, "trained model (standalone mode)");
  discover_cmd->add_option("--seed", d_seed, "seed for the VAE and K-means (standalone mode)");
  discover_cmd->add_option("--out", d_out, "inventory JSON (standalone mode)");
  discover_cmd->add_option("--vae-out", d_vae_out, "VAE file (default: <out>.vae)");
  discover_cmd->add_option("--problems", d_problems, "problems JSONL (default: beside --corpus)");
  discover_cmd->add_option("--k", d_k, "number of KCs")->check(CLI::PositiveNumber);
  discover_cmd->add_option("--threshold", d_threshold, "attention threshold");
  discover_cmd->callback([&] {
    if (d_out.empty()) {
      status = run_stages(d_run, {pipeline::Stage::Discover});
      return;
    }
    if (d_sann.empty() || d_run.corpus.empty()) throw UsageError("standalone discover needs --corpus, --sann and --out");
    const auto corpus = corpus::load_corpus(d_run.corpus, d_problems);
    const auto sann = sann::load_model(d_sann);
    const auto ex = pipeline::extract_corpus(corpus.submissions, {}, d_run.jobs);
    print_log(ex.log);
    discovery::DiscoveryOptions o;
    o.k = d_k;
    o.threshold = d_threshold;
    o.vae_seed = d_seed;
    o.kmeans_seed = d_seed + 1;
    auto r = discovery::discover_kcs(sann, pipeline::labeled_programs(ex.programs), o);
    r.inventory.provenance["corpus_sha256"] = sha256_file(d_run.corpus);
    r.inventory.provenance["sann_checksum"] = sann.checksum();
    const fs::path vae_out = d_vae_out.empty() ? fs::path(d_out + ".vae") : fs::path(d_vae_out);
    discovery::save_vae(vae_out, r.vae);
    write_text(d_out, canonical_dump(discovery::to_json(r.inventory)) + "\n");
    std::cout << r.inventory.k << " KCs from " << r.context_points << " context points; inventory " << d_out
              << ", VAE " << vae_out.string() << "\n";
  });

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "map submissions to KC targets");
  RunFlags i_run;
  i_run.attach(infer_cmd, false);
  std::string i_submission, i_out, i_sann, i_vae, i_inventory, i_problems;
  infer_cmd->add_option("--submission", i_submission, "single submission id");
  infer_cmd->add_option("--out", i_out, "assignment JSON for --submission");
  infer_cmd->add_option("--sann", i_sann, "model file (default: the run's discover output)");
  infer_cmd->add_option("--vae", i_vae, "VAE file (default: the run's discover output)");
  infer_cmd->add_option("--inventory", i_inventory, "inventory JSON (default: the run's discover output)");
  infer_cmd->add_option("--problems", i_problems, "problems JSONL (default: beside the corpus)");
  infer_cmd->callback([&] {
    if (i_submission.empty()) {
      status = run_stages(i_run, {pipeline::Stage::Infer});
      return;
    }
    if (i_out.empty()) throw UsageError("--submission needs --out");
    const auto cfg = i_run.load();
    if (cfg.corpus_path.empty()) throw UsageError("no corpus given; pass --corpus or --config");
    const auto corpus = corpus::load_corpus(cfg.corpus_path, i_problems.empty() ? cfg.problems_path : fs::path(i_problems));
    pipeline::DiscoveredModels m;
    if (!i_sann.empty() || !i_vae.empty() || !i_inventory.empty()) {
      if (i_sann.empty() || i_vae.empty() || i_inventory.empty())
        throw UsageError("--sann, --vae and --inventory go together");
      m.sann = sann::load_model(i_sann);
      m.vae = discovery::load_vae(i_vae);
      m.inventory = discovery::inventory_from_json(Json::parse(read_file(i_inventory)));
    } else {
      m = pipeline::load_discovered(cfg);
    }
    discovery::TargetOptions t;
    t.threshold = cfg.threshold;
    t.cap = cfg.target_cap;
    t.bounds = cfg.bounds;
    const auto a = discovery::kc_targets(corpus.submission(i_submission), m.sann, m.vae, m.inventory, t);
    write_json(i_out, discovery::to_json(a));
    for (const auto& target : a.targets)
      std::printf("KC %zu  attention %.3f  %s\n", target.kc_id, target.supporter.attention, target.snippet.c_str());
  });

  // enrich
  auto* enrich_cmd = app.add_subcommand("enrich", "label the KCs found by infer with the LLM");
  RunFlags e_run;
  e_run.attach(enrich_cmd, true);
  enrich_cmd->callback([&] { status = run_stages(e_run, {pipeline::Stage::Enrich}); });

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "generate worked examples");
  RunFlags g_run;
  g_run.attach(generate_cmd, true);
  std::string g_assignment, g_variant = "both", g_templates, g_out, g_labels, g_problems;
  generate_cmd->add_option("--assignment", g_assignment, "assignment JSON or JSONL (standalone mode)");
  generate_cmd->add_option("--variant", g_variant, "baseline, kc_conditioned or both");
  generate_cmd->add_option("--templates", g_templates, "prompt template directory");
  generate_cmd->add_option("--labels", g_labels, "KC labels JSON from enrich (needed for kc_conditioned)");
  generate_cmd->add_option("--problems", g_problems, "problems JSONL (default: beside the corpus)");
  generate_cmd->add_option("--out", g_out, "output directory (standalone mode)");
  generate_cmd->callback([&] {
    if (g_assignment.empty()) {
      status = run_stages(g_run, {pipeline::Stage::Generate});
      return;
    }
    if (g_out.empty()) throw UsageError("--assignment needs --out");
    auto cfg = g_run.load();
    if (!g_templates.empty()) cfg.template_dir = g_templates;
    if (cfg.corpus_path.empty()) throw UsageError("no corpus given; pass --corpus or --config");
    const auto variants = pipeline::parse_variants(g_variant);
    const auto corpus = corpus::load_corpus(cfg.corpus_path, g_problems.empty() ? cfg.problems_path : fs::path(g_problems));
    const auto assignments = read_assignments(g_assignment);
    std::vector<genkit::KcLabel> labels;
    if (!g_labels.empty())
      for (const auto& l : Json::parse(read_file(g_labels))) labels.push_back(genkit::kc_label_from_json(l));
    const auto templates =
        genkit::load_templates(cfg.template_dir.empty() ? genkit::default_template_dir() : cfg.template_dir);
    std::unique_ptr<genkit::ChatBackend> backend;
    if (g_run.replay) {
      backend = std::make_unique<genkit::ReplayChatBackend>(pipeline::transcript_dir(cfg), cfg.llm.model);
    } else {
      genkit::resolve_api_key(cfg.llm);
      backend = std::make_unique<genkit::HttpChatBackend>(cfg.llm);
    }
    std::unique_ptr<genkit::TranscriptStore> store;
    if (!g_run.replay) store = std::make_unique<genkit::TranscriptStore>(pipeline::transcript_dir(cfg));
    const pipeline::LlmStageContext ctx{*backend, templates, store.get(), std::min(g_run.jobs, cfg.llm.parallelism)};
    const auto r = pipeline::generate_examples(corpus, corpus.submissions, assignments, labels, variants, ctx);
    std::vector<Json> lines;
    for (const auto& g : r.examples) {
      lines.push_back(pipeline::to_json(g));
      std::string name = g.example_id;
      std::replace(name.begin(), name.end(), '/', '.');
      write_json(fs::path(g_out) / (name + ".json"), genkit::to_json(g.example));
    }
    write_text(fs::path(g_out) / "worked_examples.jsonl", to_jsonl(lines));
    write_json(fs::path(g_out) / "log.json", r.log);
    print_log(r.log);
    std::cout << r.examples.size() << " worked examples written to " << g_out << "\n";
  });

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "summarize expert ratings");
  RunFlags v_run;
  v_run.attach(evaluate_cmd, false);
  std::string v_ratings, v_pairs, v_out, v_mode = "auto";
  evaluate_cmd->add_option("--ratings", v_ratings, "ratings JSONL");
  evaluate_cmd->add_option("--pairs", v_pairs, "pairs JSONL");
  evaluate_cmd->add_option("--out", v_out, "summary JSON; the table goes beside it as .txt (standalone mode)");
  evaluate_cmd->add_option("--wilcoxon", v_mode, "exact, approx or auto")
      ->check(CLI::IsMember({"exact", "approx", "auto"}));
  evaluate_cmd->callback([&] {
    const auto mode = v_mode == "exact"    ? eval::WilcoxonMode::Exact
                      : v_mode == "approx" ? eval::WilcoxonMode::Approx
                                           : eval::WilcoxonMode::Auto;
    if (v_out.empty()) {
      auto cfg = v_run.load();
      if (!v_ratings.empty()) cfg.ratings_path = v_ratings;
      if (!v_pairs.empty()) cfg.pairs_path = v_pairs;
      if (v_mode != "auto") cfg.wilcoxon = mode;
      const auto m = pipeline::run_pipeline(cfg, std::vector{pipeline::Stage::Evaluate}, v_run.options());
      report_run(cfg, m);
      const pipeline::ObjectStore store(cfg.output_root);
      std::cout << "\n" << store.read(m.stages.at("evaluate").outputs.at("summary_text"));
      return;
    }
    if (v_ratings.empty() || v_pairs.empty()) throw UsageError("evaluate needs --ratings and --pairs");
    const auto ratings = eval::load_ratings(v_ratings);
    const auto pairs = eval::build_pairs(ratings, eval::load_pairs(v_pairs));
    const auto summary = eval::summarize(pairs, ratings, mode);
    write_json(v_out, eval::to_json(summary));
    write_text(fs::path(v_out).replace_extension(".txt"), eval::to_text(summary));
    std::cout << eval::to_text(summary);
  });

  // run
  auto* run_cmd = app.add_subcommand("run", "run several stages in order");
  RunFlags r_run;
  r_run.attach(run_cmd, true);
  std::string r_stages;
  run_cmd->add_option("--stages", r_stages, "comma-separated stages or `all` (default: all but evaluate unless ratings are configured)");
  run_cmd->callback([&] {
    std::vector<pipeline::Stage> stages;
    if (!r_stages.empty()) {
      stages = pipeline::parse_stages(r_stages);
    } else {
      const auto cfg = r_run.load();
      stages = {pipeline::Stage::Sample, pipeline::Stage::Discover, pipeline::Stage::Infer, pipeline::Stage::Enrich,
                pipeline::Stage::Generate};
      if (!cfg.ratings_path.empty()) stages.push_back(pipeline::Stage::Evaluate);
    }
    status = run_stages(r_run, stages);
  });

  // sample (run-store form of `corpus sample`)
  auto* stage_sample_cmd = app.add_subcommand("sample", "run the sample stage of a run");
  RunFlags ss_run;
  ss_run.attach(stage_sample_cmd, false);
  stage_sample_cmd->callback([&] { status = run_stages(ss_run, {pipeline::Stage::Sample}); });

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "check every artifact of a run against its recorded hash");
  RunFlags vf_run;
  vf_run.attach(verify_cmd, false);
  verify_cmd->callback([&] {
    const auto cfg = vf_run.load();
    const auto id = pipeline::run_id(cfg);
    const auto m = pipeline::load_manifest(pipeline::manifest_path(cfg.output_root, id));
    if (!m) throw UsageError("no manifest for run " + id + " under " + cfg.output_root.string());
    const auto problems = pipeline::verify_manifest(*m, cfg.output_root);
    for (const auto& p : problems) std::cout << p << "\n";
    if (!problems.empty()) throw DataError(std::to_string(problems.size()) + " artifact(s) failed verification");
    std::cout << "run " << id << ": all artifacts verified\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "kc: usage error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "kc: config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "kc: data error: " << e.what() << "\n";
    return 2;
  } catch (const UpstreamError& e) {
    std::cerr << "kc: upstream error: " << e.what() << "\n";
    return 3;
  } catch (const Json::exception& e) {
    std::cerr << "kc: data error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "kc: data error: " << e.what() << "\n";
    return 2;
  }
}
