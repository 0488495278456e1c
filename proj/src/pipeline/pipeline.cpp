#include "kc/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <set>

#include "kc/common/error.hpp"
#include "kc/common/rng.hpp"
#include "kc/common/timestamp.hpp"
#include "kc/corpus/corpus.hpp"
#include "kc/discovery/discover.hpp"
#include "kc/eval/rubric.hpp"
#include "kc/genkit/prompts.hpp"
#include "kc/pipeline/stages.hpp"

namespace kc::pipeline {

namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Sample: return "sample";
    case Stage::Discover: return "discover";
    case Stage::Infer: return "infer";
    case Stage::Enrich: return "enrich";
    case Stage::Generate: return "generate";
    case Stage::Evaluate: return "evaluate";
  }
  return "?";
}

Stage stage_from_string(std::string_view s) {
  for (const auto st : kAllStages)
    if (to_string(st) == s) return st;
  throw UsageError("unknown stage '" + std::string(s) +
                   "' (expected sample, discover, infer, enrich, generate or evaluate)");
}

std::vector<Stage> parse_stages(std::string_view csv) {
  if (csv == "all") return {kAllStages.begin(), kAllStages.end()};
  std::vector<Stage> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto comma = std::min(csv.find(',', start), csv.size());
    const auto name = csv.substr(start, comma - start);
    if (!name.empty()) out.push_back(stage_from_string(name));
    start = comma + 1;
  }
  if (out.empty()) throw UsageError("no stages given");
  return out;
}

fs::path transcript_dir(const PipelineConfig& config) { return config.output_root / "transcripts"; }

namespace {

using Refs = std::map<std::string, ArtifactRef>;

constexpr std::uint64_t kStageTag[] = {0x73616d70, 0x64697363, 0x696e6672, 0x656e7263, 0x67656e65, 0x6576616c};

std::uint64_t stage_seed(const PipelineConfig& c, Stage s) {
  return derive_seed(c.seed, kStageTag[static_cast<int>(s)]);
}

fs::path problems_file(const PipelineConfig& c) {
  return c.problems_path.empty() ? corpus::default_problems_path(c.corpus_path) : c.problems_path;
}

fs::path templates_of(const PipelineConfig& c) {
  return c.template_dir.empty() ? genkit::default_template_dir() : c.template_dir;
}

corpus::Corpus load_corpus_of(const PipelineConfig& c) {
  if (c.corpus_path.empty()) throw UsageError("no corpus given; pass --corpus or set corpus.path");
  return corpus::load_corpus(c.corpus_path, c.problems_path);
}

std::string command_hint(Stage s) { return "`kc " + std::string(to_string(s)) + "`"; }

class Runner {
 public:
  Runner(const PipelineConfig& c, const RunOptions& o, RunManifest& m) : cfg_(c), opt_(o), m_(m), store_(c.output_root) {}

  Refs inputs(Stage s) const {
    Refs in;
    auto corpus_inputs = [&] {
      if (cfg_.corpus_path.empty()) throw UsageError("no corpus given; pass --corpus or set corpus.path");
      in["corpus"] = external_input(cfg_.corpus_path);
      in["problems"] = external_input(problems_file(cfg_));
    };
    auto templates = [&] {
      const auto dir = templates_of(cfg_);
      for (const auto name : genkit::kTemplateFiles) {
        const fs::path p = dir / name;
        if (!fs::exists(p)) throw ConfigError("template " + p.string() + " is missing");
        in["template:" + std::string(name)] = external_input(p);
      }
    };
    switch (s) {
      case Stage::Sample:
      case Stage::Discover:
        corpus_inputs();
        break;
      case Stage::Infer:
        in["submissions"] = upstream(Stage::Sample, "submissions");
        in["sann"] = upstream(Stage::Discover, "sann");
        in["vae"] = upstream(Stage::Discover, "vae");
        in["inventory"] = upstream(Stage::Discover, "inventory");
        break;
      case Stage::Enrich:
        in["assignments"] = upstream(Stage::Infer, "assignments");
        in["submissions"] = upstream(Stage::Sample, "submissions");
        in["inventory"] = upstream(Stage::Discover, "inventory");
        in["problems"] = external_input(problems_file(cfg_));
        templates();
        break;
      case Stage::Generate:
        in["assignments"] = upstream(Stage::Infer, "assignments");
        in["labels"] = upstream(Stage::Enrich, "labels");
        in["submissions"] = upstream(Stage::Sample, "submissions");
        in["problems"] = external_input(problems_file(cfg_));
        templates();
        break;
      case Stage::Evaluate:
        if (cfg_.ratings_path.empty() || cfg_.pairs_path.empty())
          throw UsageError("evaluate needs evaluate.ratings and evaluate.pairs (or --ratings and --pairs)");
        in["ratings"] = external_input(cfg_.ratings_path);
        in["pairs"] = external_input(cfg_.pairs_path);
        break;
    }
    return in;
  }

  bool current(Stage s, const Refs& in) const {
    const auto it = m_.stages.find(std::string(to_string(s)));
    if (it == m_.stages.end() || it->second.status != "complete") return false;
    if (it->second.inputs != in || it->second.seed != stage_seed(cfg_, s)) return false;
    for (const auto& [name, ref] : it->second.outputs) {
      const auto p = store_.resolve(ref);
      if (!fs::exists(p) || sha256_file(p) != ref.sha256) return false;
    }
    return true;
  }

  StageRecord run(Stage s, const Refs& in) {
    StageRecord rec;
    rec.seed = stage_seed(cfg_, s);
    rec.inputs = in;
    switch (s) {
      case Stage::Sample: sample(rec); break;
      case Stage::Discover: discover(rec); break;
      case Stage::Infer: infer(rec); break;
      case Stage::Enrich: enrich(rec); break;
      case Stage::Generate: generate(rec); break;
      case Stage::Evaluate: evaluate(rec); break;
    }
    rec.status = "complete";
    return rec;
  }

 private:
  ArtifactRef upstream(Stage s, const std::string& output) const {
    const auto it = m_.stages.find(std::string(to_string(s)));
    const std::string hint = "; run " + command_hint(s) + " first";
    if (it == m_.stages.end() || it->second.status != "complete" || !it->second.outputs.count(output))
      throw UsageError("run " + m_.run_id + " has no '" + output + "' artifact from stage " +
                       std::string(to_string(s)) + hint);
    const auto& ref = it->second.outputs.at(output);
    const auto p = store_.resolve(ref);
    if (!fs::exists(p) || sha256_file(p) != ref.sha256)
      throw UsageError("artifact '" + output + "' from stage " + std::string(to_string(s)) +
                       " is missing or altered" + hint);
    return ref;
  }

  std::vector<corpus::Submission> read_submissions(const ArtifactRef& ref) const {
    std::vector<corpus::Submission> out;
    for (const auto& line : split_lines(store_.read(ref))) out.push_back(corpus::submission_from_json(Json::parse(line)));
    return out;
  }

  std::vector<discovery::KcAssignment> read_assignments(const ArtifactRef& ref) const {
    std::vector<discovery::KcAssignment> out;
    for (const auto& line : split_lines(store_.read(ref))) out.push_back(discovery::assignment_from_json(Json::parse(line)));
    return out;
  }

  static std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
      auto nl = text.find('\n', start);
      if (nl == std::string::npos) nl = text.size();
      if (nl > start) out.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
    return out;
  }

  void sample(StageRecord& rec) {
    const auto corpus = load_corpus_of(cfg_);
    const auto picked = sample_corpus(corpus, cfg_.sample_problems, cfg_.sample_n, rec.seed, &rec.log);
    std::vector<Json> lines;
    for (const auto& s : picked) lines.push_back(corpus::to_json(s));
    rec.outputs["submissions"] = store_.put(to_jsonl(lines), ".jsonl");
  }

  void discover(StageRecord& rec) {
    const auto corpus = load_corpus_of(cfg_);
    auto extraction = extract_corpus(corpus.submissions, cfg_.bounds, opt_.parallelism);
    rec.log = std::move(extraction.log);
    const auto programs = labeled_programs(extraction.programs);
    const std::uint64_t sann_seed = derive_seed(rec.seed, 1);
    auto trained = sann::train_sann(programs, cfg_.sann, sann_seed);

    discovery::DiscoveryOptions d;
    d.vae = cfg_.vae;
    d.k = cfg_.k;
    d.threshold = cfg_.threshold;
    d.max_iters = cfg_.kmeans_max_iters;
    d.vae_seed = derive_seed(rec.seed, 2);
    d.kmeans_seed = derive_seed(rec.seed, 3);
    auto found = discovery::discover_kcs(trained.model, programs, d);
    found.inventory.provenance["corpus_sha256"] = rec.inputs.at("corpus").sha256;
    found.inventory.provenance["sann_seed"] = sann_seed;
    found.inventory.provenance["sann_checksum"] = trained.model.checksum();
    found.inventory.provenance["sann"] = sann::to_json(cfg_.sann);

    const auto& r = trained.report;
    const Json report{{"sann",
                       {{"loss_trace", r.loss_trace},
                        {"train_accuracy", r.train_accuracy},
                        {"holdout_accuracy", r.holdout_accuracy},
                        {"train_size", r.train_size},
                        {"holdout_size", r.holdout_size}}},
                      {"vae",
                       {{"elbo_trace", found.vae_report.elbo_trace},
                        {"reconstruction_trace", found.vae_report.reconstruction_trace},
                        {"kl_trace", found.vae_report.kl_trace}}},
                      {"kmeans",
                       {{"points", found.context_points},
                        {"iterations", found.kmeans_iterations},
                        {"converged", found.kmeans_converged},
                        {"inertia", found.final_inertia}}},
                      {"programs", programs.size()},
                      {"skipped", rec.log.size()}};
    rec.outputs["sann"] = store_.put(encode_tensor_file(sann::to_tensor_file(trained.model)), ".sann");
    rec.outputs["vae"] = store_.put(encode_tensor_file(discovery::to_tensor_file(found.vae)), ".vae");
    rec.outputs["inventory"] = store_.put(canonical_dump(discovery::to_json(found.inventory)) + "\n", ".json");
    rec.outputs["report"] = store_.put(canonical_dump(report) + "\n", ".json");
  }

  void infer(StageRecord& rec) {
    const auto subs = read_submissions(rec.inputs.at("submissions"));
    const auto sann = sann::from_tensor_file(decode_tensor_file(store_.read(rec.inputs.at("sann"))));
    const auto vae = discovery::vae_from_tensor_file(decode_tensor_file(store_.read(rec.inputs.at("vae"))));
    const auto inv = discovery::inventory_from_json(Json::parse(store_.read(rec.inputs.at("inventory"))));
    discovery::TargetOptions t;
    t.threshold = cfg_.threshold;
    t.cap = cfg_.target_cap;
    t.bounds = cfg_.bounds;
    auto result = infer_assignments(subs, sann, vae, inv, t, opt_.parallelism);
    rec.log = std::move(result.log);
    std::vector<Json> lines;
    for (const auto& a : result.assignments) lines.push_back(discovery::to_json(a));
    rec.outputs["assignments"] = store_.put(to_jsonl(lines), ".jsonl");
  }

  genkit::ChatBackend& backend() {
    if (opt_.backend) return *opt_.backend;
    if (!owned_) {
      if (opt_.replay)
        owned_ = std::make_unique<genkit::ReplayChatBackend>(transcript_dir(cfg_), cfg_.llm.model);
      else {
        genkit::resolve_api_key(cfg_.llm);
        owned_ = std::make_unique<genkit::HttpChatBackend>(cfg_.llm);
      }
    }
    return *owned_;
  }

  genkit::TranscriptStore* transcripts() {
    if (opt_.replay) return nullptr;
    if (!transcripts_) transcripts_ = std::make_unique<genkit::TranscriptStore>(transcript_dir(cfg_));
    return transcripts_.get();
  }

  std::size_t llm_parallelism() const { return std::max<std::size_t>(1, std::min(opt_.parallelism, cfg_.llm.parallelism)); }

  void enrich(StageRecord& rec) {
    const auto corpus = load_corpus_of(cfg_);
    const auto subs = read_submissions(rec.inputs.at("submissions"));
    const auto assignments = read_assignments(rec.inputs.at("assignments"));
    auto inv = discovery::inventory_from_json(Json::parse(store_.read(rec.inputs.at("inventory"))));
    const auto templates = genkit::load_templates(templates_of(cfg_));
    const LlmStageContext ctx{backend(), templates, transcripts(), llm_parallelism()};
    auto result = enrich_kcs(corpus, subs, assignments, ctx);
    rec.log = std::move(result.log);
    Json labels = Json::array();
    for (const auto& l : result.labels) {
      labels.push_back(genkit::to_json(l));
      inv.kc_meta[l.kc_id] = discovery::KcMeta{l.label, l.description};
    }
    rec.outputs["labels"] = store_.put(canonical_dump(labels) + "\n", ".json");
    rec.outputs["inventory"] = store_.put(canonical_dump(discovery::to_json(inv)) + "\n", ".json");
  }

  void generate(StageRecord& rec) {
    const auto corpus = load_corpus_of(cfg_);
    const auto subs = read_submissions(rec.inputs.at("submissions"));
    const auto assignments = read_assignments(rec.inputs.at("assignments"));
    std::vector<genkit::KcLabel> labels;
    for (const auto& l : Json::parse(store_.read(rec.inputs.at("labels")))) labels.push_back(genkit::kc_label_from_json(l));
    const auto templates = genkit::load_templates(templates_of(cfg_));
    const LlmStageContext ctx{backend(), templates, transcripts(), llm_parallelism()};
    const std::vector<genkit::Variant> variants{genkit::Variant::Baseline, genkit::Variant::KcConditioned};
    auto result = generate_examples(corpus, subs, assignments, labels, variants, ctx);
    rec.log = std::move(result.log);
    std::vector<Json> lines;
    for (const auto& g : result.examples) lines.push_back(to_json(g));
    rec.outputs["worked_examples"] = store_.put(to_jsonl(lines), ".jsonl");
  }

  void evaluate(StageRecord& rec) {
    const auto ratings = eval::load_ratings(cfg_.ratings_path);
    const auto pairs = eval::build_pairs(ratings, eval::load_pairs(cfg_.pairs_path));
    const auto summary = eval::summarize(pairs, ratings, cfg_.wilcoxon);
    rec.outputs["summary"] = store_.put(eval::to_json(summary).dump(2) + "\n", ".json");
    rec.outputs["summary_text"] = store_.put(eval::to_text(summary), ".txt");
  }

  const PipelineConfig& cfg_;
  const RunOptions& opt_;
  RunManifest& m_;
  ObjectStore store_;
  std::unique_ptr<genkit::ChatBackend> owned_;
  std::unique_ptr<genkit::TranscriptStore> transcripts_;
};

}  // namespace

RunManifest run_pipeline(const PipelineConfig& config, std::span<const Stage> stages, const RunOptions& opt) {
  validate(config);
  const std::set<Stage> wanted(stages.begin(), stages.end());
  const std::string id = run_id(config);
  const auto path = manifest_path(config.output_root, id);
  RunManifest m = load_manifest(path).value_or(RunManifest{id, to_json(config), {}});
  Runner runner(config, opt, m);
  auto say = [&](const std::string& s) {
    if (opt.progress) opt.progress(s);
  };

  for (const auto stage : kAllStages) {
    if (!wanted.count(stage)) continue;
    const std::string name(to_string(stage));
    const auto in = runner.inputs(stage);
    if (!opt.force && runner.current(stage, in)) {
      say(name + ": up to date");
      continue;
    }
    say(name + ": running");
    const auto t0 = std::chrono::steady_clock::now();
    const auto started = format_timestamp(Timestamp{std::chrono::duration_cast<std::chrono::milliseconds>(
                                                        std::chrono::system_clock::now().time_since_epoch())
                                                        .count()});
    try {
      StageRecord rec = runner.run(stage, in);
      rec.started_at = started;
      rec.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      m.stages[name] = std::move(rec);
      save_manifest(path, m);
      say(name + ": done, " + std::to_string(m.stages[name].log.size()) + " logged item(s)");
    } catch (const std::exception& e) {
      StageRecord failed;
      failed.status = "failed";
      failed.seed = stage_seed(config, stage);
      failed.inputs = in;
      failed.started_at = started;
      failed.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      failed.log.push_back(Json{{"error", e.what()}});
      m.stages[name] = std::move(failed);
      save_manifest(path, m);
      throw;
    }
  }
  return m;
}

DiscoveredModels load_discovered(const PipelineConfig& config) {
  const std::string id = run_id(config);
  const auto m = load_manifest(manifest_path(config.output_root, id));
  if (!m || !m->stages.count("discover") || m->stages.at("discover").status != "complete")
    throw UsageError("run " + id + " has no discover output; run `kc discover` first");
  const ObjectStore store(config.output_root);
  const auto& out = m->stages.at("discover").outputs;
  DiscoveredModels d;
  d.sann = sann::from_tensor_file(decode_tensor_file(store.read(out.at("sann"))));
  d.vae = discovery::vae_from_tensor_file(decode_tensor_file(store.read(out.at("vae"))));
  d.inventory = discovery::inventory_from_json(Json::parse(store.read(out.at("inventory"))));
  return d;
}

}  // namespace kc::pipeline
