#include "kc/pipeline/stages.hpp"

#include <algorithm>
#include <exception>

#include "kc/common/error.hpp"
#include "kc/common/parallel.hpp"
#include "kc/common/rng.hpp"
#include "kc/genkit/prompts.hpp"
#include "kc/genkit/response.hpp"

namespace kc::pipeline {

namespace {

Json failure(const std::string& item, const std::string& error) { return Json{{"item", item}, {"error", error}}; }

// Runs fn(i) for every item, keeping DataError and UpstreamError per item.
// Configuration and usage errors abort the batch. When every item failed the
// first failure is rethrown, so a dead endpoint still fails the stage.
template <typename Fn>
std::vector<std::exception_ptr> per_item(std::size_t n, std::size_t bound, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  parallel_for(n, bound, [&](std::size_t i) {
    try {
      fn(i);
    } catch (const DataError&) {
      errors[i] = std::current_exception();
    } catch (const UpstreamError&) {
      errors[i] = std::current_exception();
    }
  });
  const auto failed = static_cast<std::size_t>(std::count_if(errors.begin(), errors.end(), [](auto& e) { return e != nullptr; }));
  if (n > 0 && failed == n) std::rethrow_exception(errors.front());
  return errors;
}

std::string message(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  }
}

std::map<std::string, const corpus::Submission*> by_id(std::span<const corpus::Submission> subs) {
  std::map<std::string, const corpus::Submission*> out;
  for (const auto& s : subs) out[s.submission_id] = &s;
  return out;
}

const corpus::Submission& find(const std::map<std::string, const corpus::Submission*>& index, const std::string& id) {
  const auto it = index.find(id);
  if (it == index.end()) throw DataError("assignment names unknown submission " + id);
  return *it->second;
}

}  // namespace

std::vector<corpus::Submission> sample_corpus(const corpus::Corpus& corpus, std::span<const std::string> problems,
                                              std::size_t n, std::uint64_t seed, std::vector<Json>* log) {
  std::vector<corpus::Submission> out;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    corpus.problem(problems[i]);
    const auto candidates = corpus::last_incorrect_attempts(corpus, problems[i]);
    auto picked = corpus::sample_submissions(candidates, n, derive_seed(seed, i));
    if (log && picked.size() < n)
      log->push_back(Json{{"item", problems[i]},
                          {"note", "only " + std::to_string(picked.size()) + " candidate submissions"}});
    out.insert(out.end(), picked.begin(), picked.end());
  }
  return out;
}

Json to_json(const ExtractedProgram& p) {
  Json subtrees = Json::array();
  for (const auto& s : p.subtrees) subtrees.push_back(ast::to_json(s));
  return Json{{"submission_id", p.submission_id}, {"is_correct", p.is_correct}, {"subtrees", subtrees}};
}

ExtractedProgram extracted_from_json(const Json& j) {
  ExtractedProgram p;
  try {
    p.submission_id = j.at("submission_id").get<std::string>();
    p.is_correct = j.value("is_correct", false);
    for (const auto& s : j.at("subtrees")) p.subtrees.push_back(ast::normalized_from_json(s));
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed subtree record: ") + e.what());
  }
  return p;
}

Extraction extract_corpus(std::span<const corpus::Submission> submissions, ast::SubtreeBounds bounds,
                          std::size_t parallelism) {
  std::vector<std::optional<ExtractedProgram>> slots(submissions.size());
  std::vector<std::string> errors(submissions.size());
  parallel_for(submissions.size(), parallelism, [&](std::size_t i) {
    const auto& s = submissions[i];
    try {
      auto subtrees = ast::normalized_subtrees(s.code, bounds);
      if (subtrees.empty())
        errors[i] = "no subtree within the node bounds";
      else
        slots[i] = ExtractedProgram{s.submission_id, s.is_correct, std::move(subtrees)};
    } catch (const DataError& e) {
      errors[i] = e.what();
    }
  });
  Extraction out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i])
      out.programs.push_back(std::move(*slots[i]));
    else
      out.log.push_back(failure(submissions[i].submission_id, errors[i]));
  }
  return out;
}

std::vector<sann::LabeledProgram> labeled_programs(std::span<const ExtractedProgram> programs) {
  std::vector<sann::LabeledProgram> out;
  out.reserve(programs.size());
  for (const auto& p : programs) out.push_back(sann::LabeledProgram{p.submission_id, p.subtrees, p.is_correct});
  return out;
}

InferResult infer_assignments(std::span<const corpus::Submission> submissions, const sann::SannModel& sann,
                              const discovery::VaeModel& vae, const discovery::KcInventory& inventory,
                              const discovery::TargetOptions& opt, std::size_t parallelism) {
  std::vector<discovery::KcAssignment> slots(submissions.size());
  const auto errors = per_item(submissions.size(), parallelism, [&](std::size_t i) {
    slots[i] = discovery::kc_targets(submissions[i], sann, vae, inventory, opt);
  });
  InferResult out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (errors[i])
      out.log.push_back(failure(submissions[i].submission_id, message(errors[i])));
    else
      out.assignments.push_back(std::move(slots[i]));
  }
  return out;
}

EnrichResult enrich_kcs(const corpus::Corpus& corpus, std::span<const corpus::Submission> submissions,
                        std::span<const discovery::KcAssignment> assignments, const LlmStageContext& ctx) {
  struct Source {
    const discovery::KcAssignment* assignment;
    const discovery::KcTarget* target;
  };
  std::map<std::size_t, Source> best;
  for (const auto& a : assignments)
    for (const auto& t : a.targets) {
      auto it = best.find(t.kc_id);
      if (it == best.end() || t.supporter.attention > it->second.target->supporter.attention)
        best[t.kc_id] = Source{&a, &t};
    }
  std::vector<std::pair<std::size_t, Source>> work(best.begin(), best.end());
  const auto index = by_id(submissions);

  std::vector<genkit::KcLabel> slots(work.size());
  const auto errors = per_item(work.size(), ctx.parallelism, [&](std::size_t i) {
    const auto& [kc_id, src] = work[i];
    const auto& sub = find(index, src.assignment->submission_id);
    const auto bundle =
        genkit::build_enrichment_prompt(ctx.templates, corpus.problem(sub.problem_id), sub, src.target->snippet, kc_id);
    auto label = genkit::complete_and_parse(ctx.backend, ctx.templates, bundle, ctx.transcripts,
                                            [](const std::string& text) { return genkit::parse_enrichment_response(text); });
    label.kc_id = kc_id;
    label.pattern = src.target->supporter.subtree.tokens;
    label.pattern_kind = src.target->supporter.subtree.kind;
    slots[i] = std::move(label);
  });
  EnrichResult out;
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (errors[i])
      out.log.push_back(Json{{"item", "kc " + std::to_string(work[i].first)},
                             {"submission_id", work[i].second.assignment->submission_id},
                             {"error", message(errors[i])}});
    else
      out.labels.push_back(std::move(slots[i]));
  }
  return out;
}

std::vector<genkit::KcLabel> conditioned_targets(const discovery::KcAssignment& assignment,
                                                 const std::map<std::size_t, genkit::KcLabel>& labels) {
  std::vector<genkit::KcLabel> out;
  for (const auto& t : assignment.targets) {
    const auto it = labels.find(t.kc_id);
    if (it == labels.end()) continue;
    genkit::KcLabel l = it->second;
    l.pattern = t.supporter.subtree.tokens;
    l.pattern_kind = t.supporter.subtree.kind;
    out.push_back(std::move(l));
  }
  return out;
}

Json to_json(const GeneratedExample& g) {
  Json j{{"example_id", g.example_id}, {"submission_id", g.submission_id}, {"example", genkit::to_json(g.example)}};
  if (g.coverage) j["coverage"] = genkit::to_json(*g.coverage);
  return j;
}

GeneratedExample generated_from_json(const Json& j) {
  GeneratedExample g;
  try {
    g.example_id = j.at("example_id").get<std::string>();
    g.submission_id = j.at("submission_id").get<std::string>();
    g.example = genkit::worked_example_from_json(j.at("example"));
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed worked-example record: ") + e.what());
  }
  if (j.contains("coverage")) {
    genkit::CoverageReport r;
    for (const auto& t : j["coverage"].at("targets"))
      r.targets.push_back(genkit::TargetCoverage{t.at("kc_id").get<std::size_t>(), t.at("in_code").get<bool>(),
                                                 t.at("in_text").get<bool>()});
    if (j["coverage"].contains("warning")) r.warning = j["coverage"]["warning"].get<std::string>();
    g.coverage = std::move(r);
  }
  return g;
}

GenerateResult generate_examples(const corpus::Corpus& corpus, std::span<const corpus::Submission> submissions,
                                 std::span<const discovery::KcAssignment> assignments,
                                 std::span<const genkit::KcLabel> labels, std::span<const genkit::Variant> variants,
                                 const LlmStageContext& ctx) {
  for (const auto v : variants)
    if (v == genkit::Variant::Enrichment) throw UsageError("generate produces baseline or kc_conditioned examples only");
  std::map<std::size_t, genkit::KcLabel> label_of;
  for (const auto& l : labels) label_of[l.kc_id] = l;
  const auto index = by_id(submissions);

  const std::size_t n = assignments.size() * variants.size();
  std::vector<GeneratedExample> slots(n);
  const auto errors = per_item(n, ctx.parallelism, [&](std::size_t i) {
    const auto& a = assignments[i / variants.size()];
    const auto variant = variants[i % variants.size()];
    const auto& sub = find(index, a.submission_id);
    std::vector<genkit::KcLabel> targets;
    if (variant == genkit::Variant::KcConditioned) {
      targets = conditioned_targets(a, label_of);
      if (targets.empty()) throw DataError("none of the submission's KC targets has an enriched label");
    }
    const auto bundle = genkit::build_worked_example_prompt(ctx.templates, corpus.problem(sub.problem_id), sub,
                                                            variant, targets);
    GeneratedExample g;
    g.submission_id = a.submission_id;
    g.example_id = a.submission_id + "/" + std::string(genkit::to_string(variant));
    g.example = genkit::complete_and_parse(
        ctx.backend, ctx.templates, bundle, ctx.transcripts,
        [&](const std::string& text) { return genkit::parse_worked_example(text, variant, targets); });
    if (variant == genkit::Variant::KcConditioned) g.coverage = genkit::kc_coverage_heuristic(g.example, targets);
    slots[i] = std::move(g);
  });
  GenerateResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i])
      out.log.push_back(Json{{"item", assignments[i / variants.size()].submission_id},
                             {"variant", genkit::to_string(variants[i % variants.size()])},
                             {"error", message(errors[i])}});
    else
      out.examples.push_back(std::move(slots[i]));
  }
  return out;
}

std::vector<genkit::Variant> parse_variants(std::string_view s) {
  if (s == "both") return {genkit::Variant::Baseline, genkit::Variant::KcConditioned};
  const auto v = genkit::variant_from_string(s);
  if (v == genkit::Variant::Enrichment) throw UsageError("--variant must be baseline, kc_conditioned or both");
  return {v};
}

}  // namespace kc::pipeline
