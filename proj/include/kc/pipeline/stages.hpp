#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kc/ast/subtrees.hpp"
#include "kc/corpus/corpus.hpp"
#include "kc/discovery/inventory.hpp"
#include "kc/genkit/coverage.hpp"
#include "kc/genkit/llm.hpp"
#include "kc/sann/sann.hpp"

// Per-stage work, independent of run bookkeeping. Item-level failures are
// reported as log entries {"item", "error"} instead of aborting the batch.
namespace kc::pipeline {

// Last incorrect attempt per student, then a seeded sample of n, for each
// problem in turn. The seed for problem i is derive_seed(seed, i).
std::vector<corpus::Submission> sample_corpus(const corpus::Corpus& corpus, std::span<const std::string> problems,
                                              std::size_t n, std::uint64_t seed, std::vector<Json>* log = nullptr);

struct ExtractedProgram {
  std::string submission_id;
  bool is_correct = false;
  std::vector<ast::NormalizedSubtree> subtrees;
};

Json to_json(const ExtractedProgram& p);
ExtractedProgram extracted_from_json(const Json& j);

struct Extraction {
  std::vector<ExtractedProgram> programs;  // corpus order, parse failures dropped
  std::vector<Json> log;
};

// Programs that fail to parse or yield no subtree within the bounds are
// logged and dropped.
Extraction extract_corpus(std::span<const corpus::Submission> submissions, ast::SubtreeBounds bounds,
                          std::size_t parallelism);

std::vector<sann::LabeledProgram> labeled_programs(std::span<const ExtractedProgram> programs);

struct InferResult {
  std::vector<discovery::KcAssignment> assignments;  // input order
  std::vector<Json> log;
};

InferResult infer_assignments(std::span<const corpus::Submission> submissions, const sann::SannModel& sann,
                              const discovery::VaeModel& vae, const discovery::KcInventory& inventory,
                              const discovery::TargetOptions& opt, std::size_t parallelism);

struct LlmStageContext {
  genkit::ChatBackend& backend;
  const genkit::PromptTemplates& templates;
  genkit::TranscriptStore* transcripts = nullptr;
  std::size_t parallelism = 1;
};

struct EnrichResult {
  std::vector<genkit::KcLabel> labels;  // ascending kc_id
  std::vector<Json> log;
};

// One label per KC that occurs in the assignments, built from its
// highest-attention supporter (ties: earlier assignment). The label's
// pattern is that supporter's normalized subtree.
EnrichResult enrich_kcs(const corpus::Corpus& corpus, std::span<const corpus::Submission> submissions,
                        std::span<const discovery::KcAssignment> assignments, const LlmStageContext& ctx);

// The assignment's targets that have labels, as KC-conditioned targets
// whose pattern is this submission's own supporter.
std::vector<genkit::KcLabel> conditioned_targets(const discovery::KcAssignment& assignment,
                                                 const std::map<std::size_t, genkit::KcLabel>& labels);

struct GeneratedExample {
  std::string example_id;  // <submission_id>/<variant>
  std::string submission_id;
  genkit::WorkedExample example;
  std::optional<genkit::CoverageReport> coverage;  // KC-conditioned only
};

Json to_json(const GeneratedExample& g);
GeneratedExample generated_from_json(const Json& j);

struct GenerateResult {
  std::vector<GeneratedExample> examples;  // assignment order, variants in the order given
  std::vector<Json> log;
};

GenerateResult generate_examples(const corpus::Corpus& corpus, std::span<const corpus::Submission> submissions,
                                 std::span<const discovery::KcAssignment> assignments,
                                 std::span<const genkit::KcLabel> labels, std::span<const genkit::Variant> variants,
                                 const LlmStageContext& ctx);

// "both" -> baseline and kc_conditioned; otherwise a single variant.
std::vector<genkit::Variant> parse_variants(std::string_view s);

}  // namespace kc::pipeline
