#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kc/ast/subtrees.hpp"
#include "kc/common/io.hpp"
#include "kc/discovery/vae.hpp"
#include "kc/eval/stats.hpp"
#include "kc/genkit/llm.hpp"
#include "kc/sann/sann.hpp"

namespace kc::pipeline {

struct PipelineConfig {
  std::uint64_t seed = 20190301;
  std::filesystem::path corpus_path;
  std::filesystem::path problems_path;  // empty: problems.jsonl beside the corpus
  std::vector<std::string> sample_problems{"repeatEnd", "fix45"};
  std::size_t sample_n = 50;
  ast::SubtreeBounds bounds{};
  sann::Hyperparams sann{};
  discovery::VaeHyperparams vae{};
  std::size_t k = 50;
  double threshold = 0.5;
  std::size_t target_cap = 5;
  std::size_t kmeans_max_iters = 300;
  std::filesystem::path template_dir;  // empty: the templates shipped with kc
  genkit::LlmConfig llm{};
  std::filesystem::path output_root = "kc-runs";
  std::filesystem::path ratings_path;
  std::filesystem::path pairs_path;
  eval::WilcoxonMode wilcoxon = eval::WilcoxonMode::Auto;
};

// Everything that can change an artifact. Execution knobs (parallelism,
// replay) and the API key are not part of it.
Json to_json(const PipelineConfig& c);

// Keys absent from `j` keep their defaults; unknown keys are a ConfigError.
// Relative paths are resolved against `base_dir`.
PipelineConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {});

// TOML-style config file; relative paths resolve against its directory.
PipelineConfig load_config(const std::filesystem::path& path);

// ConfigError on out-of-range values.
void validate(const PipelineConfig& c);

// First 16 hex digits of sha256 over the canonical config snapshot.
std::string run_id(const PipelineConfig& c);

}  // namespace kc::pipeline
