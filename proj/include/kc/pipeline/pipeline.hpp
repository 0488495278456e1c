#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kc/discovery/inventory.hpp"
#include "kc/discovery/vae.hpp"
#include "kc/genkit/llm.hpp"
#include "kc/pipeline/config.hpp"
#include "kc/pipeline/manifest.hpp"
#include "kc/sann/sann.hpp"

namespace kc::pipeline {

enum class Stage { Sample, Discover, Infer, Enrich, Generate, Evaluate };

inline constexpr std::array<Stage, 6> kAllStages{Stage::Sample, Stage::Discover, Stage::Infer,
                                                 Stage::Enrich, Stage::Generate, Stage::Evaluate};

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);  // UsageError on an unknown name
// Comma-separated stage names, or "all".
std::vector<Stage> parse_stages(std::string_view csv);

struct RunOptions {
  std::size_t parallelism = 4;
  bool replay = false;  // answer LLM requests from stored transcripts only
  bool force = false;   // rerun stages even when their outputs are current
  genkit::ChatBackend* backend = nullptr;  // overrides the configured endpoint
  std::function<void(const std::string&)> progress;
};

// Runs the requested stages in canonical order under
// <output_root>/runs/<run_id>/. A stage whose recorded inputs are unchanged
// and whose outputs still verify is skipped. The manifest is rewritten
// atomically after every stage, including a failed one, before the error
// propagates. A stage whose upstream artifact is absent raises UsageError
// naming the stage to run first.
RunManifest run_pipeline(const PipelineConfig& config, std::span<const Stage> stages, const RunOptions& opt = {});

struct DiscoveredModels {
  sann::SannModel sann;
  discovery::VaeModel vae;
  discovery::KcInventory inventory;
};

// Models from the discover stage of the config's run.
DiscoveredModels load_discovered(const PipelineConfig& config);

std::filesystem::path transcript_dir(const PipelineConfig& config);

}  // namespace kc::pipeline
