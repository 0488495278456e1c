#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kc/common/io.hpp"

namespace kc::genkit {

enum class Variant { Baseline, KcConditioned, Enrichment };

std::string_view to_string(Variant v);
// Accepts "baseline", "kc_conditioned" and "enrichment"; UsageError otherwise.
Variant variant_from_string(std::string_view s);

struct KcLabel {
  std::size_t kc_id = 0;
  std::string label;
  std::string description;
  // Normalized tokens and root kind of the subtree that triggered the KC.
  // Empty when the label did not come from an assignment.
  std::vector<std::string> pattern;
  std::string pattern_kind;
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  Variant variant = Variant::Baseline;
  std::map<std::string, std::string> substitutions;
};

struct WorkedStep {
  std::string explanation;
  std::string code;
  bool operator==(const WorkedStep&) const = default;
};

struct WorkedExample {
  std::string question;
  std::string overview;
  std::vector<WorkedStep> steps;
  Variant variant = Variant::Baseline;
  std::vector<KcLabel> kc_targets;
};

inline constexpr std::size_t kMinSteps = 3;
inline constexpr std::size_t kMaxSteps = 10;
inline constexpr std::size_t kMinLabelWords = 2;
inline constexpr std::size_t kMaxLabelWords = 6;
inline constexpr std::size_t kMaxDescriptionChars = 300;

Json to_json(const KcLabel& l);
KcLabel kc_label_from_json(const Json& j);
Json to_json(const PromptBundle& b);
Json to_json(const WorkedExample& w);
WorkedExample worked_example_from_json(const Json& j);

}  // namespace kc::genkit
