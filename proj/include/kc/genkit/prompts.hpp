#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "kc/corpus/corpus.hpp"
#include "kc/genkit/types.hpp"

namespace kc::genkit {

// Replaces every `{{name}}` in `tmpl` with values.at(name). Values are
// inserted verbatim and never rescanned, so student code containing braces
// is safe. A placeholder without a value throws ConfigError naming it.
std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values);

// Placeholder names referenced by a template, in order of first use.
std::vector<std::string> placeholders_in(std::string_view tmpl);

struct PromptTemplates {
  std::string worked_example_system;
  std::string worked_example_user;
  std::string kc_block;
  std::string kc_item;
  std::string enrichment_system;
  std::string enrichment_user;
  std::string format_reminder;
};

inline constexpr std::array<std::string_view, 7> kTemplateFiles{
    "worked_example_system.txt", "worked_example_user.txt", "kc_block.txt",       "kc_item.txt",
    "enrichment_system.txt",     "enrichment_user.txt",     "format_reminder.txt"};

// Reads the seven template files from `dir`. A missing file is a
// ConfigError.
PromptTemplates load_templates(const std::filesystem::path& dir);

// Directory holding the templates that ship with the source tree.
std::filesystem::path default_template_dir();

inline constexpr std::string_view kKcSectionBegin = "=== KC TARGETS ===";
inline constexpr std::string_view kKcSectionEnd = "=== END KC TARGETS ===";

PromptBundle build_enrichment_prompt(const PromptTemplates& t, const corpus::Problem& problem,
                                     const corpus::Submission& submission, std::string_view snippet,
                                     std::size_t kc_id);

// Baseline requires no targets and kc_conditioned at least one; a mismatch
// is a UsageError.
PromptBundle build_worked_example_prompt(const PromptTemplates& t, const corpus::Problem& problem,
                                         const corpus::Submission& submission, Variant variant,
                                         std::span<const KcLabel> targets);

// The rendered KC section for a set of targets (empty for no targets).
std::string render_kc_section(const PromptTemplates& t, std::span<const KcLabel> targets);

// Appends the format reminder, naming the parse error, to the user text.
PromptBundle with_format_reminder(const PromptTemplates& t, PromptBundle bundle, std::string_view error);

}  // namespace kc::genkit
