#include "kc/genkit/prompts.hpp"

#include <algorithm>
#include <cstdlib>

#include "kc/common/error.hpp"

#ifndef KC_TEMPLATE_DIR
#define KC_TEMPLATE_DIR "templates"
#endif

namespace kc::genkit {

namespace {

constexpr std::string_view kOpen = "{{";
constexpr std::string_view kClose = "}}";

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::map<std::string, std::string> context_values(const corpus::Problem& problem,
                                                  const corpus::Submission& submission) {
  return {{"problem_title", problem.title},
          {"problem_statement", problem.statement},
          {"student_code", strip_trailing_newlines(submission.code)}};
}

}  // namespace

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find(kOpen, pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find(kClose, open + kOpen.size());
    if (close == std::string_view::npos) throw ConfigError("template has an unterminated '{{'");
    const std::string name(tmpl.substr(open + kOpen.size(), close - open - kOpen.size()));
    const auto it = values.find(name);
    if (it == values.end()) throw ConfigError("unresolved template placeholder {{" + name + "}}");
    out.append(tmpl.substr(pos, open - pos));
    out.append(it->second);
    pos = close + kClose.size();
  }
  out.append(tmpl.substr(std::min(pos, tmpl.size())));
  return out;
}

std::vector<std::string> placeholders_in(std::string_view tmpl) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = tmpl.find(kOpen, pos)) != std::string_view::npos) {
    const auto close = tmpl.find(kClose, pos + kOpen.size());
    if (close == std::string_view::npos) break;
    std::string name(tmpl.substr(pos + kOpen.size(), close - pos - kOpen.size()));
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
    pos = close + kClose.size();
  }
  return names;
}

PromptTemplates load_templates(const std::filesystem::path& dir) {
  auto load = [&](const char* file) {
    const auto path = dir / file;
    if (!std::filesystem::exists(path)) throw ConfigError("missing template " + path.string());
    return read_file(path);
  };
  PromptTemplates t;
  t.worked_example_system = load("worked_example_system.txt");
  t.worked_example_user = load("worked_example_user.txt");
  t.kc_block = load("kc_block.txt");
  t.kc_item = strip_trailing_newlines(load("kc_item.txt"));
  t.enrichment_system = load("enrichment_system.txt");
  t.enrichment_user = load("enrichment_user.txt");
  t.format_reminder = load("format_reminder.txt");
  return t;
}

std::filesystem::path default_template_dir() {
  if (const char* env = std::getenv("KC_TEMPLATE_DIR"); env && *env) return env;
  return KC_TEMPLATE_DIR;
}

PromptBundle build_enrichment_prompt(const PromptTemplates& t, const corpus::Problem& problem,
                                     const corpus::Submission& submission, std::string_view snippet,
                                     std::size_t kc_id) {
  if (snippet.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw UsageError("enrichment prompt for KC " + std::to_string(kc_id) + " needs a non-empty snippet");
  auto values = context_values(problem, submission);
  values["snippet"] = strip_trailing_newlines(std::string(snippet));
  PromptBundle b;
  b.variant = Variant::Enrichment;
  b.system_text = substitute(t.enrichment_system, values);
  b.user_text = substitute(t.enrichment_user, values);
  b.substitutions = std::move(values);
  return b;
}

std::string render_kc_section(const PromptTemplates& t, std::span<const KcLabel> targets) {
  if (targets.empty()) return "";
  std::string list;
  for (const auto& k : targets) {
    if (!list.empty()) list += '\n';
    list += substitute(t.kc_item, {{"kc_label", k.label}, {"kc_description", k.description}});
  }
  return substitute(t.kc_block, {{"kc_list", list}});
}

PromptBundle build_worked_example_prompt(const PromptTemplates& t, const corpus::Problem& problem,
                                         const corpus::Submission& submission, Variant variant,
                                         std::span<const KcLabel> targets) {
  if (variant == Variant::Enrichment) throw UsageError("worked-example prompts are baseline or kc_conditioned");
  if (variant == Variant::Baseline && !targets.empty())
    throw UsageError("baseline prompt for " + submission.submission_id + " was given KC targets");
  if (variant == Variant::KcConditioned && targets.empty())
    throw UsageError("kc_conditioned prompt for " + submission.submission_id + " has no KC targets");
  auto values = context_values(problem, submission);
  values["kc_section"] = render_kc_section(t, targets);
  PromptBundle b;
  b.variant = variant;
  b.system_text = substitute(t.worked_example_system, values);
  b.user_text = substitute(t.worked_example_user, values);
  b.substitutions = std::move(values);
  return b;
}

PromptBundle with_format_reminder(const PromptTemplates& t, PromptBundle bundle, std::string_view error) {
  bundle.user_text += substitute(t.format_reminder, {{"format_error", std::string(error)}});
  return bundle;
}

}  // namespace kc::genkit
