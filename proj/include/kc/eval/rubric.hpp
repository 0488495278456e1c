#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kc/common/io.hpp"
#include "kc/eval/stats.hpp"

namespace kc::eval {

inline constexpr std::array<std::string_view, 5> kRubricItems{
    "formatting", "clear_explanations", "correctness", "step_structure", "relevance"};

std::string_view item_title(std::string_view item);

enum class Preference { Baseline, KcConditioned, None };
std::string_view to_string(Preference p);

struct RubricScore {
  std::string example_id;
  std::string rater_id;
  std::string variant;  // "baseline" or "kc_conditioned"
  std::map<std::string, int> items;
  std::optional<int> kc_coverage;
  std::optional<Preference> preference;
};

// DataError unless every rubric item is present with a score in {0, 1, 2}
// and kc_coverage is present exactly for kc_conditioned examples.
void validate(const RubricScore& s);
RubricScore rubric_score_from_json(const Json& j);
Json to_json(const RubricScore& s);

// One JSONL record per line; errors name the line.
std::vector<RubricScore> load_ratings(const std::filesystem::path& path);

// Which two examples form a pair and which rater's scores are compared.
struct PairSpec {
  std::string submission_id;
  std::string baseline_example;
  std::string kc_example;
  std::string rater_id;
};

std::vector<PairSpec> load_pairs(const std::filesystem::path& path);

struct PairedRatings {
  std::string submission_id;
  RubricScore baseline;
  RubricScore kc_conditioned;
  std::optional<Preference> preference;
};

// Looks up both sides of every pair under its rater. DataError when a side
// is missing, has the wrong variant, or the two sides record different
// preferences.
std::vector<PairedRatings> build_pairs(std::span<const RubricScore> scores, std::span<const PairSpec> specs);

struct ItemSummary {
  std::string item;
  double baseline_mean = 0;
  double kc_mean = 0;
  WilcoxonResult test;
  double p_holm = 1;
};

struct Agreement {
  std::size_t examples = 0;  // examples scored by at least two raters
  std::optional<double> pooled_kappa;
  std::map<std::string, double> item_kappa;
};

struct Summary {
  std::size_t pairs = 0;
  std::vector<ItemSummary> items;
  std::map<std::string, std::size_t> preferences;  // baseline, kc_conditioned, none, missing
  std::optional<double> kc_coverage_mean;
  std::size_t kc_coverage_n = 0;
  Agreement agreement;
};

// Agreement on the jointly coded subset: for every example scored by two or
// more raters, the two lexicographically first raters' item scores (and
// kc_coverage when both gave one) are pooled into one rating vector per
// rater.
Agreement inter_rater_agreement(std::span<const RubricScore> scores);

// Per-item means, Wilcoxon p (baseline vs kc_conditioned) and Holm-adjusted
// p over the five items, preference tallies and mean kc_coverage.
// DataError when there are no pairs.
Summary summarize(std::span<const PairedRatings> pairs, std::span<const RubricScore> all_scores = {},
                  WilcoxonMode mode = WilcoxonMode::Auto);

Json to_json(const Summary& s);
// Fixed-width table: five item rows, a preference row and a KC coverage
// row, then the agreement line.
std::string to_text(const Summary& s);

}  // namespace kc::eval
