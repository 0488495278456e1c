#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kc::eval {

// Chance-corrected agreement between two raters over the same items.
// Returns 1.0 when both raters use a single, identical category. DataError
// on empty input or a length mismatch.
double cohen_kappa(std::span<const int> a, std::span<const int> b);

enum class WilcoxonMode { Exact, Approx, Auto };

inline constexpr std::size_t kExactWilcoxonLimit = 20;

struct WilcoxonResult {
  double statistic = 0;  // min(W+, W-)
  double p_value = 1;    // two-sided
  std::size_t n_effective = 0;
  bool exact = false;
};

// Paired signed-rank test on d = x - y. Zero differences are dropped and
// tied |d| share mid-ranks. Exact mode counts sign assignments (allowed for
// n_effective <= 20, UsageError above); approx uses the normal
// approximation with tie-corrected variance and a 0.5 continuity
// correction; auto picks exact up to 20. All-zero differences give p = 1.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    WilcoxonMode mode = WilcoxonMode::Auto);

// Holm step-down adjustment, returned in input order. DataError for values
// outside [0, 1].
std::vector<double> holm_correct(std::span<const double> p);

// Mid-ranks (1-based) of the values, ties sharing the mean rank.
std::vector<double> mid_ranks(std::span<const double> values);

}  // namespace kc::eval
