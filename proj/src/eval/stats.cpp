#include "kc/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "kc/common/error.hpp"

namespace kc::eval {

double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw DataError("cohen_kappa: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " ratings");
  if (a.empty()) throw DataError("cohen_kappa: no ratings");
  const double n = static_cast<double>(a.size());
  std::map<int, double> ma;
  std::map<int, double> mb;
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma[a[i]] += 1;
    mb[b[i]] += 1;
    agree += a[i] == b[i];
  }
  const double p_o = agree / n;
  double p_e = 0;
  for (const auto& [cat, count] : ma)
    if (const auto it = mb.find(cat); it != mb.end()) p_e += (count / n) * (it->second / n);
  if (p_e == 1.0) return 1.0;  // one shared category: p_o is 1 as well
  return (p_o - p_e) / (1.0 - p_e);
}

std::vector<double> mid_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Mid-ranks are multiples of 1/2, so doubled ranks are integers and the
// number of sign assignments reaching each W+ can be counted exactly.
double exact_p(const std::vector<double>& ranks, double w) {
  std::vector<int> doubled;
  int total = 0;
  for (double r : ranks) {
    doubled.push_back(static_cast<int>(std::lround(2 * r)));
    total += doubled.back();
  }
  std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
  ways[0] = 1;
  int reach = 0;
  for (int r : doubled) {
    reach += r;
    for (int s = reach; s >= r; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - r)];
  }
  const long w2 = std::lround(2 * w);
  double tail = 0;
  for (long s = 0; s <= w2; ++s) tail += ways[static_cast<std::size_t>(s)];
  const double p = 2.0 * tail / std::ldexp(1.0, static_cast<int>(ranks.size()));
  return std::min(1.0, p);
}

double approx_p(const std::vector<double>& ranks, std::span<const double> abs_d, double w) {
  const double n = static_cast<double>(ranks.size());
  const double mean = n * (n + 1) / 4.0;
  double var = n * (n + 1) * (2 * n + 1) / 24.0;
  std::map<double, double> ties;
  for (double a : abs_d) ties[a] += 1;
  for (const auto& [v, t] : ties) var -= (t * t * t - t) / 48.0;
  if (var <= 0) return 1.0;
  const double diff = w - mean;
  const double correction = diff > 0 ? 0.5 : (diff < 0 ? -0.5 : 0.0);
  const double z = (diff - correction) / std::sqrt(var);
  return std::min(1.0, 2.0 * normal_sf(std::abs(z)));
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, WilcoxonMode mode) {
  if (x.size() != y.size())
    throw DataError("wilcoxon: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + " observations");
  if (x.empty()) throw DataError("wilcoxon: no observations");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i] - y[i];
    if (!std::isfinite(v)) throw DataError("wilcoxon: non-finite observation");
    if (v != 0.0) d.push_back(v);
  }
  WilcoxonResult r;
  r.n_effective = d.size();
  const bool exact = mode == WilcoxonMode::Exact || (mode == WilcoxonMode::Auto && d.size() <= kExactWilcoxonLimit);
  if (mode == WilcoxonMode::Exact && d.size() > kExactWilcoxonLimit)
    throw UsageError("exact Wilcoxon is limited to " + std::to_string(kExactWilcoxonLimit) + " non-zero differences");
  r.exact = exact;
  if (d.empty()) return r;

  std::vector<double> abs_d;
  for (double v : d) abs_d.push_back(std::abs(v));
  const auto ranks = mid_ranks(abs_d);
  double w_plus = 0;
  double w_minus = 0;
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? w_plus : w_minus) += ranks[i];
  r.statistic = std::min(w_plus, w_minus);
  r.p_value = exact ? exact_p(ranks, r.statistic) : approx_p(ranks, abs_d, r.statistic);
  return r;
}

std::vector<double> holm_correct(std::span<const double> p) {
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("holm_correct: p-value " + std::to_string(v) + " outside [0, 1]");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
  std::vector<double> out(m);
  double running = 0;
  for (std::size_t k = 0; k < m; ++k) {
    running = std::max(running, std::min(1.0, static_cast<double>(m - k) * p[order[k]]));
    out[order[k]] = running;
  }
  return out;
}

}  // namespace kc::eval
