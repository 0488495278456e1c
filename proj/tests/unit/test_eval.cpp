#include <cmath>
#include <map>
#include <numeric>

#include "doctest.h"
#include "kc/common/error.hpp"
#include "kc/common/rng.hpp"
#include "kc/eval/rubric.hpp"
#include "kc/eval/stats.hpp"

using namespace kc;
using namespace kc::eval;

namespace {

const std::filesystem::path kEvalDir = std::filesystem::path(KC_FIXTURE_DIR) / "eval";

double kappa_direct(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  double po = 0;
  for (std::size_t i = 0; i < a.size(); ++i) po += a[i] == b[i] ? 1 : 0;
  po /= n;
  double pe = 0;
  for (int c = 0; c <= 2; ++c) {
    double ca = 0, cb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ca += a[i] == c;
      cb += b[i] == c;
    }
    pe += (ca / n) * (cb / n);
  }
  return pe == 1.0 ? 1.0 : (po - pe) / (1 - pe);
}

// Two-sided p by visiting every sign assignment of the non-zero |d| ranks.
double enumerated_p(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  if (d.empty()) return 1.0;
  std::vector<double> mag;
  for (double v : d) mag.push_back(std::abs(v));
  std::vector<double> rank(mag.size());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    double below = 0, equal = 0;
    for (double m : mag) {
      below += m < mag[i];
      equal += m == mag[i];
    }
    rank[i] = below + (equal + 1) / 2;
  }
  const double total = std::accumulate(rank.begin(), rank.end(), 0.0);
  double wp = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0) wp += rank[i];
  const double w = std::min(wp, total - wp);
  const std::size_t n = d.size();
  double extreme = 0;
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s += rank[i];
    if (std::min(s, total - s) <= w + 1e-9) extreme += 1;
  }
  return std::min(1.0, extreme / std::ldexp(1.0, static_cast<int>(n)));
}

std::vector<double> to_doubles(const Json& j) { return j.get<std::vector<double>>(); }

}  // namespace

TEST_CASE("cohen_kappa worked cases") {
  const std::vector<int> a{0, 1, 2, 1, 0, 2};
  CHECK(cohen_kappa(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cohen_kappa(std::vector<int>{0, 0, 1, 1}, std::vector<int>{1, 1, 0, 0}) == doctest::Approx(-1.0).epsilon(1e-15));
  const std::vector<int> x{2, 2, 1, 2, 0, 1, 2, 2, 1, 2};
  const std::vector<int> y{2, 2, 1, 2, 1, 1, 2, 2, 1, 2};
  // p_o = 0.9, p_e = 0.6*0.6 + 0.3*0.4 = 0.48
  CHECK(std::abs(cohen_kappa(x, y) - (0.9 - 0.48) / (1 - 0.48)) < 1e-12);
  CHECK(cohen_kappa(std::vector<int>{2, 2, 2}, std::vector<int>{2, 2, 2}) == 1.0);
  CHECK_THROWS_AS(cohen_kappa(std::vector<int>{1}, std::vector<int>{1, 2}), DataError);
  CHECK_THROWS_AS(cohen_kappa(std::vector<int>{}, std::vector<int>{}), DataError);
}

TEST_CASE("cohen_kappa matches the direct formula and is symmetric") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.uniform_index(40);
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.uniform_index(3));
      b[i] = rng.uniform01() < 0.6 ? a[i] : static_cast<int>(rng.uniform_index(3));
    }
    const double k = cohen_kappa(a, b);
    CHECK(std::abs(k - kappa_direct(a, b)) < 1e-12);
    CHECK(k == cohen_kappa(b, a));
    CHECK(k <= 1.0 + 1e-12);
    CHECK(k >= -1.0 - 1e-12);
  }
}

TEST_CASE("wilcoxon: zero differences and the all-minus-one case") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  const auto same = wilcoxon_signed_rank(x, x);
  CHECK(same.p_value == 1.0);
  CHECK(same.n_effective == 0);
  const std::vector<double> y{2, 3, 4, 5, 6, 7};
  const auto r = wilcoxon_signed_rank(x, y, WilcoxonMode::Exact);
  CHECK(r.p_value == 2.0 / 64.0);
  CHECK(r.statistic == 0.0);
  CHECK(r.n_effective == 6);
  CHECK(r.exact);
  CHECK_THROWS_AS(wilcoxon_signed_rank(x, std::vector<double>{1}), DataError);
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{}, std::vector<double>{}), DataError);
  std::vector<double> big(21), zero(21, 0.0);
  std::iota(big.begin(), big.end(), 1.0);
  CHECK_THROWS_AS(wilcoxon_signed_rank(big, zero, WilcoxonMode::Exact), UsageError);
  CHECK_FALSE(wilcoxon_signed_rank(big, zero, WilcoxonMode::Auto).exact);
}

TEST_CASE("exact wilcoxon equals sign enumeration on 100 random fixtures") {
  Rng rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.uniform_index(12);
    std::vector<double> x(n), y(n);
    const bool discrete = trial % 2 == 0;  // rubric-like scores give ties and zeros
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = discrete ? static_cast<double>(rng.uniform_index(3)) : rng.normal();
      y[i] = discrete ? static_cast<double>(rng.uniform_index(3)) : rng.normal(0.3, 1.0);
    }
    const auto r = wilcoxon_signed_rank(x, y, WilcoxonMode::Exact);
    worst = std::max(worst, std::abs(r.p_value - enumerated_p(x, y)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("approximate wilcoxon tracks the exact value at n = 12") {
  Rng rng(7);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(12), y(12);
    for (std::size_t i = 0; i < 12; ++i) {
      x[i] = rng.normal();
      y[i] = rng.normal(0.4, 1.0);
    }
    const auto e = wilcoxon_signed_rank(x, y, WilcoxonMode::Exact);
    const auto a = wilcoxon_signed_rank(x, y, WilcoxonMode::Approx);
    CHECK(e.statistic == a.statistic);
    worst = std::max(worst, std::abs(e.p_value - a.p_value));
  }
  CHECK(worst <= 0.02);
}

TEST_CASE("approximate wilcoxon matches scipy on tied rubric-style data") {
  const auto cases = Json::parse(read_file(kEvalDir / "wilcoxon_scipy.json"));
  REQUIRE(cases.size() >= 20);
  for (const auto& c : cases) {
    const auto r = wilcoxon_signed_rank(to_doubles(c["x"]), to_doubles(c["y"]), WilcoxonMode::Approx);
    CHECK(r.statistic == doctest::Approx(c["statistic"].get<double>()));
    CHECK(std::abs(r.p_value - c["p_value"].get<double>()) < 1e-9);
  }
}

TEST_CASE("wilcoxon p is invariant to pair order and to swapping x and y") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = 2 + rng.uniform_index(11);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.uniform_index(3));
      y[i] = static_cast<double>(rng.uniform_index(3));
    }
    const auto base = wilcoxon_signed_rank(x, y, WilcoxonMode::Exact);
    CHECK(wilcoxon_signed_rank(y, x, WilcoxonMode::Exact).p_value == base.p_value);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
    std::vector<double> px(n), py(n);
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = x[perm[i]];
      py[i] = y[perm[i]];
    }
    CHECK(wilcoxon_signed_rank(px, py, WilcoxonMode::Exact).p_value == base.p_value);
  }
}

TEST_CASE("mid_ranks share ranks across ties") {
  CHECK(mid_ranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("holm_correct worked cases") {
  const auto adj = holm_correct(std::vector<double>{0.01, 0.04, 0.03});
  REQUIRE(adj.size() == 3);
  CHECK(adj[0] == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(adj[1] == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(adj[2] == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(holm_correct(std::vector<double>{0.2}) == std::vector<double>{0.2});
  CHECK(holm_correct(std::vector<double>{1.0, 1.0}) == std::vector<double>{1.0, 1.0});
  CHECK(holm_correct(std::vector<double>{}).empty());
  CHECK_THROWS_AS(holm_correct(std::vector<double>{0.5, 1.2}), DataError);
  CHECK_THROWS_AS(holm_correct(std::vector<double>{-0.1}), DataError);
  CHECK_THROWS_AS(holm_correct(std::vector<double>{std::nan("")}), DataError);
}

TEST_CASE("holm_correct properties") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = 1 + rng.uniform_index(8);
    std::vector<double> p(m);
    for (auto& v : p) v = rng.uniform01() * (trial % 3 == 0 ? 0.05 : 1.0);
    const auto adj = holm_correct(p);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(adj[i] >= p[i]);
      CHECK(adj[i] <= 1.0);
    }
    for (std::size_t k = 1; k < m; ++k) CHECK(adj[order[k]] >= adj[order[k - 1]]);
  }
}

TEST_CASE("ratings validation") {
  Json good{{"example_id", "e"}, {"rater_id", "r"}, {"variant", "baseline"},
            {"items", {{"formatting", 2}, {"clear_explanations", 1}, {"correctness", 2}, {"step_structure", 0}, {"relevance", 1}}}};
  CHECK_NOTHROW(rubric_score_from_json(good));
  auto bad = good;
  bad["items"]["formatting"] = 3;
  CHECK_THROWS_AS(rubric_score_from_json(bad), DataError);
  bad = good;
  bad["kc_coverage"] = 2;
  CHECK_THROWS_AS(rubric_score_from_json(bad), DataError);
  bad = good;
  bad["variant"] = "kc_conditioned";
  CHECK_THROWS_AS(rubric_score_from_json(bad), DataError);
  bad["kc_coverage"] = 1;
  CHECK_NOTHROW(rubric_score_from_json(bad));
  bad = good;
  bad["items"].erase("relevance");
  CHECK_THROWS_AS(rubric_score_from_json(bad), DataError);
  bad = good;
  bad["preference"] = "maybe";
  CHECK_THROWS_AS(rubric_score_from_json(bad), DataError);
  CHECK(canonical_dump(to_json(rubric_score_from_json(good))) == canonical_dump(good));
}

TEST_CASE("summarize reproduces the golden table for the bundled ratings") {
  const auto ratings = load_ratings(kEvalDir / "ratings.jsonl");
  const auto specs = load_pairs(kEvalDir / "pairs.jsonl");
  const auto pairs = build_pairs(ratings, specs);
  const auto s = summarize(pairs, ratings);
  CHECK(to_text(s) == read_file(kEvalDir / "summary_golden.txt"));

  const auto got = to_json(s);
  const auto want = Json::parse(read_file(kEvalDir / "summary_golden.json"));
  CHECK(got["pairs"] == want["pairs"]);
  CHECK(got["preferences"] == want["preferences"]);
  CHECK(got["kc_coverage_n"] == want["kc_coverage_n"]);
  CHECK(std::abs(got["kc_coverage_mean"].get<double>() - want["kc_coverage_mean"].get<double>()) < 1e-12);
  REQUIRE(got["items"].size() == want["items"].size());
  for (std::size_t i = 0; i < got["items"].size(); ++i) {
    const auto& g = got["items"][i];
    const auto& w = want["items"][i];
    CHECK(g["item"] == w["item"]);
    CHECK(g["n_effective"] == w["n_effective"]);
    for (const char* key : {"baseline_mean", "kc_conditioned_mean", "wilcoxon_statistic", "p_value", "p_holm"})
      CHECK(std::abs(g[key].get<double>() - w[key].get<double>()) < 1e-12);
  }
  CHECK(got["agreement"]["examples"] == want["agreement"]["examples"]);
  CHECK(std::abs(got["agreement"]["pooled_kappa"].get<double>() - want["agreement"]["pooled_kappa"].get<double>()) < 1e-12);
  for (const auto& [item, k] : want["agreement"]["item_kappa"].items())
    CHECK(std::abs(got["agreement"]["item_kappa"][item].get<double>() - k.get<double>()) < 1e-12);
}

TEST_CASE("summary table has five item rows, a preference row and a KC coverage row") {
  const auto ratings = load_ratings(kEvalDir / "ratings.jsonl");
  const auto s = summarize(build_pairs(ratings, load_pairs(kEvalDir / "pairs.jsonl")), ratings);
  const auto text = to_text(s);
  std::vector<std::string> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    rows.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  REQUIRE(rows.size() >= 8);
  for (std::size_t i = 0; i < kRubricItems.size(); ++i)
    CHECK(rows[1 + i].rfind(std::string(item_title(kRubricItems[i])), 0) == 0);
  CHECK(rows[6].rfind("Preference", 0) == 0);
  CHECK(rows[7].rfind("KC coverage", 0) == 0);
}

TEST_CASE("summarize on identical variants gives equal means and p = 1") {
  std::vector<RubricScore> scores;
  std::vector<PairSpec> specs;
  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    RubricScore b;
    b.example_id = "b" + std::to_string(i);
    b.rater_id = "r";
    b.variant = "baseline";
    for (auto item : kRubricItems) b.items[std::string(item)] = static_cast<int>(rng.uniform_index(3));
    RubricScore k = b;
    k.example_id = "k" + std::to_string(i);
    k.variant = "kc_conditioned";
    k.kc_coverage = 2;
    k.preference = Preference::None;
    scores.push_back(b);
    scores.push_back(k);
    specs.push_back({"s" + std::to_string(i), b.example_id, k.example_id, "r"});
  }
  const auto s = summarize(build_pairs(scores, specs));
  for (const auto& row : s.items) {
    CHECK(row.baseline_mean == row.kc_mean);
    CHECK(row.test.p_value == 1.0);
    CHECK(row.p_holm == 1.0);
  }
  CHECK(s.preferences.at("none") == 10);
  CHECK(*s.kc_coverage_mean == 2.0);
  CHECK_FALSE(s.agreement.pooled_kappa.has_value());
  CHECK_THROWS_AS(summarize(std::vector<PairedRatings>{}), DataError);
}

TEST_CASE("build_pairs errors") {
  const auto ratings = load_ratings(kEvalDir / "ratings.jsonl");
  CHECK_THROWS_AS(build_pairs(ratings, std::vector<PairSpec>{{"x", "sub01-base", "sub01-kc", "r9"}}), DataError);
  CHECK_THROWS_AS(build_pairs(ratings, std::vector<PairSpec>{{"x", "sub01-kc", "sub01-base", "r1"}}), DataError);
}
