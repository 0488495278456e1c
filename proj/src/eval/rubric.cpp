#include "kc/eval/rubric.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "kc/common/error.hpp"

namespace kc::eval {

namespace {

Preference preference_from_string(const std::string& s) {
  if (s == "baseline") return Preference::Baseline;
  if (s == "kc_conditioned") return Preference::KcConditioned;
  if (s == "none") return Preference::None;
  throw DataError("unknown preference '" + s + "'");
}

bool valid_score(int v) { return v >= 0 && v <= 2; }

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string pad_right(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() < w ? std::string(w - s.size(), ' ') + s : s;
}

}  // namespace

std::string_view item_title(std::string_view item) {
  if (item == "formatting") return "Formatting";
  if (item == "clear_explanations") return "Clear explanations";
  if (item == "correctness") return "Correctness";
  if (item == "step_structure") return "Step structure";
  if (item == "relevance") return "Relevance to the student";
  return item;
}

std::string_view to_string(Preference p) {
  switch (p) {
    case Preference::Baseline: return "baseline";
    case Preference::KcConditioned: return "kc_conditioned";
    case Preference::None: return "none";
  }
  return "none";
}

void validate(const RubricScore& s) {
  const std::string who = "rating of " + s.example_id + " by " + s.rater_id;
  if (s.variant != "baseline" && s.variant != "kc_conditioned")
    throw DataError(who + ": unknown variant '" + s.variant + "'");
  for (auto item : kRubricItems) {
    const auto it = s.items.find(std::string(item));
    if (it == s.items.end()) throw DataError(who + ": missing item " + std::string(item));
    if (!valid_score(it->second)) throw DataError(who + ": " + std::string(item) + " score outside {0,1,2}");
  }
  if (s.items.size() != kRubricItems.size()) throw DataError(who + ": unknown rubric item");
  const bool conditioned = s.variant == "kc_conditioned";
  if (s.kc_coverage.has_value() != conditioned)
    throw DataError(who + ": kc_coverage must be given exactly for kc_conditioned examples");
  if (s.kc_coverage && !valid_score(*s.kc_coverage)) throw DataError(who + ": kc_coverage outside {0,1,2}");
}

RubricScore rubric_score_from_json(const Json& j) {
  RubricScore s;
  try {
    s.example_id = j.at("example_id").get<std::string>();
    s.rater_id = j.at("rater_id").get<std::string>();
    s.variant = j.at("variant").get<std::string>();
    for (const auto& [k, v] : j.at("items").items()) s.items[k] = v.get<int>();
    if (j.contains("kc_coverage") && !j["kc_coverage"].is_null()) s.kc_coverage = j["kc_coverage"].get<int>();
    if (j.contains("preference") && !j["preference"].is_null())
      s.preference = preference_from_string(j["preference"].get<std::string>());
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed rating: ") + e.what());
  }
  validate(s);
  return s;
}

Json to_json(const RubricScore& s) {
  Json j{{"example_id", s.example_id}, {"rater_id", s.rater_id}, {"variant", s.variant}, {"items", s.items}};
  if (s.kc_coverage) j["kc_coverage"] = *s.kc_coverage;
  if (s.preference) j["preference"] = to_string(*s.preference);
  return j;
}

std::vector<RubricScore> load_ratings(const std::filesystem::path& path) {
  std::vector<RubricScore> out;
  std::set<std::pair<std::string, std::string>> seen;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      out.push_back(rubric_score_from_json(j));
    } catch (const DataError& e) {
      throw DataError(path.string() + " line " + std::to_string(line) + ": " + e.what());
    }
    if (!seen.insert({out.back().example_id, out.back().rater_id}).second)
      throw DataError(path.string() + " line " + std::to_string(line) + ": duplicate rating of " +
                      out.back().example_id + " by " + out.back().rater_id);
  });
  return out;
}

std::vector<PairSpec> load_pairs(const std::filesystem::path& path) {
  std::vector<PairSpec> out;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      out.push_back({j.at("submission_id").get<std::string>(), j.at("baseline").get<std::string>(),
                     j.at("kc_conditioned").get<std::string>(), j.at("rater_id").get<std::string>()});
    } catch (const Json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

std::vector<PairedRatings> build_pairs(std::span<const RubricScore> scores, std::span<const PairSpec> specs) {
  auto find = [&](const std::string& example, const std::string& rater) -> const RubricScore& {
    for (const auto& s : scores)
      if (s.example_id == example && s.rater_id == rater) return s;
    throw DataError("no rating of " + example + " by " + rater);
  };
  std::vector<PairedRatings> out;
  for (const auto& spec : specs) {
    PairedRatings p{spec.submission_id, find(spec.baseline_example, spec.rater_id),
                    find(spec.kc_example, spec.rater_id), std::nullopt};
    if (p.baseline.variant != "baseline" || p.kc_conditioned.variant != "kc_conditioned")
      throw DataError("pair " + spec.submission_id + " does not join a baseline and a kc_conditioned example");
    if (p.baseline.preference && p.kc_conditioned.preference && *p.baseline.preference != *p.kc_conditioned.preference)
      throw DataError("pair " + spec.submission_id + " records two different preferences");
    p.preference = p.kc_conditioned.preference ? p.kc_conditioned.preference : p.baseline.preference;
    out.push_back(std::move(p));
  }
  return out;
}

Agreement inter_rater_agreement(std::span<const RubricScore> scores) {
  std::map<std::string, std::map<std::string, const RubricScore*>> by_example;
  for (const auto& s : scores) by_example[s.example_id][s.rater_id] = &s;
  Agreement a;
  std::vector<int> pooled_a;
  std::vector<int> pooled_b;
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> per_item;
  for (const auto& [example, raters] : by_example) {
    if (raters.size() < 2) continue;
    ++a.examples;
    const RubricScore& first = *raters.begin()->second;
    const RubricScore& second = *std::next(raters.begin())->second;
    for (auto item : kRubricItems) {
      const std::string key(item);
      pooled_a.push_back(first.items.at(key));
      pooled_b.push_back(second.items.at(key));
      per_item[key].first.push_back(first.items.at(key));
      per_item[key].second.push_back(second.items.at(key));
    }
    if (first.kc_coverage && second.kc_coverage) {
      pooled_a.push_back(*first.kc_coverage);
      pooled_b.push_back(*second.kc_coverage);
      per_item["kc_coverage"].first.push_back(*first.kc_coverage);
      per_item["kc_coverage"].second.push_back(*second.kc_coverage);
    }
  }
  if (!pooled_a.empty()) a.pooled_kappa = cohen_kappa(pooled_a, pooled_b);
  for (const auto& [item, v] : per_item) a.item_kappa[item] = cohen_kappa(v.first, v.second);
  return a;
}

Summary summarize(std::span<const PairedRatings> pairs, std::span<const RubricScore> all_scores, WilcoxonMode mode) {
  if (pairs.empty()) throw DataError("summarize: no pairs");
  Summary s;
  s.pairs = pairs.size();
  const double n = static_cast<double>(pairs.size());
  std::vector<double> raw_p;
  for (auto item : kRubricItems) {
    const std::string key(item);
    std::vector<double> base;
    std::vector<double> cond;
    for (const auto& p : pairs) {
      base.push_back(p.baseline.items.at(key));
      cond.push_back(p.kc_conditioned.items.at(key));
    }
    ItemSummary row;
    row.item = key;
    double sb = 0;
    double sc = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      sb += base[i];
      sc += cond[i];
    }
    row.baseline_mean = sb / n;
    row.kc_mean = sc / n;
    row.test = wilcoxon_signed_rank(base, cond, mode);
    raw_p.push_back(row.test.p_value);
    s.items.push_back(row);
  }
  const auto adjusted = holm_correct(raw_p);
  for (std::size_t i = 0; i < s.items.size(); ++i) s.items[i].p_holm = adjusted[i];

  for (auto key : {"baseline", "kc_conditioned", "none", "missing"}) s.preferences[key] = 0;
  double coverage = 0;
  for (const auto& p : pairs) {
    ++s.preferences[p.preference ? std::string(to_string(*p.preference)) : "missing"];
    if (p.kc_conditioned.kc_coverage) {
      coverage += *p.kc_conditioned.kc_coverage;
      ++s.kc_coverage_n;
    }
  }
  if (s.kc_coverage_n > 0) s.kc_coverage_mean = coverage / static_cast<double>(s.kc_coverage_n);
  s.agreement = inter_rater_agreement(all_scores);
  return s;
}

Json to_json(const Summary& s) {
  Json items = Json::array();
  for (const auto& r : s.items)
    items.push_back(Json{{"item", r.item},
                         {"baseline_mean", r.baseline_mean},
                         {"kc_conditioned_mean", r.kc_mean},
                         {"wilcoxon_statistic", r.test.statistic},
                         {"n_effective", r.test.n_effective},
                         {"exact", r.test.exact},
                         {"p_value", r.test.p_value},
                         {"p_holm", r.p_holm}});
  Json agreement{{"examples", s.agreement.examples}, {"item_kappa", s.agreement.item_kappa}};
  agreement["pooled_kappa"] = s.agreement.pooled_kappa ? Json(*s.agreement.pooled_kappa) : Json(nullptr);
  return Json{{"pairs", s.pairs},
              {"items", items},
              {"preferences", s.preferences},
              {"kc_coverage_mean", s.kc_coverage_mean ? Json(*s.kc_coverage_mean) : Json(nullptr)},
              {"kc_coverage_n", s.kc_coverage_n},
              {"agreement", agreement}};
}

std::string to_text(const Summary& s) {
  constexpr std::size_t kName = 26;
  constexpr std::size_t kCol = 12;
  std::string out = pad_right("Rubric item", kName) + pad_left("Baseline M", kCol) + pad_left("KC-cond. M", kCol) +
                    pad_left("p-value", kCol) + pad_left("Holm p", kCol) + "\n";
  for (const auto& r : s.items)
    out += pad_right(std::string(item_title(r.item)), kName) + pad_left(format("%.2f", r.baseline_mean), kCol) +
           pad_left(format("%.2f", r.kc_mean), kCol) + pad_left(format("%.4f", r.test.p_value), kCol) +
           pad_left(format("%.4f", r.p_holm), kCol) + "\n";
  out += pad_right("Preference", kName) + "baseline " + std::to_string(s.preferences.at("baseline")) +
         ", kc_conditioned " + std::to_string(s.preferences.at("kc_conditioned")) + ", none " +
         std::to_string(s.preferences.at("none"));
  if (s.preferences.at("missing") > 0) out += ", missing " + std::to_string(s.preferences.at("missing"));
  out += "\n";
  out += pad_right("KC coverage", kName) + pad_left("", kCol) +
         pad_left(s.kc_coverage_mean ? format("%.2f", *s.kc_coverage_mean) : "n/a", kCol) + "\n";
  out += "\nPairs: " + std::to_string(s.pairs) + "\n";
  out += "Cohen's kappa (pooled, " + std::to_string(s.agreement.examples) + " jointly coded examples): " +
         (s.agreement.pooled_kappa ? format("%.4f", *s.agreement.pooled_kappa) : "n/a") + "\n";
  return out;
}

}  // namespace kc::eval
