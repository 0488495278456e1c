#include "kc/genkit/types.hpp"

#include "kc/common/error.hpp"

namespace kc::genkit {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::KcConditioned: return "kc_conditioned";
    case Variant::Enrichment: return "enrichment";
  }
  return "baseline";
}

Variant variant_from_string(std::string_view s) {
  if (s == "baseline") return Variant::Baseline;
  if (s == "kc_conditioned") return Variant::KcConditioned;
  if (s == "enrichment") return Variant::Enrichment;
  throw UsageError("unknown variant '" + std::string(s) + "'");
}

Json to_json(const KcLabel& l) {
  Json j{{"kc_id", l.kc_id}, {"label", l.label}, {"description", l.description}};
  if (!l.pattern.empty()) {
    j["pattern"] = l.pattern;
    j["pattern_kind"] = l.pattern_kind;
  }
  return j;
}

KcLabel kc_label_from_json(const Json& j) {
  try {
    KcLabel l;
    l.kc_id = j.at("kc_id").get<std::size_t>();
    l.label = j.at("label").get<std::string>();
    l.description = j.at("description").get<std::string>();
    l.pattern = j.value("pattern", std::vector<std::string>{});
    l.pattern_kind = j.value("pattern_kind", std::string{});
    return l;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed KC label: ") + e.what());
  }
}

Json to_json(const PromptBundle& b) {
  return Json{{"system", b.system_text},
              {"user", b.user_text},
              {"variant", to_string(b.variant)},
              {"substitutions", b.substitutions}};
}

Json to_json(const WorkedExample& w) {
  Json steps = Json::array();
  for (const auto& s : w.steps) steps.push_back(Json{{"explanation", s.explanation}, {"code", s.code}});
  Json targets = Json::array();
  for (const auto& t : w.kc_targets) targets.push_back(to_json(t));
  return Json{{"question", w.question},
              {"overview", w.overview},
              {"steps", steps},
              {"variant", to_string(w.variant)},
              {"kc_targets", targets}};
}

WorkedExample worked_example_from_json(const Json& j) {
  try {
    WorkedExample w;
    w.question = j.at("question").get<std::string>();
    w.overview = j.at("overview").get<std::string>();
    for (const auto& s : j.at("steps"))
      w.steps.push_back({s.at("explanation").get<std::string>(), s.at("code").get<std::string>()});
    w.variant = variant_from_string(j.at("variant").get<std::string>());
    for (const auto& t : j.value("kc_targets", Json::array())) w.kc_targets.push_back(kc_label_from_json(t));
    return w;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed worked example: ") + e.what());
  }
}

}  // namespace kc::genkit
