#include "kc/discovery/inventory.hpp"

#include <algorithm>

#include "kc/ast/lexer.hpp"
#include "kc/common/error.hpp"
#include "kc/discovery/kmeans.hpp"

namespace kc::discovery {

void validate(const KcInventory& inv) {
  if (inv.centroids.size() != inv.k)
    throw DataError("inventory declares k = " + std::to_string(inv.k) + " but holds " +
                    std::to_string(inv.centroids.size()) + " centroids");
  for (std::size_t i = 0; i < inv.centroids.size(); ++i) {
    const auto& c = inv.centroids[i];
    if (static_cast<std::size_t>(c.size()) != inv.d_z)
      throw DataError("centroid " + std::to_string(i) + " has dimension " + std::to_string(c.size()));
    if (!c.allFinite()) throw DataError("centroid " + std::to_string(i) + " is not finite");
    for (std::size_t j = 0; j < i; ++j)
      if (inv.centroids[j] == c)
        throw DataError("centroids " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
  }
  for (const auto& [id, meta] : inv.kc_meta)
    if (id >= inv.k) throw DataError("kc_meta names KC " + std::to_string(id) + " outside [0, k)");
}

Json to_json(const KcInventory& inv) {
  Json centroids = Json::array();
  for (const auto& c : inv.centroids) centroids.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  Json meta = Json::object();
  for (const auto& [id, m] : inv.kc_meta)
    meta[std::to_string(id)] = Json{{"label", m.label}, {"description", m.description}};
  return Json{{"k", inv.k},
              {"d_z", inv.d_z},
              {"centroids", centroids},
              {"kc_meta", meta},
              {"provenance", inv.provenance}};
}

KcInventory inventory_from_json(const Json& j) {
  KcInventory inv;
  try {
    inv.k = j.at("k").get<std::size_t>();
    inv.d_z = j.at("d_z").get<std::size_t>();
    for (const auto& c : j.at("centroids")) {
      const auto v = c.get<std::vector<double>>();
      inv.centroids.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size())));
    }
    const Json meta = j.value("kc_meta", Json::object());
    for (const auto& [key, m] : meta.items())
      inv.kc_meta[std::stoul(key)] = KcMeta{m.at("label").get<std::string>(), m.at("description").get<std::string>()};
    inv.provenance = j.value("provenance", Json::object());
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed inventory: ") + e.what());
  }
  validate(inv);
  return inv;
}

Eigen::VectorXd context_representation(const sann::ScoredSubtree& scored,
                                       std::span<const sann::ScoredSubtree> neighbors) {
  const long d = scored.encoding.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * d);
  out.head(d) = scored.encoding;
  double weight = 0;
  Eigen::VectorXd context = Eigen::VectorXd::Zero(d);
  for (const auto& n : neighbors) {
    if (n.encoding.size() != d) throw DataError("context_representation: neighbor encoding dimension mismatch");
    context += n.attention * n.encoding;
    weight += n.attention;
  }
  if (!neighbors.empty()) out.tail(d) = context / weight;
  return out;
}

std::vector<Eigen::VectorXd> context_representations(std::span<const sann::ScoredSubtree> high) {
  std::vector<Eigen::VectorXd> out;
  std::vector<sann::ScoredSubtree> neighbors;
  for (std::size_t i = 0; i < high.size(); ++i) {
    neighbors.clear();
    for (std::size_t j = 0; j < high.size(); ++j)
      if (j != i) neighbors.push_back(high[j]);
    out.push_back(context_representation(high[i], neighbors));
  }
  return out;
}

std::size_t assign_kc(const KcInventory& inv, const Eigen::VectorXd& z) {
  if (static_cast<std::size_t>(z.size()) != inv.d_z)
    throw DataError("assign_kc: latent has dimension " + std::to_string(z.size()) + ", inventory uses " +
                    std::to_string(inv.d_z));
  return nearest_centroid(inv.centroids, z);
}

Json to_json(const KcAssignment& a) {
  Json targets = Json::array();
  for (const auto& t : a.targets)
    targets.push_back(Json{{"kc_id", t.kc_id},
                           {"attention", t.supporter.attention},
                           {"subtree", ast::to_json(t.supporter.subtree)},
                           {"snippet", t.snippet}});
  return Json{{"submission_id", a.submission_id}, {"targets", targets}};
}

KcAssignment assignment_from_json(const Json& j) {
  KcAssignment a;
  try {
    a.submission_id = j.at("submission_id").get<std::string>();
    for (const auto& t : j.at("targets")) {
      KcTarget kt;
      kt.kc_id = t.at("kc_id").get<std::size_t>();
      kt.supporter.attention = t.at("attention").get<double>();
      kt.supporter.subtree = ast::normalized_from_json(t.at("subtree"));
      kt.snippet = t.at("snippet").get<std::string>();
      a.targets.push_back(std::move(kt));
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed assignment: ") + e.what());
  }
  if (a.targets.empty()) throw DataError("assignment for " + a.submission_id + " has no targets");
  return a;
}

std::vector<KcTarget> dedupe_targets(std::vector<KcTarget> raw, std::size_t cap) {
  std::stable_sort(raw.begin(), raw.end(), [](const KcTarget& a, const KcTarget& b) {
    if (a.supporter.attention != b.supporter.attention) return a.supporter.attention > b.supporter.attention;
    return a.supporter.subtree.span.begin < b.supporter.subtree.span.begin;
  });
  std::vector<KcTarget> out;
  for (auto& t : raw) {
    if (out.size() >= cap) break;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const KcTarget& o) { return o.kc_id == t.kc_id; });
    if (!seen) out.push_back(std::move(t));
  }
  return out;
}

KcAssignment kc_targets(const corpus::Submission& submission, const sann::SannModel& sann,
                        const VaeModel& vae, const KcInventory& inv, const TargetOptions& opt) {
  if (opt.cap == 0) throw UsageError("target cap must be at least 1");
  std::vector<ast::NormalizedSubtree> subtrees;
  try {
    subtrees = ast::normalized_subtrees(submission.code, opt.bounds);
  } catch (const ast::ParseError& e) {
    throw DataError("submission " + submission.submission_id + ": " + e.what());
  }
  if (subtrees.empty())
    throw DataError("submission " + submission.submission_id + " has no candidate subtrees");

  const auto high = sann::high_attention_subtrees(sann, subtrees, opt.threshold);
  const auto contexts = context_representations(high);
  std::vector<KcTarget> raw;
  for (std::size_t i = 0; i < high.size(); ++i) {
    KcTarget t;
    t.kc_id = assign_kc(inv, encode_latent(vae, contexts[i]));
    t.supporter = high[i];
    t.snippet = ast::snippet_for(high[i].subtree.span, submission.code);
    raw.push_back(std::move(t));
  }
  return KcAssignment{submission.submission_id, dedupe_targets(std::move(raw), opt.cap)};
}

}  // namespace kc::discovery
