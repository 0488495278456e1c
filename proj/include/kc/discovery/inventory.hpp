#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kc/ast/subtrees.hpp"
#include "kc/common/io.hpp"
#include "kc/corpus/corpus.hpp"
#include "kc/discovery/vae.hpp"
#include "kc/sann/sann.hpp"

namespace kc::discovery {

inline constexpr std::size_t kDefaultK = 50;

struct KcMeta {
  std::string label;
  std::string description;
};

struct KcInventory {
  std::size_t k = 0;
  std::size_t d_z = 0;
  std::vector<Eigen::VectorXd> centroids;
  std::map<std::size_t, KcMeta> kc_meta;
  Json provenance = Json::object();
};

// Throws DataError unless there are exactly k finite, pairwise distinct
// centroids of dimension d_z.
void validate(const KcInventory& inv);

Json to_json(const KcInventory& inv);
KcInventory inventory_from_json(const Json& j);

// [encoding || attention-weighted mean of neighbor encodings]; the second
// half is zero when there are no neighbors.
Eigen::VectorXd context_representation(const sann::ScoredSubtree& scored,
                                       std::span<const sann::ScoredSubtree> neighbors);

// One context representation per high-attention subtree, with the other
// high-attention subtrees of the same program as neighbors.
std::vector<Eigen::VectorXd> context_representations(std::span<const sann::ScoredSubtree> high);

std::size_t assign_kc(const KcInventory& inv, const Eigen::VectorXd& z);

struct KcTarget {
  std::size_t kc_id = 0;
  sann::ScoredSubtree supporter;
  std::string snippet;
};

struct KcAssignment {
  std::string submission_id;
  std::vector<KcTarget> targets;
};

Json to_json(const KcAssignment& a);
KcAssignment assignment_from_json(const Json& j);

struct TargetOptions {
  double threshold = 0.5;
  std::size_t cap = 5;
  ast::SubtreeBounds bounds{};
};

// Keeps the highest-attention supporter per KC, orders by descending
// supporter attention (ties: source position) and truncates to `cap`.
std::vector<KcTarget> dedupe_targets(std::vector<KcTarget> raw, std::size_t cap);

// parse -> extract -> normalize -> high attention -> context -> latent mean
// -> nearest centroid. Parse failures are rethrown as DataError naming the
// submission.
KcAssignment kc_targets(const corpus::Submission& submission, const sann::SannModel& sann,
                        const VaeModel& vae, const KcInventory& inv, const TargetOptions& opt = {});

}  // namespace kc::discovery
