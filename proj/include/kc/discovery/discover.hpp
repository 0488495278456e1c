#pragma once

#include <cstdint>
#include <span>

#include "kc/discovery/inventory.hpp"
#include "kc/discovery/kmeans.hpp"
#include "kc/discovery/vae.hpp"
#include "kc/sann/sann.hpp"

namespace kc::discovery {

struct DiscoveryOptions {
  VaeHyperparams vae{};
  std::size_t k = kDefaultK;
  double threshold = 0.5;
  std::size_t max_iters = 300;
  std::uint64_t vae_seed = 0;
  std::uint64_t kmeans_seed = 0;
};

struct DiscoveryResult {
  VaeModel vae;
  VaeTrainReport vae_report;
  KcInventory inventory;
  std::size_t context_points = 0;  // VAE training rows
  std::size_t kmeans_iterations = 0;
  bool kmeans_converged = false;
  double final_inertia = 0.0;
};

// High-attention subtrees of the correct programs, in context, train the
// VAE; their posterior means are clustered into k centroids. Incorrect
// programs are ignored. Provenance holds the seeds and hyperparameters; the
// caller adds corpus identity.
DiscoveryResult discover_kcs(const sann::SannModel& sann, std::span<const sann::LabeledProgram> programs,
                             const DiscoveryOptions& opt);

}  // namespace kc::discovery
