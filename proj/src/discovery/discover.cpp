#include "kc/discovery/discover.hpp"

#include "kc/common/error.hpp"

namespace kc::discovery {

DiscoveryResult discover_kcs(const sann::SannModel& sann, std::span<const sann::LabeledProgram> programs,
                             const DiscoveryOptions& opt) {
  if (!(opt.threshold > 0.0 && opt.threshold < 1.0)) throw UsageError("attention threshold must lie in (0, 1)");
  std::vector<Eigen::VectorXd> rows;
  for (const auto& p : programs) {
    if (!p.is_correct || p.subtrees.empty()) continue;
    const auto high = sann::high_attention_subtrees(sann, p.subtrees, opt.threshold);
    for (auto& rep : context_representations(high)) rows.push_back(std::move(rep));
  }
  if (rows.empty()) throw DataError("no correct submission yielded a subtree for KC discovery");

  DiscoveryResult r;
  r.context_points = rows.size();
  auto trained = train_vae(rows, opt.vae, opt.vae_seed);
  r.vae = std::move(trained.model);
  r.vae_report = std::move(trained.report);

  std::vector<Eigen::VectorXd> latents;
  latents.reserve(rows.size());
  for (const auto& x : rows) latents.push_back(encode_latent(r.vae, x));
  const auto km = kmeans_fit(latents, opt.k, opt.kmeans_seed, opt.max_iters);
  r.kmeans_iterations = km.iterations;
  r.kmeans_converged = km.converged;
  r.final_inertia = km.inertia_trace.empty() ? 0.0 : km.inertia_trace.back();

  r.inventory.k = opt.k;
  r.inventory.d_z = static_cast<std::size_t>(r.vae.d_z());
  r.inventory.centroids = km.centroids;
  r.inventory.provenance = Json{{"vae", to_json(opt.vae)},
                                {"vae_seed", opt.vae_seed},
                                {"kmeans_seed", opt.kmeans_seed},
                                {"threshold", opt.threshold},
                                {"context_points", r.context_points},
                                {"kmeans_iterations", km.iterations},
                                {"vae_checksum", r.vae.checksum()}};
  validate(r.inventory);
  return r;
}

}  // namespace kc::discovery
