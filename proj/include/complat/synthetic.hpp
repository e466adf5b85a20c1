#pragma once

#include <cstdint>

#include "complat/dataset.hpp"
#include "complat/matrix.hpp"

namespace complat {

// Shared-plus-private latent generator. Utilities see only (shared, cf)
// factors weighted by alpha; semantic vectors see only (shared, sem) factors.
struct LatentWorldConfig {
  std::size_t n_users = 500;
  std::size_t n_items = 400;
  std::size_t k_shared = 16;
  std::size_t k_cf = 16;
  std::size_t k_sem = 16;
  double alpha = 0.5;  // shared-variance fraction in [0, 1]
  std::size_t interactions_per_user = 20;
  double noise_sigma = 0.0;  // semantic observation noise
  double gumbel_scale = 0.5; // exposure noise on utilities
  std::size_t d_sem = 64;    // emitted semantic vector width
  std::uint64_t seed = 1;

  void validate() const;
};

struct LatentWorld {
  LatentWorldConfig cfg;
  // Item latents and user preferences, rows aligned with dataset ids.
  Matrix z_shared, z_cf, z_sem;
  Matrix p_shared, p_cf;
  Matrix g_sem;  // d_sem x (k_shared + k_sem), orthonormal columns
  InteractionDataset dataset;
  Matrix sem_vectors;  // n_items x d_sem

  // True preference score sqrt(alpha)·<p_sh,z_sh> + sqrt(1-alpha)·<p_cf,z_cf>
  double utility(std::uint32_t user, std::uint32_t item) const;
};

// Deterministic for a given config. Each user interacts with their top
// `interactions_per_user` items by Gumbel-perturbed utility; items that end
// up with no interactions are dropped via a 1-core pass (latents and
// semantic vectors are subset accordingly).
LatentWorld generate_world(const LatentWorldConfig& cfg);

}  // namespace complat
