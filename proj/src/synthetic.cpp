#include "complat/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "complat/errors.hpp"
#include "complat/rng.hpp"

namespace complat {

void LatentWorldConfig::validate() const {
  if (n_users == 0 || n_items == 0) throw ConfigError("world needs users and items");
  if (k_shared + k_cf + k_sem < 1) throw ConfigError("world needs at least one latent factor");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0, 1]");
  if (interactions_per_user >= n_items)
    throw ConfigError("interactions_per_user must be smaller than the catalog");
  if (interactions_per_user == 0) throw ConfigError("interactions_per_user must be >= 1");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
  if (d_sem < k_shared + k_sem)
    throw ConfigError("d_sem must be at least k_shared + k_sem for orthonormal columns");
}

double LatentWorld::utility(std::uint32_t user, std::uint32_t item) const {
  const double ws = std::sqrt(cfg.alpha);
  const double wc = std::sqrt(1.0 - cfg.alpha);
  double s = 0.0;
  if (cfg.k_shared > 0)
    s += ws * dot(p_shared.row_span(user), z_shared.row_span(item));
  if (cfg.k_cf > 0) s += wc * dot(p_cf.row_span(user), z_cf.row_span(item));
  return s;
}

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng rng) {
  Matrix m(rows, cols);
  for (double& x : m.data) x = rng.normal();
  return m;
}

// Orthonormal columns via modified Gram-Schmidt on a Gaussian draw.
Matrix orthonormal_columns(std::size_t rows, std::size_t cols, Rng rng) {
  Matrix a = gaussian_matrix(rows, cols, rng);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t prev = 0; prev < c; ++prev) {
      double proj = 0.0;
      for (std::size_t r = 0; r < rows; ++r) proj += a.at(r, c) * a.at(r, prev);
      for (std::size_t r = 0; r < rows; ++r) a.at(r, c) -= proj * a.at(r, prev);
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < rows; ++r) norm += a.at(r, c) * a.at(r, c);
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw NumericalError("degenerate draw while orthonormalizing");
    for (std::size_t r = 0; r < rows; ++r) a.at(r, c) /= norm;
  }
  return a;
}

Matrix subset_rows(const Matrix& m, const std::vector<std::uint32_t>& rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy_n(m.row(rows[r]), m.cols, out.row(r));
  return out;
}

}  // namespace

LatentWorld generate_world(const LatentWorldConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);

  LatentWorld world;
  world.cfg = cfg;
  world.z_shared = gaussian_matrix(cfg.n_items, cfg.k_shared, root.fork("z-shared"));
  world.z_cf = gaussian_matrix(cfg.n_items, cfg.k_cf, root.fork("z-cf"));
  world.z_sem = gaussian_matrix(cfg.n_items, cfg.k_sem, root.fork("z-sem"));
  world.p_shared = gaussian_matrix(cfg.n_users, cfg.k_shared, root.fork("p-shared"));
  world.p_cf = gaussian_matrix(cfg.n_users, cfg.k_cf, root.fork("p-cf"));
  world.g_sem = orthonormal_columns(cfg.d_sem, cfg.k_shared + cfg.k_sem, root.fork("g-sem"));

  // semantic vectors: g_sem · concat(sqrt(a)·z_shared, sqrt(1-a)·z_sem) + noise
  const double ws = std::sqrt(cfg.alpha);
  const double wn = std::sqrt(1.0 - cfg.alpha);
  world.sem_vectors = Matrix(cfg.n_items, cfg.d_sem);
  {
    Rng noise = root.fork("sem-noise");
    std::vector<double> latent(cfg.k_shared + cfg.k_sem);
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
      for (std::size_t k = 0; k < cfg.k_shared; ++k) latent[k] = ws * world.z_shared.at(i, k);
      for (std::size_t k = 0; k < cfg.k_sem; ++k)
        latent[cfg.k_shared + k] = wn * world.z_sem.at(i, k);
      double* out = world.sem_vectors.row(i);
      for (std::size_t r = 0; r < cfg.d_sem; ++r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < latent.size(); ++k) acc += world.g_sem.at(r, k) * latent[k];
        out[r] = acc + (cfg.noise_sigma > 0.0 ? cfg.noise_sigma * noise.normal() : 0.0);
      }
    }
  }

  // interactions: per user, top items by Gumbel-perturbed utility
  InteractionDataset ds;
  ds.n_users = cfg.n_users;
  ds.n_items = cfg.n_items;
  ds.user_raw_ids.resize(cfg.n_users);
  ds.item_raw_ids.resize(cfg.n_items);
  for (std::size_t u = 0; u < cfg.n_users; ++u) ds.user_raw_ids[u] = "u" + std::to_string(u);
  for (std::size_t i = 0; i < cfg.n_items; ++i) ds.item_raw_ids[i] = "i" + std::to_string(i);

  std::vector<double> noisy(cfg.n_items);
  std::vector<std::uint32_t> order(cfg.n_items);
  for (std::uint32_t u = 0; u < cfg.n_users; ++u) {
    Rng gumbel = root.fork("gumbel", u);
    for (std::uint32_t i = 0; i < cfg.n_items; ++i)
      noisy[i] = world.utility(u, i) +
                 (cfg.gumbel_scale > 0.0 ? gumbel.gumbel(cfg.gumbel_scale) : 0.0);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (noisy[a] != noisy[b]) return noisy[a] > noisy[b];
      return a < b;
    });
    for (std::size_t r = 0; r < cfg.interactions_per_user; ++r)
      ds.interactions.push_back({u, order[r], 0});
  }

  // 1-core pass: drop items nobody interacted with, subsetting all item-
  // aligned tables to the survivors.
  InteractionDataset filtered = kcore_filter(ds, 1);
  if (filtered.n_items != ds.n_items) {
    std::unordered_map<std::string, std::uint32_t> old_by_raw;
    for (std::uint32_t i = 0; i < ds.n_items; ++i) old_by_raw.emplace(ds.item_raw_ids[i], i);
    std::vector<std::uint32_t> kept(filtered.n_items);
    for (std::uint32_t i = 0; i < filtered.n_items; ++i)
      kept[i] = old_by_raw.at(filtered.item_raw_ids[i]);
    world.z_shared = subset_rows(world.z_shared, kept);
    world.z_cf = subset_rows(world.z_cf, kept);
    world.z_sem = subset_rows(world.z_sem, kept);
    world.sem_vectors = subset_rows(world.sem_vectors, kept);
  }
  world.dataset = std::move(filtered);
  return world;
}

}  // namespace complat
