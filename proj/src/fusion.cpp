#include "complat/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "complat/cf_model.hpp"
#include "complat/errors.hpp"
#include "complat/losses.hpp"
#include "complat/metrics.hpp"
#include "complat/optim.hpp"
#include "complat/rng.hpp"

namespace complat {

std::vector<double> fuse(std::span<const double> h_cf, std::span<const double> h_sem) {
  std::vector<double> z(h_cf.size() + h_sem.size());
  std::copy(h_cf.begin(), h_cf.end(), z.begin());
  std::copy(h_sem.begin(), h_sem.end(), z.begin() + static_cast<std::ptrdiff_t>(h_cf.size()));
  l2_normalize(z);
  return z;
}

namespace {

// Forward state kept for backprop: pre-norm branch inputs and unit branches.
struct FusedForward {
  Matrix user_cf_raw, item_cf_raw;    // propagated embeddings
  Matrix item_sem_raw;                // W x + b
  Matrix user_z, item_z;              // fused unit vectors (2d)
  Matrix item_cf_unit, item_sem_unit; // unit halves
};

void fuse_rows(const Matrix& cf_raw, const Matrix& sem_raw, Matrix& z, Matrix* cf_unit,
               Matrix* sem_unit, FusionView view) {
  const std::size_t d = cf_raw.cols;
  z = Matrix(cf_raw.rows, 2 * d);
  if (cf_unit) *cf_unit = Matrix(cf_raw.rows, d);
  if (sem_unit) *sem_unit = Matrix(cf_raw.rows, d);
  std::vector<double> hc(d), hs(d);
  for (std::size_t r = 0; r < cf_raw.rows; ++r) {
    std::copy_n(cf_raw.row(r), d, hc.begin());
    std::copy_n(sem_raw.row(r), d, hs.begin());
    l2_normalize(hc);
    l2_normalize(hs);
    if (cf_unit) std::copy(hc.begin(), hc.end(), cf_unit->row(r));
    if (sem_unit) std::copy(hs.begin(), hs.end(), sem_unit->row(r));
    if (view == FusionView::CfOnly) std::fill(hs.begin(), hs.end(), 0.0);
    if (view == FusionView::SemOnly) std::fill(hc.begin(), hc.end(), 0.0);
    auto fused = fuse(hc, hs);
    std::copy(fused.begin(), fused.end(), z.row(r));
  }
}

}  // namespace

FusedEmbeddings fusion_embeddings(const FusionModel& model, const BipartiteGraph& graph,
                                  const Matrix& item_vecs, const Matrix& pooled_users,
                                  FusionView view) {
  FusedEmbeddings out;
  out.branch_dim = model.branch_dim();
  Matrix pu, pi;
  propagate(graph, model.cf_user, model.cf_item, model.layers, pu, pi);
  const Matrix user_sem = sem_project_all(model.sem, pooled_users, false);
  const Matrix item_sem = sem_project_all(model.sem, item_vecs, false);
  fuse_rows(pu, user_sem, out.user, nullptr, nullptr, view);
  fuse_rows(pi, item_sem, out.item, nullptr, nullptr, view);
  return out;
}

double fusion_score(const FusedEmbeddings& emb, std::uint32_t user, std::uint32_t item) {
  return dot(emb.user.row_span(user), emb.item.row_span(item));
}

std::vector<std::uint32_t> mine_hard_negatives(std::span<const double> z_user,
                                               const Matrix& z_items,
                                               std::span<const std::uint32_t> pool, std::size_t m,
                                               std::span<const std::uint32_t> exclusions,
                                               std::size_t* short_pool) {
  std::vector<std::uint32_t> cand;
  cand.reserve(pool.size());
  for (std::uint32_t i : pool)
    if (!std::binary_search(exclusions.begin(), exclusions.end(), i)) cand.push_back(i);

  std::vector<double> scores(cand.size());
  for (std::size_t j = 0; j < cand.size(); ++j)
    scores[j] = dot(z_user, z_items.row_span(cand[j]));

  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return cand[a] < cand[b];
  };
  std::vector<std::size_t> order(cand.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  if (cand.size() > m) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                     better);
    order.resize(m);
  } else if (short_pool) {
    ++*short_pool;
  }
  std::sort(order.begin(), order.end(), better);
  std::vector<std::uint32_t> out(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) out[j] = cand[order[j]];
  return out;
}

double fusion_batch_loss_and_grad(const FusionModel& model, const BipartiteGraph& graph,
                                  const SplitDataset& split, const Matrix& item_vecs,
                                  const Matrix& pooled_users, const FusionBatch& batch, double tau,
                                  Matrix& g_cf_user, Matrix& g_cf_item, Matrix& g_w,
                                  std::vector<double>& g_b) {
  const std::size_t d = model.branch_dim();
  const bool bias = !model.sem.b.empty();
  g_w = Matrix(model.sem.w.rows, model.sem.w.cols);
  g_b.assign(bias ? d : 0, 0.0);

  FusedForward f;
  propagate(graph, model.cf_user, model.cf_item, model.layers, f.user_cf_raw, f.item_cf_raw);
  f.item_sem_raw = sem_project_all(model.sem, item_vecs, false);
  fuse_rows(f.item_cf_raw, f.item_sem_raw, f.item_z, &f.item_cf_unit, &f.item_sem_unit,
            FusionView::Full);

  // unique in-batch items
  std::vector<std::uint32_t> batch_items = batch.pos_items;
  std::sort(batch_items.begin(), batch_items.end());
  batch_items.erase(std::unique(batch_items.begin(), batch_items.end()), batch_items.end());

  Matrix g_item_z(split.base.n_items, 2 * d);
  Matrix g_pu(f.user_cf_raw.rows, d);
  Matrix g_pi(f.item_cf_raw.rows, d);
  std::vector<std::uint8_t> touched(split.base.n_items, 0);

  // Anchors with no usable negative (every in-batch item is one of the
  // user's train positives and nothing was mined) are skipped.
  std::vector<std::vector<std::uint32_t>> cand_lists(batch.users.size());
  std::size_t usable = 0;
  for (std::size_t a = 0; a < batch.users.size(); ++a) {
    const std::uint32_t u = batch.users[a];
    const std::uint32_t pos = batch.pos_items[a];
    const auto& train_pos = split.train_by_user[u];
    auto& cands = cand_lists[a];
    for (std::uint32_t i : batch_items)
      if (i != pos && !std::binary_search(train_pos.begin(), train_pos.end(), i))
        cands.push_back(i);
    for (std::uint32_t i : batch.mined[a])
      if (i != pos) cands.push_back(i);
    if (!cands.empty()) ++usable;
  }
  if (usable == 0) throw ConfigError("fusion batch has no anchor with a usable negative");

  const double inv_b = 1.0 / static_cast<double>(usable);
  double loss = 0.0;

  std::vector<double> user_sem_raw(d), user_cf(d), user_sem(d), z_u, g_z_u, g_concat,
      g_half(d), sims;

  for (std::size_t a = 0; a < batch.users.size(); ++a) {
    const std::uint32_t u = batch.users[a];
    const std::uint32_t pos = batch.pos_items[a];
    const auto& cands = cand_lists[a];
    if (cands.empty()) continue;

    // user forward
    const double* xu = pooled_users.row(u);
    for (std::size_t o = 0; o < d; ++o) {
      const double* wo = model.sem.w.row(o);
      double acc = bias ? model.sem.b[o] : 0.0;
      for (std::size_t k = 0; k < model.sem.w.cols; ++k) acc += wo[k] * xu[k];
      user_sem_raw[o] = acc;
    }
    std::copy_n(f.user_cf_raw.row(u), d, user_cf.begin());
    user_sem = user_sem_raw;
    l2_normalize(user_cf);
    l2_normalize(user_sem);
    z_u = fuse(user_cf, user_sem);

    sims.resize(cands.size());
    for (std::size_t j = 0; j < cands.size(); ++j)
      sims[j] = dot(z_u, f.item_z.row_span(cands[j]));
    const double sim_pos = dot(z_u, f.item_z.row_span(pos));
    const auto nce = infonce_from_sims(sim_pos, sims, tau);
    loss += nce.loss;

    // gradients on z_u and touched item fused vectors
    g_z_u.assign(2 * d, 0.0);
    {
      const double g = inv_b * nce.d_pos;
      const double* zi = f.item_z.row(pos);
      double* gz = g_item_z.row(pos);
      touched[pos] = 1;
      for (std::size_t c = 0; c < 2 * d; ++c) {
        g_z_u[c] += g * zi[c];
        gz[c] += g * z_u[c];
      }
    }
    for (std::size_t j = 0; j < cands.size(); ++j) {
      const double g = inv_b * nce.d_neg[j];
      const double* zi = f.item_z.row(cands[j]);
      double* gz = g_item_z.row(cands[j]);
      touched[cands[j]] = 1;
      for (std::size_t c = 0; c < 2 * d; ++c) {
        g_z_u[c] += g * zi[c];
        gz[c] += g * z_u[c];
      }
    }

    // user backward: fused normalization, then each branch normalization
    g_concat.assign(2 * d, 0.0);
    {
      std::vector<double> concat(2 * d);
      std::copy(user_cf.begin(), user_cf.end(), concat.begin());
      std::copy(user_sem.begin(), user_sem.end(), concat.begin() + static_cast<std::ptrdiff_t>(d));
      l2_normalize_backward(concat, g_z_u, g_concat);
    }
    std::fill(g_half.begin(), g_half.end(), 0.0);
    l2_normalize_backward({f.user_cf_raw.row(u), d}, {g_concat.data(), d}, g_half);
    for (std::size_t c = 0; c < d; ++c) g_pu.at(u, c) += g_half[c];

    std::fill(g_half.begin(), g_half.end(), 0.0);
    l2_normalize_backward(user_sem_raw, {g_concat.data() + d, d}, g_half);
    for (std::size_t o = 0; o < d; ++o) {
      const double g = g_half[o];
      if (g == 0.0) continue;
      double* gwo = g_w.row(o);
      for (std::size_t k = 0; k < model.sem.w.cols; ++k) gwo[k] += g * xu[k];
      if (bias) g_b[o] += g;
    }
  }

  // item backward for every touched item
  std::vector<double> concat(2 * d), g_cat(2 * d), g_raw(d);
  for (std::size_t i = 0; i < split.base.n_items; ++i) {
    if (!touched[i]) continue;
    std::copy_n(f.item_cf_unit.row(i), d, concat.begin());
    std::copy_n(f.item_sem_unit.row(i), d, concat.begin() + static_cast<std::ptrdiff_t>(d));
    std::fill(g_cat.begin(), g_cat.end(), 0.0);
    l2_normalize_backward(concat, g_item_z.row_span(i), g_cat);

    std::fill(g_raw.begin(), g_raw.end(), 0.0);
    l2_normalize_backward({f.item_cf_raw.row(i), d}, {g_cat.data(), d}, g_raw);
    for (std::size_t c = 0; c < d; ++c) g_pi.at(i, c) += g_raw[c];

    std::fill(g_raw.begin(), g_raw.end(), 0.0);
    l2_normalize_backward({f.item_sem_raw.row(i), d}, {g_cat.data() + d, d}, g_raw);
    const double* xi = item_vecs.row(i);
    for (std::size_t o = 0; o < d; ++o) {
      const double g = g_raw[o];
      if (g == 0.0) continue;
      double* gwo = g_w.row(o);
      for (std::size_t k = 0; k < model.sem.w.cols; ++k) gwo[k] += g * xi[k];
      if (bias) g_b[o] += g;
    }
  }

  // propagated-embedding gradients flow back through the symmetric operator
  propagate(graph, g_pu, g_pi, model.layers, g_cf_user, g_cf_item);
  return loss * inv_b;
}

namespace {

double fusion_val_recall(const FusionModel& model, const BipartiteGraph& graph,
                         const SplitDataset& split, const Matrix& item_vecs,
                         const Matrix& pooled_users, std::size_t k) {
  const FusedEmbeddings emb = fusion_embeddings(model, graph, item_vecs, pooled_users);
  const std::size_t w = emb.item.cols;
  auto result = evaluate_ranking(split, Split::Val, k, [&](std::uint32_t u, std::span<double> out) {
    const double* zu = emb.user.row(u);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot({zu, w}, {emb.item.row(i), w});
  });
  return recall_at_k(result);
}

}  // namespace

FusionModel train_fusion(const SplitDataset& split, const Matrix& item_vecs,
                         const TrainConfig& cfg, std::size_t dim, int layers, TrainInfo* info) {
  cfg.validate();
  if (item_vecs.rows != split.base.n_items)
    throw DataError("train_fusion: item vectors do not cover the catalog");
  bool has_val = false;
  for (const auto& v : split.val_by_user)
    if (!v.empty()) {
      has_val = true;
      break;
    }
  if (!has_val) throw ConfigError("train_fusion: no users with validation interactions");

  const Rng root(cfg.seed);
  const BipartiteGraph graph = build_graph(split);

  FusionModel model;
  model.layers = layers;
  {
    const CfModel cf = init_cf_model(split.base.n_users, split.base.n_items, dim, layers,
                                     root.fork("init-cf"));
    model.cf_user = cf.user_emb;
    model.cf_item = cf.item_emb;
  }
  model.sem.w = Matrix(dim, item_vecs.cols);
  {
    Rng init = root.fork("init-sem");
    const double scale = 1.0 / std::sqrt(static_cast<double>(item_vecs.cols));
    for (double& x : model.sem.w.data) x = init.normal(0.0, scale);
  }
  model.sem.b.assign(dim, 0.0);

  const Matrix pooled = pooled_user_inputs(split, item_vecs);

  std::vector<std::uint32_t> train_idx;
  for (std::size_t idx = 0; idx < split.base.interactions.size(); ++idx)
    if (split.assignment[idx] == Split::Train) train_idx.push_back(static_cast<std::uint32_t>(idx));

  AdamParams opt{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  AdamState st_cu, st_ci, st_w, st_b;
  std::uint64_t t = 0;

  EarlyStopper stopper(cfg.patience);
  FusionModel best = model;
  TrainInfo ti;

  const std::size_t pool_size = std::min<std::size_t>(cfg.hard_pool, split.base.n_items);
  Matrix g_cu, g_ci, g_w;
  std::vector<double> g_b;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng order_rng = root.fork("order", epoch);
    order_rng.shuffle(train_idx);
    Rng pool_rng = root.fork("pool", epoch);

    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + cfg.batch_size);
      FusionBatch batch;
      for (std::size_t p = start; p < end; ++p) {
        const auto& e = split.base.interactions[train_idx[p]];
        batch.users.push_back(e.user);
        batch.pos_items.push_back(e.item);
      }

      // mining pass under the current fused representation
      const FusedEmbeddings emb = fusion_embeddings(model, graph, item_vecs, pooled);
      const std::vector<std::uint32_t> pool =
          pool_rng.sample_without_replacement(split.base.n_items, pool_size);
      batch.mined.resize(batch.users.size());
      for (std::size_t a = 0; a < batch.users.size(); ++a) {
        const std::uint32_t u = batch.users[a];
        batch.mined[a] = mine_hard_negatives(emb.user.row_span(u), emb.item, pool, cfg.hard_m,
                                             split.train_by_user[u]);
      }

      fusion_batch_loss_and_grad(model, graph, split, item_vecs, pooled, batch, cfg.tau, g_cu,
                                 g_ci, g_w, g_b);
      ++t;
      adam_step(model.cf_user.data, g_cu.data, st_cu, opt, t);
      adam_step(model.cf_item.data, g_ci.data, st_ci, opt, t);
      adam_step(model.sem.w.data, g_w.data, st_w, opt, t);
      adam_step(model.sem.b, g_b, st_b, opt, t);
    }
    ti.epochs_run = epoch;

    if (epoch % cfg.eval_every == 0) {
      const double recall = fusion_val_recall(model, graph, split, item_vecs, pooled, cfg.eval_k);
      ++ti.evaluations;
      const bool stop = stopper.update(recall);
      if (stopper.improved_last()) {
        best = model;
        ti.best_val = recall;
        ti.best_epoch = epoch;
      }
      if (stop) break;
    }
  }

  if (ti.evaluations == 0) {
    best = model;
    ti.best_epoch = ti.epochs_run;
  }
  if (info) *info = ti;
  return best;
}

}  // namespace complat
