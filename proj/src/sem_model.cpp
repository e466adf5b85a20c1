#include "complat/sem_model.hpp"

#include <algorithm>
#include <cmath>

#include "complat/errors.hpp"
#include "complat/losses.hpp"
#include "complat/metrics.hpp"
#include "complat/optim.hpp"
#include "complat/rng.hpp"

namespace complat {

std::vector<double> user_semantic_input(const SplitDataset& split, const Matrix& item_vecs,
                                        std::uint32_t user) {
  const std::size_t d = item_vecs.cols;
  std::vector<double> out(d, 0.0);
  const auto& history = split.train_by_user[user];
  if (history.empty()) return out;
  for (std::uint32_t item : history) {
    const double* x = item_vecs.row(item);
    for (std::size_t c = 0; c < d; ++c) out[c] += x[c];
  }
  const double inv = 1.0 / static_cast<double>(history.size());
  for (double& v : out) v *= inv;
  l2_normalize(out);
  return out;
}

Matrix pooled_user_inputs(const SplitDataset& split, const Matrix& item_vecs) {
  if (item_vecs.rows != split.base.n_items)
    throw DataError("item vectors do not cover the catalog");
  Matrix out(split.base.n_users, item_vecs.cols);
  for (std::uint32_t u = 0; u < split.base.n_users; ++u) {
    const auto row = user_semantic_input(split, item_vecs, u);
    std::copy(row.begin(), row.end(), out.row(u));
  }
  return out;
}

Matrix sem_project_all(const SemModel& model, const Matrix& x, bool normalize) {
  Matrix y;
  affine_forward(x, model.w, model.b, y);
  if (normalize)
    for (std::size_t r = 0; r < y.rows; ++r) l2_normalize(y.row_span(r));
  return y;
}

double sem_batch_loss_and_grad(const SemModel& model, const Matrix& item_vecs,
                               const Matrix& pooled_users, const SemBatch& batch, double tau,
                               Matrix& g_w, std::vector<double>& g_b) {
  const std::size_t d_out = model.d_out();
  const bool bias = !model.b.empty();
  g_w = Matrix(model.w.rows, model.w.cols);
  g_b.assign(bias ? d_out : 0, 0.0);

  // Raw and unit projections of the full catalog, computed once per batch.
  Matrix item_raw;
  affine_forward(item_vecs, model.w, model.b, item_raw);
  Matrix item_unit = item_raw;
  for (std::size_t r = 0; r < item_unit.rows; ++r) l2_normalize(item_unit.row_span(r));

  Matrix g_item_unit(item_raw.rows, d_out);
  std::vector<std::uint8_t> touched(item_raw.rows, 0);

  const double inv_b = 1.0 / static_cast<double>(batch.users.size());
  double loss = 0.0;
  std::vector<double> anchor_raw(d_out), anchor_unit(d_out), g_anchor_unit(d_out),
      g_anchor_raw(d_out), sims;

  for (std::size_t a = 0; a < batch.users.size(); ++a) {
    const std::uint32_t u = batch.users[a];
    const std::uint32_t pos = batch.pos_items[a];
    const auto& negs = batch.negatives[a];

    const double* xu = pooled_users.row(u);
    for (std::size_t o = 0; o < d_out; ++o) {
      const double* wo = model.w.row(o);
      double acc = bias ? model.b[o] : 0.0;
      for (std::size_t k = 0; k < model.w.cols; ++k) acc += wo[k] * xu[k];
      anchor_raw[o] = acc;
    }
    anchor_unit = anchor_raw;
    l2_normalize(anchor_unit);

    sims.resize(negs.size());
    for (std::size_t j = 0; j < negs.size(); ++j)
      sims[j] = dot(anchor_unit, item_unit.row_span(negs[j]));
    const double sim_pos = dot(anchor_unit, item_unit.row_span(pos));
    const auto nce = infonce_from_sims(sim_pos, sims, tau);
    loss += nce.loss;

    std::fill(g_anchor_unit.begin(), g_anchor_unit.end(), 0.0);
    const double* pu = item_unit.row(pos);
    double* gp = g_item_unit.row(pos);
    touched[pos] = 1;
    for (std::size_t o = 0; o < d_out; ++o) {
      g_anchor_unit[o] += inv_b * nce.d_pos * pu[o];
      gp[o] += inv_b * nce.d_pos * anchor_unit[o];
    }
    for (std::size_t j = 0; j < negs.size(); ++j) {
      const double g = inv_b * nce.d_neg[j];
      const double* nu = item_unit.row(negs[j]);
      double* gn = g_item_unit.row(negs[j]);
      touched[negs[j]] = 1;
      for (std::size_t o = 0; o < d_out; ++o) {
        g_anchor_unit[o] += g * nu[o];
        gn[o] += g * anchor_unit[o];
      }
    }

    std::fill(g_anchor_raw.begin(), g_anchor_raw.end(), 0.0);
    l2_normalize_backward(anchor_raw, g_anchor_unit, g_anchor_raw);
    for (std::size_t o = 0; o < d_out; ++o) {
      const double g = g_anchor_raw[o];
      if (g == 0.0) continue;
      double* gwo = g_w.row(o);
      for (std::size_t k = 0; k < model.w.cols; ++k) gwo[k] += g * xu[k];
      if (bias) g_b[o] += g;
    }
  }

  std::vector<double> g_raw(d_out);
  for (std::size_t i = 0; i < item_raw.rows; ++i) {
    if (!touched[i]) continue;
    std::fill(g_raw.begin(), g_raw.end(), 0.0);
    l2_normalize_backward(item_raw.row_span(i), g_item_unit.row_span(i), g_raw);
    const double* xi = item_vecs.row(i);
    for (std::size_t o = 0; o < d_out; ++o) {
      const double g = g_raw[o];
      if (g == 0.0) continue;
      double* gwo = g_w.row(o);
      for (std::size_t k = 0; k < model.w.cols; ++k) gwo[k] += g * xi[k];
      if (bias) g_b[o] += g;
    }
  }

  return loss * inv_b;
}

namespace {

double sem_val_recall(const SemModel& model, const SplitDataset& split, const Matrix& item_vecs,
                      const Matrix& pooled_users, std::size_t k) {
  const Matrix items = sem_project_all(model, item_vecs, true);
  const Matrix users = sem_project_all(model, pooled_users, true);
  const std::size_t d = items.cols;
  auto result = evaluate_ranking(split, Split::Val, k, [&](std::uint32_t u, std::span<double> out) {
    const double* eu = users.row(u);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot({eu, d}, {items.row(i), d});
  });
  return recall_at_k(result);
}

}  // namespace

SemModel train_sem(const SplitDataset& split, const Matrix& item_vecs, const TrainConfig& cfg,
                   std::size_t dim, bool use_bias, TrainInfo* info) {
  cfg.validate();
  if (item_vecs.rows != split.base.n_items)
    throw DataError("train_sem: item vectors do not cover the catalog");
  if (cfg.n_neg < 1) throw ConfigError("train_sem: n_neg must be >= 1");
  bool has_val = false;
  for (const auto& v : split.val_by_user)
    if (!v.empty()) {
      has_val = true;
      break;
    }
  if (!has_val) throw ConfigError("train_sem: no users with validation interactions");

  const Rng root(cfg.seed);
  SemModel model;
  model.w = Matrix(dim, item_vecs.cols);
  {
    Rng init = root.fork("init");
    const double scale = 1.0 / std::sqrt(static_cast<double>(item_vecs.cols));
    for (double& x : model.w.data) x = init.normal(0.0, scale);
  }
  if (use_bias) model.b.assign(dim, 0.0);

  const Matrix pooled = pooled_user_inputs(split, item_vecs);

  std::vector<std::uint32_t> train_idx;
  for (std::size_t idx = 0; idx < split.base.interactions.size(); ++idx) {
    if (split.assignment[idx] != Split::Train) continue;
    // cold anchors (no train history) are excluded; cannot happen for an
    // interaction's own user, but keep the guard for generality
    if (!split.train_by_user[split.base.interactions[idx].user].empty())
      train_idx.push_back(static_cast<std::uint32_t>(idx));
  }

  AdamParams opt{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  AdamState st_w, st_b;
  std::uint64_t t = 0;

  EarlyStopper stopper(cfg.patience);
  SemModel best = model;
  TrainInfo ti;
  Matrix g_w;
  std::vector<double> g_b;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng order_rng = root.fork("order", epoch);
    order_rng.shuffle(train_idx);
    Rng neg_rng = root.fork("neg", epoch);

    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + cfg.batch_size);
      SemBatch batch;
      for (std::size_t p = start; p < end; ++p) {
        const auto& e = split.base.interactions[train_idx[p]];
        batch.users.push_back(e.user);
        batch.pos_items.push_back(e.item);
        std::vector<std::uint32_t> negs(cfg.n_neg);
        for (auto& n : negs) n = static_cast<std::uint32_t>(neg_rng.below(split.base.n_items));
        batch.negatives.push_back(std::move(negs));
      }
      sem_batch_loss_and_grad(model, item_vecs, pooled, batch, cfg.tau, g_w, g_b);
      ++t;
      adam_step(model.w.data, g_w.data, st_w, opt, t);
      if (use_bias) adam_step(model.b, g_b, st_b, opt, t);
    }
    ti.epochs_run = epoch;

    if (epoch % cfg.eval_every == 0) {
      const double recall = sem_val_recall(model, split, item_vecs, pooled, cfg.eval_k);
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
