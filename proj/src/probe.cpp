#include "complat/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "complat/errors.hpp"
#include "complat/losses.hpp"
#include "complat/metrics.hpp"
#include "complat/optim.hpp"
#include "complat/rng.hpp"

namespace complat {

const char* to_string(ProbeArch arch) {
  switch (arch) {
    case ProbeArch::Identity: return "identity";
    case ProbeArch::Linear: return "linear";
    case ProbeArch::Mlp0: return "mlp0";
    case ProbeArch::Mlp1: return "mlp1";
    case ProbeArch::Mlp2: return "mlp2";
    case ProbeArch::Mlp3: return "mlp3";
  }
  return "?";
}

ProbeArch probe_arch_from_string(const std::string& name) {
  if (name == "identity") return ProbeArch::Identity;
  if (name == "linear") return ProbeArch::Linear;
  if (name == "mlp0") return ProbeArch::Mlp0;
  if (name == "mlp1") return ProbeArch::Mlp1;
  if (name == "mlp2") return ProbeArch::Mlp2;
  if (name == "mlp3") return ProbeArch::Mlp3;
  throw ConfigError("unknown probe architecture: " + name);
}

std::vector<std::size_t> probe_hidden_widths(ProbeArch arch) {
  switch (arch) {
    case ProbeArch::Identity:
    case ProbeArch::Linear: return {};
    case ProbeArch::Mlp0: return {64};
    case ProbeArch::Mlp1: return {256};
    case ProbeArch::Mlp2: return {256, 256};
    case ProbeArch::Mlp3: return {256, 256, 256};
  }
  return {};
}

Matrix ProbeMapping::apply(const Matrix& x) const {
  if (arch == ProbeArch::Identity) return x;
  Matrix a = x;
  Matrix z;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    affine_forward(a, weights[l], biases[l], z);
    if (l + 1 < weights.size())
      for (double& v : z.data) v = std::max(v, 0.0);
    a = std::move(z);
  }
  return a;
}

std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> split_items(
    std::size_t n_items, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0) throw ConfigError("item split fraction must be in (0,1)");
  std::vector<std::uint32_t> order(n_items);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).fork("item-split");
  rng.shuffle(order);
  const std::size_t n_fit = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n_items)));
  std::vector<std::uint32_t> fit(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_fit));
  std::vector<std::uint32_t> held(order.begin() + static_cast<std::ptrdiff_t>(n_fit), order.end());
  std::sort(fit.begin(), fit.end());
  std::sort(held.begin(), held.end());
  return {std::move(fit), std::move(held)};
}

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::uint32_t> rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy_n(m.row(rows[r]), m.cols, out.row(r));
  return out;
}

struct MlpGrads {
  std::vector<Matrix> w;
  std::vector<std::vector<double>> b;
};

// Mean-squared-error loss over the batch with full backprop.
double mlp_mse_backward(const ProbeMapping& map, const Matrix& x, const Matrix& y,
                        MlpGrads& grads) {
  const std::size_t layers = map.weights.size();
  std::vector<Matrix> act(layers + 1);  // post-activation inputs per layer
  std::vector<Matrix> pre(layers);      // pre-activation outputs
  act[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    affine_forward(act[l], map.weights[l], map.biases[l], pre[l]);
    if (l + 1 < layers) {
      act[l + 1] = pre[l];
      for (double& v : act[l + 1].data) v = std::max(v, 0.0);
    }
  }
  const Matrix& out = layers == 0 ? x : pre[layers - 1];

  const double scale = 1.0 / static_cast<double>(y.rows * y.cols);
  double loss = 0.0;
  Matrix g(out.rows, out.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    const double diff = out.data[k] - y.data[k];
    loss += diff * diff;
    g.data[k] = 2.0 * scale * diff;
  }
  loss *= scale;

  for (std::size_t l = layers; l-- > 0;) {
    Matrix gx(act[l].rows, act[l].cols);
    affine_backward(act[l], map.weights[l], g, grads.w[l], grads.b[l], l > 0 ? &gx : nullptr);
    if (l > 0) {
      for (std::size_t k = 0; k < gx.data.size(); ++k)
        if (pre[l - 1].data[k] <= 0.0) gx.data[k] = 0.0;
      g = std::move(gx);
    }
  }
  return loss;
}

ProbeMapping init_mapping(ProbeArch arch, std::size_t d_in, std::size_t d_out,
                          std::uint64_t seed) {
  ProbeMapping map;
  map.arch = arch;
  if (arch == ProbeArch::Identity) {
    if (d_in != d_out)
      throw ConfigError("identity probe requires matching input and output dimensions");
    return map;
  }
  std::vector<std::size_t> dims;
  dims.push_back(d_in);
  for (std::size_t h : probe_hidden_widths(arch)) dims.push_back(h);
  dims.push_back(d_out);
  const Rng root(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix w(dims[l + 1], dims[l]);
    Rng rng = root.fork("layer", l);
    const bool hidden_out = l + 2 < dims.size();
    const double scale = hidden_out ? std::sqrt(2.0 / static_cast<double>(dims[l]))
                                    : 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (double& v : w.data) v = rng.normal(0.0, scale);
    map.weights.push_back(std::move(w));
    map.biases.emplace_back(dims[l + 1], 0.0);
  }
  return map;
}

}  // namespace

ProbeMapping fit_probe(const Matrix& sem, const Matrix& cf,
                       std::span<const std::uint32_t> fit_ids, ProbeArch arch,
                       const ProbeFitConfig& cfg) {
  if (sem.rows != cf.rows) throw DataError("fit_probe: row spaces differ");
  ProbeMapping map = init_mapping(arch, sem.cols, cf.cols, cfg.seed);
  if (arch == ProbeArch::Identity) return map;

  const Matrix x_all = gather_rows(sem, fit_ids);
  const Matrix y_all = gather_rows(cf, fit_ids);
  const bool full_batch = fit_ids.size() <= cfg.full_batch_limit;

  MlpGrads grads;
  std::vector<AdamState> st_w(map.weights.size()), st_b(map.weights.size());
  grads.w.resize(map.weights.size());
  grads.b.resize(map.weights.size());
  AdamParams opt{cfg.lr, 0.9, 0.999, 1e-8, 0.0};
  std::uint64_t t = 0;

  const Rng root(cfg.seed);
  double best = std::numeric_limits<double>::infinity();
  std::size_t flat = 0;

  std::vector<std::uint32_t> order(fit_ids.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    const std::size_t bs = full_batch ? fit_ids.size() : cfg.batch_size;
    if (!full_batch) {
      Rng shuffle_rng = root.fork("order", epoch);
      shuffle_rng.shuffle(order);
    }
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      Matrix x, y;
      if (full_batch) {
        x = x_all;
        y = y_all;
      } else {
        std::vector<std::uint32_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                        order.begin() + static_cast<std::ptrdiff_t>(end));
        x = gather_rows(x_all, rows);
        y = gather_rows(y_all, rows);
      }
      for (std::size_t l = 0; l < map.weights.size(); ++l) {
        grads.w[l] = Matrix(map.weights[l].rows, map.weights[l].cols);
        grads.b[l].assign(map.biases[l].size(), 0.0);
      }
      epoch_loss += mlp_mse_backward(map, x, y, grads);
      ++batches;
      ++t;
      for (std::size_t l = 0; l < map.weights.size(); ++l) {
        adam_step(map.weights[l].data, grads.w[l].data, st_w[l], opt, t);
        adam_step(map.biases[l], grads.b[l], st_b[l], opt, t);
      }
    }
    epoch_loss /= static_cast<double>(batches);

    if (epoch_loss < best * (1.0 - cfg.plateau_rel)) {
      best = epoch_loss;
      flat = 0;
    } else {
      if (++flat >= cfg.plateau_window) break;
    }
  }
  return map;
}

double r_squared(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target)) throw DataError("r_squared: shape mismatch");
  std::vector<double> col_mean(target.cols, 0.0);
  for (std::size_t r = 0; r < target.rows; ++r)
    for (std::size_t c = 0; c < target.cols; ++c) col_mean[c] += target.at(r, c);
  for (double& m : col_mean) m /= static_cast<double>(target.rows);

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t r = 0; r < target.rows; ++r) {
    for (std::size_t c = 0; c < target.cols; ++c) {
      const double d = pred.at(r, c) - target.at(r, c);
      ss_res += d * d;
      const double m = target.at(r, c) - col_mean[c];
      ss_tot += m * m;
    }
  }
  if (ss_tot == 0.0) throw DataError("r_squared: target has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double mean_cosine(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target)) throw DataError("mean_cosine: shape mismatch");
  double sum = 0.0;
  for (std::size_t r = 0; r < pred.rows; ++r) sum += cosine(pred.row_span(r), target.row_span(r));
  return sum / static_cast<double>(pred.rows);
}

namespace {

std::vector<std::uint32_t> top_neighbors(const Matrix& m, std::size_t row, std::size_t k) {
  std::vector<double> sims(m.rows);
  for (std::size_t j = 0; j < m.rows; ++j)
    sims[j] = j == row ? -std::numeric_limits<double>::infinity()
                       : cosine(m.row_span(row), m.row_span(j));
  std::vector<std::uint32_t> ids(m.rows);
  std::iota(ids.begin(), ids.end(), 0);
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return a < b;
  };
  std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), better);
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

double jaccard_sorted(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      ++i;
    else if (b[j] < a[i])
      ++j;
    else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double geo_jaccard(const Matrix& pred, const Matrix& target, std::size_t k) {
  if (!pred.same_shape(target)) throw DataError("geo_jaccard: shape mismatch");
  if (k >= pred.rows) throw ConfigError("geo_jaccard: k must be below the row count");
  double sum = 0.0;
  for (std::size_t r = 0; r < pred.rows; ++r)
    sum += jaccard_sorted(top_neighbors(pred, r, k), top_neighbors(target, r, k));
  return sum / static_cast<double>(pred.rows);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t p = i; p <= j; ++p) ranks[idx[p]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw DataError("spearman: size mismatch");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = ra[i] - ma;
    const double db = rb[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

double rank_correlation(const Matrix& pred, const Matrix& target, std::size_t sample_size,
                        std::uint64_t seed) {
  if (!pred.same_shape(target)) throw DataError("rank_correlation: shape mismatch");
  const std::size_t n = pred.rows;
  if (sample_size < 1 || sample_size > n - 1)
    throw ConfigError("rank_correlation: sample size must be in [1, rows-1]");
  const Rng root(seed);
  double sum = 0.0;
  std::vector<double> sp(sample_size), st(sample_size);
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng = root.fork("rankcor", r);
    const auto sample = rng.sample_without_replacement(n - 1, sample_size);
    for (std::size_t s = 0; s < sample_size; ++s) {
      const std::size_t j = sample[s] >= r ? sample[s] + 1 : sample[s];  // skip self
      sp[s] = cosine(pred.row_span(r), pred.row_span(j));
      st[s] = cosine(target.row_span(r), target.row_span(j));
    }
    sum += spearman_rho(sp, st);
  }
  return sum / static_cast<double>(n);
}

double probe_list_jaccard(const Matrix& cf_users, const Matrix& cf_items, const Matrix& projected,
                          const SplitDataset& split, std::span<const std::uint32_t> catalog,
                          std::size_t k) {
  if (projected.rows != catalog.size()) throw DataError("projected rows must align with catalog");
  const std::size_t d = cf_users.cols;
  double sum = 0.0;
  std::size_t counted = 0;
  std::vector<double> s_target(catalog.size()), s_proj(catalog.size());
  for (std::uint32_t u = 0; u < cf_users.rows; ++u) {
    const auto& train = split.train_by_user[u];
    std::vector<std::uint32_t> excluded;
    for (std::uint32_t c = 0; c < catalog.size(); ++c)
      if (std::binary_search(train.begin(), train.end(), catalog[c])) excluded.push_back(c);
    if (excluded.size() >= catalog.size()) continue;
    const double* eu = cf_users.row(u);
    for (std::size_t c = 0; c < catalog.size(); ++c) {
      s_target[c] = dot({eu, d}, {cf_items.row(catalog[c]), d});
      s_proj[c] = dot({eu, d}, {projected.row(c), d});
    }
    auto la = top_k(s_target, k, excluded);
    auto lb = top_k(s_proj, k, excluded);
    std::sort(la.begin(), la.end());
    std::sort(lb.begin(), lb.end());
    sum += jaccard_sorted(la, lb);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

std::pair<double, double> probe_downstream_recall(const Matrix& cf_users, const Matrix& cf_items,
                                                  const Matrix& projected,
                                                  const SplitDataset& split,
                                                  std::span<const std::uint32_t> catalog,
                                                  std::size_t k, RecallScope scope) {
  if (projected.rows != catalog.size()) throw DataError("projected rows must align with catalog");
  const std::size_t d = cf_users.cols;

  if (scope == RecallScope::FullCatalog) {
    Matrix mixed = cf_items;
    for (std::size_t c = 0; c < catalog.size(); ++c)
      std::copy_n(projected.row(c), d, mixed.row(catalog[c]));
    const auto run = [&](const Matrix& items) {
      auto result = evaluate_ranking(split, Split::Test, k,
                                     [&](std::uint32_t u, std::span<double> out) {
                                       const double* eu = cf_users.row(u);
                                       for (std::size_t i = 0; i < out.size(); ++i)
                                         out[i] = dot({eu, d}, {items.row(i), d});
                                     });
      return recall_at_k(result);
    };
    return {run(cf_items), run(mixed)};
  }

  // Partition scope: candidates, truths, and exclusions all restricted to the
  // catalog subset.
  double sum_cf = 0.0, sum_ps = 0.0;
  std::size_t counted = 0;
  std::vector<double> s_target(catalog.size()), s_proj(catalog.size());
  for (std::uint32_t u = 0; u < cf_users.rows; ++u) {
    const auto& train = split.train_by_user[u];
    const auto& val = split.val_by_user[u];
    const auto& test = split.test_by_user[u];
    std::vector<std::uint32_t> excluded, truth;
    for (std::uint32_t c = 0; c < catalog.size(); ++c) {
      const std::uint32_t item = catalog[c];
      if (std::binary_search(train.begin(), train.end(), item) ||
          std::binary_search(val.begin(), val.end(), item))
        excluded.push_back(c);
      else if (std::binary_search(test.begin(), test.end(), item))
        truth.push_back(c);
    }
    if (truth.empty() || excluded.size() >= catalog.size()) continue;
    const double* eu = cf_users.row(u);
    for (std::size_t c = 0; c < catalog.size(); ++c) {
      s_target[c] = dot({eu, d}, {cf_items.row(catalog[c]), d});
      s_proj[c] = dot({eu, d}, {projected.row(c), d});
    }
    const auto hits = [&](const std::vector<double>& scores) {
      const auto list = top_k(scores, k, excluded);
      std::size_t h = 0;
      for (std::uint32_t c : list)
        if (std::binary_search(truth.begin(), truth.end(), c)) ++h;
      return static_cast<double>(h) / static_cast<double>(truth.size());
    };
    sum_cf += hits(s_target);
    sum_ps += hits(s_proj);
    ++counted;
  }
  if (counted == 0) return {0.0, 0.0};
  return {sum_cf / static_cast<double>(counted), sum_ps / static_cast<double>(counted)};
}

double alignment_batch_loss(const ProbeMapping& g_cf, const ProbeMapping& g_sem, const Matrix& cf,
                            const Matrix& sem, std::span<const std::uint32_t> batch, double tau) {
  const Matrix a = g_cf.apply(gather_rows(cf, batch));
  const Matrix p = g_sem.apply(gather_rows(sem, batch));
  const std::size_t n = batch.size();
  double loss = 0.0;
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = cosine(a.row_span(i), p.row_span(j)) / tau;
      m = std::max(m, row[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) denom += std::exp(row[j] - m);
    loss += std::log(denom) + m - row[i];
  }
  return loss / static_cast<double>(n);
}

std::pair<ProbeMapping, ProbeMapping> train_contrastive_alignment(
    const Matrix& sem, const Matrix& cf, std::span<const std::uint32_t> fit_ids,
    const AlignmentConfig& cfg) {
  if (cfg.tau <= 0.0) throw ConfigError("alignment temperature must be positive");
  ProbeMapping head_cf = init_mapping(ProbeArch::Linear, cf.cols, cfg.d_out,
                                      Rng(cfg.seed).fork("cf-head").seed());
  ProbeMapping head_sem = init_mapping(ProbeArch::Linear, sem.cols, cfg.d_out,
                                       Rng(cfg.seed).fork("sem-head").seed());

  AdamParams opt{cfg.lr, 0.9, 0.999, 1e-8, 0.0};
  AdamState st[4];
  std::uint64_t t = 0;
  const Rng root(cfg.seed);

  std::vector<std::uint32_t> order(fit_ids.begin(), fit_ids.end());
  double best = std::numeric_limits<double>::infinity();
  std::size_t flat = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng shuffle_rng = root.fork("order", epoch);
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::uint32_t> ids(order.data() + start, end - start);
      if (ids.size() < 2) continue;

      const Matrix xc = gather_rows(cf, ids);
      const Matrix xs = gather_rows(sem, ids);
      Matrix a, p;
      affine_forward(xc, head_cf.weights[0], head_cf.biases[0], a);
      affine_forward(xs, head_sem.weights[0], head_sem.biases[0], p);

      const std::size_t n = ids.size();
      Matrix ga(n, cfg.d_out), gp(n, cfg.d_out);
      double loss = 0.0;
      std::vector<double> logits(n);
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          logits[j] = cosine(a.row_span(i), p.row_span(j)) / cfg.tau;
          m = std::max(m, logits[j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) denom += std::exp(logits[j] - m);
        loss += std::log(denom) + m - logits[i];
        for (std::size_t j = 0; j < n; ++j) {
          const double soft = std::exp(logits[j] - m) / denom;
          const double g = inv_n * (soft - (i == j ? 1.0 : 0.0)) / cfg.tau;
          cosine_backward(a.row_span(i), p.row_span(j), g, ga.row_span(i), gp.row_span(j));
        }
      }
      epoch_loss += loss * inv_n;
      ++batches;

      Matrix gw_cf(head_cf.weights[0].rows, head_cf.weights[0].cols);
      Matrix gw_sem(head_sem.weights[0].rows, head_sem.weights[0].cols);
      std::vector<double> gb_cf(cfg.d_out, 0.0), gb_sem(cfg.d_out, 0.0);
      affine_backward(xc, head_cf.weights[0], ga, gw_cf, gb_cf, nullptr);
      affine_backward(xs, head_sem.weights[0], gp, gw_sem, gb_sem, nullptr);
      ++t;
      adam_step(head_cf.weights[0].data, gw_cf.data, st[0], opt, t);
      adam_step(head_cf.biases[0], gb_cf, st[1], opt, t);
      adam_step(head_sem.weights[0].data, gw_sem.data, st[2], opt, t);
      adam_step(head_sem.biases[0], gb_sem, st[3], opt, t);
    }
    if (batches == 0) throw ConfigError("alignment training needs batches of at least 2 items");
    epoch_loss /= static_cast<double>(batches);
    if (epoch_loss < best * (1.0 - cfg.plateau_rel)) {
      best = epoch_loss;
      flat = 0;
    } else if (++flat >= cfg.plateau_window) {
      break;
    }
  }
  return {std::move(head_cf), std::move(head_sem)};
}

}  // namespace complat
