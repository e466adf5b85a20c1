#include "complat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "complat/errors.hpp"
#include "complat/parallel.hpp"

namespace complat {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require_comparable(const RankingResult& a, const RankingResult& b) {
  if (a.k != b.k) throw DataError("ranking results disagree on K");
  if (a.users != b.users) throw DataError("ranking results cover different users");
}

std::size_t intersection_size(const std::vector<std::uint32_t>& a_sorted,
                              const std::vector<std::uint32_t>& b_sorted) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a_sorted.size() && j < b_sorted.size()) {
    if (a_sorted[i] < b_sorted[j])
      ++i;
    else if (b_sorted[j] < a_sorted[i])
      ++j;
    else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

std::vector<std::uint32_t> sorted_copy(const std::vector<std::uint32_t>& v) {
  std::vector<std::uint32_t> out = v;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::uint32_t> top_k(std::span<const double> scores, std::size_t k,
                                 std::span<const std::uint32_t> excluded) {
  if (k < 1) throw ConfigError("top_k requires K >= 1");
  std::vector<std::uint32_t> cand;
  cand.reserve(scores.size());
  for (std::uint32_t i = 0; i < scores.size(); ++i) {
    if (!std::binary_search(excluded.begin(), excluded.end(), i)) cand.push_back(i);
  }
  const auto better = [&scores](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  if (cand.size() > k) {
    std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                     better);
    cand.resize(k);
  }
  std::sort(cand.begin(), cand.end(), better);
  return cand;
}

std::vector<std::uint32_t> hit_set(const std::vector<std::uint32_t>& list,
                                   const std::vector<std::uint32_t>& truth_sorted) {
  std::vector<std::uint32_t> hits;
  for (std::uint32_t item : list)
    if (std::binary_search(truth_sorted.begin(), truth_sorted.end(), item)) hits.push_back(item);
  std::sort(hits.begin(), hits.end());
  return hits;
}

double recall_at_k(const RankingResult& r, MetricCounts* counts) {
  double sum = 0.0;
  MetricCounts c;
  for (std::size_t u = 0; u < r.users.size(); ++u) {
    if (r.truths[u].empty()) {
      ++c.skipped;
      continue;
    }
    sum += static_cast<double>(hit_set(r.lists[u], r.truths[u]).size()) /
           static_cast<double>(r.truths[u].size());
    ++c.evaluated;
  }
  if (counts) *counts = c;
  return c.evaluated == 0 ? kNan : sum / static_cast<double>(c.evaluated);
}

double ndcg_at_k(const RankingResult& r, MetricCounts* counts) {
  double sum = 0.0;
  MetricCounts c;
  for (std::size_t u = 0; u < r.users.size(); ++u) {
    const auto& truth = r.truths[u];
    if (truth.empty()) {
      ++c.skipped;
      continue;
    }
    double dcg = 0.0;
    for (std::size_t rank = 0; rank < r.lists[u].size(); ++rank) {
      if (std::binary_search(truth.begin(), truth.end(), r.lists[u][rank]))
        dcg += 1.0 / std::log2(static_cast<double>(rank) + 2.0);
    }
    double idcg = 0.0;
    const std::size_t ideal = std::min(truth.size(), r.k);
    for (std::size_t rank = 0; rank < ideal; ++rank)
      idcg += 1.0 / std::log2(static_cast<double>(rank) + 2.0);
    sum += dcg / idcg;
    ++c.evaluated;
  }
  if (counts) *counts = c;
  return c.evaluated == 0 ? kNan : sum / static_cast<double>(c.evaluated);
}

double hit_at_k(const RankingResult& r, MetricCounts* counts) {
  double sum = 0.0;
  MetricCounts c;
  for (std::size_t u = 0; u < r.users.size(); ++u) {
    if (r.truths[u].empty()) {
      ++c.skipped;
      continue;
    }
    sum += hit_set(r.lists[u], r.truths[u]).empty() ? 0.0 : 1.0;
    ++c.evaluated;
  }
  if (counts) *counts = c;
  return c.evaluated == 0 ? kNan : sum / static_cast<double>(c.evaluated);
}

double hit_jaccard(const RankingResult& a, const RankingResult& b, MetricCounts* counts) {
  require_comparable(a, b);
  double sum = 0.0;
  MetricCounts c;
  for (std::size_t u = 0; u < a.users.size(); ++u) {
    const auto ha = hit_set(a.lists[u], a.truths[u]);
    const auto hb = hit_set(b.lists[u], b.truths[u]);
    const std::size_t inter = intersection_size(ha, hb);
    const std::size_t uni = ha.size() + hb.size() - inter;
    if (uni == 0) {
      ++c.skipped;
      continue;
    }
    sum += static_cast<double>(inter) / static_cast<double>(uni);
    ++c.evaluated;
  }
  if (counts) *counts = c;
  return c.evaluated == 0 ? kNan : sum / static_cast<double>(c.evaluated);
}

double list_jaccard(const RankingResult& a, const RankingResult& b, MetricCounts* counts) {
  require_comparable(a, b);
  double sum = 0.0;
  MetricCounts c;
  for (std::size_t u = 0; u < a.users.size(); ++u) {
    const auto la = sorted_copy(a.lists[u]);
    const auto lb = sorted_copy(b.lists[u]);
    const std::size_t inter = intersection_size(la, lb);
    const std::size_t uni = la.size() + lb.size() - inter;
    if (uni == 0) {
      ++c.skipped;
      continue;
    }
    sum += static_cast<double>(inter) / static_cast<double>(uni);
    ++c.evaluated;
  }
  if (counts) *counts = c;
  return c.evaluated == 0 ? kNan : sum / static_cast<double>(c.evaluated);
}

double comp_ratio(const RankingResult& a, const RankingResult& b, CompMode mode,
                  MetricCounts* counts) {
  require_comparable(a, b);
  double sum = 0.0;
  std::size_t sym_total = 0, uni_total = 0;
  MetricCounts c;
  for (std::size_t u = 0; u < a.users.size(); ++u) {
    const auto ha = hit_set(a.lists[u], a.truths[u]);
    const auto hb = hit_set(b.lists[u], b.truths[u]);
    const std::size_t inter = intersection_size(ha, hb);
    const std::size_t uni = ha.size() + hb.size() - inter;
    const std::size_t sym = uni - inter;
    if (uni == 0) {
      ++c.skipped;
      continue;
    }
    sum += static_cast<double>(sym) / static_cast<double>(uni);
    sym_total += sym;
    uni_total += uni;
    ++c.evaluated;
  }
  if (counts) *counts = c;
  if (mode == CompMode::Macro)
    return c.evaluated == 0 ? kNan : sum / static_cast<double>(c.evaluated);
  return uni_total == 0 ? kNan : static_cast<double>(sym_total) / static_cast<double>(uni_total);
}

double union_upper_bound(const RankingResult& a, const RankingResult& b, MetricCounts* counts) {
  require_comparable(a, b);
  double sum = 0.0;
  MetricCounts c;
  for (std::size_t u = 0; u < a.users.size(); ++u) {
    const auto& truth = a.truths[u];
    if (truth.empty()) {
      ++c.skipped;
      continue;
    }
    std::vector<std::uint32_t> uni = sorted_copy(a.lists[u]);
    for (std::uint32_t item : b.lists[u]) uni.push_back(item);
    std::sort(uni.begin(), uni.end());
    uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
    std::size_t covered = 0;
    for (std::uint32_t item : uni)
      if (std::binary_search(truth.begin(), truth.end(), item)) ++covered;
    sum += static_cast<double>(covered) / static_cast<double>(truth.size());
    ++c.evaluated;
  }
  if (counts) *counts = c;
  return c.evaluated == 0 ? kNan : sum / static_cast<double>(c.evaluated);
}

StratifiedRecall stratified_recall(const RankingResult& r, const PopularityTable& strata) {
  StratifiedRecall out;
  double sums[3] = {0.0, 0.0, 0.0};
  MetricCounts cs[3];
  for (std::size_t u = 0; u < r.users.size(); ++u) {
    const auto hits = hit_set(r.lists[u], r.truths[u]);
    std::size_t truth_in[3] = {0, 0, 0};
    std::size_t hits_in[3] = {0, 0, 0};
    for (std::uint32_t item : r.truths[u]) ++truth_in[static_cast<std::size_t>(strata.stratum[item])];
    for (std::uint32_t item : hits) ++hits_in[static_cast<std::size_t>(strata.stratum[item])];
    for (std::size_t s = 0; s < 3; ++s) {
      if (truth_in[s] == 0) {
        ++cs[s].skipped;
        continue;
      }
      sums[s] += static_cast<double>(hits_in[s]) / static_cast<double>(truth_in[s]);
      ++cs[s].evaluated;
    }
  }
  StratumRecall* slots[3] = {&out.head, &out.mid, &out.cold};
  for (std::size_t s = 0; s < 3; ++s) {
    slots[s]->counts = cs[s];
    slots[s]->value = cs[s].evaluated == 0 ? kNan : sums[s] / static_cast<double>(cs[s].evaluated);
  }
  return out;
}

HitComposition hit_composition(const RankingResult& a, const RankingResult& b) {
  require_comparable(a, b);
  HitComposition out;
  std::size_t only_a = 0, only_b = 0, both = 0;
  for (std::size_t u = 0; u < a.users.size(); ++u) {
    const auto ha = hit_set(a.lists[u], a.truths[u]);
    const auto hb = hit_set(b.lists[u], b.truths[u]);
    const std::size_t inter = intersection_size(ha, hb);
    only_a += ha.size() - inter;
    only_b += hb.size() - inter;
    both += inter;
  }
  out.pool = only_a + only_b + both;
  if (out.pool == 0) {
    out.a_unique = out.b_unique = out.common = kNan;
    return out;
  }
  const double pool = static_cast<double>(out.pool);
  out.a_unique = static_cast<double>(only_a) / pool;
  out.b_unique = static_cast<double>(only_b) / pool;
  out.common = static_cast<double>(both) / pool;
  return out;
}

RankingResult evaluate_ranking(const SplitDataset& split, Split target, std::size_t k,
                               const UserScorer& scorer) {
  if (target == Split::Train) throw ConfigError("evaluation target must be val or test");
  const auto& truth_by_user = target == Split::Val ? split.val_by_user : split.test_by_user;

  RankingResult r;
  r.k = k;
  for (std::uint32_t u = 0; u < split.base.n_users; ++u)
    if (!truth_by_user[u].empty()) r.users.push_back(u);
  r.lists.resize(r.users.size());
  r.truths.resize(r.users.size());

  parallel_for(r.users.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores(split.base.n_items);
    std::vector<std::uint32_t> excluded;
    for (std::size_t idx = begin; idx < end; ++idx) {
      const std::uint32_t u = r.users[idx];
      excluded = split.train_by_user[u];
      if (target == Split::Test) {
        excluded.insert(excluded.end(), split.val_by_user[u].begin(), split.val_by_user[u].end());
        std::sort(excluded.begin(), excluded.end());
      }
      scorer(u, scores);
      r.lists[idx] = top_k(scores, k, excluded);
      r.truths[idx] = truth_by_user[u];
    }
  });
  return r;
}

}  // namespace complat
