#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "complat/dataset.hpp"

namespace complat {

// Per evaluation user: ordered top-K list and ground-truth set. Hit sets are
// derived (list ∩ truth) where a metric needs them.
struct RankingResult {
  std::size_t k = 0;
  std::vector<std::uint32_t> users;
  std::vector<std::vector<std::uint32_t>> lists;   // ranked, |list| = min(K, candidates)
  std::vector<std::vector<std::uint32_t>> truths;  // sorted ascending, non-empty
};

// K highest-scoring non-excluded items; descending score, ties by ascending
// item id. excluded must be sorted ascending.
std::vector<std::uint32_t> top_k(std::span<const double> scores, std::size_t k,
                                 std::span<const std::uint32_t> excluded);

std::vector<std::uint32_t> hit_set(const std::vector<std::uint32_t>& list,
                                   const std::vector<std::uint32_t>& truth_sorted);

struct MetricCounts {
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

double recall_at_k(const RankingResult& r, MetricCounts* counts = nullptr);
double ndcg_at_k(const RankingResult& r, MetricCounts* counts = nullptr);
double hit_at_k(const RankingResult& r, MetricCounts* counts = nullptr);

// Mean Jaccard of hit sets over users with a non-empty hit union; users with
// an empty union are skipped and counted. NaN when no user qualifies.
double hit_jaccard(const RankingResult& a, const RankingResult& b, MetricCounts* counts = nullptr);

double list_jaccard(const RankingResult& a, const RankingResult& b, MetricCounts* counts = nullptr);

enum class CompMode { Macro, Micro };

// Macro: mean of |symdiff|/|union| over users with a non-empty hit union.
// Micro: sum of |symdiff| over sum of |union| across all users.
double comp_ratio(const RankingResult& a, const RankingResult& b, CompMode mode,
                  MetricCounts* counts = nullptr);

// Mean over users of |T ∩ (L_A ∪ L_B)| / |T|: the recall ceiling reachable by
// any fusion of the two lists.
double union_upper_bound(const RankingResult& a, const RankingResult& b,
                         MetricCounts* counts = nullptr);

struct StratumRecall {
  double value = 0.0;  // NaN when no user had truth in the stratum
  MetricCounts counts;
};

struct StratifiedRecall {
  StratumRecall head, mid, cold;
};

StratifiedRecall stratified_recall(const RankingResult& r, const PopularityTable& strata);

// Shares of the multiset of per-user hit unions that are unique to A, unique
// to B, or common. Shares sum to 1 when the pool is non-empty.
struct HitComposition {
  double a_unique = 0.0;
  double b_unique = 0.0;
  double common = 0.0;
  std::size_t pool = 0;  // 0 means undefined
};

HitComposition hit_composition(const RankingResult& a, const RankingResult& b);

// Fills scores for every item given a user.
using UserScorer = std::function<void(std::uint32_t user, std::span<double> scores)>;

// Top-K lists for every user with ground truth in `target`. Candidates are
// the full catalog minus the user's train positives (and val positives when
// target == Test). Parallel across users; output independent of thread count.
RankingResult evaluate_ranking(const SplitDataset& split, Split target, std::size_t k,
                               const UserScorer& scorer);

}  // namespace complat
