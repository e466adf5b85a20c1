#include <doctest.h>

#include <cmath>
#include <set>

#include "complat/errors.hpp"
#include "complat/metrics.hpp"
#include "complat/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace complat;

namespace {

RankingResult single_user(std::size_t k, std::vector<std::uint32_t> list,
                          std::vector<std::uint32_t> truth) {
  RankingResult r;
  r.k = k;
  r.users = {0};
  r.lists = {std::move(list)};
  r.truths = {std::move(truth)};
  return r;
}

}  // namespace

TEST_CASE("top_k ordering and ties") {
  const std::vector<double> scores{3.0, 1.0, 2.0};
  CHECK(top_k(scores, 2, {}) == std::vector<std::uint32_t>{0, 2});

  const std::vector<double> equal{1.0, 1.0, 1.0};
  CHECK(top_k(equal, 3, {}) == std::vector<std::uint32_t>{0, 1, 2});

  const std::vector<std::uint32_t> excluded{0};
  CHECK(top_k(scores, 2, excluded) == std::vector<std::uint32_t>{2, 1});
}

TEST_CASE("top_k matches full-sort oracle on random instances") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1000;
    std::vector<double> scores(n);
    for (auto& s : scores) s = rng.below(200);  // ties guaranteed
    std::set<std::uint32_t> excluded;
    for (int e = 0; e < 20; ++e) excluded.insert(static_cast<std::uint32_t>(rng.below(n)));
    std::vector<std::uint32_t> excl(excluded.begin(), excluded.end());
    CHECK(top_k(scores, 25, excl) == oracle::top_k_sorted(scores, 25, excluded));
  }
}

TEST_CASE("recall, ndcg, hit on canonical cases") {
  // all test items retrieved
  auto r = single_user(3, {5, 6, 7}, {5, 6, 7});
  CHECK(recall_at_k(r) == doctest::Approx(1.0));
  CHECK(hit_at_k(r) == doctest::Approx(1.0));
  CHECK(ndcg_at_k(r) == doctest::Approx(1.0));

  // no hits
  r = single_user(3, {1, 2, 3}, {9});
  CHECK(recall_at_k(r) == doctest::Approx(0.0));
  CHECK(hit_at_k(r) == doctest::Approx(0.0));
  CHECK(ndcg_at_k(r) == doctest::Approx(0.0));

  // single test item at rank 1
  r = single_user(2, {4, 1}, {4});
  CHECK(ndcg_at_k(r) == doctest::Approx(1.0));
  // single test item at rank 2 of K=2 -> 1/log2(3)
  r = single_user(2, {1, 4}, {4});
  CHECK(ndcg_at_k(r) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-9));
}

TEST_CASE("pair metrics on canonical cases") {
  auto a = single_user(20, {1, 2}, {1, 2, 3});
  auto b = single_user(20, {2, 3}, {1, 2, 3});
  // H_A = {1,2}, H_B = {2,3}
  CHECK(hit_jaccard(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(comp_ratio(a, b, CompMode::Macro) == doctest::Approx(2.0 / 3.0));
  CHECK(comp_ratio(a, b, CompMode::Micro) == doctest::Approx(2.0 / 3.0));

  CHECK(hit_jaccard(a, a) == doctest::Approx(1.0));
  CHECK(comp_ratio(a, a, CompMode::Macro) == doctest::Approx(0.0));
  CHECK(list_jaccard(a, a) == doctest::Approx(1.0));

  auto disjoint_b = single_user(20, {8, 9}, {1, 2, 3});
  CHECK(list_jaccard(a, disjoint_b) == doctest::Approx(0.0));

  // UUB: list A covers all of T regardless of B
  auto full_a = single_user(20, {1, 2, 3}, {1, 2, 3});
  CHECK(union_upper_bound(full_a, disjoint_b) == doctest::Approx(1.0));
  auto miss_a = single_user(20, {7}, {1, 2, 3});
  auto miss_b = single_user(20, {8}, {1, 2, 3});
  CHECK(union_upper_bound(miss_a, miss_b) == doctest::Approx(0.0));
}

TEST_CASE("hit composition degenerate cases") {
  auto a = single_user(20, {1, 2}, {1, 2, 3, 4});
  auto b = single_user(20, {3, 4}, {1, 2, 3, 4});
  auto comp = hit_composition(a, b);
  CHECK(comp.common == doctest::Approx(0.0));
  CHECK(comp.a_unique == doctest::Approx(0.5));

  auto same = hit_composition(a, a);
  CHECK(same.common == doctest::Approx(1.0));

  auto none_a = single_user(20, {9}, {1});
  auto none_b = single_user(20, {8}, {1});
  CHECK(hit_composition(none_a, none_b).pool == 0);
  CHECK(std::isnan(hit_jaccard(none_a, none_b)));
}

TEST_CASE("metrics match brute-force oracles on random instances") {
  Rng rng(161);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n_users = 1 + rng.below(50);
    const std::size_t n_items = 10 + rng.below(191);
    const std::size_t k = std::vector<std::size_t>{5, 10, 20}[rep % 3];
    auto pair = testutil::random_paired_results(rng, n_users, n_items, k);

    CHECK(recall_at_k(pair.a) == doctest::Approx(oracle::recall(pair.a)).epsilon(1e-12));
    CHECK(ndcg_at_k(pair.a) == doctest::Approx(oracle::ndcg(pair.a)).epsilon(1e-12));
    CHECK(hit_at_k(pair.a) == doctest::Approx(oracle::hit_rate(pair.a)).epsilon(1e-12));
    CHECK(list_jaccard(pair.a, pair.b) ==
          doctest::Approx(oracle::list_jaccard(pair.a, pair.b)).epsilon(1e-12));

    const double hj = hit_jaccard(pair.a, pair.b);
    const double ohj = oracle::hit_jaccard(pair.a, pair.b);
    if (std::isnan(ohj))
      CHECK(std::isnan(hj));
    else
      CHECK(hj == doctest::Approx(ohj).epsilon(1e-12));

    const double cm = comp_ratio(pair.a, pair.b, CompMode::Macro);
    const double ocm = oracle::comp_ratio_macro(pair.a, pair.b);
    if (!std::isnan(ocm)) {
      CHECK(cm == doctest::Approx(ocm).epsilon(1e-12));
      // algebraic identity on the common user subset
      CHECK(cm + hj == doctest::Approx(1.0).epsilon(1e-12));
    }
    const double cmicro = comp_ratio(pair.a, pair.b, CompMode::Micro);
    const double ocmicro = oracle::comp_ratio_micro(pair.a, pair.b);
    if (!std::isnan(ocmicro)) CHECK(cmicro == doctest::Approx(ocmicro).epsilon(1e-12));

    CHECK(union_upper_bound(pair.a, pair.b) ==
          doctest::Approx(oracle::uub(pair.a, pair.b)).epsilon(1e-12));

    const auto comp = hit_composition(pair.a, pair.b);
    const auto ocomp = oracle::composition(pair.a, pair.b);
    if (comp.pool > 0) {
      CHECK(comp.a_unique == doctest::Approx(ocomp[0]).epsilon(1e-12));
      CHECK(comp.b_unique == doctest::Approx(ocomp[1]).epsilon(1e-12));
      CHECK(comp.common == doctest::Approx(ocomp[2]).epsilon(1e-12));
      CHECK(comp.a_unique + comp.b_unique + comp.common == doctest::Approx(1.0).epsilon(1e-12));
    }

    // stratified vs oracle with arbitrary strata
    PopularityTable table;
    table.train_count.assign(n_items, 0);
    table.stratum.resize(n_items);
    for (auto& s : table.stratum)
      s = static_cast<Stratum>(rng.below(3));
    const auto strat = stratified_recall(pair.a, table);
    const auto ostrat = oracle::stratified(pair.a, table);
    const StratumRecall* slots[3] = {&strat.head, &strat.mid, &strat.cold};
    for (int s = 0; s < 3; ++s) {
      if (std::isnan(ostrat[s]))
        CHECK(std::isnan(slots[s]->value));
      else
        CHECK(slots[s]->value == doctest::Approx(ostrat[s]).epsilon(1e-12));
    }
  }
}

TEST_CASE("per-user dominance: UUB bounds both recalls") {
  Rng rng(555);
  for (int rep = 0; rep < 40; ++rep) {
    auto pair = testutil::random_paired_results(rng, 30, 80, 10);
    for (std::size_t u = 0; u < pair.a.users.size(); ++u) {
      const auto ha = hit_set(pair.a.lists[u], pair.a.truths[u]);
      const auto hb = hit_set(pair.b.lists[u], pair.b.truths[u]);
      std::set<std::uint32_t> uni(pair.a.lists[u].begin(), pair.a.lists[u].end());
      uni.insert(pair.b.lists[u].begin(), pair.b.lists[u].end());
      std::size_t covered = 0;
      for (auto i : pair.a.truths[u])
        if (uni.count(i)) ++covered;
      CHECK(covered >= ha.size());
      CHECK(covered >= hb.size());
      // per-user recall contribution <= 1, hit indicator >= recall
      const double rc = double(ha.size()) / double(pair.a.truths[u].size());
      CHECK(rc <= 1.0 + 1e-12);
      CHECK((ha.empty() ? 0.0 : 1.0) >= rc - 1e-12);
    }
  }
}

TEST_CASE("metrics are invariant to user order") {
  Rng rng(777);
  auto pair = testutil::random_paired_results(rng, 25, 60, 10);
  auto shuffled_a = pair.a;
  auto shuffled_b = pair.b;
  std::vector<std::size_t> perm(pair.a.users.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled_a.users[i] = pair.a.users[perm[i]];
    shuffled_a.lists[i] = pair.a.lists[perm[i]];
    shuffled_a.truths[i] = pair.a.truths[perm[i]];
    shuffled_b.users[i] = pair.b.users[perm[i]];
    shuffled_b.lists[i] = pair.b.lists[perm[i]];
    shuffled_b.truths[i] = pair.b.truths[perm[i]];
  }
  CHECK(recall_at_k(shuffled_a) == doctest::Approx(recall_at_k(pair.a)).epsilon(1e-12));
  CHECK(list_jaccard(shuffled_a, shuffled_b) ==
        doctest::Approx(list_jaccard(pair.a, pair.b)).epsilon(1e-12));
  CHECK(union_upper_bound(shuffled_a, shuffled_b) ==
        doctest::Approx(union_upper_bound(pair.a, pair.b)).epsilon(1e-12));
}

TEST_CASE("pair metrics reject mismatched inputs") {
  Rng rng(1);
  auto pair = testutil::random_paired_results(rng, 5, 20, 5);
  auto other = pair.b;
  other.k = 7;
  CHECK_THROWS_AS(static_cast<void>(hit_jaccard(pair.a, other)), DataError);
  other = pair.b;
  other.users.push_back(99);
  other.lists.emplace_back();
  other.truths.emplace_back();
  CHECK_THROWS_AS(static_cast<void>(list_jaccard(pair.a, other)), DataError);
}

TEST_CASE("evaluate_ranking excludes seen items and honors ground truth") {
  Rng rng(4242);
  const auto ds = testutil::random_dataset(rng, 40, 30, 6, 12);
  const auto split = split_per_user(ds, {0.6, 0.2, 0.2}, 9);
  // score = item id (deterministic): top-k should be the largest non-excluded ids
  auto result = evaluate_ranking(split, Split::Test, 5,
                                 [](std::uint32_t, std::span<double> out) {
                                   for (std::size_t i = 0; i < out.size(); ++i)
                                     out[i] = static_cast<double>(i);
                                 });
  for (std::size_t idx = 0; idx < result.users.size(); ++idx) {
    const auto u = result.users[idx];
    CHECK(!result.truths[idx].empty());
    for (auto item : result.lists[idx]) {
      CHECK_FALSE(std::binary_search(split.train_by_user[u].begin(),
                                     split.train_by_user[u].end(), item));
      CHECK_FALSE(std::binary_search(split.val_by_user[u].begin(), split.val_by_user[u].end(),
                                     item));
    }
    // descending ids given ascending scores by id
    for (std::size_t p = 1; p < result.lists[idx].size(); ++p)
      CHECK(result.lists[idx][p - 1] > result.lists[idx][p]);
  }
}
