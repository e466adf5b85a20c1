#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace complat {

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::int64_t timestamp = 0;  // 0 when the source had no timestamp column
};

// User/item interaction table with contiguous ids assigned in first-seen
// order. Raw id lookup tables map contiguous ids back to source strings.
struct InteractionDataset {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  bool has_timestamps = false;
  std::vector<Interaction> interactions;
  std::vector<std::string> user_raw_ids;
  std::vector<std::string> item_raw_ids;
  std::size_t duplicates_dropped = 0;
};

// Parses user<TAB>item[<TAB>unix_timestamp] lines. Duplicate (user, item)
// pairs collapse to one interaction keeping the earliest timestamp.
InteractionDataset load_interactions(const std::string& path);

// Iteratively removes users/items with fewer than k interactions until a
// fixed point, then re-contiguizes ids preserving ascending order.
InteractionDataset kcore_filter(const InteractionDataset& ds, std::size_t k);

double sparsity_from_counts(std::size_t n_users, std::size_t n_items, std::size_t n_interactions);
double compute_sparsity(const InteractionDataset& ds);

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitDataset {
  InteractionDataset base;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  std::vector<Split> assignment;  // parallel to base.interactions

  // Users with fewer than 3 interactions (cannot receive both val and test).
  std::size_t short_history_users = 0;

  // Derived indexes, sorted ascending per user.
  std::vector<std::vector<std::uint32_t>> train_by_user;
  std::vector<std::vector<std::uint32_t>> val_by_user;
  std::vector<std::vector<std::uint32_t>> test_by_user;
  std::vector<std::uint32_t> train_count_by_item;

  std::size_t count(Split s) const;
  void rebuild_index();
};

// Per-user seeded shuffle, val/test sized by floor(ratio * n) with train
// taking the remainder (never less than one interaction).
SplitDataset split_per_user(const InteractionDataset& ds, SplitRatios ratios, std::uint64_t seed);

enum class Stratum : std::uint8_t { Head = 0, Mid = 1, Cold = 2 };

// Train-interaction popularity counts and Head/Mid/Cold strata
// (top 20% / next 20% / bottom 60% by count, ties by ascending item id).
struct PopularityTable {
  std::vector<std::uint32_t> train_count;
  std::vector<Stratum> stratum;
};

PopularityTable popularity_strata(const SplitDataset& split);

}  // namespace complat
