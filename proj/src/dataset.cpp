#include "complat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "complat/errors.hpp"
#include "complat/rng.hpp"

namespace complat {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

InteractionDataset load_interactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interactions file: " + path);

  InteractionDataset ds;
  std::unordered_map<std::string, std::uint32_t> user_ids;
  std::unordered_map<std::string, std::uint32_t> item_ids;
  // (user << 32 | item) -> index into ds.interactions
  std::unordered_map<std::uint64_t, std::size_t> seen_pairs;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_tabs(line);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty())
      throw DataError("parse error at line " + std::to_string(line_no) +
                      ": expected user<TAB>item[<TAB>timestamp]");

    std::int64_t ts = 0;
    if (fields.size() == 3) {
      const std::string& f = fields[2];
      char* end = nullptr;
      ts = std::strtoll(f.c_str(), &end, 10);
      if (f.empty() || end != f.c_str() + f.size())
        throw DataError("parse error at line " + std::to_string(line_no) +
                        ": bad timestamp '" + f + "'");
      ds.has_timestamps = true;
    }

    auto [uit, u_new] = user_ids.try_emplace(fields[0], static_cast<std::uint32_t>(ds.n_users));
    if (u_new) {
      ds.user_raw_ids.push_back(fields[0]);
      ++ds.n_users;
    }
    auto [iit, i_new] = item_ids.try_emplace(fields[1], static_cast<std::uint32_t>(ds.n_items));
    if (i_new) {
      ds.item_raw_ids.push_back(fields[1]);
      ++ds.n_items;
    }
    const std::uint32_t u = uit->second;
    const std::uint32_t i = iit->second;

    const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | i;
    auto [pit, fresh] = seen_pairs.try_emplace(key, ds.interactions.size());
    if (fresh) {
      ds.interactions.push_back({u, i, ts});
    } else {
      ++ds.duplicates_dropped;
      Interaction& kept = ds.interactions[pit->second];
      if (ts < kept.timestamp) kept.timestamp = ts;
    }
  }

  if (ds.interactions.empty()) throw DataError("empty dataset: " + path);
  return ds;
}

InteractionDataset kcore_filter(const InteractionDataset& ds, std::size_t k) {
  if (k < 1) throw ConfigError("k-core requires k >= 1");

  std::vector<bool> user_alive(ds.n_users, true);
  std::vector<bool> item_alive(ds.n_items, true);
  std::vector<std::size_t> user_deg(ds.n_users, 0);
  std::vector<std::size_t> item_deg(ds.n_items, 0);

  bool changed = true;
  while (changed) {
    changed = false;
    std::fill(user_deg.begin(), user_deg.end(), 0);
    std::fill(item_deg.begin(), item_deg.end(), 0);
    for (const auto& e : ds.interactions) {
      if (user_alive[e.user] && item_alive[e.item]) {
        ++user_deg[e.user];
        ++item_deg[e.item];
      }
    }
    for (std::size_t u = 0; u < ds.n_users; ++u) {
      if (user_alive[u] && user_deg[u] < k) {
        user_alive[u] = false;
        changed = true;
      }
    }
    for (std::size_t i = 0; i < ds.n_items; ++i) {
      if (item_alive[i] && item_deg[i] < k) {
        item_alive[i] = false;
        changed = true;
      }
    }
  }

  InteractionDataset out;
  out.has_timestamps = ds.has_timestamps;
  std::vector<std::uint32_t> user_map(ds.n_users, 0);
  std::vector<std::uint32_t> item_map(ds.n_items, 0);
  for (std::size_t u = 0; u < ds.n_users; ++u) {
    if (user_alive[u]) {
      user_map[u] = static_cast<std::uint32_t>(out.n_users++);
      out.user_raw_ids.push_back(ds.user_raw_ids[u]);
    }
  }
  for (std::size_t i = 0; i < ds.n_items; ++i) {
    if (item_alive[i]) {
      item_map[i] = static_cast<std::uint32_t>(out.n_items++);
      out.item_raw_ids.push_back(ds.item_raw_ids[i]);
    }
  }
  for (const auto& e : ds.interactions) {
    if (user_alive[e.user] && item_alive[e.item])
      out.interactions.push_back({user_map[e.user], item_map[e.item], e.timestamp});
  }

  if (out.interactions.empty())
    throw DataError("k-core filtering with k=" + std::to_string(k) + " left an empty dataset");
  return out;
}

double sparsity_from_counts(std::size_t n_users, std::size_t n_items, std::size_t n_interactions) {
  if (n_users == 0 || n_items == 0)
    throw DataError("sparsity undefined for an empty id space");
  return 1.0 - static_cast<double>(n_interactions) /
                   (static_cast<double>(n_users) * static_cast<double>(n_items));
}

double compute_sparsity(const InteractionDataset& ds) {
  return sparsity_from_counts(ds.n_users, ds.n_items, ds.interactions.size());
}

std::size_t SplitDataset::count(Split s) const {
  std::size_t n = 0;
  for (Split a : assignment)
    if (a == s) ++n;
  return n;
}

void SplitDataset::rebuild_index() {
  train_by_user.assign(base.n_users, {});
  val_by_user.assign(base.n_users, {});
  test_by_user.assign(base.n_users, {});
  train_count_by_item.assign(base.n_items, 0);
  for (std::size_t idx = 0; idx < base.interactions.size(); ++idx) {
    const auto& e = base.interactions[idx];
    switch (assignment[idx]) {
      case Split::Train:
        train_by_user[e.user].push_back(e.item);
        ++train_count_by_item[e.item];
        break;
      case Split::Val:
        val_by_user[e.user].push_back(e.item);
        break;
      case Split::Test:
        test_by_user[e.user].push_back(e.item);
        break;
    }
  }
  for (auto& v : train_by_user) std::sort(v.begin(), v.end());
  for (auto& v : val_by_user) std::sort(v.begin(), v.end());
  for (auto& v : test_by_user) std::sort(v.begin(), v.end());
}

SplitDataset split_per_user(const InteractionDataset& ds, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train <= 0.0 || ratios.val <= 0.0 || ratios.test <= 0.0)
    throw ConfigError("split ratios must be positive");
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");

  SplitDataset out;
  out.base = ds;
  out.ratios = ratios;
  out.seed = seed;
  out.assignment.assign(ds.interactions.size(), Split::Train);

  std::vector<std::vector<std::uint32_t>> by_user(ds.n_users);
  for (std::size_t idx = 0; idx < ds.interactions.size(); ++idx)
    by_user[ds.interactions[idx].user].push_back(static_cast<std::uint32_t>(idx));

  Rng root = Rng(seed).fork("split");
  for (std::size_t u = 0; u < ds.n_users; ++u) {
    auto& idxs = by_user[u];
    const std::size_t n = idxs.size();
    if (n == 0) continue;
    if (n < 3) ++out.short_history_users;

    Rng rng = root.fork("user", u);
    rng.shuffle(idxs);

    std::size_t n_val = static_cast<std::size_t>(ratios.val * static_cast<double>(n) + 1e-9);
    std::size_t n_test = static_cast<std::size_t>(ratios.test * static_cast<double>(n) + 1e-9);
    // train takes the remainder and always keeps at least one interaction
    while (n_val + n_test >= n) {
      if (n_val >= n_test && n_val > 0)
        --n_val;
      else
        --n_test;
    }
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t j = 0; j < n; ++j) {
      Split s = Split::Train;
      if (j >= n_train && j < n_train + n_val)
        s = Split::Val;
      else if (j >= n_train + n_val)
        s = Split::Test;
      out.assignment[idxs[j]] = s;
    }
  }

  out.rebuild_index();
  return out;
}

PopularityTable popularity_strata(const SplitDataset& split) {
  const std::size_t n_items = split.base.n_items;
  if (split.count(Split::Train) == 0) throw DataError("popularity strata need a non-empty train set");

  PopularityTable table;
  table.train_count = split.train_count_by_item;
  table.stratum.assign(n_items, Stratum::Cold);

  std::vector<std::uint32_t> order(n_items);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (table.train_count[a] != table.train_count[b])
      return table.train_count[a] > table.train_count[b];
    return a < b;
  });

  const std::size_t head = static_cast<std::size_t>(
      std::ceil(0.2 * static_cast<double>(n_items)));
  const std::size_t mid = std::min(head, n_items - head);
  for (std::size_t r = 0; r < n_items; ++r) {
    if (r < head)
      table.stratum[order[r]] = Stratum::Head;
    else if (r < head + mid)
      table.stratum[order[r]] = Stratum::Mid;
  }
  return table;
}

}  // namespace complat
