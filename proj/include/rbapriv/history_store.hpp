// Copyright 2026 The rbapriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rbapriv/errors.hpp"
#include "rbapriv/features.hpp"
#include "rbapriv/random.hpp"

namespace rbapriv {

/// Bounds on how much login history is kept per user.
struct RetentionPolicy {
  std::optional<std::size_t> max_entries_per_user;
  std::optional<std::chrono::seconds> max_age;
};

/// Every value of each target feature must be held by at least k users.
struct KAnonymityPolicy {
  std::size_t k = 1;
  std::vector<std::string> target_features{std::string(kIpFeature)};

  void validate() const {
    if (k < 1) throw ConfigError("k-anonymity requires k >= 1");
    if (target_features.empty()) throw ConfigError("k-anonymity needs a target feature");
  }
};

/// Overhead of k-anonymity padding relative to the real logins recorded.
struct PaddingLedger {
  std::size_t additional_entries = 0;
  std::size_t baseline_entries = 0;

  double increase_ratio() const noexcept {
    return baseline_entries == 0 ? 0.0
                                 : static_cast<double>(additional_entries) /
                                       static_cast<double>(baseline_entries);
  }

  bool operator==(const PaddingLedger&) const = default;
};

/// A target-feature value held by fewer than k distinct users.
struct KViolation {
  std::string feature;
  std::string value;
  std::size_t holders = 0;

  bool operator==(const KViolation&) const = default;
};

struct StoreOptions {
  std::optional<RetentionPolicy> retention;
  std::optional<KAnonymityPolicy> k_anonymity;
  /// Keep the ordered list of real logins. Off means the store holds only
  /// order-free histograms (plus retention windows when those are enabled).
  bool keep_event_log = false;
  /// Seed for the padding stream (synthetic user choice, co-feature draws).
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kSyntheticUserPrefix = "#synthetic-";

/// Global and per-user frequency tables over feature values, with privacy
/// policies applied at write time.
///
/// Reads are const and may run concurrently; record_login must not overlap
/// with any other call.
class HistoryStore {
 public:
  explicit HistoryStore(FeatureSchema schema, StoreOptions options = {})
      : schema_(std::move(schema)),
        options_(std::move(options)),
        features_(schema_.size()),
        padding_rng_(Rng::derive(options_.seed, Stream::kPadding)) {
    if (options_.k_anonymity) {
      options_.k_anonymity->validate();
      for (const auto& id : options_.k_anonymity->target_features) {
        k_targets_.push_back(schema_.require(id));
      }
    }
    if (options_.retention && options_.retention->max_entries_per_user &&
        *options_.retention->max_entries_per_user == 0) {
      throw ConfigError("max_entries_per_user must be >= 1");
    }
  }

  const FeatureSchema& schema() const noexcept { return schema_; }
  const StoreOptions& options() const noexcept { return options_; }

  /// Records one successful real login. Applies retention, then pads the
  /// target features to k when k-anonymity is active.
  void record_login(std::string_view user_id, const FeatureVector& fv, Timestamp ts) {
    validate(fv, schema_);
    if (user_id.empty()) throw ArgumentError("empty user id");
    if (user_id.starts_with(kSyntheticUserPrefix)) {
      throw ArgumentError("user id '" + std::string(user_id) + "' uses the reserved synthetic prefix");
    }
    const std::size_t user = find_or_add_user(user_id, false);

    std::vector<std::uint32_t> slots(schema_.size());
    for (std::size_t f = 0; f < schema_.size(); ++f) slots[f] = intern(f, fv.values[f]);

    std::vector<std::pair<std::size_t, std::uint32_t>> evicted;
    if (options_.retention) {
      if (options_.retention->max_age) {
        for (std::size_t u = 0; u < users_.size(); ++u) {
          if (!users_[u].synthetic) evict(u, ts, 0, evicted);
        }
      }
      evict(user, ts, /*incoming=*/1, evicted);
    }

    add_entry(user, slots);
    if (options_.retention) {
      users_[user].window.push_back({ts, slots});
    }
    ++recorded_logins_;
    ledger_.baseline_entries = recorded_logins_;
    if (options_.keep_event_log) event_log_.push_back({std::string(user_id), ts, fv});

    if (options_.k_anonymity) {
      for (std::size_t f : k_targets_) pad_slot(*options_.k_anonymity, f, slots[f]);
      for (const auto& [f, slot] : evicted) {
        if (is_target(f)) pad_slot(*options_.k_anonymity, f, slot);
      }
    }
  }

  /// Ensures at least `policy.k` distinct users hold `value` in every target
  /// feature that contains it, assigning padded entries to synthetic users.
  /// Returns the padding added by this call.
  PaddingLedger pad_to_k(const KAnonymityPolicy& policy, std::string_view value) {
    policy.validate();
    PaddingLedger delta;
    delta.baseline_entries = recorded_logins_;
    for (const auto& id : policy.target_features) {
      const std::size_t f = schema_.require(id);
      const auto& table = features_[f];
      const auto it = table.index.find(value);
      if (it == table.index.end()) continue;
      delta.additional_entries += pad_slot(policy, f, it->second);
    }
    return delta;
  }

  /// Target-feature values currently held by fewer than `policy.k` users.
  std::vector<KViolation> audit_k(const KAnonymityPolicy& policy) const {
    policy.validate();
    std::vector<KViolation> out;
    for (const auto& id : policy.target_features) {
      const std::size_t f = schema_.require(id);
      const auto& table = features_[f];
      for (std::size_t slot = 0; slot < table.values.size(); ++slot) {
        const std::size_t holders = table.holders[slot];
        if (holders > 0 && holders < policy.k) out.push_back({id, table.values[slot], holders});
      }
    }
    return out;
  }

  // ---- read interface used by the risk model -------------------------------

  std::size_t global_count(std::size_t feature, std::string_view value) const {
    const auto& table = features_.at(feature);
    const auto it = table.index.find(value);
    return it == table.index.end() ? 0 : table.counts[it->second];
  }

  /// Entries counted for `feature`, including padding.
  std::size_t global_total(std::size_t feature) const { return features_.at(feature).total; }

  /// Distinct values with a non-zero global count.
  std::size_t vocabulary_size(std::size_t feature) const { return features_.at(feature).distinct; }

  bool has_user(std::string_view user_id) const { return user_index_.contains(user_id); }

  std::size_t user_count(std::string_view user_id, std::size_t feature, std::string_view value) const {
    const auto u = user_index_.find(user_id);
    if (u == user_index_.end()) return 0;
    const auto& table = features_.at(feature);
    const auto it = table.index.find(value);
    if (it == table.index.end()) return 0;
    return count_of(users_[u->second].values[feature], it->second);
  }

  std::size_t user_total(std::string_view user_id) const {
    const auto u = user_index_.find(user_id);
    return u == user_index_.end() ? 0 : users_[u->second].total;
  }

  // ---- inspection ----------------------------------------------------------

  /// Real login entries currently retained (sum over real users).
  std::size_t total_logins() const noexcept { return real_entries_; }
  /// Real logins ever recorded, including since-evicted ones.
  std::size_t recorded_logins() const noexcept { return recorded_logins_; }
  std::size_t padding_entries() const noexcept { return padding_entries_; }
  const PaddingLedger& ledger() const noexcept { return ledger_; }

  std::size_t real_user_count() const noexcept { return users_.size() - synthetic_.size(); }
  std::size_t synthetic_user_count() const noexcept { return synthetic_.size(); }

  bool is_synthetic(std::string_view user_id) const {
    const auto u = user_index_.find(user_id);
    return u != user_index_.end() && users_[u->second].synthetic;
  }

  std::vector<std::string> real_users() const {
    std::vector<std::string> out;
    for (const auto& u : users_) {
      if (!u.synthetic) out.push_back(u.id);
    }
    return out;
  }

  std::vector<std::string> synthetic_users() const {
    std::vector<std::string> out;
    for (std::size_t u : synthetic_) out.push_back(users_[u].id);
    return out;
  }

  /// Non-zero global counts for `feature`, keyed by value.
  std::map<std::string, std::size_t> global_counts(std::size_t feature) const {
    std::map<std::string, std::size_t> out;
    const auto& table = features_.at(feature);
    for (std::size_t s = 0; s < table.values.size(); ++s) {
      if (table.counts[s] > 0) out.emplace(table.values[s], table.counts[s]);
    }
    return out;
  }

  /// Non-zero counts in one user's history for `feature`.
  std::map<std::string, std::size_t> user_counts(std::string_view user_id, std::size_t feature) const {
    std::map<std::string, std::size_t> out;
    const auto u = user_index_.find(user_id);
    if (u == user_index_.end()) return out;
    for (const auto& [slot, count] : users_[u->second].values.at(feature)) {
      if (count > 0) out.emplace(features_[feature].values[slot], count);
    }
    return out;
  }

  /// Distinct users currently holding `value` in `feature`.
  std::size_t holders(std::size_t feature, std::string_view value) const {
    const auto& table = features_.at(feature);
    const auto it = table.index.find(value);
    return it == table.index.end() ? 0 : table.holders[it->second];
  }

  /// Timestamps of the retained entries of a real user, oldest first. Empty
  /// unless a retention policy is active.
  std::vector<Timestamp> retained_timestamps(std::string_view user_id) const {
    std::vector<Timestamp> out;
    const auto u = user_index_.find(user_id);
    if (u == user_index_.end()) return out;
    for (const auto& e : users_[u->second].window) out.push_back(e.timestamp);
    return out;
  }

  /// The ordered real logins, or nullptr when the store is aggregation-only.
  const std::vector<LoginEvent>* event_log() const noexcept {
    return options_.keep_event_log ? &event_log_ : nullptr;
  }

  double mean_logins_real_users() const noexcept {
    const std::size_t n = real_user_count();
    return n == 0 ? 0.0 : static_cast<double>(real_entries_) / static_cast<double>(n);
  }

  double mean_logins_all_users() const noexcept {
    return users_.empty() ? 0.0
                          : static_cast<double>(real_entries_ + padding_entries_) /
                                static_cast<double>(users_.size());
  }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  template <class V>
  using StringMap = std::unordered_map<std::string, V, StringHash, std::equal_to<>>;

  // Slots are never reused; a slot whose count drops to zero stays interned.
  struct ValueTable {
    StringMap<std::uint32_t> index;
    std::vector<std::string> values;
    std::vector<std::size_t> counts;
    std::vector<std::size_t> holders;
    std::size_t total = 0;
    std::size_t distinct = 0;
  };

  // Per-user histories are short, so a flat (slot, count) list beats a map.
  using SlotCounts = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

  struct Entry {
    Timestamp timestamp;
    std::vector<std::uint32_t> slots;
  };

  struct User {
    std::string id;
    bool synthetic = false;
    std::size_t total = 0;
    std::vector<SlotCounts> values;
    std::deque<Entry> window;
  };

  static std::size_t count_of(const SlotCounts& counts, std::uint32_t slot) {
    for (const auto& [s, c] : counts) {
      if (s == slot) return c;
    }
    return 0;
  }

  bool is_target(std::size_t f) const {
    return std::find(k_targets_.begin(), k_targets_.end(), f) != k_targets_.end();
  }

  std::uint32_t intern(std::size_t f, std::string_view value) {
    auto& table = features_[f];
    if (auto it = table.index.find(value); it != table.index.end()) return it->second;
    const auto slot = static_cast<std::uint32_t>(table.values.size());
    table.values.emplace_back(value);
    table.counts.push_back(0);
    table.holders.push_back(0);
    table.index.emplace(std::string(value), slot);
    return slot;
  }

  std::size_t find_or_add_user(std::string_view id, bool synthetic) {
    if (auto it = user_index_.find(id); it != user_index_.end()) return it->second;
    const std::size_t index = users_.size();
    users_.push_back(User{std::string(id), synthetic, 0, std::vector<SlotCounts>(schema_.size()), {}});
    user_index_.emplace(std::string(id), index);
    if (synthetic) synthetic_.push_back(index);
    return index;
  }

  void add_entry(std::size_t user, const std::vector<std::uint32_t>& slots) {
    User& u = users_[user];
    for (std::size_t f = 0; f < slots.size(); ++f) {
      auto& table = features_[f];
      const std::uint32_t slot = slots[f];
      if (table.counts[slot]++ == 0) ++table.distinct;
      ++table.total;
      auto& mine = u.values[f];
      auto it = std::find_if(mine.begin(), mine.end(), [&](const auto& p) { return p.first == slot; });
      if (it == mine.end()) {
        mine.emplace_back(slot, 1);
        ++table.holders[slot];
      } else if (it->second++ == 0) {
        ++table.holders[slot];
      }
    }
    ++u.total;
    if (u.synthetic) {
      ++padding_entries_;
    } else {
      ++real_entries_;
    }
  }

  void remove_entry(std::size_t user, const std::vector<std::uint32_t>& slots) {
    User& u = users_[user];
    for (std::size_t f = 0; f < slots.size(); ++f) {
      auto& table = features_[f];
      const std::uint32_t slot = slots[f];
      if (--table.counts[slot] == 0) --table.distinct;
      --table.total;
      auto& mine = u.values[f];
      auto it = std::find_if(mine.begin(), mine.end(), [&](const auto& p) { return p.first == slot; });
      if (--it->second == 0) {
        --table.holders[slot];
        mine.erase(it);
      }
    }
    --u.total;
    --real_entries_;
  }

  // Drops entries older than max_age relative to `now`, then the oldest
  // entries beyond max_entries_per_user (making room for `incoming`).
  void evict(std::size_t user, Timestamp now, std::size_t incoming,
             std::vector<std::pair<std::size_t, std::uint32_t>>& evicted) {
    const RetentionPolicy& policy = *options_.retention;
    auto& window = users_[user].window;
    auto drop_front = [&] {
      Entry e = std::move(window.front());
      window.pop_front();
      remove_entry(user, e.slots);
      for (std::size_t f = 0; f < e.slots.size(); ++f) evicted.emplace_back(f, e.slots[f]);
    };
    if (policy.max_age) {
      while (!window.empty() && window.front().timestamp < now - *policy.max_age) drop_front();
    }
    if (policy.max_entries_per_user) {
      while (!window.empty() && window.size() + incoming > *policy.max_entries_per_user) drop_front();
    }
  }

  // Returns the number of padded entries added.
  std::size_t pad_slot(const KAnonymityPolicy& policy, std::size_t f, std::uint32_t slot) {
    std::size_t added = 0;
    while (features_[f].holders[slot] > 0 && features_[f].holders[slot] < policy.k) {
      const std::size_t user = pick_synthetic_user(f, slot);
      std::vector<std::uint32_t> slots(schema_.size());
      for (std::size_t g = 0; g < schema_.size(); ++g) {
        slots[g] = g == f ? slot : sample_global_slot(g);
      }
      add_entry(user, slots);
      ++added;
    }
    ledger_.additional_entries += added;
    return added;
  }

  // A synthetic user not yet holding `slot` in feature f. A new synthetic
  // user is created when none is eligible, or when one more entry for the
  // existing ones would lift their mean logins above the real-user mean.
  std::size_t pick_synthetic_user(std::size_t f, std::uint32_t slot) {
    const double real_mean = mean_logins_real_users();
    const bool over_mean =
        synthetic_.empty() ||
        static_cast<double>(padding_entries_ + 1) / static_cast<double>(synthetic_.size()) > real_mean;
    if (!over_mean) {
      std::vector<std::size_t> eligible;
      for (std::size_t u : synthetic_) {
        if (count_of(users_[u].values[f], slot) == 0) eligible.push_back(u);
      }
      if (!eligible.empty()) return eligible[padding_rng_.uniform_index(eligible.size())];
    }
    std::string id;
    do {
      id = std::string(kSyntheticUserPrefix) + std::to_string(++synthetic_serial_);
    } while (user_index_.contains(id));
    return find_or_add_user(id, true);
  }

  // A value drawn from the current global distribution of feature g.
  std::uint32_t sample_global_slot(std::size_t g) {
    const auto& table = features_[g];
    std::size_t r = padding_rng_.uniform_index(table.total);
    for (std::size_t s = 0; s < table.counts.size(); ++s) {
      if (r < table.counts[s]) return static_cast<std::uint32_t>(s);
      r -= table.counts[s];
    }
    throw Error("global distribution sampling out of range");
  }

  FeatureSchema schema_;
  StoreOptions options_;
  std::vector<std::size_t> k_targets_;
  std::vector<ValueTable> features_;
  std::vector<User> users_;
  StringMap<std::size_t> user_index_;
  std::vector<std::size_t> synthetic_;
  std::size_t synthetic_serial_ = 0;
  std::size_t real_entries_ = 0;
  std::size_t padding_entries_ = 0;
  std::size_t recorded_logins_ = 0;
  PaddingLedger ledger_;
  std::vector<LoginEvent> event_log_;
  Rng padding_rng_;
};

/// True iff recounting `log` reproduces the store's global and per-user
/// counts exactly. The store must have been built from `log` in any order,
/// without padding or eviction.
inline bool aggregate_equivalence_check(const std::vector<LoginEvent>& log, const HistoryStore& store) {
  const std::size_t d = store.schema().size();
  if (store.synthetic_user_count() != 0) return false;
  std::vector<std::map<std::string, std::size_t>> global(d);
  std::map<std::string, std::vector<std::map<std::string, std::size_t>>> per_user;
  for (const auto& e : log) {
    if (e.features.size() != d) return false;
    auto& mine = per_user.try_emplace(e.user_id, d).first->second;
    for (std::size_t f = 0; f < d; ++f) {
      ++global[f][e.features.values[f]];
      ++mine[f][e.features.values[f]];
    }
  }
  if (store.total_logins() != log.size()) return false;
  for (std::size_t f = 0; f < d; ++f) {
    if (store.global_counts(f) != global[f]) return false;
  }
  const auto users = store.real_users();
  if (users.size() != per_user.size()) return false;
  for (const auto& u : users) {
    const auto it = per_user.find(u);
    if (it == per_user.end()) return false;
    for (std::size_t f = 0; f < d; ++f) {
      if (store.user_counts(u, f) != it->second[f]) return false;
    }
  }
  return true;
}

}  // namespace rbapriv
