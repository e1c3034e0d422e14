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


#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "rbapriv/dataset_gen.hpp"
#include "rbapriv/history_store.hpp"
#include "rbapriv/random.hpp"
#include "rbapriv/risk_model.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace rbapriv {
namespace {

using std::chrono::seconds;

const Timestamp kT0{seconds(1'600'000'000)};
const FeatureSchema kSchema = FeatureSchema::ip_and_user_agent();

FeatureVector fv(std::string ip, std::string ua = "ua") { return FeatureVector{{std::move(ip), std::move(ua)}}; }

StoreOptions with_k(std::size_t k, std::uint64_t seed = 0) {
  StoreOptions o;
  o.k_anonymity = KAnonymityPolicy{k, {"ip"}};
  o.seed = seed;
  return o;
}

void ingest(HistoryStore& store, const Dataset& ds) {
  for (const auto& e : ds.events) store.record_login(e.user_id, e.features, e.timestamp);
}

// Structural invariants that hold after any sequence of writes.
void expect_consistent(const HistoryStore& store) {
  std::size_t real_total = 0;
  for (const auto& u : store.real_users()) real_total += store.user_total(u);
  EXPECT_EQ(real_total, store.total_logins());
  std::size_t synthetic_total = 0;
  for (const auto& u : store.synthetic_users()) synthetic_total += store.user_total(u);
  EXPECT_EQ(synthetic_total, store.padding_entries());
  for (std::size_t f = 0; f < store.schema().size(); ++f) {
    std::size_t sum = 0;
    for (const auto& [v, c] : store.global_counts(f)) sum += c;
    EXPECT_EQ(sum, store.total_logins() + store.padding_entries());
    EXPECT_EQ(sum, store.global_total(f));
    EXPECT_EQ(store.global_counts(f).size(), store.vocabulary_size(f));
  }
  const auto real = store.real_users();
  const auto synthetic = store.synthetic_users();
  const std::set<std::string> r(real.begin(), real.end());
  for (const auto& s : synthetic) {
    EXPECT_EQ(r.count(s), 0u);
    EXPECT_TRUE(store.is_synthetic(s));
  }
}

TEST(Store, FreshStoreOneLogin) {
  HistoryStore store(kSchema);
  store.record_login("alice", fv("1.1.1.1"), kT0);
  EXPECT_EQ(store.total_logins(), 1u);
  EXPECT_EQ(store.user_total("alice"), 1u);
  EXPECT_EQ(store.real_user_count(), 1u);
  EXPECT_EQ(store.global_count(0, "1.1.1.1"), 1u);
  EXPECT_EQ(store.user_count("alice", 1, "ua"), 1u);
  expect_consistent(store);
}

TEST(Store, RejectsBadInput) {
  HistoryStore store(kSchema);
  EXPECT_THROW(store.record_login("", fv("1.1.1.1"), kT0), ArgumentError);
  EXPECT_THROW(store.record_login("#synthetic-1", fv("1.1.1.1"), kT0), ArgumentError);
  EXPECT_THROW(store.record_login("a", FeatureVector{{"1.1.1.1"}}, kT0), ArgumentError);
  EXPECT_THROW(HistoryStore(kSchema, with_k(0)), ConfigError);
  StoreOptions o;
  o.k_anonymity = KAnonymityPolicy{2, {"asn"}};
  EXPECT_THROW(HistoryStore(kSchema, o), ConfigError);
}

TEST(Store, RetentionByCount) {
  StoreOptions o;
  o.retention = RetentionPolicy{2, std::nullopt};
  HistoryStore store(kSchema, o);
  store.record_login("alice", fv("1.1.1.1"), kT0);
  store.record_login("alice", fv("2.2.2.2"), kT0 + seconds(10));
  store.record_login("alice", fv("3.3.3.3"), kT0 + seconds(20));
  EXPECT_EQ(store.user_total("alice"), 2u);
  EXPECT_EQ(store.global_count(0, "1.1.1.1"), 0u);
  EXPECT_EQ(store.vocabulary_size(0), 2u);
  EXPECT_EQ(store.recorded_logins(), 3u);
  EXPECT_EQ(store.retained_timestamps("alice"), (std::vector<Timestamp>{kT0 + seconds(10), kT0 + seconds(20)}));
  expect_consistent(store);
}

TEST(Store, RetentionByAgeSweepsAllUsers) {
  StoreOptions o;
  o.retention = RetentionPolicy{std::nullopt, seconds(100)};
  HistoryStore store(kSchema, o);
  store.record_login("alice", fv("1.1.1.1"), kT0);
  store.record_login("bob", fv("2.2.2.2"), kT0 + seconds(50));
  store.record_login("carol", fv("3.3.3.3"), kT0 + seconds(120));
  EXPECT_EQ(store.user_total("alice"), 0u);
  EXPECT_EQ(store.user_total("bob"), 1u);
  EXPECT_EQ(store.global_count(0, "1.1.1.1"), 0u);
  EXPECT_EQ(store.total_logins(), 2u);
  expect_consistent(store);
}

TEST(Store, RetentionBoundProperty) {
  gen::Source src(21);
  for (int round = 0; round < 30; ++round) {
    const Dataset ds = gen::toy_dataset(src, {4, 60, 6, 2});
    StoreOptions o;
    const std::size_t cap = src.between(1, 4);
    const seconds age(static_cast<long>(src.between(3600, 5 * 86400)));
    o.retention = RetentionPolicy{cap, age};
    if (src.coin()) o.k_anonymity = KAnonymityPolicy{src.between(2, 4), {"ip"}};
    HistoryStore store(ds.schema, o);
    for (const auto& e : ds.events) {
      store.record_login(e.user_id, e.features, e.timestamp);
      for (const auto& u : store.real_users()) {
        EXPECT_LE(store.user_total(u), cap);
        for (Timestamp t : store.retained_timestamps(u)) EXPECT_GE(t, e.timestamp - age);
      }
      if (o.k_anonymity) {
        EXPECT_TRUE(store.audit_k(*o.k_anonymity).empty());
      }
    }
    expect_consistent(store);
  }
}

TEST(Store, KTwoFirstOccurrencePadsOnce) {
  HistoryStore store(kSchema, with_k(2));
  store.record_login("alice", fv("1.1.1.1"), kT0);
  EXPECT_EQ(store.ledger().additional_entries, 1u);
  EXPECT_EQ(store.holders(0, "1.1.1.1"), 2u);
  ASSERT_EQ(store.synthetic_user_count(), 1u);
  const std::string syn = store.synthetic_users()[0];
  EXPECT_TRUE(syn.starts_with(kSyntheticUserPrefix));
  EXPECT_EQ(store.user_count(syn, 0, "1.1.1.1"), 1u);
  EXPECT_TRUE(store.audit_k(KAnonymityPolicy{2, {"ip"}}).empty());
  expect_consistent(store);
}

TEST(Store, KOneNeverPads) {
  gen::Source src(22);
  const Dataset ds = gen::toy_dataset(src, {5, 40, 6, 2});
  HistoryStore store(ds.schema, with_k(1));
  ingest(store, ds);
  EXPECT_EQ(store.ledger().additional_entries, 0u);
  EXPECT_EQ(store.synthetic_user_count(), 0u);
  EXPECT_EQ(store.pad_to_k(KAnonymityPolicy{1, {"ip"}}, ds.events[0].features[0]).additional_entries, 0u);
}

TEST(Store, AlreadyAnonymousValueNeedsNoPadding) {
  HistoryStore store(kSchema, with_k(2));
  store.record_login("alice", fv("1.1.1.1"), kT0);
  store.record_login("bob", fv("1.1.1.1"), kT0);
  const auto before = store.ledger().additional_entries;
  EXPECT_EQ(store.pad_to_k(KAnonymityPolicy{2, {"ip"}}, "1.1.1.1").additional_entries, 0u);
  EXPECT_EQ(store.ledger().additional_entries, before);
}

TEST(Store, PadToKRaisesHolders) {
  HistoryStore store(kSchema, with_k(2));
  store.record_login("alice", fv("1.1.1.1"), kT0);
  const PaddingLedger delta = store.pad_to_k(KAnonymityPolicy{4, {"ip"}}, "1.1.1.1");
  EXPECT_EQ(delta.additional_entries, 2u);
  EXPECT_EQ(delta.baseline_entries, 1u);
  EXPECT_EQ(store.holders(0, "1.1.1.1"), 4u);
  EXPECT_EQ(store.pad_to_k(KAnonymityPolicy{4, {"ip"}}, "9.9.9.9").additional_entries, 0u);
}

TEST(Store, DistinctIpsToyRun) {
  // 10 users, 30 logins, 30 distinct IPs, k = 2: every value needs one extra holder.
  HistoryStore store(kSchema, with_k(2));
  for (int i = 0; i < 30; ++i) {
    store.record_login("user" + std::to_string(i % 10), fv("10.0.0." + std::to_string(i)), kT0 + seconds(i));
  }
  EXPECT_EQ(store.ledger().additional_entries, 30u);
  EXPECT_EQ(store.ledger().baseline_entries, 30u);
  EXPECT_DOUBLE_EQ(store.ledger().increase_ratio(), 1.0);
  expect_consistent(store);
}

// Without retention a value first appears with one holder and is padded to
// exactly k holders; later holders only add to that. So the overhead is
// (k - 1) per distinct target value.
std::size_t expected_padding(const Dataset& ds, std::size_t k) {
  std::set<std::string> values;
  for (const auto& e : ds.events) values.insert(e.features[0]);
  return (k - 1) * values.size();
}

TEST(Store, PaddingMatchesCombinatorialCount) {
  gen::Source src(23);
  for (int round = 0; round < 20; ++round) {
    const Dataset ds = gen::toy_dataset(src, {6, 50, 12, 2});
    std::size_t previous = 0;
    for (std::size_t k = 1; k <= 6; ++k) {
      HistoryStore store(ds.schema, with_k(k, static_cast<std::uint64_t>(round)));
      ingest(store, ds);
      EXPECT_EQ(store.ledger().additional_entries, expected_padding(ds, k));
      EXPECT_GE(store.ledger().additional_entries, previous);
      previous = store.ledger().additional_entries;
      EXPECT_TRUE(store.audit_k(KAnonymityPolicy{k, {"ip"}}).empty());
      expect_consistent(store);
    }
  }
}

TEST(Store, AuditExamples) {
  HistoryStore empty(kSchema);
  EXPECT_TRUE(empty.audit_k(KAnonymityPolicy{3, {"ip"}}).empty());

  HistoryStore store(kSchema, with_k(2));
  store.record_login("alice", fv("1.1.1.1"), kT0);
  store.record_login("bob", fv("2.2.2.2"), kT0);
  EXPECT_TRUE(store.audit_k(KAnonymityPolicy{2, {"ip"}}).empty());
  const auto violations = store.audit_k(KAnonymityPolicy{3, {"ip"}});
  ASSERT_FALSE(violations.empty());
  for (const auto& v : violations) {
    EXPECT_EQ(v.feature, "ip");
    EXPECT_LT(v.holders, 3u);
  }
}

TEST(Store, MeanLoginsPreserved) {
  // Realistic interleaved streams. With a handful of heavy users the bound
  // cannot hold: k-1 distinct synthetic holders per value cap their mean.
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    DatasetProfile p;
    p.n_users = 80 + 20 * seed;
    p.total_logins = p.n_users * (5 + 2 * seed);
    p.seed = seed;
    const Dataset ds = generate(p).dataset;
    for (std::size_t k = 2; k <= 6; ++k) {
      HistoryStore store(ds.schema, with_k(k, 7));
      ingest(store, ds);
      const double real = store.mean_logins_real_users();
      const double all = store.mean_logins_all_users();
      EXPECT_LE(std::abs(all - real) / real, 0.10) << "k=" << k << " real=" << real << " all=" << all;
    }
  }
}

TEST(Store, PaddingIsSeedDeterministic) {
  gen::Source src(25);
  const Dataset ds = gen::toy_dataset(src, {5, 60, 10, 2});
  HistoryStore a(ds.schema, with_k(3, 99)), b(ds.schema, with_k(3, 99));
  ingest(a, ds);
  ingest(b, ds);
  for (std::size_t f = 0; f < 2; ++f) EXPECT_EQ(a.global_counts(f), b.global_counts(f));
  EXPECT_EQ(a.synthetic_users(), b.synthetic_users());
  for (const auto& u : a.synthetic_users()) {
    for (std::size_t f = 0; f < 2; ++f) EXPECT_EQ(a.user_counts(u, f), b.user_counts(u, f));
  }
}

TEST(Store, AggregateEquivalence) {
  gen::Source src(26);
  const Dataset ds = gen::toy_dataset(src, {5, 30, 6, 2});
  HistoryStore store(ds.schema);
  ingest(store, ds);
  EXPECT_TRUE(aggregate_equivalence_check(ds.events, store));

  auto shuffled = ds.events;
  Rng rng(5);
  rng.shuffle(std::span(shuffled));
  EXPECT_TRUE(aggregate_equivalence_check(shuffled, store));

  auto missing = ds.events;
  missing.erase(missing.begin() + static_cast<std::ptrdiff_t>(src.below(missing.size())));
  EXPECT_FALSE(aggregate_equivalence_check(missing, store));

  HistoryStore padded(ds.schema, with_k(2));
  ingest(padded, ds);
  EXPECT_FALSE(aggregate_equivalence_check(ds.events, padded));
}

TEST(Store, AggregationInvarianceOfScores) {
  gen::Source src(27);
  for (int round = 0; round < 20; ++round) {
    const Dataset ds = gen::toy_dataset(src);
    HistoryStore store(ds.schema);
    ingest(store, ds);
    auto shuffled = ds.events;
    Rng rng(static_cast<std::uint64_t>(round));
    rng.shuffle(std::span(shuffled));
    const oracle::EventLogView view(ds.schema, shuffled);
    for (int q = 0; q < 20; ++q) {
      const FeatureVector query{gen::toy_query(src)};
      const std::string user = "u" + std::to_string(src.below(6));
      for (const auto& cfg : {RiskConfig{}, RiskConfig{1.0, 1.0, Smoothing::kNone, 1.0, 1e-6}}) {
        EXPECT_LE(oracle::rel_diff(risk_value(store, cfg, user, query), risk_value(view, cfg, user, query)), 1e-12);
      }
    }
  }
}

TEST(Store, EventLogIsOptional) {
  StoreOptions o;
  HistoryStore aggregate_only(kSchema, o);
  aggregate_only.record_login("a", fv("1.1.1.1"), kT0);
  EXPECT_EQ(aggregate_only.event_log(), nullptr);
  o.keep_event_log = true;
  HistoryStore logged(kSchema, o);
  logged.record_login("a", fv("1.1.1.1"), kT0);
  ASSERT_NE(logged.event_log(), nullptr);
  EXPECT_EQ(logged.event_log()->size(), 1u);
  EXPECT_EQ(logged.event_log()->front().user_id, "a");
}

TEST(Store, PaddingLedgerRatio) {
  EXPECT_DOUBLE_EQ((PaddingLedger{3, 12}.increase_ratio()), 0.25);
  EXPECT_DOUBLE_EQ((PaddingLedger{0, 0}.increase_ratio()), 0.0);
}

}  // namespace
}  // namespace rbapriv
