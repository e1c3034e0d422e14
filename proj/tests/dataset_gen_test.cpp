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

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rbapriv/data_io.hpp"
#include "rbapriv/dataset_gen.hpp"

namespace rbapriv {
namespace {

std::map<std::string, std::vector<const LoginEvent*>> by_user(const Dataset& ds) {
  std::map<std::string, std::vector<const LoginEvent*>> out;
  for (const auto& e : ds.events) out[e.user_id].push_back(&e);
  return out;
}

const GeneratedDataset& standard() {
  static const GeneratedDataset g = generate(DatasetProfile{});
  return g;
}

TEST(Generate, PublishedMeanLoginsPerUser) {
  const auto& g = standard();
  EXPECT_EQ(g.dataset.events.size(), 9555u);
  const auto users = by_user(g.dataset);
  EXPECT_EQ(users.size(), 780u);
  EXPECT_NEAR(static_cast<double>(g.dataset.events.size()) / static_cast<double>(users.size()), 12.25, 0.01);
}

TEST(Generate, EventsSortedAndValid) {
  const auto& ds = standard().dataset;
  for (std::size_t i = 1; i < ds.events.size(); ++i) EXPECT_LE(ds.events[i - 1].timestamp, ds.events[i].timestamp);
  const DatasetProfile p;
  for (const auto& e : ds.events) {
    EXPECT_NO_THROW(validate(e.features, ds.schema));
    EXPECT_TRUE(Ipv4::try_parse(e.features[0]).has_value());
    EXPECT_GE(e.timestamp, p.start);
    EXPECT_LE(e.timestamp, p.start + p.time_span);
  }
}

TEST(Generate, SingleUser) {
  DatasetProfile p;
  p.n_users = 1;
  p.total_logins = 40;
  const auto g = generate(p);
  ASSERT_EQ(g.dataset.events.size(), 40u);
  for (std::size_t i = 0; i < g.dataset.events.size(); ++i) {
    EXPECT_EQ(g.dataset.events[i].user_id, g.dataset.events[0].user_id);
    if (i > 0) {
      EXPECT_LT(g.dataset.events[i - 1].timestamp, g.dataset.events[i].timestamp);
    }
  }
}

TEST(Generate, ByteIdenticalForSameSeed) {
  DatasetProfile p;
  p.n_users = 100;
  p.total_logins = 1000;
  std::ostringstream a, b, c;
  write_dataset(a, generate(p).dataset);
  write_dataset(b, generate(p).dataset);
  p.seed = 43;
  write_dataset(c, generate(p).dataset);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Generate, FrequencyMixWithinFivePoints) {
  const auto& g = standard();
  const auto users = by_user(g.dataset);
  std::map<FrequencyClass, double> share;
  for (const auto& [u, events] : users) {
    std::vector<Timestamp> times;
    for (const auto* e : events) times.push_back(e->timestamp);
    share[classify_frequency(times)] += 1.0 / static_cast<double>(users.size());
  }
  const FrequencyMix mix;
  EXPECT_NEAR(share[FrequencyClass::kDaily], mix.daily, 0.05);
  EXPECT_NEAR(share[FrequencyClass::kSeveralWeekly], mix.several_weekly, 0.05);
  EXPECT_NEAR(share[FrequencyClass::kOther], mix.other, 0.05);
}

TEST(Generate, RegionConcentrationWithinFivePoints) {
  const auto& g = standard();
  std::size_t in_city = 0;
  for (const auto& [u, events] : by_user(g.dataset)) {
    std::map<std::string, int> counts;
    for (const auto* e : events) ++counts[e->features[0]];
    std::string modal;
    int best = 0;
    for (const auto& [ip, n] : counts) {
      if (n > best) {
        best = n;
        modal = ip;
      }
    }
    in_city += g.world.in_city(Ipv4::parse(modal)) ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(in_city) / 780.0, DatasetProfile{}.region_concentration, 0.05);
}

TEST(Generate, PoolsRespectBounds) {
  for (std::size_t max : {1u, 2u, 4u}) {
    DatasetProfile p;
    p.n_users = 60;
    p.total_logins = 600;
    p.ip_pool_min = 1;
    p.ip_pool_max = max;
    p.outlier_rate = 0.0;
    const auto g = generate(p);
    std::map<std::string, const GeneratedUser*> users;
    for (const auto& u : g.users) {
      EXPECT_GE(u.pool.size(), 1u);
      EXPECT_LE(u.pool.size(), max);
      users[u.id] = &u;
    }
    // Without outliers every address comes from the user's own pool.
    for (const auto& e : g.dataset.events) {
      const auto ip = Ipv4::parse(e.features[0]);
      const auto& pool = users.at(e.user_id)->pool;
      EXPECT_TRUE(std::any_of(pool.begin(), pool.end(), [&](const PoolEntry& pe) { return pe.range.contains(ip); }));
    }
  }
}

TEST(Generate, InfeasibleProfiles) {
  DatasetProfile p;
  p.n_users = 10;
  p.total_logins = 9;
  EXPECT_THROW(generate(p), ProfileError);
  p = DatasetProfile{};
  p.frequency_mix = {0.5, 0.5, 0.5};
  EXPECT_THROW(p.validate(), ProfileError);
  p = DatasetProfile{};
  p.ip_pool_max = 5;
  EXPECT_THROW(p.validate(), ProfileError);
  p = DatasetProfile{};
  p.n_users = 1;
  p.total_logins = 100000;
  p.time_span = std::chrono::days(10);
  EXPECT_THROW(generate(p), ProfileError);
}

TEST(Generate, ClassifyFrequency) {
  const Timestamp t0{std::chrono::seconds(0)};
  const auto day = std::chrono::seconds(86400);
  EXPECT_EQ(classify_frequency({t0}), FrequencyClass::kOther);
  EXPECT_EQ(classify_frequency({t0, t0 + day, t0 + 2 * day}), FrequencyClass::kDaily);
  EXPECT_EQ(classify_frequency({t0, t0 + 4 * day}), FrequencyClass::kSeveralWeekly);
  EXPECT_EQ(classify_frequency({t0, t0 + 20 * day}), FrequencyClass::kOther);
}

TEST(GenerateBlocklist, AvoidsCityAndParses) {
  const auto world = SyntheticWorld::standard();
  const auto lines = generate_blocklist(world, BlocklistProfile{});
  EXPECT_EQ(lines.size(), 3000u);
  std::ostringstream text;
  for (const auto& l : lines) text << l << '\n';
  std::istringstream in(text.str());
  const auto ips = parse_blocklist(in);
  const GeoMap geo = world.geo_map();
  std::size_t home = 0;
  for (auto ip : ips) {
    EXPECT_FALSE(world.in_city(ip));
    EXPECT_NE(geo.region_of(ip), geo.default_region());
    home += geo.region_of(ip) == world.home_country ? 1 : 0;
  }
  EXPECT_GT(home, 0u);
  EXPECT_EQ(generate_blocklist(world, BlocklistProfile{}), lines);
}

}  // namespace
}  // namespace rbapriv
