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

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rbapriv/attack_sim.hpp"
#include "support/generators.hpp"

namespace rbapriv {
namespace {

const Timestamp kT0{std::chrono::seconds(1'600'000'000)};

std::vector<Ipv4> parse(const std::string& text, std::size_t cap = 64, std::uint64_t seed = 0) {
  std::istringstream in(text);
  return parse_blocklist(in, BlocklistOptions{cap, seed});
}

std::vector<std::string> strings(const std::vector<Ipv4>& ips) {
  std::vector<std::string> out;
  for (auto ip : ips) out.push_back(ip.to_string());
  return out;
}

TEST(Blocklist, SingleAddress) { EXPECT_EQ(strings(parse("1.2.3.4\n")), std::vector<std::string>{"1.2.3.4"}); }

TEST(Blocklist, SmallRangeEnumerated) {
  EXPECT_EQ(strings(parse("10.0.0.0/30\n", 4)),
            (std::vector<std::string>{"10.0.0.0", "10.0.0.1", "10.0.0.2", "10.0.0.3"}));
}

TEST(Blocklist, CommentOnly) { EXPECT_TRUE(parse("# comment\n").empty()); }

TEST(Blocklist, LargeRangeSampledWithinRange) {
  const auto ips = parse("172.16.0.0/12\n", 50, 3);
  EXPECT_EQ(ips.size(), 50u);
  const Cidr range = Cidr::parse("172.16.0.0/12");
  for (auto ip : ips) EXPECT_TRUE(range.contains(ip));
  EXPECT_EQ(std::set<Ipv4>(ips.begin(), ips.end()).size(), 50u);
  EXPECT_EQ(strings(parse("172.16.0.0/12\n", 50, 3)), strings(ips));
  EXPECT_NE(strings(parse("172.16.0.0/12\n", 50, 4)), strings(ips));
}

TEST(Blocklist, DuplicatesRemovedFirstKept) {
  EXPECT_EQ(strings(parse("5.5.5.5\n10.0.0.0/31\n10.0.0.1\n5.5.5.5\n")),
            (std::vector<std::string>{"5.5.5.5", "10.0.0.0", "10.0.0.1"}));
}

TEST(Blocklist, MalformedLineNamesLine) {
  try {
    parse("1.2.3.4\n\n1.2.3.999\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Blocklist, TestDataFile) {
  const auto ips = load_blocklist(RBAPRIV_TEST_DATA "/blocklist.txt", BlocklistOptions{16, 1});
  // 2 hosts + /30 (4) + /24 sampled to 16.
  EXPECT_EQ(ips.size(), 22u);
  EXPECT_EQ(ips[0].to_string(), "198.51.100.7");
  EXPECT_THROW(load_blocklist("/nonexistent/blocklist"), ParseError);
}

TEST(GeoMapTest, LongestPrefixAndDefault) {
  const GeoMap geo = load_geomap(RBAPRIV_TEST_DATA "/geomap.csv");
  EXPECT_EQ(geo.region_of(Ipv4::parse("10.1.2.3")), "city");
  EXPECT_EQ(geo.region_of(Ipv4::parse("10.2.2.3")), "home");
  EXPECT_EQ(geo.region_of(Ipv4::parse("8.8.8.8")), "unknown");
  std::ostringstream out;
  geo.write_csv(out);
  std::istringstream in(out.str());
  const GeoMap again = GeoMap::parse_csv(in);
  EXPECT_EQ(again.entries(), geo.entries());
}

TEST(GeoMapTest, Errors) {
  std::istringstream conflict("1.0.0.0/8,a\n1.0.0.0/8,b\n");
  EXPECT_THROW(GeoMap::parse_csv(conflict), ParseError);
  std::istringstream bad("1.0.0.0/8\n");
  try {
    GeoMap::parse_csv(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

Dataset make_dataset(const std::vector<std::tuple<std::string, std::string, std::string>>& rows) {
  Dataset ds;
  ds.schema = FeatureSchema::ip_and_user_agent();
  for (const auto& [u, ip, ua] : rows) ds.events.push_back({u, kT0, FeatureVector{{ip, ua}}});
  return ds;
}

TEST(Attack, TargetedSingletonSupport) {
  const Dataset ds = make_dataset({{"victim", "1.1.1.1", "ua-v"},
                                   {"bob", "2.2.2.2", "ua-x"},
                                   {"carol", "2.2.2.2", "ua-x"}});
  const AttackSimulator sim(ds, {}, GeoMap());
  Rng rng(1);
  EXPECT_EQ(sim.targeted_support("victim"), 1u);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sim.sample_attempt(AttackerKind::kTargeted, "victim", rng), (FeatureVector{{"2.2.2.2", "ua-x"}}));
  }
}

TEST(Attack, TargetedNeverUsesVictimOnlyCombos) {
  gen::Source src(31);
  for (int round = 0; round < 20; ++round) {
    Dataset ds = gen::toy_dataset(src, {5, 40, 4, 2});
    for (auto& e : ds.events) e.features.values[0] = "10.0.0." + e.features.values[0].substr(3);
    const AttackSimulator sim(ds, {}, GeoMap());
    std::map<FeatureVector, std::set<std::string>, bool (*)(const FeatureVector&, const FeatureVector&)> holders(
        [](const FeatureVector& a, const FeatureVector& b) { return a.values < b.values; });
    for (const auto& e : ds.events) holders[e.features].insert(e.user_id);
    Rng rng(static_cast<std::uint64_t>(round));
    for (const auto& [victim, unused] : std::map<std::string, int>{{"u0", 0}, {"u1", 0}}) {
      std::size_t eligible = 0;
      for (const auto& [combo, who] : holders) eligible += (who.size() == 1 && who.count(victim)) ? 0 : 1;
      EXPECT_EQ(sim.targeted_support(victim), eligible);
      if (eligible == 0) {
        EXPECT_THROW(sim.sample_attempt(AttackerKind::kTargeted, victim, rng), NoAttackerMaterial);
        continue;
      }
      for (int i = 0; i < 200; ++i) {
        const FeatureVector fv = sim.sample_attempt(AttackerKind::kTargeted, victim, rng);
        const auto& who = holders.at(fv);
        EXPECT_FALSE(who.size() == 1 && who.count(victim));
      }
    }
  }
}

TEST(Attack, TargetedSingleUserDatasetHasNoMaterial) {
  const Dataset ds = make_dataset({{"solo", "1.1.1.1", "a"}, {"solo", "1.1.1.2", "a"}});
  const AttackSimulator sim(ds, {}, GeoMap());
  Rng rng(1);
  EXPECT_THROW(sim.sample_attempt(AttackerKind::kTargeted, "solo", rng), NoAttackerMaterial);
}

TEST(Attack, VpnStaysInVictimRegion) {
  const GeoMap geo = load_geomap(RBAPRIV_TEST_DATA "/geomap.csv");
  const auto blocklist = load_blocklist(RBAPRIV_TEST_DATA "/blocklist.txt", BlocklistOptions{64, 2});
  const Dataset ds = make_dataset({{"victim", "198.51.100.200", "ua-v"},
                                   {"victim", "198.51.100.200", "ua-v"},
                                   {"victim", "203.0.113.9", "ua-v"},
                                   {"other", "192.0.2.1", "ua-o"}});
  const AttackSimulator sim(ds, blocklist, geo);
  EXPECT_EQ(sim.victim_region("victim"), "home");
  const AttackerModel m = sim.model(AttackerKind::kVpn, "victim");
  EXPECT_EQ(m.region, "home");
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const FeatureVector fv = sim.sample_attempt(m, "victim", rng);
    EXPECT_EQ(geo.region_of(Ipv4::parse(fv[0])), "home");
  }
  // No pool for the other victim's region? "abroad" has entries; "city" has none.
  const Dataset city = make_dataset({{"v", "10.1.0.1", "ua"}, {"w", "10.1.0.2", "ua"}});
  const AttackSimulator city_sim(city, blocklist, geo);
  EXPECT_THROW(city_sim.sample_attempt(AttackerKind::kVpn, "v", rng), NoAttackerMaterial);
}

TEST(Attack, NaiveDrawsFromPoolAndDataset) {
  const auto blocklist = load_blocklist(RBAPRIV_TEST_DATA "/blocklist.txt", BlocklistOptions{64, 2});
  const std::set<Ipv4> pool(blocklist.begin(), blocklist.end());
  const Dataset ds = make_dataset({{"a", "10.0.0.1", "ua-1"}, {"b", "10.0.0.2", "ua-2"}, {"b", "10.0.0.2", "ua-2"}});
  const AttackSimulator sim(ds, blocklist, GeoMap());
  Rng rng(4);
  std::map<std::string, int> ua_counts;
  for (int i = 0; i < 30000; ++i) {
    const FeatureVector fv = sim.sample_attempt(AttackerKind::kNaive, "a", rng);
    EXPECT_TRUE(pool.count(Ipv4::parse(fv[0])));
    ++ua_counts[fv[1]];
  }
  // User agents follow the global distribution (1/3 vs 2/3).
  EXPECT_NEAR(ua_counts["ua-2"] / 30000.0, 2.0 / 3.0, 0.02);
}

TEST(Attack, SeededStreamsReproduce) {
  const auto blocklist = load_blocklist(RBAPRIV_TEST_DATA "/blocklist.txt");
  const Dataset ds = make_dataset({{"a", "10.0.0.1", "ua-1"}, {"b", "10.0.0.2", "ua-2"}});
  const AttackSimulator sim(ds, blocklist, GeoMap());
  for (AttackerKind kind : kAllAttackerKinds) {
    if (kind == AttackerKind::kVpn) continue;
    Rng r1 = Rng::derive(9, Stream::kAttackNaive, 4), r2 = Rng::derive(9, Stream::kAttackNaive, 4);
    for (int i = 0; i < 100; ++i) {
      EXPECT_EQ(sim.sample_attempt(kind, "a", r1), sim.sample_attempt(kind, "a", r2));
    }
  }
}

TEST(Attack, KindNames) {
  for (AttackerKind k : kAllAttackerKinds) EXPECT_EQ(parse_attacker_kind(to_string(k)), k);
  EXPECT_THROW(parse_attacker_kind("ninja"), ArgumentError);
}

TEST(RngTest, DerivedStreamsDifferAndRepeat) {
  Rng a = Rng::derive(1, Stream::kDataset), b = Rng::derive(1, Stream::kDataset), c = Rng::derive(1, Stream::kPadding);
  bool differs = false;
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs |= x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(RngTest, UniformIndexCoversRange) {
  Rng rng(7);
  std::vector<int> hist(7);
  for (int i = 0; i < 70000; ++i) ++hist[rng.uniform_index(7)];
  for (int h : hist) EXPECT_NEAR(h, 10000, 600);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace rbapriv
