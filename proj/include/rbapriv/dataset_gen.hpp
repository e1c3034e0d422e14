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

// Synthetic login datasets.
//
// The generated world has one home country whose users mostly live in a
// single city served by a handful of ISPs, plus foreign countries. Each
// user owns a small pool of network locations (home, work, mobile, ...);
// dynamic locations hand out a fresh address inside a range on most logins.
// A small share of logins come from an arbitrary address anywhere (travel,
// hotspots).

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rbapriv/attack_sim.hpp"
#include "rbapriv/errors.hpp"
#include "rbapriv/features.hpp"
#include "rbapriv/ipv4.hpp"
#include "rbapriv/random.hpp"

namespace rbapriv {

enum class FrequencyClass { kDaily, kSeveralWeekly, kOther };

inline std::string_view to_string(FrequencyClass c) {
  switch (c) {
    case FrequencyClass::kDaily: return "daily";
    case FrequencyClass::kSeveralWeekly: return "several_weekly";
    case FrequencyClass::kOther: return "other";
  }
  return "other";
}

struct FrequencyMix {
  double daily = 0.443;
  double several_weekly = 0.392;
  double other = 0.165;
};

struct DatasetProfile {
  std::size_t n_users = 780;
  std::size_t total_logins = 9555;
  FrequencyMix frequency_mix;
  /// Share of users living in the concentrated city region.
  double region_concentration = 0.85;
  std::size_t ip_pool_min = 1;
  std::size_t ip_pool_max = 4;
  Timestamp start = Timestamp{std::chrono::seconds{1533081600}};  // 2018-08-01T00:00:00Z
  std::chrono::days time_span{699};
  /// Share of logins drawn from an arbitrary address instead of the pool.
  double outlier_rate = 0.02;
  std::uint64_t seed = 42;

  void validate() const {
    const auto& m = frequency_mix;
    if (m.daily < 0 || m.several_weekly < 0 || m.other < 0 ||
        std::abs(m.daily + m.several_weekly + m.other - 1.0) > 1e-9) {
      throw ProfileError("frequency mix must be non-negative and sum to 1");
    }
    if (n_users == 0) throw ProfileError("profile needs at least one user");
    if (total_logins < n_users) {
      throw ProfileError("infeasible profile: " + std::to_string(total_logins) + " logins for " +
                         std::to_string(n_users) + " users");
    }
    if (!(region_concentration >= 0.0 && region_concentration <= 1.0)) {
      throw ProfileError("region concentration must lie in [0, 1]");
    }
    if (ip_pool_min < 1 || ip_pool_max < ip_pool_min || ip_pool_max > 4) {
      throw ProfileError("ip pool size range must satisfy 1 <= min <= max <= 4");
    }
    if (time_span.count() < 1) throw ProfileError("time span must be positive");
    if (!(outlier_rate >= 0.0 && outlier_rate < 1.0)) throw ProfileError("outlier rate must lie in [0, 1)");
  }

  double mean_logins_per_user() const {
    return static_cast<double>(total_logins) / static_cast<double>(n_users);
  }
};

/// Mean inter-login gap (days) separating the frequency classes.
inline constexpr double kDailyMaxGapDays = 1.5;
inline constexpr double kWeeklyMaxGapDays = 7.0;

/// Frequency class implied by a user's sorted login times.
inline FrequencyClass classify_frequency(const std::vector<Timestamp>& times) {
  if (times.size() < 2) return FrequencyClass::kOther;
  const double span_days =
      std::chrono::duration<double, std::ratio<86400>>(times.back() - times.front()).count();
  const double mean_gap = span_days / static_cast<double>(times.size() - 1);
  if (mean_gap <= kDailyMaxGapDays) return FrequencyClass::kDaily;
  if (mean_gap <= kWeeklyMaxGapDays) return FrequencyClass::kSeveralWeekly;
  return FrequencyClass::kOther;
}

enum class Residence { kCity, kHomeCountry, kAbroad };

/// One network location in a user's pool.
struct PoolEntry {
  Cidr range;
  double reuse = 1.0;   // probability of keeping the previous address
  double weight = 1.0;  // relative usage frequency
};

struct GeneratedUser {
  std::string id;
  FrequencyClass frequency = FrequencyClass::kOther;
  Residence residence = Residence::kCity;
  std::string country;
  std::vector<PoolEntry> pool;
};

/// Address layout of the synthetic world.
struct SyntheticWorld {
  std::string home_country;
  std::vector<std::string> countries;                     // home first
  std::map<std::string, std::vector<Cidr>> country_blocks;  // /8 blocks
  std::vector<Cidr> city_isps;                            // /16 blocks in the city
  std::vector<Cidr> mobile_carriers;                      // national /16 blocks

  GeoMap geo_map() const {
    GeoMap geo;
    for (const auto& c : countries) {
      for (const auto& block : country_blocks.at(c)) geo.add(block, c);
    }
    return geo;
  }

  bool in_city(Ipv4 ip) const {
    return std::any_of(city_isps.begin(), city_isps.end(), [&](const Cidr& c) { return c.contains(ip); });
  }

  static SyntheticWorld standard() {
    SyntheticWorld w;
    w.home_country = "DE";
    w.countries = {"DE", "US", "CN", "BR", "RU", "IN", "FR", "GB", "NL", "VN", "KR", "ID"};
    int next_block = 20;
    for (const auto& c : w.countries) {
      const int blocks = c == w.home_country ? 3 : 2;
      for (int i = 0; i < blocks; ++i) {
        w.country_blocks[c].emplace_back(Ipv4(static_cast<std::uint8_t>(next_block++), 0, 0, 0), 8);
      }
    }
    const auto& home = w.country_blocks.at(w.home_country);
    const std::uint8_t city_octet = home[0].network().octets()[0];
    for (int b : {12, 45, 77, 130, 168, 201}) {
      w.city_isps.emplace_back(Ipv4(city_octet, static_cast<std::uint8_t>(b), 0, 0), 16);
    }
    const std::uint8_t mobile_octet = home[1].network().octets()[0];
    for (int b : {4, 90, 180}) {
      w.mobile_carriers.emplace_back(Ipv4(mobile_octet, static_cast<std::uint8_t>(b), 0, 0), 16);
    }
    return w;
  }
};

struct GeneratedDataset {
  Dataset dataset;
  SyntheticWorld world;
  std::vector<GeneratedUser> users;
};

namespace detail {

/// Splits `n` into integer parts proportional to `shares` (largest remainder).
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& shares) {
  std::vector<std::size_t> parts(shares.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = shares[i] * static_cast<double>(n);
    parts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += parts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++parts[remainders[i % remainders.size()].second];
  return parts;
}

struct Device {
  int platform;  // 0 windows, 1 mac, 2 android, 3 iphone, 4 linux
  int browser;   // 0 chrome, 1 firefox, 2 safari, 3 edge
  int major;
  double weight;
};

inline std::string user_agent(const Device& d) {
  const std::string v = std::to_string(d.major);
  const std::string chrome_full = v + ".0." + std::to_string(3000 + d.major * 17) + "." +
                                  std::to_string(40 + d.major % 60);
  static constexpr std::array<std::string_view, 5> kDesktopOs = {
      "Windows NT 10.0; Win64; x64", "Macintosh; Intel Mac OS X 10_15_7", "Linux; Android 10; SM-G973F",
      "iPhone; CPU iPhone OS 14_2 like Mac OS X", "X11; Linux x86_64"};
  const std::string os(kDesktopOs[static_cast<std::size_t>(d.platform)]);
  switch (d.browser) {
    case 1:
      return "Mozilla/5.0 (" + os + "; rv:" + v + ".0) Gecko/20100101 Firefox/" + v + ".0";
    case 2:
      if (d.platform == 3) {
        return "Mozilla/5.0 (" + os + ") AppleWebKit/605.1.15 (KHTML, like Gecko) Version/" + v +
               ".0 Mobile/15E148 Safari/604.1";
      }
      return "Mozilla/5.0 (" + os + ") AppleWebKit/605.1.15 (KHTML, like Gecko) Version/" + v +
             ".0.1 Safari/605.1.15";
    case 3:
      return "Mozilla/5.0 (" + os + ") AppleWebKit/537.36 (KHTML, like Gecko) Chrome/" + chrome_full +
             " Safari/537.36 Edg/" + chrome_full;
    default:
      return "Mozilla/5.0 (" + os + ") AppleWebKit/537.36 (KHTML, like Gecko) Chrome/" + chrome_full +
             (d.platform == 2 ? " Mobile" : "") + " Safari/537.36";
  }
}

inline Device random_device(Rng& rng) {
  static constexpr std::array<double, 5> kPlatform = {0.45, 0.15, 0.20, 0.15, 0.05};
  Device d{};
  d.platform = static_cast<int>(rng.weighted_index(kPlatform));
  switch (d.platform) {
    case 0: {
      static constexpr std::array<double, 4> w = {0.65, 0.2, 0.0, 0.15};
      d.browser = static_cast<int>(rng.weighted_index(w));
      break;
    }
    case 1: {
      static constexpr std::array<double, 4> w = {0.45, 0.15, 0.4, 0.0};
      d.browser = static_cast<int>(rng.weighted_index(w));
      break;
    }
    case 3: d.browser = 2; break;
    case 4: d.browser = rng.bernoulli(0.6) ? 1 : 0; break;
    default: d.browser = 0; break;
  }
  const int base = d.browser == 0 || d.browser == 3 ? 68 : (d.browser == 1 ? 61 : 11);
  d.major = base + static_cast<int>(rng.uniform_int(-3, 1));
  d.weight = 1.0;
  return d;
}

inline Ipv4 random_in(const Cidr& range, Rng& rng) {
  return range.at(rng.uniform_index(static_cast<std::size_t>(range.size())));
}

}  // namespace detail

/// Synthesises a login dataset for `profile`. Deterministic in profile.seed.
inline GeneratedDataset generate(const DatasetProfile& profile) {
  profile.validate();
  using detail::random_in;
  Rng rng = Rng::derive(profile.seed, Stream::kDataset);
  GeneratedDataset out;
  out.world = SyntheticWorld::standard();
  const SyntheticWorld& world = out.world;
  const std::size_t n = profile.n_users;

  // Frequency classes and residences in exact proportions, randomly placed.
  const auto& mix = profile.frequency_mix;
  const auto class_counts = detail::apportion(n, {mix.daily, mix.several_weekly, mix.other});
  std::vector<FrequencyClass> classes;
  for (std::size_t c = 0; c < 3; ++c) classes.insert(classes.end(), class_counts[c], static_cast<FrequencyClass>(c));
  rng.shuffle(std::span(classes));

  const double rest = 1.0 - profile.region_concentration;
  const auto residence_counts =
      detail::apportion(n, {profile.region_concentration, rest * 2.0 / 3.0, rest / 3.0});
  std::vector<Residence> residences;
  for (std::size_t r = 0; r < 3; ++r) residences.insert(residences.end(), residence_counts[r], static_cast<Residence>(r));
  rng.shuffle(std::span(residences));

  // Login counts: class minimum, then the remainder spread by class weight.
  const double span_days = static_cast<double>(profile.time_span.count());
  static constexpr std::array<double, 3> kMinGap = {0.5, 1.75, 10.0};
  static constexpr std::array<double, 3> kMaxGap = {1.5, 5.25, 30.0};
  static constexpr std::array<double, 3> kClassWeight = {1.6, 0.9, 0.35};
  const std::size_t frequent = class_counts[0] + class_counts[1];
  const bool two_minimum = profile.total_logins >= n + frequent;
  std::vector<std::size_t> counts(n), capacity(n);
  std::vector<double> weights(n);
  std::size_t assigned = 0;
  for (std::size_t u = 0; u < n; ++u) {
    const auto c = static_cast<std::size_t>(classes[u]);
    counts[u] = (two_minimum && c < 2) ? 2 : 1;
    capacity[u] = std::max<std::size_t>(counts[u], static_cast<std::size_t>(span_days / kMaxGap[c]) + 1);
    weights[u] = kClassWeight[c] * rng.uniform(0.3, 1.7);
    assigned += counts[u];
  }
  for (; assigned < profile.total_logins; ++assigned) {
    std::vector<double> open(n);
    bool any = false;
    for (std::size_t u = 0; u < n; ++u) {
      open[u] = counts[u] < capacity[u] ? weights[u] : 0.0;
      any = any || open[u] > 0.0;
    }
    if (!any) throw ProfileError("infeasible profile: time span too short for the requested logins");
    ++counts[rng.weighted_index(open)];
  }

  // Users: pools and devices.
  const int width = std::max<int>(4, static_cast<int>(std::to_string(n).size()));
  std::vector<std::string> foreign(world.countries.begin() + 1, world.countries.end());
  std::vector<std::vector<detail::Device>> devices(n);
  for (std::size_t u = 0; u < n; ++u) {
    GeneratedUser user;
    std::string id = std::to_string(u + 1);
    user.id = "u" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(id.size(), width), '0') + id;
    user.frequency = classes[u];
    user.residence = residences[u];
    user.country = user.residence == Residence::kAbroad ? foreign[rng.uniform_index(foreign.size())]
                                                        : world.home_country;

    // A /16 "ISP" near where the user lives.
    auto pick_isp = [&]() -> Cidr {
      if (user.residence == Residence::kCity) {
        static constexpr std::array<double, 6> kShare = {0.35, 0.25, 0.15, 0.12, 0.08, 0.05};
        return world.city_isps[rng.weighted_index(kShare)];
      }
      const auto& blocks = world.country_blocks.at(user.country);
      const Cidr& block = blocks[rng.uniform_index(blocks.size())];
      return Cidr(block.at(static_cast<std::uint64_t>(rng.uniform_index(256)) << 16), 16);
    };
    auto sub_range = [&](const Cidr& isp, int len) {
      const std::uint64_t slots = std::uint64_t{1} << (len - 16);
      return Cidr(isp.at(rng.uniform_index(static_cast<std::size_t>(slots)) << (32 - len)), len);
    };

    const std::size_t pool_size =
        static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(profile.ip_pool_min),
                                                 static_cast<std::int64_t>(profile.ip_pool_max)));
    // home: dynamic address within a /20 of the ISP's customer range
    user.pool.push_back({sub_range(pick_isp(), 20), 0.5, 0.6});
    if (pool_size >= 2) user.pool.push_back({Cidr(random_in(sub_range(pick_isp(), 24), rng), 32), 1.0, 0.25});
    if (pool_size >= 3) {
      const Cidr mobile = user.country == world.home_country
                              ? world.mobile_carriers[rng.uniform_index(world.mobile_carriers.size())]
                              : pick_isp();
      user.pool.push_back({mobile, 0.1, 0.1});
    }
    if (pool_size >= 4) user.pool.push_back({sub_range(pick_isp(), 24), 0.7, 0.05});

    const std::size_t n_devices = 1 + rng.uniform_index(2) + (rng.bernoulli(0.2) ? 1 : 0);
    for (std::size_t i = 0; i < n_devices; ++i) {
      auto d = detail::random_device(rng);
      d.weight = i == 0 ? 1.0 : 0.3;
      devices[u].push_back(d);
    }
    out.users.push_back(std::move(user));
  }

  // Events.
  std::vector<Cidr> all_blocks;
  for (const auto& c : world.countries) {
    for (const auto& b : world.country_blocks.at(c)) all_blocks.push_back(b);
  }
  constexpr double kDay = 86400.0;
  auto& events = out.dataset.events;
  events.reserve(profile.total_logins);
  for (std::size_t u = 0; u < n; ++u) {
    const auto c = static_cast<std::size_t>(classes[u]);
    std::vector<double> gaps(counts[u] > 0 ? counts[u] - 1 : 0);
    double window = 0.0;
    for (double& g : gaps) {
      g = rng.uniform(kMinGap[c], kMaxGap[c]);
      window += g;
    }
    if (window > span_days) {
      for (double& g : gaps) g *= span_days / window;
      window = span_days;
    }
    double t = rng.uniform(0.0, span_days - window);

    const GeneratedUser& user = out.users[u];
    std::vector<double> pool_weights;
    for (const auto& e : user.pool) pool_weights.push_back(e.weight);
    std::vector<std::optional<Ipv4>> last(user.pool.size());
    std::vector<double> device_weights;
    for (const auto& d : devices[u]) device_weights.push_back(d.weight);

    for (std::size_t i = 0; i < counts[u]; ++i) {
      if (i > 0) t += gaps[i - 1];
      Ipv4 ip;
      if (rng.bernoulli(profile.outlier_rate)) {
        ip = random_in(all_blocks[rng.uniform_index(all_blocks.size())], rng);
      } else {
        const std::size_t p = rng.weighted_index(pool_weights);
        if (!last[p] || !rng.bernoulli(user.pool[p].reuse)) last[p] = random_in(user.pool[p].range, rng);
        ip = *last[p];
      }
      auto& device = devices[u][rng.weighted_index(device_weights)];
      if (rng.bernoulli(0.04)) ++device.major;  // browser update

      LoginEvent e;
      e.user_id = user.id;
      e.timestamp = profile.start + std::chrono::seconds(static_cast<std::int64_t>(std::llround(t * kDay)));
      e.features.values = {ip.to_string(), detail::user_agent(device)};
      events.push_back(std::move(e));
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const LoginEvent& a, const LoginEvent& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.user_id < b.user_id;
  });
  out.dataset.schema = FeatureSchema::ip_and_user_agent();
  return out;
}

struct BlocklistProfile {
  std::size_t addresses = 3000;
  /// Share of addresses placed in the home country (material for VPN attackers).
  double home_share = 0.15;
  /// Share of foreign entries written as small CIDR ranges instead of hosts.
  double range_share = 0.05;
  std::uint64_t seed = 42;
};

/// Blocklist lines (addresses and a few CIDR ranges) spread over the world.
/// Home-country entries avoid the city ISP ranges: attackers there come from
/// elsewhere in the country.
inline std::vector<std::string> generate_blocklist(const SyntheticWorld& world, const BlocklistProfile& profile) {
  Rng rng = Rng::derive(profile.seed, Stream::kBlocklist, 1);
  std::vector<std::string> lines;
  std::vector<std::string> foreign(world.countries.begin() + 1, world.countries.end());
  for (std::size_t i = 0; i < profile.addresses; ++i) {
    const bool home = rng.bernoulli(profile.home_share);
    const auto& country = home ? world.home_country : foreign[rng.uniform_index(foreign.size())];
    const auto& blocks = world.country_blocks.at(country);
    Ipv4 ip;
    do {
      ip = detail::random_in(blocks[rng.uniform_index(blocks.size())], rng);
    } while (world.in_city(ip));
    if (!home && rng.bernoulli(profile.range_share)) {
      lines.push_back(Cidr(ip, 29).to_string());
    } else {
      lines.push_back(ip.to_string());
    }
  }
  return lines;
}

}  // namespace rbapriv
