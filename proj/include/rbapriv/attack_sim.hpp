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
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rbapriv/errors.hpp"
#include "rbapriv/features.hpp"
#include "rbapriv/ipv4.hpp"
#include "rbapriv/random.hpp"

namespace rbapriv {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Strips a trailing "# ..." comment and surrounding whitespace.
inline std::string_view strip_comment(std::string_view line) {
  return trim(line.substr(0, line.find('#')));
}

}  // namespace detail

/// Maps IPv4 prefixes to region labels. Longest matching prefix wins;
/// addresses matching nothing get the default region.
class GeoMap {
 public:
  explicit GeoMap(std::string default_region = "unknown") : default_region_(std::move(default_region)) {}

  void add(const Cidr& prefix, std::string region) {
    auto& level = by_length_[static_cast<std::size_t>(prefix.prefix_len())];
    const auto [it, inserted] = level.emplace(prefix.network().to_uint(), region);
    if (!inserted && it->second != region) {
      throw ConfigError("conflicting regions for " + prefix.to_string());
    }
    if (inserted) entries_.emplace_back(prefix, std::move(region));
  }

  const std::string& region_of(Ipv4 ip) const {
    for (int len = 32; len >= 0; --len) {
      const auto& level = by_length_[static_cast<std::size_t>(len)];
      if (level.empty()) continue;
      const auto it = level.find(ip.to_uint() & prefix_mask(len));
      if (it != level.end()) return it->second;
    }
    return default_region_;
  }

  const std::string& default_region() const noexcept { return default_region_; }
  const std::vector<std::pair<Cidr, std::string>>& entries() const noexcept { return entries_; }

  /// Reads "cidr,region" lines. Blank lines and '#' comments are ignored; an
  /// optional "cidr,region" header row is skipped.
  static GeoMap parse_csv(std::istream& in) {
    GeoMap geo;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string_view body = detail::strip_comment(line);
      if (body.empty()) continue;
      const auto comma = body.find(',');
      if (comma == std::string_view::npos) throw ParseError("expected 'cidr,region'", line_no);
      const std::string_view cidr_text = detail::trim(body.substr(0, comma));
      const std::string_view region = detail::trim(body.substr(comma + 1));
      if (line_no == 1 && cidr_text == "cidr") continue;
      if (region.empty() || region.find(',') != std::string_view::npos) {
        throw ParseError("expected 'cidr,region'", line_no);
      }
      try {
        geo.add(Cidr::parse(cidr_text), std::string(region));
      } catch (const ParseError& e) {
        throw ParseError(e.what(), line_no);
      } catch (const ConfigError& e) {
        throw ParseError(e.what(), line_no);
      }
    }
    return geo;
  }

  void write_csv(std::ostream& out) const {
    out << "cidr,region\n";
    for (const auto& [prefix, region] : entries_) out << prefix.to_string() << ',' << region << '\n';
  }

 private:
  std::string default_region_;
  std::array<std::unordered_map<std::uint32_t, std::string>, 33> by_length_;
  std::vector<std::pair<Cidr, std::string>> entries_;
};

inline GeoMap load_geomap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open geo map '" + path.string() + "'");
  return GeoMap::parse_csv(in);
}

struct BlocklistOptions {
  /// Maximum addresses drawn from one CIDR range; smaller ranges are
  /// enumerated completely.
  std::size_t cidr_sample_cap = 64;
  std::uint64_t seed = 0;
};

/// Parses one IPv4 address or CIDR range per line ('#' starts a comment).
/// Ranges are expanded by uniform sampling without replacement up to the
/// cap. Duplicates are dropped, first occurrence kept.
inline std::vector<Ipv4> parse_blocklist(std::istream& in, const BlocklistOptions& options = {}) {
  Rng rng = Rng::derive(options.seed, Stream::kBlocklist);
  std::vector<Ipv4> out;
  std::unordered_set<std::uint32_t> seen;
  auto push = [&](Ipv4 ip) {
    if (seen.insert(ip.to_uint()).second) out.push_back(ip);
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = detail::strip_comment(line);
    if (body.empty()) continue;
    Cidr range;
    try {
      range = Cidr::parse(body);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (range.size() <= options.cidr_sample_cap) {
      for (std::uint64_t i = 0; i < range.size(); ++i) push(range.at(i));
      continue;
    }
    std::unordered_set<std::uint64_t> taken;
    while (taken.size() < options.cidr_sample_cap) {
      const std::uint64_t offset = rng.uniform_index(static_cast<std::size_t>(range.size()));
      if (taken.insert(offset).second) push(range.at(offset));
    }
  }
  return out;
}

inline std::vector<Ipv4> load_blocklist(const std::filesystem::path& path,
                                        const BlocklistOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open blocklist '" + path.string() + "'");
  return parse_blocklist(in, options);
}

enum class AttackerKind { kNaive, kVpn, kTargeted };

inline constexpr std::array<AttackerKind, 3> kAllAttackerKinds = {
    AttackerKind::kNaive, AttackerKind::kVpn, AttackerKind::kTargeted};

inline std::string_view to_string(AttackerKind kind) {
  switch (kind) {
    case AttackerKind::kNaive: return "naive";
    case AttackerKind::kVpn: return "vpn";
    case AttackerKind::kTargeted: return "targeted";
  }
  return "unknown";
}

inline AttackerKind parse_attacker_kind(std::string_view text) {
  for (AttackerKind k : kAllAttackerKinds) {
    if (to_string(k) == text) return k;
  }
  throw ArgumentError("unknown attacker model '" + std::string(text) + "'");
}

/// What one attacker knows about one victim.
struct AttackerModel {
  AttackerKind kind = AttackerKind::kNaive;
  /// Candidate source addresses (naive: whole blocklist; vpn: entries in the
  /// victim's region). Unused by targeted attackers.
  std::shared_ptr<const std::vector<Ipv4>> ip_pool;
  /// Region the pool was filtered to (vpn only).
  std::string region;
};

/// Samples attacker login attempts against a raw (un-encoded) dataset.
///
/// Naive and VPN attempts take their IP from the blocklist and every other
/// feature from a uniformly drawn dataset login, i.e. from the global
/// distribution. Targeted attempts are distinct feature combinations
/// observed for users other than the victim.
///
/// Sampling is const; concurrent callers need their own Rng streams.
class AttackSimulator {
 public:
  AttackSimulator(const Dataset& dataset, std::vector<Ipv4> blocklist, GeoMap geo)
      : dataset_(&dataset),
        geo_(std::move(geo)),
        ip_feature_(dataset.schema.require(kIpFeature)),
        naive_pool_(std::make_shared<const std::vector<Ipv4>>(std::move(blocklist))) {
    std::map<std::string, std::vector<Ipv4>> by_region;
    for (Ipv4 ip : *naive_pool_) by_region[geo_.region_of(ip)].push_back(ip);
    for (auto& [region, pool] : by_region) {
      region_pools_.emplace(region, std::make_shared<const std::vector<Ipv4>>(std::move(pool)));
    }
    index_dataset();
  }

  const GeoMap& geo() const noexcept { return geo_; }
  const Dataset& dataset() const noexcept { return *dataset_; }

  /// Region of the victim's most frequent IP address (ties: smallest address).
  std::optional<std::string> victim_region(std::string_view victim) const {
    const auto it = user_index_.find(std::string(victim));
    if (it == user_index_.end()) return std::nullopt;
    return geo_.region_of(modal_ip_[it->second]);
  }

  AttackerModel model(AttackerKind kind, std::string_view victim) const {
    AttackerModel m;
    m.kind = kind;
    if (kind == AttackerKind::kNaive) {
      m.ip_pool = naive_pool_;
    } else if (kind == AttackerKind::kVpn) {
      const auto region = victim_region(victim);
      if (!region) throw NoAttackerMaterial("victim '" + std::string(victim) + "' not in dataset");
      m.region = *region;
      const auto it = region_pools_.find(*region);
      if (it != region_pools_.end()) m.ip_pool = it->second;
    }
    return m;
  }

  FeatureVector sample_attempt(const AttackerModel& m, std::string_view victim, Rng& rng) const {
    if (m.kind == AttackerKind::kTargeted) return sample_targeted(victim, rng);
    if (!m.ip_pool || m.ip_pool->empty()) {
      throw NoAttackerMaterial("no " + std::string(to_string(m.kind)) + " attacker addresses" +
                               (m.region.empty() ? std::string() : " in region '" + m.region + "'"));
    }
    if (dataset_->events.empty()) throw NoAttackerMaterial("empty dataset");
    FeatureVector fv = dataset_->events[rng.uniform_index(dataset_->events.size())].features;
    fv.values[ip_feature_] = (*m.ip_pool)[rng.uniform_index(m.ip_pool->size())].to_string();
    return fv;
  }

  FeatureVector sample_attempt(AttackerKind kind, std::string_view victim, Rng& rng) const {
    return sample_attempt(model(kind, victim), victim, rng);
  }

  /// Distinct feature combinations available to a targeted attacker.
  std::size_t targeted_support(std::string_view victim) const {
    const auto it = user_index_.find(std::string(victim));
    const std::size_t exclusive = it == user_index_.end() ? 0 : exclusive_combos_[it->second];
    return combos_.size() - exclusive;
  }

 private:
  static constexpr std::size_t kShared = static_cast<std::size_t>(-1);

  void index_dataset() {
    std::map<FeatureVector, std::size_t, CompareFv> combo_index;
    std::vector<std::map<Ipv4, std::size_t>> ip_counts;
    for (const auto& e : dataset_->events) {
      auto [uit, new_user] = user_index_.emplace(e.user_id, ip_counts.size());
      if (new_user) ip_counts.emplace_back();
      const std::size_t user = uit->second;
      if (auto ip = Ipv4::try_parse(e.features.values[ip_feature_])) ++ip_counts[user][*ip];

      auto [cit, new_combo] = combo_index.emplace(e.features, combos_.size());
      if (new_combo) {
        combos_.push_back(e.features);
        sole_holder_.push_back(user);
      } else if (sole_holder_[cit->second] != user) {
        sole_holder_[cit->second] = kShared;
      }
    }
    exclusive_combos_.assign(ip_counts.size(), 0);
    for (std::size_t holder : sole_holder_) {
      if (holder != kShared) ++exclusive_combos_[holder];
    }
    modal_ip_.resize(ip_counts.size());
    for (std::size_t u = 0; u < ip_counts.size(); ++u) {
      std::size_t best = 0;
      for (const auto& [ip, n] : ip_counts[u]) {
        if (n > best) {
          best = n;
          modal_ip_[u] = ip;
        }
      }
    }
  }

  FeatureVector sample_targeted(std::string_view victim, Rng& rng) const {
    const auto it = user_index_.find(std::string(victim));
    const std::size_t user = it == user_index_.end() ? kShared : it->second;
    if (targeted_support(victim) == 0) {
      throw NoAttackerMaterial("no feature combinations from users other than '" +
                               std::string(victim) + "'");
    }
    // Rejection sampling keeps the draw uniform over the eligible combos.
    for (;;) {
      const std::size_t c = rng.uniform_index(combos_.size());
      if (user == kShared || sole_holder_[c] != user) return combos_[c];
    }
  }

  struct CompareFv {
    bool operator()(const FeatureVector& a, const FeatureVector& b) const { return a.values < b.values; }
  };

  const Dataset* dataset_;
  GeoMap geo_;
  std::size_t ip_feature_;
  std::shared_ptr<const std::vector<Ipv4>> naive_pool_;
  std::map<std::string, std::shared_ptr<const std::vector<Ipv4>>> region_pools_;
  std::unordered_map<std::string, std::size_t> user_index_;
  std::vector<Ipv4> modal_ip_;
  std::vector<FeatureVector> combos_;
  std::vector<std::size_t> sole_holder_;
  std::vector<std::size_t> exclusive_combos_;
};

}  // namespace rbapriv
