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

#include <openssl/evp.h>

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rbapriv/errors.hpp"
#include "rbapriv/features.hpp"
#include "rbapriv/ipv4.hpp"

namespace rbapriv {

inline constexpr std::string_view kSha256 = "sha256";

/// Salted, iterated digest applied to feature values before storage.
///
/// The salt is global to a store: identical raw values must map to identical
/// tokens across users, otherwise the global history could not be counted.
struct HashPolicy {
  std::string salt;
  int iterations = 1;
  std::string digest = std::string(kSha256);

  void validate() const {
    if (iterations < 1) throw ArgumentError("hash iterations must be >= 1");
    if (digest != kSha256) throw ArgumentError("unsupported digest '" + digest + "'");
  }
};

namespace detail {

inline std::array<unsigned char, 32> sha256(std::string_view data) {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw Error("SHA-256 computation failed");
  }
  return out;
}

inline std::string to_hex(const std::array<unsigned char, 32>& digest) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string hex(digest.size() * 2, '0');
  for (std::size_t i = 0; i < digest.size(); ++i) {
    hex[2 * i] = kDigits[digest[i] >> 4];
    hex[2 * i + 1] = kDigits[digest[i] & 0xf];
  }
  return hex;
}

}  // namespace detail

/// H(...H(H(raw || salt))...) with `iterations` applications, rendered as
/// lowercase hex. The salt enters only the innermost application; every
/// outer round digests the hex text of the previous round, so
/// hash(x, {s, 3}) == hash(hash(hash(x, {s, 1}), {"", 1}), {"", 1}).
inline std::string hash_value(std::string_view raw, const HashPolicy& policy) {
  policy.validate();
  std::string input;
  input.reserve(raw.size() + policy.salt.size());
  input.append(raw).append(policy.salt);
  std::string token = detail::to_hex(detail::sha256(input));
  for (int i = 1; i < policy.iterations; ++i) token = detail::to_hex(detail::sha256(token));
  return token;
}

struct CoarseUserAgent {
  std::string token;
  bool opaque = false;  // no product/version structure was recognised

  bool operator==(const CoarseUserAgent&) const = default;
};

/// Reduces every dotted numeric version ("87.0.4280.88") to its first
/// component ("87"). Agents without any "name/version" product token are
/// passed through unchanged and flagged opaque.
inline CoarseUserAgent coarse_user_agent(std::string_view ua) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  bool has_product = false;
  for (std::size_t i = 1; i + 1 < ua.size(); ++i) {
    if (ua[i] == '/' && ua[i - 1] != ' ' && ua[i - 1] != '/' && is_digit(ua[i + 1])) {
      has_product = true;
      break;
    }
  }
  if (!has_product) return {std::string(ua), true};

  std::string out;
  out.reserve(ua.size());
  std::size_t i = 0;
  while (i < ua.size()) {
    if (!is_digit(ua[i])) {
      out.push_back(ua[i++]);
      continue;
    }
    const std::size_t run = i;
    while (i < ua.size() && is_digit(ua[i])) ++i;
    out.append(ua.substr(run, i - run));
    while (i + 1 < ua.size() && ua[i] == '.' && is_digit(ua[i + 1])) {
      ++i;
      while (i < ua.size() && is_digit(ua[i])) ++i;
    }
  }
  return {std::move(out), false};
}

/// Which transforms to apply to raw feature values. Order is fixed:
/// truncate / coarsen first, hash last.
struct CodecConfig {
  int ip_truncation_bits = 0;
  bool coarse_user_agent = false;
  std::optional<HashPolicy> hash;
  /// Features to hash; empty means every feature.
  std::vector<std::string> hashed_features;
};

/// Applies a CodecConfig to raw values, memoising per distinct raw value.
/// Not thread-safe; use one instance per worker.
class FeatureCodec {
 public:
  FeatureCodec(const FeatureSchema& schema, CodecConfig config)
      : config_(std::move(config)),
        ip_index_(schema.index_of(kIpFeature)),
        ua_index_(schema.index_of(kUserAgentFeature)),
        hashed_(schema.size(), false),
        cache_(schema.size()) {
    if (config_.ip_truncation_bits < 0 || config_.ip_truncation_bits > 32) {
      throw ArgumentError("truncation bits must lie in [0, 32]");
    }
    if (config_.ip_truncation_bits > 0 && !ip_index_) {
      throw ConfigError("IP truncation requested but schema has no 'ip' feature");
    }
    if (config_.hash) {
      config_.hash->validate();
      if (config_.hashed_features.empty()) {
        hashed_.assign(schema.size(), true);
      } else {
        for (const auto& id : config_.hashed_features) hashed_[schema.require(id)] = true;
      }
    }
  }

  const CodecConfig& config() const noexcept { return config_; }

  bool is_identity() const noexcept {
    return config_.ip_truncation_bits == 0 && !config_.coarse_user_agent && !config_.hash;
  }

  const std::string& encode(std::size_t feature, const std::string& raw) {
    auto& cache = cache_.at(feature);
    if (auto it = cache.find(raw); it != cache.end()) return it->second;
    return cache.emplace(raw, transform(feature, raw)).first->second;
  }

  FeatureVector encode(const FeatureVector& raw) {
    FeatureVector out;
    out.values.reserve(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) out.values.push_back(encode(k, raw.values[k]));
    return out;
  }

  CodecMetadata metadata() const {
    CodecMetadata meta;
    meta.truncation_bits = config_.ip_truncation_bits;
    meta.coarse_user_agent = config_.coarse_user_agent;
    if (config_.hash) {
      meta.digest = config_.hash->digest;
      meta.hash_iterations = config_.hash->iterations;
    }
    return meta;
  }

 private:
  std::string transform(std::size_t feature, const std::string& raw) const {
    std::string value = raw;
    if (ip_index_ && feature == *ip_index_ && config_.ip_truncation_bits > 0) {
      value = truncate_ip(Ipv4::parse(raw), config_.ip_truncation_bits).to_string();
    }
    if (ua_index_ && feature == *ua_index_ && config_.coarse_user_agent) {
      value = coarse_user_agent(value).token;
    }
    if (config_.hash && hashed_[feature]) value = hash_value(value, *config_.hash);
    return value;
  }

  CodecConfig config_;
  std::optional<std::size_t> ip_index_;
  std::optional<std::size_t> ua_index_;
  std::vector<bool> hashed_;
  std::vector<std::unordered_map<std::string, std::string>> cache_;
};

}  // namespace rbapriv
