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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rbapriv/errors.hpp"

namespace rbapriv {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::string_view kIpFeature = "ip";
inline constexpr std::string_view kUserAgentFeature = "user_agent";

/// Ordered feature ids; position k of every FeatureVector holds feature k.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<std::string> ids) : ids_(std::move(ids)) {
    if (ids_.empty()) throw ConfigError("feature schema must name at least one feature");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i].empty()) throw ConfigError("empty feature id");
      if (std::find(ids_.begin(), ids_.begin() + static_cast<std::ptrdiff_t>(i), ids_[i]) !=
          ids_.begin() + static_cast<std::ptrdiff_t>(i)) {
        throw ConfigError("duplicate feature id '" + ids_[i] + "'");
      }
    }
  }

  static FeatureSchema ip_and_user_agent() {
    return FeatureSchema({std::string(kIpFeature), std::string(kUserAgentFeature)});
  }

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t k) const { return ids_.at(k); }

  std::optional<std::size_t> index_of(std::string_view id) const noexcept {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i] == id) return i;
    }
    return std::nullopt;
  }

  std::size_t require(std::string_view id) const {
    if (auto i = index_of(id)) return *i;
    throw ConfigError("unknown feature id '" + std::string(id) + "'");
  }

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<std::string> ids_;
};

/// Categorical feature values, one per schema position.
struct FeatureVector {
  std::vector<std::string> values;

  std::size_t size() const noexcept { return values.size(); }
  const std::string& operator[](std::size_t k) const { return values[k]; }
  bool operator==(const FeatureVector&) const = default;
};

inline void validate(const FeatureVector& fv, const FeatureSchema& schema) {
  if (fv.size() != schema.size()) {
    throw ArgumentError("feature vector has " + std::to_string(fv.size()) +
                        " values, schema expects " + std::to_string(schema.size()));
  }
  for (std::size_t k = 0; k < fv.size(); ++k) {
    if (fv.values[k].empty()) throw ArgumentError("empty value for feature '" + schema.id(k) + "'");
  }
}

struct LoginEvent {
  std::string user_id;
  Timestamp timestamp{};
  FeatureVector features;

  bool operator==(const LoginEvent&) const = default;
};

/// How stored feature values were derived from raw observations.
struct CodecMetadata {
  std::string digest = "none";  // "none" or a digest id such as "sha256"
  int hash_iterations = 0;
  int truncation_bits = 0;
  bool coarse_user_agent = false;

  bool operator==(const CodecMetadata&) const = default;
};

/// A time-ordered list of login events over a fixed schema.
struct Dataset {
  FeatureSchema schema;
  CodecMetadata codec;
  std::vector<LoginEvent> events;

  bool operator==(const Dataset&) const = default;
};

}  // namespace rbapriv
