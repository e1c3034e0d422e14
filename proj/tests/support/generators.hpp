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


// Hand-rolled generators for property tests.

#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rbapriv/features.hpp"

namespace gen {

/// Test-local engine; independent of the library's Rng.
class Source {
 public:
  explicit Source(std::uint64_t seed) : engine_(seed) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool coin() { return (engine_() & 1u) != 0; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(engine_()); }

 private:
  std::mt19937_64 engine_;
};

struct ToyShape {
  std::size_t max_users = 5;
  std::size_t max_logins = 20;
  std::size_t max_vocab = 6;
  std::size_t features = 2;
};

/// Random time-ordered dataset over small vocabularies ("f<k>v<i>").
inline rbapriv::Dataset toy_dataset(Source& src, const ToyShape& shape = {}) {
  rbapriv::Dataset ds;
  std::vector<std::string> ids;
  if (shape.features == 2) {
    ds.schema = rbapriv::FeatureSchema::ip_and_user_agent();
  } else {
    for (std::size_t k = 0; k < shape.features; ++k) ids.push_back("f" + std::to_string(k));
    ds.schema = rbapriv::FeatureSchema(ids);
  }
  const std::size_t users = src.between(1, shape.max_users);
  const std::size_t logins = src.between(1, shape.max_logins);
  std::vector<std::size_t> vocab(shape.features);
  for (auto& v : vocab) v = src.between(1, shape.max_vocab);
  rbapriv::Timestamp t{std::chrono::seconds(1'600'000'000)};
  for (std::size_t i = 0; i < logins; ++i) {
    rbapriv::LoginEvent e;
    e.user_id = "u" + std::to_string(src.below(users));
    t += std::chrono::seconds(src.between(0, 86400));
    e.timestamp = t;
    for (std::size_t k = 0; k < shape.features; ++k) {
      e.features.values.push_back("f" + std::to_string(k) + "v" + std::to_string(src.below(vocab[k])));
    }
    ds.events.push_back(std::move(e));
  }
  return ds;
}

/// Random query over the same vocabularies plus one unseen value per feature.
inline std::vector<std::string> toy_query(Source& src, const ToyShape& shape = {}) {
  std::vector<std::string> q;
  for (std::size_t k = 0; k < shape.features; ++k) {
    q.push_back("f" + std::to_string(k) + "v" + std::to_string(src.below(shape.max_vocab + 1)));
  }
  return q;
}

/// IPv4 dotted quad from 32 random bits.
inline std::string random_ip(Source& src) {
  const std::uint32_t v = src.u32();
  return std::to_string(v >> 24) + "." + std::to_string((v >> 16) & 255) + "." + std::to_string((v >> 8) & 255) +
         "." + std::to_string(v & 255);
}

}  // namespace gen
