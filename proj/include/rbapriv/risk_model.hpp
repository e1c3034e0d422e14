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

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rbapriv/errors.hpp"
#include "rbapriv/features.hpp"

namespace rbapriv {

/// Read access to global and per-user feature frequencies. HistoryStore
/// models this; so can any replay of a raw event log.
template <class H>
concept HistoryView = requires(const H& h, std::size_t f, std::string_view s) {
  { h.schema() } -> std::convertible_to<const FeatureSchema&>;
  { h.global_count(f, s) } -> std::convertible_to<std::size_t>;
  { h.global_total(f) } -> std::convertible_to<std::size_t>;
  { h.vocabulary_size(f) } -> std::convertible_to<std::size_t>;
  { h.has_user(s) } -> std::convertible_to<bool>;
  { h.user_count(s, f, s) } -> std::convertible_to<std::size_t>;
  { h.user_total(s) } -> std::convertible_to<std::size_t>;
};

enum class Smoothing { kNone, kAddAlpha };

/// Parameters of the risk score.
///
/// With kAddAlpha, p = (count + alpha) / (total + alpha * (V + 1)) where V
/// is the number of distinct values in the global history of the feature
/// and the extra 1 is a pseudo-value standing for "never seen". With kNone,
/// p = count / total for seen values and `unseen_floor` otherwise.
struct RiskConfig {
  double attack_prior = 1.0;
  double legit_prior = 1.0;
  Smoothing smoothing = Smoothing::kAddAlpha;
  double alpha = 1.0;
  double unseen_floor = 1e-6;

  void validate() const {
    if (!(attack_prior > 0.0 && attack_prior <= 1.0)) throw ConfigError("attack_prior must lie in (0, 1]");
    if (!(legit_prior > 0.0 && legit_prior <= 1.0)) throw ConfigError("legit_prior must lie in (0, 1]");
    if (smoothing == Smoothing::kAddAlpha && !(alpha > 0.0 && std::isfinite(alpha))) {
      throw ConfigError("alpha must be positive");
    }
    if (!(unseen_floor > 0.0 && unseen_floor <= 1.0)) throw ConfigError("unseen_floor must lie in (0, 1]");
  }

  double prior_ratio() const noexcept { return attack_prior / legit_prior; }
};

struct RiskScore {
  double value = 0.0;
  /// p(FV^k) / p(FV^k | u, legit) for each feature position k.
  std::vector<double> per_feature_ratios;
};

enum class Decision { kGrant, kChallenge };

/// Smoothed relative frequency of a value with `count` occurrences among
/// `total`, for a feature whose global vocabulary has `vocabulary` values.
inline double smoothed_probability(std::size_t count, std::size_t total, std::size_t vocabulary,
                                   const RiskConfig& config) {
  if (config.smoothing == Smoothing::kAddAlpha) {
    return (static_cast<double>(count) + config.alpha) /
           (static_cast<double>(total) + config.alpha * static_cast<double>(vocabulary + 1));
  }
  if (count == 0 || total == 0) return config.unseen_floor;
  return static_cast<double>(count) / static_cast<double>(total);
}

/// p(FV^k): how common `value` is across the global login history.
template <HistoryView H>
double global_probability(const H& store, const RiskConfig& config, std::string_view feature_id,
                          std::string_view value) {
  const std::size_t f = store.schema().require(feature_id);
  return smoothed_probability(store.global_count(f, value), store.global_total(f),
                              store.vocabulary_size(f), config);
}

/// p(FV^k | u, legit): how common `value` is in the user's own history.
/// Returns nullopt for a user the store has never seen; callers decide how
/// to treat new users (risk_score treats every value as unseen).
template <HistoryView H>
std::optional<double> user_probability(const H& store, const RiskConfig& config,
                                       std::string_view user_id, std::string_view feature_id,
                                       std::string_view value) {
  const std::size_t f = store.schema().require(feature_id);
  if (!store.has_user(user_id)) return std::nullopt;
  return smoothed_probability(store.user_count(user_id, f, value), store.user_total(user_id),
                              store.vocabulary_size(f), config);
}

namespace detail {

// Feature vectors may be FeatureVector or any indexable range of strings.
template <class Values>
concept FeatureValues = requires(const Values& v, std::size_t k) {
  { v.size() } -> std::convertible_to<std::size_t>;
  { v[k] } -> std::convertible_to<std::string_view>;
};

template <HistoryView H, FeatureValues Values, class Sink>
double risk_product(const H& store, const RiskConfig& config, std::string_view user_id,
                    const Values& values, Sink&& on_ratio) {
  const std::size_t d = store.schema().size();
  if (values.size() != d) {
    throw ArgumentError("feature vector has " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(d));
  }
  const bool known = store.has_user(user_id);
  const std::size_t user_total = known ? store.user_total(user_id) : 0;
  double product = 1.0;
  for (std::size_t f = 0; f < d; ++f) {
    const std::string_view value = values[f];
    const std::size_t vocabulary = store.vocabulary_size(f);
    const double global =
        smoothed_probability(store.global_count(f, value), store.global_total(f), vocabulary, config);
    const std::size_t mine = known ? store.user_count(user_id, f, value) : 0;
    const double local = smoothed_probability(mine, user_total, vocabulary, config);
    const double ratio = global / local;
    on_ratio(ratio);
    product *= ratio;
  }
  return product * config.prior_ratio();
}

}  // namespace detail

/// S_u(FV) = prod_k p(FV^k) / p(FV^k | u, legit) * p(u | attack) / p(u | legit).
/// Users unknown to the store are scored as if every value were unseen.
template <HistoryView H, detail::FeatureValues Values>
RiskScore risk_score(const H& store, const RiskConfig& config, std::string_view user_id,
                     const Values& fv) {
  RiskScore score;
  score.per_feature_ratios.reserve(fv.size());
  score.value = detail::risk_product(store, config, user_id, fv,
                                     [&](double r) { score.per_feature_ratios.push_back(r); });
  return score;
}

/// risk_score(...).value without the per-feature breakdown; bit-identical.
template <HistoryView H, detail::FeatureValues Values>
double risk_value(const H& store, const RiskConfig& config, std::string_view user_id, const Values& fv) {
  return detail::risk_product(store, config, user_id, fv, [](double) {});
}

/// Grant strictly below the threshold; ties challenge.
inline Decision classify(const RiskScore& score, double threshold) {
  if (!std::isfinite(threshold)) throw ArgumentError("threshold must be finite");
  return score.value < threshold ? Decision::kGrant : Decision::kChallenge;
}

}  // namespace rbapriv
