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

// Replay-based evaluation of privacy enhancements.
//
// A dataset is replayed in time order. At every login the legitimate user
// is scored against the history so far, simulated attackers are scored
// against the same history, and only then is the login recorded. A sweep
// repeats the replay for each enhancement step (truncation bits or k) with
// identical attacker attempts, and compares blocked-attacker rate (TPR) and
// risk score relation (RSR) against the unmodified baseline using one
// threshold frozen at the baseline.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rbapriv/attack_sim.hpp"
#include "rbapriv/codec.hpp"
#include "rbapriv/errors.hpp"
#include "rbapriv/features.hpp"
#include "rbapriv/history_store.hpp"
#include "rbapriv/random.hpp"
#include "rbapriv/risk_model.hpp"

namespace rbapriv {

enum class EnhancementKind { kTruncation, kKAnonymity };

inline std::string_view to_string(EnhancementKind kind) {
  return kind == EnhancementKind::kTruncation ? "truncation" : "k_anonymity";
}

inline EnhancementKind parse_enhancement_kind(std::string_view text) {
  if (text == "truncation") return EnhancementKind::kTruncation;
  if (text == "k_anonymity") return EnhancementKind::kKAnonymity;
  throw ArgumentError("unknown enhancement '" + std::string(text) + "'");
}

struct EvalConfig {
  double target_tpr = 0.995;
  std::vector<AttackerKind> attacker_models{kAllAttackerKinds.begin(), kAllAttackerKinds.end()};
  std::size_t attempts_per_victim = 100;
  std::vector<int> truncation_bits = range(0, 24);
  std::vector<int> k_values = range(1, 6);
  double rsr_limit_delta = 0.01;
  std::uint64_t seed = 0;

  RiskConfig risk;
  /// Applied on top of every step (hashing never changes results).
  std::optional<HashPolicy> hash;
  bool coarse_user_agent = false;
  std::optional<RetentionPolicy> retention;
  /// Worker threads for independent sweep steps; 0 picks the hardware count.
  unsigned threads = 0;

  static std::vector<int> range(int lo, int hi) {
    std::vector<int> out;
    for (int i = lo; i <= hi; ++i) out.push_back(i);
    return out;
  }

  void validate() const {
    if (!(target_tpr > 0.0 && target_tpr < 1.0)) throw ConfigError("target_tpr must lie in (0, 1)");
    if (truncation_bits.empty() || k_values.empty()) throw ConfigError("step lists must be non-empty");
    if (!(rsr_limit_delta >= 0.0)) throw ConfigError("rsr_limit_delta must be non-negative");
    for (int b : truncation_bits) {
      if (b < 0 || b > 32) throw ConfigError("truncation bits must lie in [0, 32]");
    }
    for (int k : k_values) {
      if (k < 1) throw ConfigError("k values must be >= 1");
    }
    risk.validate();
    if (hash) hash->validate();
  }
};

/// Attacker attempts for every login, sampled once from raw values and
/// shared by all sweep steps. Values are interned per feature.
class AttackPlan {
 public:
  AttackPlan(const AttackSimulator& sim, std::span<const AttackerKind> models, std::size_t attempts,
             std::uint64_t seed)
      : schema_(sim.dataset().schema),
        models_(models.begin(), models.end()),
        attempts_(attempts),
        catalog_(schema_.size()),
        index_(schema_.size()) {
    const auto& events = sim.dataset().events;
    events_ = events.size();
    const std::size_t d = schema_.size();
    legit_.reserve(events_ * d);
    for (const auto& e : events) {
      validate(e.features, schema_);
      for (std::size_t f = 0; f < d; ++f) legit_.push_back(intern(f, e.features.values[f]));
    }
    attacks_.reserve(events_ * models_.size() * attempts_ * d);
    std::unordered_map<std::string, std::vector<AttackerModel>> per_victim;
    for (std::size_t i = 0; i < events_; ++i) {
      const std::string& victim = events[i].user_id;
      auto [it, fresh] = per_victim.try_emplace(victim);
      if (fresh) {
        for (AttackerKind kind : models_) it->second.push_back(sim.model(kind, victim));
      }
      for (std::size_t m = 0; m < models_.size(); ++m) {
        Rng rng = Rng::derive(seed, stream_of(models_[m]), i);
        for (std::size_t a = 0; a < attempts_; ++a) {
          const FeatureVector fv = sim.sample_attempt(it->second[m], victim, rng);
          for (std::size_t f = 0; f < d; ++f) attacks_.push_back(intern(f, fv.values[f]));
        }
      }
    }
  }

  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<AttackerKind>& models() const noexcept { return models_; }
  std::size_t attempts_per_victim() const noexcept { return attempts_; }
  std::size_t events() const noexcept { return events_; }
  const std::vector<std::string>& catalog(std::size_t feature) const { return catalog_.at(feature); }

  std::span<const std::uint32_t> legit(std::size_t event) const {
    return std::span(legit_).subspan(event * schema_.size(), schema_.size());
  }

  std::span<const std::uint32_t> attack(std::size_t event, std::size_t model, std::size_t attempt) const {
    const std::size_t flat = (event * models_.size() + model) * attempts_ + attempt;
    return std::span(attacks_).subspan(flat * schema_.size(), schema_.size());
  }

  /// The raw feature vector of one planned attempt.
  FeatureVector attack_vector(std::size_t event, std::size_t model, std::size_t attempt) const {
    FeatureVector fv;
    const auto ids = attack(event, model, attempt);
    for (std::size_t f = 0; f < ids.size(); ++f) fv.values.push_back(catalog_[f][ids[f]]);
    return fv;
  }

 private:
  static Stream stream_of(AttackerKind kind) {
    switch (kind) {
      case AttackerKind::kNaive: return Stream::kAttackNaive;
      case AttackerKind::kVpn: return Stream::kAttackVpn;
      case AttackerKind::kTargeted: return Stream::kAttackTargeted;
    }
    return Stream::kAttackNaive;
  }

  std::uint32_t intern(std::size_t f, const std::string& value) {
    auto [it, fresh] = index_[f].try_emplace(value, static_cast<std::uint32_t>(catalog_[f].size()));
    if (fresh) catalog_[f].push_back(value);
    return it->second;
  }

  FeatureSchema schema_;
  std::vector<AttackerKind> models_;
  std::size_t attempts_;
  std::size_t events_ = 0;
  std::vector<std::vector<std::string>> catalog_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> index_;
  std::vector<std::uint32_t> legit_;
  std::vector<std::uint32_t> attacks_;
};

struct LegitScore {
  std::size_t event = 0;
  double score = 0.0;
  /// The user had no retained history when scored.
  bool cold_start = false;
};

struct ReplayResult {
  std::vector<LegitScore> legit;
  /// attacker[m] holds the scores of plan model m, in replay order.
  std::vector<std::vector<double>> attacker;
  PaddingLedger padding;
};

/// Replays `dataset` through a store configured by `store_options`, with
/// every value passed through `codec`. Attackers only target users that
/// already have history; cold-start logins are scored but flagged.
inline ReplayResult replay(const Dataset& dataset, const AttackPlan& plan, const CodecConfig& codec,
                           const StoreOptions& store_options, const RiskConfig& risk) {
  if (plan.events() != dataset.events.size() || !(plan.schema() == dataset.schema)) {
    throw ArgumentError("attack plan was built for a different dataset");
  }
  risk.validate();
  const std::size_t d = dataset.schema.size();
  FeatureCodec encoder(dataset.schema, codec);
  std::vector<std::vector<std::string>> tokens(d);
  for (std::size_t f = 0; f < d; ++f) {
    for (const auto& raw : plan.catalog(f)) tokens[f].push_back(encoder.encode(f, raw));
  }

  HistoryStore store(dataset.schema, store_options);
  ReplayResult out;
  out.legit.reserve(dataset.events.size());
  out.attacker.resize(plan.models().size());
  std::vector<std::string_view> values(d);
  FeatureVector recorded;
  recorded.values.resize(d);
  auto fill = [&](std::span<const std::uint32_t> ids) {
    for (std::size_t f = 0; f < d; ++f) values[f] = tokens[f][ids[f]];
  };

  Timestamp previous = Timestamp::min();
  for (std::size_t i = 0; i < dataset.events.size(); ++i) {
    const LoginEvent& event = dataset.events[i];
    if (event.timestamp < previous) throw DataError("dataset is not time-ordered", i + 1);
    previous = event.timestamp;
    const bool cold = store.user_total(event.user_id) == 0;

    fill(plan.legit(i));
    out.legit.push_back({i, risk_value(store, risk, event.user_id, values), cold});
    for (std::size_t f = 0; f < d; ++f) recorded.values[f].assign(values[f]);

    if (!cold) {
      for (std::size_t m = 0; m < plan.models().size(); ++m) {
        for (std::size_t a = 0; a < plan.attempts_per_victim(); ++a) {
          fill(plan.attack(i, m, a));
          out.attacker[m].push_back(risk_value(store, risk, event.user_id, values));
        }
      }
    }
    store.record_login(event.user_id, recorded, event.timestamp);
  }
  out.padding = store.ledger();
  return out;
}

/// Largest threshold that still challenges at least `target_tpr` of the
/// attacker scores (challenge iff score >= threshold).
inline double calibrate_threshold(std::span<const double> attacker_scores, double target_tpr) {
  if (attacker_scores.empty()) throw EvaluationError("cannot calibrate a threshold without attacker scores");
  if (!(target_tpr > 0.0 && target_tpr < 1.0)) throw ArgumentError("target_tpr must lie in (0, 1)");
  std::vector<double> sorted(attacker_scores.begin(), attacker_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // Blocked count needed; snap products like 0.995 * 1000 onto the integer.
  double needed = target_tpr * n;
  if (std::abs(needed - std::round(needed)) <= 1e-9 * std::max(1.0, needed)) needed = std::round(needed);
  const auto required = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(needed)), 1, sorted.size());
  return sorted[sorted.size() - required];
}

/// Fraction of scores the threshold challenges.
inline double true_positive_rate(std::span<const double> attacker_scores, double threshold) {
  if (attacker_scores.empty()) return 0.0;
  std::size_t blocked = 0;
  for (double s : attacker_scores) blocked += s >= threshold ? 1 : 0;
  return static_cast<double>(blocked) / static_cast<double>(attacker_scores.size());
}

inline double mean(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

/// Legitimate scores that enter the RSR: everything except cold starts.
inline std::vector<double> warm_legit_scores(const ReplayResult& r) {
  std::vector<double> out;
  out.reserve(r.legit.size());
  for (const auto& s : r.legit) {
    if (!s.cold_start) out.push_back(s.score);
  }
  return out;
}

/// (x - baseline) / baseline.
inline double relative_change(double value, double baseline) { return (value - baseline) / baseline; }

/// One (attacker model, step) row of a sweep.
struct StepRecord {
  AttackerKind model = AttackerKind::kNaive;
  int step = 0;
  double threshold = 0.0;
  double tpr = 0.0;
  double rsr_basic = 0.0;
  double tpr_relative = 0.0;
  double rsr_relative = 0.0;
  std::size_t additional_entries = 0;
  std::size_t baseline_entries = 0;
  bool valid = true;

  double increase_ratio() const noexcept {
    return PaddingLedger{additional_entries, baseline_entries}.increase_ratio();
  }

  bool operator==(const StepRecord&) const = default;
};

struct SweepMetadata {
  EnhancementKind enhancement = EnhancementKind::kTruncation;
  std::uint64_t seed = 0;
  double target_tpr = 0.995;
  std::size_t attempts_per_victim = 0;
  double rsr_limit_delta = 0.01;
  /// Remaining configuration, echoed verbatim as key/value text.
  std::vector<std::pair<std::string, std::string>> echo;

  bool operator==(const SweepMetadata&) const = default;
};

struct SweepResult {
  SweepMetadata meta;
  /// Grouped by model (in configured order), steps ascending within a model.
  std::vector<StepRecord> records;

  std::vector<AttackerKind> models() const {
    std::vector<AttackerKind> out;
    for (const auto& r : records) {
      if (std::find(out.begin(), out.end(), r.model) == out.end()) out.push_back(r.model);
    }
    return out;
  }

  std::vector<StepRecord> series(AttackerKind model) const {
    std::vector<StepRecord> out;
    for (const auto& r : records) {
      if (r.model == model) out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.step < b.step; });
    return out;
  }

  bool all_valid() const {
    return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.valid; });
  }

  bool operator==(const SweepResult&) const = default;
};

/// Replay setup for one step of a sweep.
inline std::pair<CodecConfig, StoreOptions> step_setup(const EvalConfig& config, EnhancementKind kind, int step) {
  CodecConfig codec;
  codec.hash = config.hash;
  codec.coarse_user_agent = config.coarse_user_agent;
  StoreOptions store;
  store.retention = config.retention;
  store.seed = config.seed;
  if (kind == EnhancementKind::kTruncation) {
    codec.ip_truncation_bits = step;
  } else {
    store.k_anonymity = KAnonymityPolicy{static_cast<std::size_t>(step), {std::string(kIpFeature)}};
  }
  return {codec, store};
}

inline std::vector<std::pair<std::string, std::string>> echo_config(const EvalConfig& config) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string models;
  for (AttackerKind m : config.attacker_models) {
    if (!models.empty()) models += ' ';
    models += to_string(m);
  }
  std::vector<std::pair<std::string, std::string>> echo = {
      {"models", models},
      {"smoothing", config.risk.smoothing == Smoothing::kAddAlpha ? "add_alpha" : "none"},
      {"alpha", num(config.risk.alpha)},
      {"unseen_floor", num(config.risk.unseen_floor)},
      {"attack_prior", num(config.risk.attack_prior)},
      {"legit_prior", num(config.risk.legit_prior)},
      {"digest", config.hash ? config.hash->digest : "none"},
      {"hash_iterations", config.hash ? std::to_string(config.hash->iterations) : "0"},
      {"coarse_user_agent", config.coarse_user_agent ? "true" : "false"},
  };
  if (config.retention && config.retention->max_entries_per_user) {
    echo.emplace_back("retention_max_entries", std::to_string(*config.retention->max_entries_per_user));
  }
  if (config.retention && config.retention->max_age) {
    echo.emplace_back("retention_max_age_seconds", std::to_string(config.retention->max_age->count()));
  }
  return echo;
}

/// Runs every step of a truncation or k-anonymity sweep. The first step
/// must be the unmodified baseline (0 bits, or k = 1); its replay fixes one
/// threshold per attacker model that every later step reuses.
/// `on_step` (optional) is called once per finished step, serialised.
inline SweepResult run_sweep(const AttackSimulator& sim, const EvalConfig& config, EnhancementKind kind,
                             const std::function<void(int step)>& on_step = {}) {
  config.validate();
  if (config.attacker_models.empty()) throw ConfigError("a sweep needs at least one attacker model");
  std::vector<int> steps = kind == EnhancementKind::kTruncation ? config.truncation_bits : config.k_values;
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  const int baseline_step = kind == EnhancementKind::kTruncation ? 0 : 1;
  if (steps.front() != baseline_step) {
    throw ConfigError("sweep steps must include the baseline step " + std::to_string(baseline_step));
  }

  const Dataset& dataset = sim.dataset();
  const AttackPlan plan(sim, config.attacker_models, config.attempts_per_victim, config.seed);

  std::vector<ReplayResult> results(steps.size());
  std::mutex progress;
  auto run_step = [&](std::size_t s) {
    const auto [codec, store] = step_setup(config, kind, steps[s]);
    results[s] = replay(dataset, plan, codec, store, config.risk);
    if (on_step) {
      std::lock_guard lock(progress);
      on_step(steps[s]);
    }
  };
  unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(steps.size()));
  if (threads <= 1) {
    for (std::size_t s = 0; s < steps.size(); ++s) run_step(s);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t s = t; s < steps.size(); s += threads) run_step(s);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  SweepResult sweep;
  sweep.meta = {kind, config.seed, config.target_tpr, config.attempts_per_victim, config.rsr_limit_delta,
                echo_config(config)};
  const std::vector<double> base_legit = warm_legit_scores(results.front());
  const double base_legit_mean = mean(base_legit);
  for (std::size_t m = 0; m < plan.models().size(); ++m) {
    const auto& base_attack = results.front().attacker[m];
    const bool base_valid = base_legit_mean > 0.0 && !base_attack.empty();
    const double threshold = base_attack.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : calibrate_threshold(base_attack, config.target_tpr);
    const double base_tpr = true_positive_rate(base_attack, threshold);
    const double base_rsr = base_valid ? mean(base_attack) / base_legit_mean : 0.0;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const ReplayResult& r = results[s];
      StepRecord rec;
      rec.model = plan.models()[m];
      rec.step = steps[s];
      rec.threshold = threshold;
      const std::vector<double> legit = warm_legit_scores(r);
      const double legit_mean = mean(legit);
      rec.valid = base_valid && legit_mean > 0.0 && !r.attacker[m].empty();
      rec.tpr = true_positive_rate(r.attacker[m], threshold);
      rec.rsr_basic = legit_mean > 0.0 ? mean(r.attacker[m]) / legit_mean : 0.0;
      if (rec.valid) {
        rec.tpr_relative = relative_change(rec.tpr, base_tpr);
        rec.rsr_relative = relative_change(rec.rsr_basic, base_rsr);
      } else {
        rec.tpr_relative = std::numeric_limits<double>::quiet_NaN();
        rec.rsr_relative = std::numeric_limits<double>::quiet_NaN();
      }
      rec.additional_entries = r.padding.additional_entries;
      rec.baseline_entries = r.padding.baseline_entries;
      sweep.records.push_back(rec);
    }
  }
  return sweep;
}

/// A limit step; `at_least` marks that no violation occurred up to it.
struct Limit {
  int step = 0;
  bool at_least = false;

  bool operator==(const Limit&) const = default;
};

struct LimitReport {
  AttackerKind model = AttackerKind::kNaive;
  Limit tpr;
  Limit rsr;
  Limit combined;

  bool operator==(const LimitReport&) const = default;
};

/// Last step before the first step where `violates` holds.
template <class Violates>
Limit last_step_before(std::span<const int> steps, Violates violates) {
  if (steps.empty()) throw ArgumentError("no steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (violates(i)) return {i == 0 ? steps[0] : steps[i - 1], false};
  }
  return {steps.back(), true};
}

inline Limit combine_limits(const Limit& a, const Limit& b) {
  if (a.step != b.step) return a.step < b.step ? a : b;
  return {a.step, a.at_least && b.at_least};
}

/// Limit extraction over one model's series (ascending steps). The TPR
/// limit is the last step before TPR first drops below the baseline; the
/// RSR limit is the last step before the relative RSR first falls below
/// -rsr_limit_delta. Invalid steps count as violations.
inline LimitReport extract_limits(AttackerKind model, std::span<const int> steps,
                                  std::span<const double> tpr_relative,
                                  std::span<const double> rsr_relative, double rsr_limit_delta) {
  if (steps.size() != tpr_relative.size() || steps.size() != rsr_relative.size()) {
    throw ArgumentError("limit extraction inputs differ in length");
  }
  LimitReport report;
  report.model = model;
  report.tpr = last_step_before(steps, [&](std::size_t i) { return !(tpr_relative[i] >= 0.0); });
  report.rsr = last_step_before(steps, [&](std::size_t i) { return !(rsr_relative[i] >= -rsr_limit_delta); });
  report.combined = combine_limits(report.tpr, report.rsr);
  return report;
}

inline std::vector<LimitReport> extract_limits(const SweepResult& sweep, double rsr_limit_delta) {
  std::vector<LimitReport> out;
  for (AttackerKind model : sweep.models()) {
    std::vector<int> steps;
    std::vector<double> tpr, rsr;
    for (const auto& r : sweep.series(model)) {
      steps.push_back(r.step);
      tpr.push_back(r.valid ? r.tpr_relative : std::numeric_limits<double>::quiet_NaN());
      rsr.push_back(r.valid ? r.rsr_relative : std::numeric_limits<double>::quiet_NaN());
    }
    out.push_back(extract_limits(model, steps, tpr, rsr, rsr_limit_delta));
  }
  return out;
}

inline std::vector<LimitReport> extract_limits(const SweepResult& sweep) {
  return extract_limits(sweep, sweep.meta.rsr_limit_delta);
}

/// Minimum combined limit across models.
inline Limit overall_limit(std::span<const LimitReport> reports) {
  if (reports.empty()) throw ArgumentError("no limit reports");
  Limit out = reports.front().combined;
  for (const auto& r : reports.subspan(1)) out = combine_limits(out, r.combined);
  return out;
}

}  // namespace rbapriv
