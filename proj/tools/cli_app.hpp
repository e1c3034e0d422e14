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

// rbapriv command line: generate, score, sweep-truncation, sweep-k, limits,
// export. Results go to files; diagnostics and progress go to stderr.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 infeasible evaluation.

#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rbapriv.hpp"

namespace rbapriv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitEvaluation = 3;

/// "0..24", "1,2,4" or a mix such as "0..4,8,16".
inline std::vector<int> parse_steps(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto dots = item.find("..");
    auto num = [&](const std::string& s) {
      const auto v = try_parse_int(s);
      if (!v) throw ArgumentError("bad step list '" + text + "'");
      return static_cast<int>(*v);
    };
    if (dots == std::string::npos) {
      out.push_back(num(item));
      continue;
    }
    const int lo = num(item.substr(0, dots)), hi = num(item.substr(dots + 2));
    if (hi < lo) throw ArgumentError("bad step range '" + item + "'");
    for (int i = lo; i <= hi; ++i) out.push_back(i);
  }
  if (out.empty()) throw ArgumentError("empty step list");
  return out;
}

inline std::vector<AttackerKind> parse_models(const std::string& text) {
  std::vector<AttackerKind> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto kind = parse_attacker_kind(std::string(detail::trim(item)));
    if (std::find(out.begin(), out.end(), kind) == out.end()) out.push_back(kind);
  }
  return out;
}

inline Smoothing parse_smoothing(const std::string& text) {
  if (text == "add_alpha") return Smoothing::kAddAlpha;
  if (text == "none") return Smoothing::kNone;
  throw ArgumentError("smoothing must be add_alpha or none");
}

struct GenerateArgs {
  std::size_t users = 780;
  std::size_t logins = 9555;
  std::uint64_t seed = 42;
  double region_concentration = 0.85;
  double outlier_rate = 0.02;
  int days = 699;
  std::size_t pool_min = 1;
  std::size_t pool_max = 4;
  std::string out;
  std::string blocklist_out;
  std::string geomap_out;
  std::size_t blocklist_size = 3000;
};

struct RiskArgs {
  std::string smoothing = "add_alpha";
  double alpha = 1.0;
  double unseen_floor = 1e-6;
  double attack_prior = 1.0;
  double legit_prior = 1.0;
  bool hash = false;
  std::string hash_salt;
  int hash_iterations = 1;
  bool coarse_ua = false;
  std::size_t retention_entries = 0;
  long long retention_days = 0;

  RiskConfig risk() const {
    RiskConfig r;
    r.smoothing = parse_smoothing(smoothing);
    r.alpha = alpha;
    r.unseen_floor = unseen_floor;
    r.attack_prior = attack_prior;
    r.legit_prior = legit_prior;
    r.validate();
    return r;
  }

  std::optional<HashPolicy> hash_policy() const {
    if (!hash) return std::nullopt;
    HashPolicy p{hash_salt, hash_iterations};
    p.validate();
    return p;
  }

  std::optional<RetentionPolicy> retention() const {
    if (retention_entries == 0 && retention_days == 0) return std::nullopt;
    RetentionPolicy p;
    if (retention_entries > 0) p.max_entries_per_user = retention_entries;
    if (retention_days > 0) p.max_age = std::chrono::seconds(retention_days * 86400);
    return p;
  }

  void add_to(CLI::App* app) {
    app->add_option("--smoothing", smoothing, "add_alpha or none")->capture_default_str();
    app->add_option("--alpha", alpha, "Additive smoothing constant")->capture_default_str();
    app->add_option("--unseen-floor", unseen_floor, "Probability of unseen values without smoothing")
        ->capture_default_str();
    app->add_option("--attack-prior", attack_prior)->capture_default_str();
    app->add_option("--legit-prior", legit_prior)->capture_default_str();
    app->add_flag("--hash", hash, "Store salted SHA-256 digests instead of values");
    app->add_option("--hash-salt", hash_salt, "Salt for --hash");
    app->add_option("--hash-iterations", hash_iterations, "Hash rounds for --hash")->capture_default_str();
    app->add_flag("--coarse-ua", coarse_ua, "Reduce user agents to major versions");
    app->add_option("--retention-entries", retention_entries, "Keep at most N entries per user (0: unlimited)");
    app->add_option("--retention-days", retention_days, "Drop entries older than N days (0: unlimited)");
  }
};

struct ScoreArgs {
  std::string dataset;
  std::string user;
  std::vector<std::string> values;
  int truncation_bits = 0;
  std::size_t k = 1;
  std::optional<double> threshold;
  std::string out;
  std::uint64_t seed = 0;
  RiskArgs risk;
};

struct SweepArgs {
  std::string dataset;
  std::string blocklist;
  std::string geomap;
  std::string steps;
  std::string models = "naive,vpn,targeted";
  double target_tpr = 0.995;
  std::size_t attempts = 100;
  double delta = 0.01;
  std::uint64_t seed = 0;
  std::size_t cidr_cap = 64;
  unsigned threads = 1;
  std::string out;
  std::string plot_out;
  RiskArgs risk;
};

struct FileArgs {
  std::string in;
  std::string out;
  std::optional<double> delta;
};

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  auto out = open_output(path);
  for (const auto& l : lines) out << l << '\n';
  finish_output(out, path);
}

inline int run_generate(const GenerateArgs& a) {
  DatasetProfile profile;
  profile.n_users = a.users;
  profile.total_logins = a.logins;
  profile.seed = a.seed;
  profile.region_concentration = a.region_concentration;
  profile.outlier_rate = a.outlier_rate;
  profile.time_span = std::chrono::days(a.days);
  profile.ip_pool_min = a.pool_min;
  profile.ip_pool_max = a.pool_max;
  const GeneratedDataset g = generate(profile);
  write_dataset(a.out, g.dataset);
  std::cerr << "generated " << g.dataset.events.size() << " logins for " << g.users.size() << " users (mean "
            << profile.mean_logins_per_user() << ")\n";
  if (!a.blocklist_out.empty()) {
    BlocklistProfile bp;
    bp.addresses = a.blocklist_size;
    bp.seed = a.seed;
    std::vector<std::string> lines = {"# synthetic blocklist, seed " + std::to_string(a.seed)};
    const auto body = generate_blocklist(g.world, bp);
    lines.insert(lines.end(), body.begin(), body.end());
    write_lines(a.blocklist_out, lines);
  }
  if (!a.geomap_out.empty()) {
    auto out = open_output(a.geomap_out);
    g.world.geo_map().write_csv(out);
    finish_output(out, a.geomap_out);
  }
  return kExitOk;
}

inline int run_score(const ScoreArgs& a) {
  const Dataset dataset = read_dataset(std::filesystem::path(a.dataset));
  const RiskConfig risk = a.risk.risk();
  CodecConfig codec;
  codec.ip_truncation_bits = a.truncation_bits;
  codec.coarse_user_agent = a.risk.coarse_ua;
  codec.hash = a.risk.hash_policy();
  FeatureCodec encoder(dataset.schema, codec);
  StoreOptions options;
  options.retention = a.risk.retention();
  if (a.k > 1) options.k_anonymity = KAnonymityPolicy{a.k, {std::string(kIpFeature)}};
  options.seed = a.seed;
  HistoryStore store(dataset.schema, options);
  for (const auto& e : dataset.events) store.record_login(e.user_id, encoder.encode(e.features), e.timestamp);

  FeatureVector fv;
  fv.values.resize(dataset.schema.size());
  for (const auto& kv : a.values) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ArgumentError("--value expects feature=value, got '" + kv + "'");
    fv.values[dataset.schema.require(kv.substr(0, eq))] = kv.substr(eq + 1);
  }
  validate(fv, dataset.schema);
  const RiskScore score = risk_score(store, risk, a.user, encoder.encode(fv));

  std::ostringstream text;
  std::vector<std::string> header = {"user_id", "score"};
  std::vector<std::string> row = {a.user, format_double(score.value)};
  for (std::size_t f = 0; f < dataset.schema.size(); ++f) {
    header.push_back(dataset.schema.id(f) + "_ratio");
    row.push_back(format_double(score.per_feature_ratios[f]));
  }
  if (a.threshold) {
    header.emplace_back("decision");
    row.emplace_back(classify(score, *a.threshold) == Decision::kGrant ? "grant" : "challenge");
  }
  csv::write_record(text, header);
  csv::write_record(text, row);
  if (a.out.empty()) {
    std::cout << text.str();
  } else {
    auto out = open_output(a.out);
    out << text.str();
    finish_output(out, a.out);
  }
  return kExitOk;
}

inline int run_sweep_command(const SweepArgs& a, EnhancementKind kind) {
  EvalConfig config;
  config.target_tpr = a.target_tpr;
  config.attacker_models = parse_models(a.models);
  config.attempts_per_victim = a.attempts;
  config.rsr_limit_delta = a.delta;
  config.seed = a.seed;
  config.risk = a.risk.risk();
  config.hash = a.risk.hash_policy();
  config.coarse_user_agent = a.risk.coarse_ua;
  config.retention = a.risk.retention();
  config.threads = a.threads;
  if (kind == EnhancementKind::kTruncation) {
    config.truncation_bits = parse_steps(a.steps.empty() ? "0..24" : a.steps);
  } else {
    config.k_values = parse_steps(a.steps.empty() ? "1..6" : a.steps);
  }
  config.validate();

  const Dataset dataset = read_dataset(std::filesystem::path(a.dataset));
  auto blocklist = load_blocklist(a.blocklist, BlocklistOptions{a.cidr_cap, a.seed});
  GeoMap geo = a.geomap.empty() ? GeoMap() : load_geomap(a.geomap);
  const AttackSimulator sim(dataset, std::move(blocklist), std::move(geo));

  std::cerr << "sweeping " << to_string(kind) << " over " << dataset.events.size() << " logins\n";
  const SweepResult sweep =
      run_sweep(sim, config, kind, [&](int step) { std::cerr << "  step " << step << " done\n"; });
  write_result(a.out, sweep);
  if (!a.plot_out.empty()) export_plot_data(sweep, a.plot_out);
  if (!sweep.all_valid()) {
    std::cerr << "error: sweep contains degenerate steps (no attacker scores or zero legitimate mean)\n";
    return kExitEvaluation;
  }
  return kExitOk;
}

inline int run_limits(const FileArgs& a) {
  const SweepResult sweep = read_result(std::filesystem::path(a.in));
  const auto reports = extract_limits(sweep, a.delta.value_or(sweep.meta.rsr_limit_delta));
  write_limits(a.out, sweep.meta.enhancement, reports);
  return kExitOk;
}

inline int run_export(const FileArgs& a) {
  const SweepResult sweep = read_result(std::filesystem::path(a.in));
  export_plot_data(sweep, a.out);
  return kExitOk;
}

/// Fills options not given on the command line from a key=value file whose
/// keys are long option names without the dashes.
inline void apply_config_file(CLI::App& cmd, const std::string& path) {
  if (path.empty()) return;
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    const std::string key = item.fullname();
    CLI::Option* opt = key == "config" ? nullptr : cmd.get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError("unknown key '" + key + "' in " + path);
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

inline int run_cli(int argc, const char* const* argv) {
  std::string config_path;
  CLI::App app{"Privacy enhancements for risk-based authentication: generation, scoring and sweeps", "rbapriv"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic login dataset");
  g->add_option("--config", config_path, "key=value file with option defaults");
  g->add_option("--users", gen.users)->capture_default_str();
  g->add_option("--logins", gen.logins)->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--region-concentration", gen.region_concentration)->capture_default_str();
  g->add_option("--outlier-rate", gen.outlier_rate)->capture_default_str();
  g->add_option("--days", gen.days, "Time span in days")->capture_default_str();
  g->add_option("--pool-min", gen.pool_min, "Minimum IP ranges per user")->capture_default_str();
  g->add_option("--pool-max", gen.pool_max, "Maximum IP ranges per user")->capture_default_str();
  g->add_option("--out", gen.out, "Dataset file")->required();
  g->add_option("--blocklist-out", gen.blocklist_out, "Also write a matching blocklist");
  g->add_option("--blocklist-size", gen.blocklist_size)->capture_default_str();
  g->add_option("--geomap-out", gen.geomap_out, "Also write the geo map (cidr,region)");

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "Score one login against a dataset's history");
  s->add_option("--config", config_path, "key=value file with option defaults");
  s->add_option("--dataset", score.dataset)->required();
  s->add_option("--user", score.user)->required();
  s->add_option("--value", score.values, "feature=value (repeatable)")->required();
  s->add_option("--truncation-bits", score.truncation_bits)->capture_default_str();
  s->add_option("--k", score.k, "k-anonymity level for the ip feature")->capture_default_str();
  s->add_option("--threshold", score.threshold, "Also report grant/challenge");
  s->add_option("--seed", score.seed)->capture_default_str();
  s->add_option("--out", score.out, "Output file (default: stdout)");
  score.risk.add_to(s);

  SweepArgs sweep;
  EnhancementKind sweep_kind = EnhancementKind::kTruncation;
  auto add_sweep = [&](const char* name, const char* help, const char* steps_flag, const char* steps_help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--config", config_path, "key=value file with option defaults");
    c->add_option("--dataset", sweep.dataset)->required();
    c->add_option("--blocklist", sweep.blocklist, "Attacker IPs or CIDR ranges")->required();
    c->add_option("--geomap", sweep.geomap, "cidr,region CSV for VPN attackers");
    c->add_option(steps_flag, sweep.steps, steps_help);
    c->add_option("--models", sweep.models, "Comma-separated attacker models")->capture_default_str();
    c->add_option("--target-tpr", sweep.target_tpr)->capture_default_str();
    c->add_option("--attempts", sweep.attempts, "Attacker attempts per model per login")->capture_default_str();
    c->add_option("--delta", sweep.delta, "Tolerated relative RSR decrease")->capture_default_str();
    c->add_option("--seed", sweep.seed)->capture_default_str();
    c->add_option("--cidr-cap", sweep.cidr_cap, "Addresses sampled per blocklist range")->capture_default_str();
    c->add_option("--threads", sweep.threads, "Parallel steps (0: all cores)")->capture_default_str();
    c->add_option("--out", sweep.out, "Result file")->required();
    c->add_option("--plot-out", sweep.plot_out, "Also write plot data");
    sweep.risk.add_to(c);
    return c;
  };
  auto* st = add_sweep("sweep-truncation", "IP truncation sweep", "--bits", "Steps, e.g. 0..24");
  auto* sk = add_sweep("sweep-k", "k-anonymity sweep", "--k", "Steps, e.g. 1..6");
  st->callback([&] { sweep_kind = EnhancementKind::kTruncation; });
  sk->callback([&] { sweep_kind = EnhancementKind::kKAnonymity; });

  FileArgs limits;
  auto* l = app.add_subcommand("limits", "Extract limits from a sweep result");
  l->add_option("--config", config_path, "key=value file with option defaults");
  l->add_option("--in", limits.in, "Result file")->required();
  l->add_option("--out", limits.out, "Limits file")->required();
  l->add_option("--delta", limits.delta, "Override the stored RSR tolerance");

  FileArgs exp;
  auto* x = app.add_subcommand("export", "Write plot data for a sweep result");
  x->add_option("--config", config_path, "key=value file with option defaults");
  x->add_option("--in", exp.in, "Result file")->required();
  x->add_option("--out", exp.out, "Plot data file")->required();

  try {
    app.parse(argc, argv);
    for (CLI::App* cmd : app.get_subcommands()) apply_config_file(*cmd, config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return kExitOk;
    }
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (g->parsed()) return run_generate(gen);
    if (s->parsed()) return run_score(score);
    if (st->parsed() || sk->parsed()) return run_sweep_command(sweep, sweep_kind);
    if (l->parsed()) return run_limits(limits);
    if (x->parsed()) return run_export(exp);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ProfileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NoAttackerMaterial& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEvaluation;
  } catch (const EvaluationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEvaluation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace rbapriv::cli
