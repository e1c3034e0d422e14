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

// Text formats: datasets, sweep results, limits, plot data and store
// snapshots. All are comma-separated with RFC 4180 quoting, preceded by
// "#key=value" metadata lines of which the first names the format version.

#pragma once

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rbapriv/errors.hpp"
#include "rbapriv/evaluation.hpp"
#include "rbapriv/features.hpp"
#include "rbapriv/history_store.hpp"

namespace rbapriv {

inline constexpr std::string_view kDatasetFormat = "rbapriv-dataset/1";
inline constexpr std::string_view kResultFormat = "rbapriv-result/1";
inline constexpr std::string_view kLimitsFormat = "rbapriv-limits/1";
inline constexpr std::string_view kPlotFormat = "rbapriv-plot/1";
inline constexpr std::string_view kStoreFormat = "rbapriv-store/1";

// ---------------------------------------------------------------------------
// Primitives

/// %.17g; enough digits for any double to round-trip.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::optional<double> try_parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  const std::string s(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  // Underflow to a subnormal is fine; overflow is not.
  if (end != s.c_str() + s.size() || (errno == ERANGE && std::isinf(v))) return std::nullopt;
  return v;
}

inline std::optional<long long> try_parse_int(std::string_view text) {
  long long v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) return std::nullopt;
  return v;
}

/// "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_timestamp(Timestamp ts) {
  const std::time_t t = static_cast<std::time_t>(ts.time_since_epoch().count());
  std::tm tm{};
  if (gmtime_r(&t, &tm) == nullptr) throw DataError("timestamp out of range");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

inline std::optional<Timestamp> try_parse_timestamp(std::string_view text) {
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':' || text[19] != 'Z') {
    return std::nullopt;
  }
  auto num = [&](std::size_t pos, std::size_t len) -> int {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') return -1;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  std::tm tm{};
  const int year = num(0, 4), month = num(5, 2), day = num(8, 2);
  const int hour = num(11, 2), minute = num(14, 2), second = num(17, 2);
  if (year < 0 || month < 1 || month > 12 || day < 1 || day > 31 || hour < 0 || hour > 23 || minute < 0 ||
      minute > 59 || second < 0 || second > 59) {
    return std::nullopt;
  }
  tm.tm_year = year - 1900;
  tm.tm_mon = month - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  tm.tm_min = minute;
  tm.tm_sec = second;
  const Timestamp ts{std::chrono::seconds(timegm(&tm))};
  // Rejects dates like 02-30 that timegm silently normalises.
  if (format_timestamp(ts) != text) return std::nullopt;
  return ts;
}

namespace csv {

inline bool needs_quotes(std::string_view field) {
  if (field.empty()) return false;
  if (field.front() == '#' || field.front() == ' ' || field.back() == ' ') return true;
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void write_field(std::ostream& out, std::string_view field) {
  if (!needs_quotes(field)) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

inline void write_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    write_field(out, fields[i]);
  }
  out << '\n';
}

/// Reads records one at a time, tracking physical line numbers.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Line on which the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

  /// Next raw line if it is a "#..." metadata line; leaves other lines alone.
  std::optional<std::string> metadata_line() {
    if (in_.peek() != '#') return std::nullopt;
    std::string line;
    std::getline(in_, line);
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  /// Next record; nullopt at end of input. Blank lines are skipped.
  std::optional<std::vector<std::string>> next() {
    for (;;) {
      if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;
      record_line_ = line_ + 1;
      std::vector<std::string> fields(1);
      bool quoted = false, after_quote = false, any = false;
      for (;;) {
        const int ch = in_.get();
        if (ch == std::char_traits<char>::eof()) {
          if (quoted) throw ParseError("unterminated quoted field", record_line_);
          ++line_;
          break;
        }
        const char c = static_cast<char>(ch);
        if (quoted) {
          if (c == '"') {
            if (in_.peek() == '"') {
              in_.get();
              fields.back() += '"';
            } else {
              quoted = false;
              after_quote = true;
            }
          } else {
            if (c == '\n') ++line_;
            fields.back() += c;
          }
          continue;
        }
        if (c == '\r' && in_.peek() == '\n') continue;
        if (c == '\n') {
          ++line_;
          break;
        }
        any = true;
        if (c == ',') {
          fields.emplace_back();
          after_quote = false;
        } else if (c == '"' && fields.back().empty() && !after_quote) {
          quoted = true;
          any = true;
        } else if (after_quote) {
          throw ParseError("characters after closing quote", record_line_);
        } else {
          fields.back() += c;
        }
      }
      if (!any && fields.size() == 1 && fields[0].empty()) continue;
      return fields;
    }
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

}  // namespace csv

/// Ordered "#key=value" metadata block.
using Metadata = std::vector<std::pair<std::string, std::string>>;

inline void write_metadata(std::ostream& out, std::string_view format, const Metadata& meta) {
  out << "#format=" << format << '\n';
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ArgumentError("metadata key/value cannot be serialised: " + k);
    }
    out << '#' << k << '=' << v << '\n';
  }
}

/// Reads the metadata block and checks the format line.
inline Metadata read_metadata(csv::Reader& reader, std::string_view format) {
  Metadata meta;
  bool first = true;
  while (auto line = reader.metadata_line()) {
    const std::string body = line->substr(1);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw DataError("malformed metadata line '" + *line + "'");
    std::string key = body.substr(0, eq), value = body.substr(eq + 1);
    if (first) {
      if (key != "format") throw DataError("missing format line");
      if (value != format) {
        throw DataError("unsupported format '" + value + "', expected '" + std::string(format) + "'");
      }
      first = false;
      continue;
    }
    meta.emplace_back(std::move(key), std::move(value));
  }
  if (first) throw DataError("missing format line; expected '#format=" + std::string(format) + "'");
  return meta;
}

inline const std::string* find_meta(const Metadata& meta, std::string_view key) {
  for (const auto& [k, v] : meta) {
    if (k == key) return &v;
  }
  return nullptr;
}

inline const std::string& require_meta(const Metadata& meta, std::string_view key) {
  if (const auto* v = find_meta(meta, key)) return *v;
  throw DataError("missing metadata '" + std::string(key) + "'");
}

inline long long meta_int(const Metadata& meta, std::string_view key) {
  const auto v = try_parse_int(require_meta(meta, key));
  if (!v) throw DataError("metadata '" + std::string(key) + "' is not an integer");
  return *v;
}

inline double meta_double(const Metadata& meta, std::string_view key) {
  const auto v = try_parse_double(require_meta(meta, key));
  if (!v) throw DataError("metadata '" + std::string(key) + "' is not a number");
  return *v;
}

inline bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw DataError("expected true or false, got '" + std::string(text) + "'");
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Datasets

inline void write_dataset(std::ostream& out, const Dataset& dataset) {
  if (dataset.schema.size() == 0) throw ArgumentError("dataset has no schema");
  write_metadata(out, kDatasetFormat,
                 {{"digest", dataset.codec.digest},
                  {"hash_iterations", std::to_string(dataset.codec.hash_iterations)},
                  {"truncation_bits", std::to_string(dataset.codec.truncation_bits)},
                  {"coarse_user_agent", dataset.codec.coarse_user_agent ? "true" : "false"}});
  std::vector<std::string> header = {"user_id", "timestamp"};
  header.insert(header.end(), dataset.schema.ids().begin(), dataset.schema.ids().end());
  csv::write_record(out, header);
  Timestamp previous = Timestamp::min();
  std::vector<std::string> row;
  for (std::size_t i = 0; i < dataset.events.size(); ++i) {
    const LoginEvent& e = dataset.events[i];
    if (e.timestamp < previous) throw DataError("events are not time-ordered", i + 1);
    previous = e.timestamp;
    if (e.features.size() != dataset.schema.size()) throw DataError("feature count mismatch", i + 1);
    row.assign({e.user_id, format_timestamp(e.timestamp)});
    row.insert(row.end(), e.features.values.begin(), e.features.values.end());
    csv::write_record(out, row);
  }
}

/// Errors name 1-based data rows (the header row is not counted).
inline Dataset read_dataset(std::istream& in) {
  csv::Reader reader(in);
  const Metadata meta = read_metadata(reader, kDatasetFormat);
  Dataset dataset;
  dataset.codec.digest = require_meta(meta, "digest");
  dataset.codec.hash_iterations = static_cast<int>(meta_int(meta, "hash_iterations"));
  dataset.codec.truncation_bits = static_cast<int>(meta_int(meta, "truncation_bits"));
  dataset.codec.coarse_user_agent = parse_bool(require_meta(meta, "coarse_user_agent"));

  const auto header = reader.next();
  if (!header || header->size() < 3 || (*header)[0] != "user_id" || (*header)[1] != "timestamp") {
    throw DataError("expected header 'user_id,timestamp,<features...>'");
  }
  try {
    dataset.schema = FeatureSchema(std::vector<std::string>(header->begin() + 2, header->end()));
  } catch (const ConfigError& e) {
    throw DataError(std::string("bad header: ") + e.what());
  }

  const std::size_t arity = header->size();
  std::size_t row = 0;
  Timestamp previous = Timestamp::min();
  while (auto fields = reader.next()) {
    ++row;
    if (fields->size() != arity) {
      throw DataError("expected " + std::to_string(arity) + " fields, found " + std::to_string(fields->size()),
                      row);
    }
    LoginEvent e;
    e.user_id = std::move((*fields)[0]);
    if (e.user_id.empty()) throw DataError("empty user id", row);
    const auto ts = try_parse_timestamp((*fields)[1]);
    if (!ts) throw DataError("bad timestamp '" + (*fields)[1] + "'", row);
    if (*ts < previous) throw DataError("timestamp earlier than previous row", row);
    previous = *ts;
    e.timestamp = *ts;
    e.features.values.assign(std::make_move_iterator(fields->begin() + 2), std::make_move_iterator(fields->end()));
    for (std::size_t k = 0; k < e.features.size(); ++k) {
      if (e.features[k].empty()) throw DataError("empty value for feature '" + dataset.schema.id(k) + "'", row);
    }
    dataset.events.push_back(std::move(e));
  }
  return dataset;
}

inline void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  auto out = open_output(path);
  write_dataset(out, dataset);
  finish_output(out, path);
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dataset(in);
}

// ---------------------------------------------------------------------------
// Sweep results

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {"model",        "step",         "threshold",
                                                "tpr",          "rsr_basic",    "tpr_relative",
                                                "rsr_relative", "additional_entries", "baseline_entries",
                                                "valid"};
  return cols;
}

inline void write_result(std::ostream& out, const SweepResult& sweep) {
  Metadata meta = {{"enhancement", std::string(to_string(sweep.meta.enhancement))},
                   {"seed", std::to_string(sweep.meta.seed)},
                   {"target_tpr", format_double(sweep.meta.target_tpr)},
                   {"attempts_per_victim", std::to_string(sweep.meta.attempts_per_victim)},
                   {"rsr_limit_delta", format_double(sweep.meta.rsr_limit_delta)}};
  for (const auto& [k, v] : sweep.meta.echo) meta.emplace_back("config." + k, v);
  write_metadata(out, kResultFormat, meta);
  csv::write_record(out, result_columns());
  for (const auto& r : sweep.records) {
    csv::write_record(out, {std::string(to_string(r.model)), std::to_string(r.step), format_double(r.threshold),
                            format_double(r.tpr), format_double(r.rsr_basic), format_double(r.tpr_relative),
                            format_double(r.rsr_relative), std::to_string(r.additional_entries),
                            std::to_string(r.baseline_entries), r.valid ? "true" : "false"});
  }
}

inline SweepResult read_result(std::istream& in) {
  csv::Reader reader(in);
  const Metadata meta = read_metadata(reader, kResultFormat);
  SweepResult sweep;
  try {
    sweep.meta.enhancement = parse_enhancement_kind(require_meta(meta, "enhancement"));
  } catch (const ArgumentError& e) {
    throw DataError(e.what());
  }
  {
    const std::string& text = require_meta(meta, "seed");
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), sweep.meta.seed);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
      throw DataError("bad seed '" + text + "'");
    }
  }
  sweep.meta.target_tpr = meta_double(meta, "target_tpr");
  sweep.meta.attempts_per_victim = static_cast<std::size_t>(meta_int(meta, "attempts_per_victim"));
  sweep.meta.rsr_limit_delta = meta_double(meta, "rsr_limit_delta");
  for (const auto& [k, v] : meta) {
    if (k.rfind("config.", 0) == 0) sweep.meta.echo.emplace_back(k.substr(7), v);
  }

  const auto header = reader.next();
  if (!header || *header != result_columns()) throw DataError("unexpected result header");
  std::size_t row = 0;
  while (auto f = reader.next()) {
    ++row;
    if (f->size() != result_columns().size()) throw DataError("wrong number of fields", row);
    StepRecord r;
    try {
      r.model = parse_attacker_kind((*f)[0]);
    } catch (const Error& e) {
      throw DataError(e.what(), row);
    }
    auto integer = [&](std::size_t i) {
      const auto v = try_parse_int((*f)[i]);
      if (!v || *v < 0) throw DataError("bad integer in column '" + result_columns()[i] + "'", row);
      return *v;
    };
    auto real = [&](std::size_t i) {
      const auto v = try_parse_double((*f)[i]);
      if (!v) throw DataError("bad number in column '" + result_columns()[i] + "'", row);
      return *v;
    };
    r.step = static_cast<int>(integer(1));
    r.threshold = real(2);
    r.tpr = real(3);
    r.rsr_basic = real(4);
    r.tpr_relative = real(5);
    r.rsr_relative = real(6);
    r.additional_entries = static_cast<std::size_t>(integer(7));
    r.baseline_entries = static_cast<std::size_t>(integer(8));
    try {
      r.valid = parse_bool((*f)[9]);
    } catch (const DataError& e) {
      throw DataError(e.what(), row);
    }
    sweep.records.push_back(r);
  }
  return sweep;
}

inline void write_result(const std::filesystem::path& path, const SweepResult& sweep) {
  auto out = open_output(path);
  write_result(out, sweep);
  finish_output(out, path);
}

inline SweepResult read_result(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_result(in);
}

// ---------------------------------------------------------------------------
// Limits

inline std::string format_limit(const Limit& l) { return (l.at_least ? ">=" : "") + std::to_string(l.step); }

inline void write_limits(std::ostream& out, EnhancementKind kind, const std::vector<LimitReport>& reports) {
  write_metadata(out, kLimitsFormat, {{"enhancement", std::string(to_string(kind))}});
  csv::write_record(out, {"model", "tpr_limit", "rsr_limit", "combined_limit"});
  for (const auto& r : reports) {
    csv::write_record(out, {std::string(to_string(r.model)), format_limit(r.tpr), format_limit(r.rsr),
                            format_limit(r.combined)});
  }
  if (!reports.empty()) {
    csv::write_record(out, {"all", "", "", format_limit(overall_limit(reports))});
  }
}

inline void write_limits(const std::filesystem::path& path, EnhancementKind kind,
                         const std::vector<LimitReport>& reports) {
  auto out = open_output(path);
  write_limits(out, kind, reports);
  finish_output(out, path);
}

// ---------------------------------------------------------------------------
// Plot data

/// One row per (model, step). k-anonymity sweeps add the padding overhead.
inline void export_plot_data(std::ostream& out, const SweepResult& sweep) {
  const bool padding = sweep.meta.enhancement == EnhancementKind::kKAnonymity;
  write_metadata(out, kPlotFormat, {{"enhancement", std::string(to_string(sweep.meta.enhancement))}});
  std::vector<std::string> header = {"model", "step", "tpr_relative", "rsr_relative"};
  if (padding) {
    header.emplace_back("additional_entries");
    header.emplace_back("increase_to_baseline");
  }
  csv::write_record(out, header);
  for (AttackerKind model : sweep.models()) {
    for (const auto& r : sweep.series(model)) {
      std::vector<std::string> row = {std::string(to_string(model)), std::to_string(r.step),
                                      format_double(r.tpr_relative), format_double(r.rsr_relative)};
      if (padding) {
        row.push_back(std::to_string(r.additional_entries));
        row.push_back(format_double(r.increase_ratio()));
      }
      csv::write_record(out, row);
    }
  }
}

inline void export_plot_data(const SweepResult& sweep, const std::filesystem::path& path) {
  auto out = open_output(path);
  export_plot_data(out, sweep);
  finish_output(out, path);
}

// ---------------------------------------------------------------------------
// Store snapshots

/// Frozen frequency tables of a HistoryStore. Models HistoryView, so a
/// snapshot scores exactly like the store it was taken from.
class StoreSnapshot {
 public:
  using Counts = std::map<std::string, std::size_t, std::less<>>;

  StoreSnapshot() = default;
  explicit StoreSnapshot(FeatureSchema schema) : schema_(std::move(schema)), global_(schema_.size()) {}

  static StoreSnapshot of(const HistoryStore& store) {
    StoreSnapshot s(store.schema());
    for (std::size_t f = 0; f < s.schema_.size(); ++f) {
      for (const auto& [v, c] : store.global_counts(f)) s.add_global(f, v, c);
    }
    std::vector<std::string> users = store.real_users();
    const auto synthetic = store.synthetic_users();
    users.insert(users.end(), synthetic.begin(), synthetic.end());
    for (const auto& u : users) {
      for (std::size_t f = 0; f < s.schema_.size(); ++f) {
        for (const auto& [v, c] : store.user_counts(u, f)) s.add_user(u, f, v, c);
      }
    }
    return s;
  }

  void add_global(std::size_t f, std::string_view value, std::size_t count) {
    global_.at(f)[std::string(value)] += count;
  }

  void add_user(std::string_view user, std::size_t f, std::string_view value, std::size_t count) {
    auto it = users_.find(user);
    if (it == users_.end()) it = users_.emplace(std::string(user), std::vector<Counts>(schema_.size())).first;
    it->second.at(f)[std::string(value)] += count;
  }

  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<Counts>& global() const noexcept { return global_; }
  const std::map<std::string, std::vector<Counts>, std::less<>>& users() const noexcept { return users_; }

  std::size_t global_count(std::size_t f, std::string_view value) const { return lookup(global_.at(f), value); }

  std::size_t global_total(std::size_t f) const { return sum(global_.at(f)); }

  std::size_t vocabulary_size(std::size_t f) const {
    std::size_t n = 0;
    for (const auto& [v, c] : global_.at(f)) n += c > 0 ? 1 : 0;
    return n;
  }

  bool has_user(std::string_view user) const { return users_.find(user) != users_.end(); }

  std::size_t user_count(std::string_view user, std::size_t f, std::string_view value) const {
    const auto it = users_.find(user);
    return it == users_.end() ? 0 : lookup(it->second.at(f), value);
  }

  std::size_t user_total(std::string_view user) const {
    const auto it = users_.find(user);
    return it == users_.end() || schema_.size() == 0 ? 0 : sum(it->second[0]);
  }

  bool operator==(const StoreSnapshot&) const = default;

 private:
  static std::size_t lookup(const Counts& counts, std::string_view value) {
    const auto it = counts.find(value);
    return it == counts.end() ? 0 : it->second;
  }

  static std::size_t sum(const Counts& counts) {
    std::size_t n = 0;
    for (const auto& [v, c] : counts) n += c;
    return n;
  }

  FeatureSchema schema_;
  std::vector<Counts> global_;
  std::map<std::string, std::vector<Counts>, std::less<>> users_;
};

inline void write_store_snapshot(std::ostream& out, const StoreSnapshot& snapshot) {
  std::string features;
  for (const auto& id : snapshot.schema().ids()) {
    if (!features.empty()) features += ' ';
    features += id;
  }
  write_metadata(out, kStoreFormat, {{"features", features}});
  csv::write_record(out, {"scope", "user_id", "feature", "value", "count"});
  for (std::size_t f = 0; f < snapshot.schema().size(); ++f) {
    for (const auto& [v, c] : snapshot.global()[f]) {
      csv::write_record(out, {"global", "", snapshot.schema().id(f), v, std::to_string(c)});
    }
  }
  for (const auto& [u, per_feature] : snapshot.users()) {
    for (std::size_t f = 0; f < per_feature.size(); ++f) {
      for (const auto& [v, c] : per_feature[f]) {
        csv::write_record(out, {"user", u, snapshot.schema().id(f), v, std::to_string(c)});
      }
    }
  }
}

inline StoreSnapshot read_store_snapshot(std::istream& in) {
  csv::Reader reader(in);
  const Metadata meta = read_metadata(reader, kStoreFormat);
  std::vector<std::string> ids;
  std::istringstream words(require_meta(meta, "features"));
  for (std::string w; words >> w;) ids.push_back(w);
  StoreSnapshot snapshot;
  try {
    snapshot = StoreSnapshot(FeatureSchema(ids));
  } catch (const ConfigError& e) {
    throw DataError(std::string("bad feature list: ") + e.what());
  }
  const auto header = reader.next();
  if (!header || *header != std::vector<std::string>{"scope", "user_id", "feature", "value", "count"}) {
    throw DataError("unexpected snapshot header");
  }
  std::size_t row = 0;
  while (auto f = reader.next()) {
    ++row;
    if (f->size() != 5) throw DataError("wrong number of fields", row);
    const auto feature = snapshot.schema().index_of((*f)[2]);
    if (!feature) throw DataError("unknown feature '" + (*f)[2] + "'", row);
    const auto count = try_parse_int((*f)[4]);
    if (!count || *count <= 0) throw DataError("bad count", row);
    if ((*f)[0] == "global") {
      snapshot.add_global(*feature, (*f)[3], static_cast<std::size_t>(*count));
    } else if ((*f)[0] == "user" && !(*f)[1].empty()) {
      snapshot.add_user((*f)[1], *feature, (*f)[3], static_cast<std::size_t>(*count));
    } else {
      throw DataError("bad scope", row);
    }
  }
  return snapshot;
}

}  // namespace rbapriv
