// Copyright 2026 The tomored Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace tomored::harness {

using Field = std::variant<std::int64_t, double, std::string, bool>;

/// One row of experiment output. Field order is the column order.
struct TrialRecord {
  std::vector<std::pair<std::string, Field>> fields;

  template <typename T>
  TrialRecord& add(std::string key, T value) {
    if constexpr (std::is_same_v<T, bool>) {
      fields.emplace_back(std::move(key), Field(value));
    } else if constexpr (std::is_integral_v<T>) {
      fields.emplace_back(std::move(key), Field(static_cast<std::int64_t>(value)));
    } else if constexpr (std::is_floating_point_v<T>) {
      fields.emplace_back(std::move(key), Field(static_cast<double>(value)));
    } else {
      fields.emplace_back(std::move(key), Field(std::string(value)));
    }
    return *this;
  }

  const Field* get(const std::string& key) const {
    for (const auto& [k, v] : fields) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  double number(const std::string& key) const {
    const Field* f = get(key);
    if (f == nullptr) throw std::out_of_range("TrialRecord: no field " + key);
    if (const auto* d = std::get_if<double>(f)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(f)) return static_cast<double>(*i);
    if (const auto* b = std::get_if<bool>(f)) return *b ? 1.0 : 0.0;
    throw std::invalid_argument("TrialRecord: field " + key + " is not numeric");
  }
};

inline constexpr const char* kWallTimeField = "wall_time_s";

enum class OutputFormat { csv, jsonl };

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

inline std::string field_text(const Field& f) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else {
          return v;
        }
      },
      f);
}

/// RFC 4180 quoting: fields containing a comma, quote or line break are
/// quoted with embedded quotes doubled.
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  if (records.empty()) return;
  const auto& head = records.front().fields;
  for (std::size_t i = 0; i < head.size(); ++i) os << (i ? "," : "") << csv_escape(head[i].first);
  os << "\r\n";
  for (const auto& rec : records) {
    for (std::size_t i = 0; i < rec.fields.size(); ++i) {
      os << (i ? "," : "") << csv_escape(field_text(rec.fields[i].second));
    }
    os << "\r\n";
  }
}

inline nlohmann::ordered_json to_json(const TrialRecord& rec) {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rec.fields) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, double>) {
            obj[k] = std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(format_double(x));
          } else {
            obj[k] = x;
          }
        },
        v);
  }
  return obj;
}

inline void write_jsonl(std::ostream& os, const std::vector<TrialRecord>& records) {
  for (const auto& rec : records) os << to_json(rec).dump() << '\n';
}

inline void write_records(const std::string& path, OutputFormat format, const std::vector<TrialRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  if (format == OutputFormat::csv) {
    write_csv(out, records);
  } else {
    write_jsonl(out, records);
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

}  // namespace tomored::harness
