#pragma once

// CSV ingestion bound to a RunConfig's column roles. Malformed rows are
// skipped and counted; 100 consecutive malformed rows abort the stream.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"

namespace streamvb::io {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StreamRecord {
  double y = 0.0;
  std::vector<double> linear;
  std::vector<double> smooth;
  std::vector<std::string> groups;

  bool operator==(const StreamRecord&) const = default;
};

/// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(d)) return std::nullopt;
  return d;
}

class CsvSource {
 public:
  static constexpr int kMaxConsecutiveMalformed = 100;
  static constexpr int kMaxWarnings = 10;

  CsvSource(std::istream& in, const RunConfig& cfg, std::ostream* warn = nullptr)
      : in_(in), warn_(warn), binary_(cfg.model == ModelKind::logistic) {
    std::string header;
    do {
      if (!std::getline(in_, header)) throw DataError("input: missing header row");
      ++line_;
    } while (header.find_first_not_of(" \t\r") == std::string::npos);
    const auto names = split_csv_line(header);
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < names.size(); ++i) pos.emplace(detail::trim(names[i]), i);
    num_fields_ = names.size();
    auto locate = [&](const std::string& col) {
      auto it = pos.find(col);
      if (it == pos.end()) throw DataError("input: mandated column '" + col + "' missing from header");
      return it->second;
    };
    y_col_ = locate(cfg.response);
    for (const auto& c : cfg.linear) linear_cols_.push_back(locate(c));
    for (const auto& s : cfg.smooth) smooth_cols_.push_back(locate(s.column));
    for (const auto& g : cfg.groups) group_cols_.push_back(locate(g));
  }

  /// Next well-formed record, or nullopt at end of input.
  std::optional<StreamRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::string why;
      if (auto rec = parse(line, why)) {
        consecutive_bad_ = 0;
        ++records_;
        return rec;
      }
      reject(why);
    }
    return std::nullopt;
  }

  /// Records a row rejected downstream (for example an unseen group level).
  void reject(const std::string& why) {
    ++malformed_;
    ++consecutive_bad_;
    if (warn_ && malformed_ <= kMaxWarnings) {
      *warn_ << "warning: line " << line_ << " skipped: " << why << '\n';
      if (malformed_ == kMaxWarnings) *warn_ << "warning: further malformed-row warnings suppressed\n";
    }
    if (consecutive_bad_ >= kMaxConsecutiveMalformed)
      throw DataError("input: " + std::to_string(kMaxConsecutiveMalformed) + " consecutive malformed rows ending at line " +
                      std::to_string(line_));
  }

  std::int64_t malformed() const { return malformed_; }
  std::int64_t records() const { return records_; }
  std::int64_t line() const { return line_; }

 private:
  std::optional<StreamRecord> parse(const std::string& line, std::string& why) const {
    const auto f = split_csv_line(line);
    if (f.size() != num_fields_) {
      why = "expected " + std::to_string(num_fields_) + " fields, found " + std::to_string(f.size());
      return std::nullopt;
    }
    StreamRecord r;
    auto num = [&](std::size_t col, double& out) {
      auto v = parse_number(detail::trim(f[col]));
      if (!v) {
        why = "non-numeric value '" + f[col] + "'";
        return false;
      }
      out = *v;
      return true;
    };
    if (!num(y_col_, r.y)) return std::nullopt;
    if (binary_ && r.y != 0.0 && r.y != 1.0) {
      why = "binary response must be 0 or 1";
      return std::nullopt;
    }
    r.linear.resize(linear_cols_.size());
    for (std::size_t j = 0; j < linear_cols_.size(); ++j)
      if (!num(linear_cols_[j], r.linear[j])) return std::nullopt;
    r.smooth.resize(smooth_cols_.size());
    for (std::size_t j = 0; j < smooth_cols_.size(); ++j)
      if (!num(smooth_cols_[j], r.smooth[j])) return std::nullopt;
    for (auto c : group_cols_) {
      auto label = detail::trim(f[c]);
      if (label.empty()) {
        why = "empty group label";
        return std::nullopt;
      }
      r.groups.push_back(std::move(label));
    }
    return r;
  }

  std::istream& in_;
  std::ostream* warn_;
  bool binary_;
  std::size_t num_fields_ = 0;
  std::size_t y_col_ = 0;
  std::vector<std::size_t> linear_cols_, smooth_cols_, group_cols_;
  std::int64_t line_ = 0;
  std::int64_t records_ = 0;
  std::int64_t malformed_ = 0;
  int consecutive_bad_ = 0;
};

/// Buffers the first records of a source so they can be replayed, then
/// continues with the rest of the stream.
class ReplayableStream {
 public:
  explicit ReplayableStream(CsvSource& src) : src_(src) {}

  /// Buffers up to `count` records; returns how many are buffered.
  std::size_t fill(std::size_t count) {
    while (prefix_.size() < count) {
      auto r = src_.next();
      if (!r) break;
      prefix_.push_back(std::move(*r));
    }
    return prefix_.size();
  }

  const std::vector<StreamRecord>& prefix() const { return prefix_; }

  /// Records after the buffered prefix.
  std::optional<StreamRecord> next() { return src_.next(); }

  CsvSource& source() { return src_; }

 private:
  CsvSource& src_;
  std::vector<StreamRecord> prefix_;
};

}  // namespace streamvb::io
