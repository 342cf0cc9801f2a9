#pragma once

// Versioned flat binary archive of named numeric and string arrays, used for
// state snapshots. Layout (little-endian host order):
//
//   "SVBSNAP\0" | u32 version | u64 entry count
//   per entry: u32 name length, name bytes, u8 kind, u64 rows, u64 cols, payload
//
// kind 0 = doubles (rows x cols, column-major), 1 = strings (rows, cols = 1,
// each u64 length + bytes), 2 = int64 (rows x cols).

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "../linalg.hpp"

namespace streamvb::io {

inline constexpr char kSnapshotMagic[8] = {'S', 'V', 'B', 'S', 'N', 'A', 'P', '\0'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NumericEntry {
  std::uint64_t rows = 0, cols = 0;
  std::vector<double> values;
};
struct IntEntry {
  std::uint64_t rows = 0, cols = 0;
  std::vector<std::int64_t> values;
};
using StringEntry = std::vector<std::string>;

class Archive {
 public:
  using Entry = std::variant<NumericEntry, StringEntry, IntEntry>;

  void put(const std::string& name, const Mat& m) {
    NumericEntry e{static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols()), {}};
    e.values.assign(m.data(), m.data() + m.size());
    insert(name, std::move(e));
  }
  void put(const std::string& name, const Vec& v) { put(name, Mat(v)); }
  void put(const std::string& name, double d) { insert(name, NumericEntry{1, 1, {d}}); }
  void put(const std::string& name, const std::vector<double>& v) {
    insert(name, NumericEntry{v.size(), 1, v});
  }
  void put_int(const std::string& name, std::int64_t v) { insert(name, IntEntry{1, 1, {v}}); }
  void put_ints(const std::string& name, const std::vector<std::int64_t>& v) { insert(name, IntEntry{v.size(), 1, v}); }
  void put_strings(const std::string& name, const std::vector<std::string>& v) { insert(name, StringEntry(v)); }
  void put_string(const std::string& name, const std::string& s) { insert(name, StringEntry{s}); }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Mat mat(const std::string& name) const {
    const auto& e = numeric(name);
    Mat m(static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.cols));
    if (!e.values.empty()) std::memcpy(m.data(), e.values.data(), e.values.size() * sizeof(double));
    return m;
  }
  Vec vec(const std::string& name) const {
    const auto& e = numeric(name);
    return Eigen::Map<const Vec>(e.values.data(), static_cast<Eigen::Index>(e.values.size()));
  }
  double scalar(const std::string& name) const {
    const auto& e = numeric(name);
    if (e.values.size() != 1) throw SnapshotError("snapshot: '" + name + "' is not a scalar");
    return e.values[0];
  }
  std::vector<double> doubles(const std::string& name) const { return numeric(name).values; }
  std::int64_t integer(const std::string& name) const {
    const auto& v = ints(name);
    if (v.size() != 1) throw SnapshotError("snapshot: '" + name + "' is not a scalar");
    return v[0];
  }
  const std::vector<std::int64_t>& ints(const std::string& name) const {
    const auto* e = std::get_if<IntEntry>(&lookup(name));
    if (!e) throw SnapshotError("snapshot: '" + name + "' is not an integer array");
    return e->values;
  }
  const std::vector<std::string>& strings(const std::string& name) const {
    const auto* e = std::get_if<StringEntry>(&lookup(name));
    if (!e) throw SnapshotError("snapshot: '" + name + "' is not a string array");
    return *e;
  }
  std::string string(const std::string& name) const {
    const auto& v = strings(name);
    if (v.size() != 1) throw SnapshotError("snapshot: '" + name + "' is not a single string");
    return v[0];
  }

  void write_binary(std::ostream& os) const {
    os.write(kSnapshotMagic, sizeof kSnapshotMagic);
    write_pod(os, kSnapshotVersion);
    write_pod(os, static_cast<std::uint64_t>(entries_.size()));
    for (const auto& [name, entry] : entries_) {
      write_pod(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      if (const auto* n = std::get_if<NumericEntry>(&entry)) {
        write_pod(os, std::uint8_t{0});
        write_pod(os, n->rows);
        write_pod(os, n->cols);
        os.write(reinterpret_cast<const char*>(n->values.data()),
                 static_cast<std::streamsize>(n->values.size() * sizeof(double)));
      } else if (const auto* s = std::get_if<StringEntry>(&entry)) {
        write_pod(os, std::uint8_t{1});
        write_pod(os, static_cast<std::uint64_t>(s->size()));
        write_pod(os, std::uint64_t{1});
        for (const auto& str : *s) {
          write_pod(os, static_cast<std::uint64_t>(str.size()));
          os.write(str.data(), static_cast<std::streamsize>(str.size()));
        }
      } else {
        const auto& i = std::get<IntEntry>(entry);
        write_pod(os, std::uint8_t{2});
        write_pod(os, i.rows);
        write_pod(os, i.cols);
        os.write(reinterpret_cast<const char*>(i.values.data()),
                 static_cast<std::streamsize>(i.values.size() * sizeof(std::int64_t)));
      }
    }
    if (!os) throw SnapshotError("snapshot: write failed");
  }

  static Archive read_binary(std::istream& is) {
    char magic[sizeof kSnapshotMagic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) throw SnapshotError("snapshot: bad magic");
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kSnapshotVersion)
      throw SnapshotError("snapshot: unsupported version " + std::to_string(version));
    const auto count = read_pod<std::uint64_t>(is);
    Archive a;
    for (std::uint64_t e = 0; e < count; ++e) {
      const auto len = read_pod<std::uint32_t>(is);
      std::string name(len, '\0');
      is.read(name.data(), len);
      const auto kind = read_pod<std::uint8_t>(is);
      const auto rows = read_pod<std::uint64_t>(is);
      const auto cols = read_pod<std::uint64_t>(is);
      if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw SnapshotError("snapshot: implausible entry size");
      if (kind == 0) {
        NumericEntry n{rows, cols, std::vector<double>(rows * cols)};
        is.read(reinterpret_cast<char*>(n.values.data()), static_cast<std::streamsize>(n.values.size() * sizeof(double)));
        a.insert(name, std::move(n));
      } else if (kind == 1) {
        StringEntry s;
        for (std::uint64_t r = 0; r < rows; ++r) {
          const auto slen = read_pod<std::uint64_t>(is);
          if (slen > (1ULL << 30)) throw SnapshotError("snapshot: implausible string length");
          std::string str(slen, '\0');
          is.read(str.data(), static_cast<std::streamsize>(slen));
          s.push_back(std::move(str));
        }
        a.insert(name, std::move(s));
      } else if (kind == 2) {
        IntEntry i{rows, cols, std::vector<std::int64_t>(rows * cols)};
        is.read(reinterpret_cast<char*>(i.values.data()),
                static_cast<std::streamsize>(i.values.size() * sizeof(std::int64_t)));
        a.insert(name, std::move(i));
      } else {
        throw SnapshotError("snapshot: unknown entry kind");
      }
      if (!is) throw SnapshotError("snapshot: truncated file");
    }
    return a;
  }

  /// Readable mirror: name,row,col,value (strings quoted).
  void write_csv(std::ostream& os) const {
    os << "name,row,col,value\n";
    char buf[40];
    for (const auto& [name, entry] : entries_) {
      if (const auto* n = std::get_if<NumericEntry>(&entry)) {
        for (std::uint64_t c = 0; c < n->cols; ++c)
          for (std::uint64_t r = 0; r < n->rows; ++r) {
            std::snprintf(buf, sizeof buf, "%.17g", n->values[c * n->rows + r]);
            os << name << ',' << r << ',' << c << ',' << buf << '\n';
          }
      } else if (const auto* s = std::get_if<StringEntry>(&entry)) {
        for (std::size_t r = 0; r < s->size(); ++r) {
          std::string q;
          for (char ch : (*s)[r]) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          os << name << ',' << r << ",0,\"" << q << "\"\n";
        }
      } else {
        const auto& i = std::get<IntEntry>(entry);
        for (std::uint64_t c = 0; c < i.cols; ++c)
          for (std::uint64_t r = 0; r < i.rows; ++r) os << name << ',' << r << ',' << c << ',' << i.values[c * i.rows + r] << '\n';
      }
    }
  }

 private:
  template <typename T>
  static void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  template <typename T>
  static T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw SnapshotError("snapshot: truncated file");
    return v;
  }

  void insert(const std::string& name, Entry e) {
    if (index_.count(name)) throw SnapshotError("snapshot: duplicate entry '" + name + "'");
    index_[name] = entries_.size();
    entries_.emplace_back(name, std::move(e));
  }
  const Entry& lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw SnapshotError("snapshot: missing entry '" + name + "'");
    return entries_[it->second].second;
  }
  const NumericEntry& numeric(const std::string& name) const {
    const auto* e = std::get_if<NumericEntry>(&lookup(name));
    if (!e) throw SnapshotError("snapshot: '" + name + "' is not numeric");
    return *e;
  }

  std::vector<std::pair<std::string, Entry>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Writes via a temporary sibling and rename, so readers never see a partial file.
template <typename Writer>
void write_atomically(const std::filesystem::path& path, Writer&& writer, bool binary = false) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    writer(os);
    os.flush();
    if (!os) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace streamvb::io
