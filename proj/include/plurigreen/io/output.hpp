#pragma once

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/grid.hpp"

namespace plurigreen {

inline constexpr const char* code_version = "plurigreen 1.0.0";

/// Decimal with 17 significant digits; NaN and infinities spelled out.
inline std::string format17(double x)
{
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string sha256_hex(const std::string& bytes)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Table of columns written as CSV, one row per entry.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string text() const
  {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + format17(r[c]);
      out += "\n";
    }
    return out;
  }
};

/// Grid as CSV: real coordinates (re, im per complex axis), then the value, row-major.
template <int N>
CsvTable grid_table(const ComplexGrid<N>& g, const std::string& value_name)
{
  CsvTable t;
  for (int k = 1; k <= N; ++k) {
    const std::string s = N == 1 ? "" : std::to_string(k);
    t.header.push_back("x" + s);
    t.header.push_back("y" + s);
  }
  t.header.push_back(value_name);
  t.rows.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto z = g.z(i);
    std::vector<double> r;
    for (int k = 0; k < N; ++k) {
      r.push_back(z(k).real());
      r.push_back(z(k).imag());
    }
    r.push_back(g.mask[i] == NodeTag::excised ? std::nan("") : g.values[i]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

/// Key-value report mirrored by a JSON block. Keys keep insertion order.
class Report {
 public:
  void set(const std::string& key, const nlohmann::json& value)
  {
    if (!data_.contains(key)) order_.push_back(key);
    data_[key] = value;
  }

  const nlohmann::json& data() const { return data_; }

  std::string text() const
  {
    std::string out;
    for (const auto& k : order_) {
      const auto& v = data_.at(k);
      out += k + "=" + (v.is_number_float() ? format17(v.get<double>()) : v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
    }
    nlohmann::ordered_json block;
    for (const auto& k : order_) block[k] = data_.at(k);
    out += "--- json\n" + block.dump(2) + "\n";
    return out;
  }

 private:
  nlohmann::json data_ = nlohmann::json::object();
  std::vector<std::string> order_;
};

/// Output directory writer: every file goes through here so the manifest can list
/// it with its digest. The manifest itself is written last.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)), start_(std::chrono::steady_clock::now())
  {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& path() const { return dir_; }

  void write(const std::string& name, const std::string& bytes)
  {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    out << bytes;
    out.close();
    files_[name] = {bytes.size(), sha256_hex(bytes)};
  }

  /// Registers a file written by someone else (the run log).
  void adopt(const std::string& name) { files_[name] = {0, ""}; }

  void stage(const std::string& name, double seconds) { timings_.emplace_back(name, seconds); }

  void write_manifest(const nlohmann::json& config_echo, const std::string& status)
  {
    nlohmann::ordered_json m;
    m["version"] = code_version;
    m["status"] = status;
    m["config"] = config_echo;
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    nlohmann::ordered_json stages = nlohmann::ordered_json::array();
    for (const auto& [n, s] : timings_) stages.push_back({{"stage", n}, {"seconds", s}});
    m["stages"] = stages;
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (auto& [name, info] : files_) {
      if (info.digest.empty()) {
        const auto bytes = read_file(dir_ / name);
        info = {bytes.size(), sha256_hex(bytes)};
      }
      files.push_back({{"name", name}, {"bytes", info.bytes}, {"sha256", info.digest}});
    }
    m["files"] = files;
    std::ofstream out(dir_ / "manifest.json", std::ios::trunc);
    if (!out) throw Error("cannot write manifest");
    out << m.dump(2) << "\n";
  }

 private:
  struct FileInfo {
    std::size_t bytes = 0;
    std::string digest;
  };
  std::filesystem::path dir_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, FileInfo> files_;
  std::vector<std::pair<std::string, double>> timings_;
};

}  // namespace plurigreen
