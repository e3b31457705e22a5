/*
   Copyright 2026 The phoncl authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace phoncl {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors. Every failure carries a kind so callers (and the CLI exit-code
// mapping) can distinguish bad input from runtime trouble.
// ---------------------------------------------------------------------------

enum class ErrorKind {
  kValidation,
  kDomain,
  kInfeasibleAlignment,
  kDegenerateSpan,
  kDegenerateWeights,
  kPhaseStarvation,
  kManifestVersion,
  kManifestChecksum,
  kManifestMalformed,
  kIo,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles. Small sizes only; no BLAS.
// ---------------------------------------------------------------------------

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double value = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, value) {}

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  bool operator==(const Matrix&) const = default;

  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

inline Matrix identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Log-space arithmetic. kLogZero stands in for log(0) everywhere; any value
// below kLogGuard is treated as zero probability.
// ---------------------------------------------------------------------------

inline constexpr double kLogZero = -1e30;
inline constexpr double kLogGuard = -1e29;

inline double log_add(double a, double b) {
  if (a <= kLogGuard) return b;
  if (b <= kLogGuard) return a;
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// ---------------------------------------------------------------------------
// Hashing and seed derivation. FNV-1a 64 doubles as the artifact checksum;
// splitmix64 decorrelates derived seeds.
// ---------------------------------------------------------------------------

inline constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr uint64_t kFnvPrime = 1099511628211ULL;

struct Fnv1a64 {
  uint64_t h = kFnvOffset;

  void update(const void* bytes, size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= kFnvPrime;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  uint64_t digest() const { return h; }
};

inline uint64_t fnv1a64(std::string_view s) {
  Fnv1a64 f;
  f.update(s);
  return f.digest();
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic per-object seed stream: content and ordering of parallel work
// never depend on scheduling.
inline uint64_t derive_seed(uint64_t master, std::string_view tag) {
  return splitmix64(master ^ fnv1a64(tag));
}

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Intelligibility groups.
// ---------------------------------------------------------------------------

enum class Group : int { C = 0, H = 1, M = 2, L = 3, VL = 4 };

inline constexpr std::array<Group, 5> kAllGroups = {Group::C, Group::H, Group::M,
                                                    Group::L, Group::VL};
inline constexpr std::array<Group, 4> kDysarthricGroups = {Group::H, Group::M,
                                                           Group::L, Group::VL};

inline std::string to_string(Group g) {
  switch (g) {
    case Group::C: return "C";
    case Group::H: return "H";
    case Group::M: return "M";
    case Group::L: return "L";
    case Group::VL: return "VL";
  }
  return "?";
}

inline Group parse_group(std::string_view s) {
  for (Group g : kAllGroups) {
    if (to_string(g) == s) return g;
  }
  fail(ErrorKind::kValidation, "unknown group '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Little-endian binary IO, byte-order independent.
// ---------------------------------------------------------------------------

inline void write_u32_le(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64_le(std::ostream& os, uint64_t v) {
  write_u32_le(os, static_cast<uint32_t>(v & 0xFFFFFFFFULL));
  write_u32_le(os, static_cast<uint32_t>(v >> 32));
}

inline void write_f32_le(std::ostream& os, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  write_u32_le(os, u);
}

inline void write_f64_le(std::ostream& os, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  write_u64_le(os, u);
}

inline uint32_t read_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) fail(ErrorKind::kIo, "unexpected end of binary stream");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline uint64_t read_u64_le(std::istream& is) {
  uint64_t lo = read_u32_le(is);
  uint64_t hi = read_u32_le(is);
  return lo | (hi << 32);
}

inline float read_f32_le(std::istream& is) {
  uint32_t u = read_u32_le(is);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

inline double read_f64_le(std::istream& is) {
  uint64_t u = read_u64_le(is);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

// ---------------------------------------------------------------------------
// Small string helpers.
// ---------------------------------------------------------------------------

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

inline uint64_t parse_hex64(std::string_view s) {
  uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') v |= static_cast<uint64_t>(c - 'A' + 10);
    else fail(ErrorKind::kValidation, "bad hex string");
  }
  return v;
}

}  // namespace phoncl
