#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace hflab {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Deterministic RNG.  Counter-friendly: every consumer derives its own stream
// from (base_seed, index) via mix_seed, so scheduling order can never change
// which numbers a given work item sees.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL * (index + 1));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in (0,1); never returns 0 so log() below is safe
  double next_uniform() {
    std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// FNV-1a hashing (basis fingerprints in reports)
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Number formatting: every float the tool emits goes through %.17g so that
// decimal output round-trips the double exactly and reports are byte-stable.
// ---------------------------------------------------------------------------

inline std::string fmt17(double x) {
  if (std::isnan(x)) return "null";
  if (std::isinf(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Serialize a json tree with %.17g floats and sorted object keys (nlohmann's
// default object is a sorted map, so ordering comes for free).  NaN/Inf map
// to null, matching how the flags in the surrounding report explain them.
inline void json_dump_g17(const json& j, std::string& out, int indent, int depth) {
  auto pad = [&](int d) { out.append(static_cast<size_t>(d) * indent, ' '); };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        pad(depth + 1);
        out += json(it.key()).dump();
        out += ": ";
        json_dump_g17(it.value(), out, indent, depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& el : j) {
        if (!first) out += ",\n";
        first = false;
        pad(depth + 1);
        json_dump_g17(el, out, indent, depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "]";
      return;
    }
    case json::value_t::number_float:
      out += fmt17(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

inline std::string json_dump_g17(const json& j) {
  std::string out;
  json_dump_g17(j, out, 2, 0);
  out += "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Worker-thread cap: HF_LAB_THREADS, else hardware concurrency.
// ---------------------------------------------------------------------------

inline int thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("HF_LAB_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && v < static_cast<long>(hw)) return static_cast<int>(v);
    if (v >= static_cast<long>(hw)) return static_cast<int>(hw);
    return 1;
  }
  return static_cast<int>(hw);
}

}  // namespace hflab
