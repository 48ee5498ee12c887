#pragma once

// Helpers shared by the test binaries: random tractograms restricted to what
// each file format can represent, scratch directories, and loose equality
// for readers that add format-specific metadata.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>

#include <unistd.h>

#include "trako/io_formats.hpp"
#include "trako/model.hpp"

namespace testing {

using trako::AttributeField;
using trako::DeclaredType;
using trako::Tractogram;

struct RandomOptions {
  std::size_t max_streamlines = 20;
  std::size_t max_points = 30;
  double box = 200.0;
  std::size_t scalars = 2;
  std::size_t properties = 2;
  bool float32_coords = true;
  bool allow_empty = false;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double random_value(std::mt19937_64& rng, DeclaredType type) {
  switch (type) {
    case DeclaredType::Int8: return static_cast<double>(static_cast<int>(below(rng, 256)) - 128);
    case DeclaredType::UInt8: return static_cast<double>(below(rng, 256));
    case DeclaredType::Int16: return static_cast<double>(static_cast<int>(below(rng, 65536)) - 32768);
    case DeclaredType::UInt16: return static_cast<double>(below(rng, 65536));
    case DeclaredType::Int32: return static_cast<double>(static_cast<std::int64_t>(below(rng, 1u << 31)) - (1 << 30));
    case DeclaredType::UInt32: return static_cast<double>(below(rng, 4000000000u));
    case DeclaredType::Int64: return static_cast<double>(static_cast<std::int64_t>(below(rng, 1ull << 52)) - (1ll << 51));
    case DeclaredType::UInt64: return static_cast<double>(below(rng, 1ull << 53));
    case DeclaredType::Float32: return static_cast<float>(uniform(rng, -1000.0, 1000.0));
    case DeclaredType::Float64: return uniform(rng, -1e6, 1e6);
  }
  return 0.0;
}

inline constexpr DeclaredType kAllTypes[] = {
    DeclaredType::Int8,  DeclaredType::UInt8,  DeclaredType::Int16,   DeclaredType::UInt16,  DeclaredType::Int32,
    DeclaredType::UInt32, DeclaredType::Int64, DeclaredType::UInt64, DeclaredType::Float32, DeclaredType::Float64};

/// Random geometry with optional fields. `types` restricts the declared
/// types drawn for fields; `max_dims` bounds their component count.
inline Tractogram random_tractogram(std::mt19937_64& rng, const RandomOptions& o,
                                    std::span<const DeclaredType> types = kAllTypes, std::size_t max_dims = 4) {
  Tractogram t;
  const std::size_t n = o.allow_empty ? below(rng, o.max_streamlines + 1) : 1 + below(rng, o.max_streamlines);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t m = 1 + below(rng, o.max_points);
    std::vector<double> xyz(3 * m);
    for (auto& v : xyz) {
      v = uniform(rng, -o.box / 2, o.box / 2);
      if (o.float32_coords) v = static_cast<float>(v);
    }
    t.add_streamline(xyz);
  }
  auto make_field = [&](std::size_t elements) {
    AttributeField f;
    f.dims = 1 + below(rng, max_dims);
    f.declared_type = types[below(rng, types.size())];
    f.values.resize(elements * f.dims);
    for (auto& v : f.values) v = random_value(rng, f.declared_type);
    return f;
  };
  for (std::size_t i = 0; i < o.scalars; ++i) t.vertex_scalars.set("s" + std::to_string(i), make_field(t.vertex_count()));
  for (std::size_t i = 0; i < o.properties; ++i) {
    t.fiber_properties.set("p" + std::to_string(i), make_field(t.streamline_count()));
  }
  return t;
}

/// Geometry, fields and space must match exactly; every metadata entry of
/// `expected` must be present in `actual`, which may carry more.
inline bool same_content(const Tractogram& expected, const Tractogram& actual) {
  if (expected.coords != actual.coords || expected.offsets != actual.offsets) return false;
  if (expected.vertex_scalars != actual.vertex_scalars) return false;
  if (expected.fiber_properties != actual.fiber_properties) return false;
  if (expected.space != actual.space) return false;
  for (const auto& [key, value] : expected.metadata) {
    const auto* v = actual.metadata.find(key);
    if (!v || *v != value) return false;
  }
  return true;
}

/// A fresh, empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("trako_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
