#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trako {

/// Component type an attribute had in its source file. Values are always held
/// as doubles in memory; this only drives serialization.
enum class DeclaredType {
  Int8,
  UInt8,
  Int16,
  UInt16,
  Int32,
  UInt32,
  Int64,
  UInt64,
  Float32,
  Float64,
};

std::string_view to_string(DeclaredType type);
std::optional<DeclaredType> parse_declared_type(std::string_view name);
bool is_integer(DeclaredType type);
std::size_t byte_size(DeclaredType type);

/// Insertion-ordered string-keyed map. Lookups are linear; tractograms carry
/// a handful of fields, not thousands.
template <typename V>
class OrderedMap {
 public:
  using value_type = std::pair<std::string, V>;
  using const_iterator = typename std::vector<value_type>::const_iterator;
  using iterator = typename std::vector<value_type>::iterator;

  /// Replaces the value if the key exists (keeping its position), appends
  /// otherwise.
  void set(std::string key, V value) {
    if (auto* existing = find(key)) {
      *existing = std::move(value);
    } else {
      entries_.emplace_back(std::move(key), std::move(value));
    }
  }

  V* find(std::string_view key) {
    for (auto& [k, v] : entries_) {
      if (k == key) return &v;
    }
    return nullptr;
  }
  const V* find(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
      if (k == key) return &v;
    }
    return nullptr;
  }
  bool contains(std::string_view key) const { return find(key) != nullptr; }

  const V& at(std::string_view key) const {
    if (const auto* v = find(key)) return *v;
    throw std::out_of_range("no entry named '" + std::string(key) + "'");
  }

  bool erase(std::string_view key) {
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (it->first == key) {
        entries_.erase(it);
        return true;
      }
    }
    return false;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  iterator begin() { return entries_.begin(); }
  iterator end() { return entries_.end(); }
  const_iterator begin() const { return entries_.begin(); }
  const_iterator end() const { return entries_.end(); }

  bool operator==(const OrderedMap&) const = default;

 private:
  std::vector<value_type> entries_;
};

/// Per-vertex (scalar) or per-streamline (property) data: `values` holds
/// element_count * dims numbers, components interleaved.
struct AttributeField {
  std::size_t dims = 1;
  std::vector<double> values;
  DeclaredType declared_type = DeclaredType::Float32;

  std::size_t element_count() const { return dims == 0 ? 0 : values.size() / dims; }
  bool operator==(const AttributeField&) const = default;
};

using ScalarField = AttributeField;
using PropertyField = AttributeField;
using Metadata = OrderedMap<std::string>;

/// Coordinate-space tags recorded by the readers.
namespace space {
inline constexpr std::string_view kUnknown = "unknown";
inline constexpr std::string_view kScanner = "scanner";  // TCK: world/scanner mm
inline constexpr std::string_view kVoxmm = "voxmm";      // TRK: voxel-mm
inline constexpr std::string_view kWorld = "world";      // VTK: as written
}  // namespace space

using Vec3 = std::array<double, 3>;

/// A set of streamlines. Vertex coordinates are stored flat (x, y, z
/// interleaved); streamline i spans vertices [offsets[i], offsets[i+1]).
struct Tractogram {
  std::vector<double> coords;
  std::vector<std::uint64_t> offsets{0};
  OrderedMap<ScalarField> vertex_scalars;
  OrderedMap<PropertyField> fiber_properties;
  Metadata metadata;
  std::string space{space::kUnknown};

  std::size_t vertex_count() const { return coords.size() / 3; }
  std::size_t streamline_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t streamline_length(std::size_t i) const {
    return static_cast<std::size_t>(offsets[i + 1] - offsets[i]);
  }
  Vec3 vertex(std::size_t i) const { return {coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]}; }

  /// Appends one streamline given as xyz triples; `xyz.size()` must be a
  /// positive multiple of three.
  void add_streamline(std::span<const double> xyz);

  bool operator==(const Tractogram&) const = default;
};

struct Violation {
  std::string invariant;  // short name of the broken rule
  std::string detail;     // human-readable, names the offending field/index
  std::optional<std::size_t> index;
  std::string field;
};

/// Checks every structural invariant of `t`; an empty result means valid.
std::vector<Violation> validate(const Tractogram& t);

/// Throws Errc::InvalidTractogram listing the first violation, if any.
void require_valid(const Tractogram& t);

struct AttributeSummary {
  std::string name;
  bool per_vertex = true;
  std::size_t dims = 1;
  DeclaredType declared_type = DeclaredType::Float32;
  double min = 0.0;
  double max = 0.0;
};

struct BoundingBox {
  Vec3 min{};
  Vec3 max{};
};

struct SummaryStats {
  std::size_t streamline_count = 0;
  std::size_t vertex_count = 0;
  std::size_t single_point_streamlines = 0;
  std::optional<BoundingBox> bbox;  // absent for an empty tractogram
  std::vector<AttributeSummary> attributes;
};

SummaryStats stats(const Tractogram& t);

}  // namespace trako
