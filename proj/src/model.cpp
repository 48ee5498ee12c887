#include "trako/model.hpp"

#include <algorithm>
#include <cmath>

#include "trako/error.hpp"

namespace trako {

namespace {

constexpr std::pair<DeclaredType, std::string_view> kTypeNames[] = {
    {DeclaredType::Int8, "int8"},       {DeclaredType::UInt8, "uint8"},
    {DeclaredType::Int16, "int16"},     {DeclaredType::UInt16, "uint16"},
    {DeclaredType::Int32, "int32"},     {DeclaredType::UInt32, "uint32"},
    {DeclaredType::Int64, "int64"},     {DeclaredType::UInt64, "uint64"},
    {DeclaredType::Float32, "float32"}, {DeclaredType::Float64, "float64"},
};

void check_field(const std::string& name, const AttributeField& field, std::size_t expected_elements,
                 const char* kind, std::vector<Violation>& out) {
  if (field.dims == 0) {
    out.push_back({"dims >= 1", std::string(kind) + " '" + name + "' has dims 0", std::nullopt, name});
    return;
  }
  if (field.values.size() != expected_elements * field.dims) {
    out.push_back({std::string(kind) + " length mismatch",
                   std::string(kind) + " length mismatch: '" + name + "' has " +
                       std::to_string(field.values.size()) + " values, expected " +
                       std::to_string(expected_elements) + " x " + std::to_string(field.dims),
                   std::nullopt, name});
  }
}

}  // namespace

std::string_view to_string(DeclaredType type) {
  for (const auto& [t, name] : kTypeNames) {
    if (t == type) return name;
  }
  return "float32";
}

std::optional<DeclaredType> parse_declared_type(std::string_view name) {
  for (const auto& [t, n] : kTypeNames) {
    if (n == name) return t;
  }
  return std::nullopt;
}

bool is_integer(DeclaredType type) {
  return type != DeclaredType::Float32 && type != DeclaredType::Float64;
}

std::size_t byte_size(DeclaredType type) {
  switch (type) {
    case DeclaredType::Int8:
    case DeclaredType::UInt8: return 1;
    case DeclaredType::Int16:
    case DeclaredType::UInt16: return 2;
    case DeclaredType::Int32:
    case DeclaredType::UInt32:
    case DeclaredType::Float32: return 4;
    case DeclaredType::Int64:
    case DeclaredType::UInt64:
    case DeclaredType::Float64: return 8;
  }
  return 4;
}

void Tractogram::add_streamline(std::span<const double> xyz) {
  if (xyz.empty() || xyz.size() % 3 != 0) {
    throw Error(Errc::InvalidArgument, "streamline must hold a positive multiple of 3 coordinates");
  }
  if (offsets.empty()) offsets.push_back(0);
  coords.insert(coords.end(), xyz.begin(), xyz.end());
  offsets.push_back(offsets.back() + xyz.size() / 3);
}

std::vector<Violation> validate(const Tractogram& t) {
  std::vector<Violation> out;
  if (t.coords.size() % 3 != 0) {
    out.push_back({"coords multiple of 3", "coordinate array length is not a multiple of 3", std::nullopt, "vertices"});
  }
  const std::size_t vertex_count = t.vertex_count();

  if (t.offsets.empty()) {
    out.push_back({"offsets nonempty", "offsets must contain at least the terminal entry", std::nullopt, "offsets"});
  } else {
    if (t.offsets.front() != 0) {
      out.push_back({"offsets start at 0", "offsets[0] is " + std::to_string(t.offsets.front()) + ", expected 0", 0,
                     "offsets"});
    }
    for (std::size_t i = 1; i < t.offsets.size(); ++i) {
      if (t.offsets[i] <= t.offsets[i - 1]) {
        out.push_back({"offsets strictly increasing", "offsets not strictly increasing at index " + std::to_string(i),
                       i, "offsets"});
      }
    }
    if (t.offsets.back() != vertex_count) {
      out.push_back({"offsets end at vertex count",
                     "last offset " + std::to_string(t.offsets.back()) + " differs from vertex count " +
                         std::to_string(vertex_count),
                     t.offsets.size() - 1, "offsets"});
    }
  }

  for (std::size_t i = 0; i < t.coords.size(); ++i) {
    if (!std::isfinite(t.coords[i])) {
      out.push_back({"finite coordinates", "non-finite coordinate at vertex " + std::to_string(i / 3), i / 3,
                     "vertices"});
      break;
    }
  }

  for (const auto& [name, field] : t.vertex_scalars) check_field(name, field, vertex_count, "ScalarField", out);
  for (const auto& [name, field] : t.fiber_properties)
    check_field(name, field, t.streamline_count(), "PropertyField", out);
  return out;
}

void require_valid(const Tractogram& t) {
  const auto violations = validate(t);
  if (!violations.empty()) {
    throw Error(Errc::InvalidTractogram, "invalid tractogram: " + violations.front().detail);
  }
}

SummaryStats stats(const Tractogram& t) {
  SummaryStats s;
  s.streamline_count = t.streamline_count();
  s.vertex_count = t.vertex_count();
  for (std::size_t i = 0; i < s.streamline_count; ++i) {
    if (t.streamline_length(i) == 1) ++s.single_point_streamlines;
  }
  if (s.vertex_count > 0) {
    BoundingBox box{t.vertex(0), t.vertex(0)};
    for (std::size_t i = 1; i < s.vertex_count; ++i) {
      for (int c = 0; c < 3; ++c) {
        const double v = t.coords[3 * i + c];
        box.min[c] = std::min(box.min[c], v);
        box.max[c] = std::max(box.max[c], v);
      }
    }
    s.bbox = box;
  }
  auto summarize = [&](const std::string& name, const AttributeField& f, bool per_vertex) {
    AttributeSummary a{name, per_vertex, f.dims, f.declared_type, 0.0, 0.0};
    if (!f.values.empty()) {
      const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
      a.min = *lo;
      a.max = *hi;
    }
    s.attributes.push_back(std::move(a));
  };
  for (const auto& [name, f] : t.vertex_scalars) summarize(name, f, true);
  for (const auto& [name, f] : t.fiber_properties) summarize(name, f, false);
  return s;
}

}  // namespace trako
