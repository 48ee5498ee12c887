// TrackVis .trk (version 2): fixed 1000-byte little-endian header, then per
// streamline an int32 point count, the points with their per-point scalars,
// and the per-streamline properties.

#include <cmath>
#include <sstream>

#include "byte_io.hpp"
#include "trako/error.hpp"
#include "trako/io_formats.hpp"

namespace trako::io {

namespace {

constexpr std::size_t kHeaderSize = 1000;
constexpr std::size_t kNameSlots = 10;
constexpr std::size_t kNameLength = 20;

// Byte offsets of the header fields.
constexpr std::size_t kDim = 6;
constexpr std::size_t kVoxelSize = 12;
constexpr std::size_t kOrigin = 24;
constexpr std::size_t kNScalars = 36;
constexpr std::size_t kScalarNames = 38;
constexpr std::size_t kNProperties = 238;
constexpr std::size_t kPropertyNames = 240;
constexpr std::size_t kVoxToRas = 440;
constexpr std::size_t kVoxelOrder = 948;
constexpr std::size_t kImageOrientation = 956;
constexpr std::size_t kFlags = 982;  // invert_x/y/z, swap_xy/yz/zx
constexpr std::size_t kNCount = 988;
constexpr std::size_t kVersion = 992;
constexpr std::size_t kHdrSize = 996;

constexpr auto kLE = std::endian::little;

template <typename T>
std::string join_values(const std::uint8_t* p, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += detail::format_number(detail::load<T>(p + i * sizeof(T), kLE));
  }
  return out;
}

template <typename T>
std::vector<T> split_values(const std::string* text, std::vector<T> fallback) {
  if (!text) return fallback;
  std::vector<T> out;
  std::istringstream in(*text);
  std::string token;
  while (in >> token) {
    T v{};
    if (!detail::parse_number(token, v)) return fallback;
    out.push_back(v);
  }
  return out.size() == fallback.size() ? out : fallback;
}

struct FieldSlot {
  std::string name;
  std::size_t dims;
};

// Name slots may encode a component count as "name\0<count>".
std::vector<FieldSlot> parse_slots(const std::uint8_t* names, std::size_t total_values, std::string_view prefix) {
  std::vector<FieldSlot> fields;
  std::size_t consumed = 0;
  std::size_t slot = 0;
  while (consumed < total_values) {
    std::string name;
    std::size_t dims = 1;
    if (slot < kNameSlots && names[slot * kNameLength] != 0) {
      const char* raw = reinterpret_cast<const char*>(names + slot * kNameLength);
      const std::string_view field(raw, kNameLength);
      const auto nul = field.find('\0');
      name = std::string(field.substr(0, nul));
      if (nul != std::string_view::npos) {
        std::string_view rest = field.substr(nul + 1);
        rest = rest.substr(0, rest.find('\0'));
        std::size_t n = 0;
        if (!rest.empty() && detail::parse_number(rest, n) && n > 0) dims = n;
      }
    } else {
      name = std::string(prefix) + std::to_string(consumed);
    }
    dims = std::min(dims, total_values - consumed);
    fields.push_back({std::move(name), dims});
    consumed += dims;
    ++slot;
  }
  // Keep names unique so they can key the attribute maps.
  for (std::size_t i = 0; i < fields.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (fields[j].name == fields[i].name) {
        fields[i].name += "_" + std::to_string(i);
        j = static_cast<std::size_t>(-1);
      }
    }
  }
  return fields;
}

void write_slots(const OrderedMap<AttributeField>& fields, std::uint8_t* names, const char* kind,
                 Warnings* warnings) {
  std::size_t slot = 0;
  for (const auto& [name, f] : fields) {
    std::string encoded = name;
    if (f.dims > 1) encoded += '\0' + std::to_string(f.dims);
    if (slot >= kNameSlots || encoded.size() >= kNameLength) {
      if (warnings) {
        warnings->push_back(std::string("TRK: ") + kind + " '" + name +
                            "' does not fit a header name slot; its name (and grouping) will not survive");
      }
    } else {
      std::memcpy(names + slot * kNameLength, encoded.data(), encoded.size());
    }
    ++slot;
  }
}

void warn_if_not_float32(const OrderedMap<AttributeField>& fields, Warnings* warnings) {
  if (!warnings) return;
  for (const auto& [name, f] : fields) {
    for (double v : f.values) {
      if (static_cast<double>(static_cast<float>(v)) != v) {
        warnings->push_back("TRK: values of '" + name + "' are rounded to float32");
        break;
      }
    }
  }
}

}  // namespace

Tractogram read_trk(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), "TRACK", 5) != 0) {
    throw Error(Errc::BadMagic, "TRK: missing 'TRACK' magic at byte offset 0", 0);
  }
  if (bytes.size() < kHeaderSize) {
    throw Error(Errc::TruncatedBody, "TRK: file shorter than the 1000-byte header", bytes.size());
  }
  const std::uint8_t* h = bytes.data();
  const auto hdr_size = detail::load<std::int32_t>(h + kHdrSize, kLE);
  if (hdr_size != static_cast<std::int32_t>(kHeaderSize)) {
    throw Error(Errc::HeaderSizeMismatch, "TRK: hdr_size is " + std::to_string(hdr_size) + ", expected 1000",
                kHdrSize);
  }

  Tractogram t;
  t.space = space::kVoxmm;
  t.metadata.set("trk.dim", join_values<std::int16_t>(h + kDim, 3));
  t.metadata.set("trk.voxel_size", join_values<float>(h + kVoxelSize, 3));
  t.metadata.set("trk.origin", join_values<float>(h + kOrigin, 3));
  t.metadata.set("trk.vox_to_ras", join_values<float>(h + kVoxToRas, 16));
  {
    const std::string_view order(reinterpret_cast<const char*>(h + kVoxelOrder), 4);
    t.metadata.set("trk.voxel_order", std::string(order.substr(0, order.find('\0'))));
  }
  t.metadata.set("trk.image_orientation_patient", join_values<float>(h + kImageOrientation, 6));
  {
    std::string flags;
    for (int i = 0; i < 6; ++i) flags += (i ? " " : "") + std::to_string(h[kFlags + i]);
    t.metadata.set("trk.flags", flags);
  }
  t.metadata.set("trk.version", std::to_string(detail::load<std::int32_t>(h + kVersion, kLE)));

  const auto n_scalars = detail::load<std::int16_t>(h + kNScalars, kLE);
  const auto n_properties = detail::load<std::int16_t>(h + kNProperties, kLE);
  const auto n_count = detail::load<std::int32_t>(h + kNCount, kLE);
  if (n_scalars < 0 || n_properties < 0 || n_count < 0) {
    throw Error(Errc::MalformedHeader, "TRK: negative n_scalars, n_properties or n_count", kNScalars);
  }
  const auto scalar_slots = parse_slots(h + kScalarNames, static_cast<std::size_t>(n_scalars), "scalar_");
  const auto property_slots = parse_slots(h + kPropertyNames, static_cast<std::size_t>(n_properties), "property_");

  std::vector<AttributeField> scalars(scalar_slots.size());
  std::vector<AttributeField> properties(property_slots.size());
  for (std::size_t i = 0; i < scalars.size(); ++i) scalars[i].dims = scalar_slots[i].dims;
  for (std::size_t i = 0; i < properties.size(); ++i) properties[i].dims = property_slots[i].dims;

  const std::size_t point_stride = 4 * (3 + static_cast<std::size_t>(n_scalars));
  std::size_t pos = kHeaderSize;
  std::size_t records = 0;
  while (pos < bytes.size()) {
    if (n_count > 0 && records == static_cast<std::size_t>(n_count)) {
      throw Error(Errc::CountMismatch,
                  "TRK: header n_count " + std::to_string(n_count) + " but more streamlines follow at byte offset " +
                      std::to_string(pos),
                  pos);
    }
    if (pos + 4 > bytes.size()) {
      throw Error(Errc::TruncatedBody, "TRK: truncated point count at byte offset " + std::to_string(pos), pos);
    }
    const auto n_points = detail::load<std::int32_t>(bytes.data() + pos, kLE);
    if (n_points < 0) {
      throw Error(Errc::TruncatedBody, "TRK: negative point count at byte offset " + std::to_string(pos), pos);
    }
    const std::size_t need = 4 + static_cast<std::size_t>(n_points) * point_stride + 4 * n_properties;
    if (pos + need > bytes.size()) {
      throw Error(Errc::TruncatedBody, "TRK: streamline record overruns the file at byte offset " + std::to_string(pos),
                  pos);
    }
    const std::uint8_t* p = bytes.data() + pos + 4;
    for (std::int32_t i = 0; i < n_points; ++i) {
      for (int c = 0; c < 3; ++c) {
        const float v = detail::load<float>(p + 4 * c, kLE);
        if (!std::isfinite(v)) {
          throw Error(Errc::TruncatedBody, "TRK: non-finite coordinate at byte offset " +
                                               std::to_string(p + 4 * c - bytes.data()),
                      static_cast<std::size_t>(p + 4 * c - bytes.data()));
        }
        t.coords.push_back(v);
      }
      const std::uint8_t* s = p + 12;
      for (auto& field : scalars) {
        for (std::size_t d = 0; d < field.dims; ++d, s += 4) field.values.push_back(detail::load<float>(s, kLE));
      }
      p += point_stride;
    }
    // Zero-point records carry no geometry; their properties go with them.
    if (n_points > 0) {
      for (auto& field : properties) {
        for (std::size_t d = 0; d < field.dims; ++d, p += 4) field.values.push_back(detail::load<float>(p, kLE));
      }
      t.offsets.push_back(t.offsets.back() + static_cast<std::uint64_t>(n_points));
    }
    pos += need;
    ++records;
  }
  if (n_count > 0 && records != static_cast<std::size_t>(n_count)) {
    throw Error(Errc::CountMismatch,
                "TRK: header n_count " + std::to_string(n_count) + " but body holds " + std::to_string(records),
                kNCount);
  }

  for (std::size_t i = 0; i < scalars.size(); ++i) t.vertex_scalars.set(scalar_slots[i].name, std::move(scalars[i]));
  for (std::size_t i = 0; i < properties.size(); ++i)
    t.fiber_properties.set(property_slots[i].name, std::move(properties[i]));
  return t;
}

std::vector<std::uint8_t> write_trk(const Tractogram& t, Warnings* warnings) {
  require_valid(t);
  std::size_t n_scalars = 0, n_properties = 0;
  for (const auto& [name, f] : t.vertex_scalars) n_scalars += f.dims;
  for (const auto& [name, f] : t.fiber_properties) n_properties += f.dims;
  if (n_scalars > 32767 || n_properties > 32767) {
    throw Error(Errc::InvalidArgument, "TRK: too many scalar or property components for an int16 header field");
  }
  if (t.streamline_count() > 2147483647u) throw Error(Errc::InvalidArgument, "TRK: too many streamlines");

  std::vector<std::uint8_t> out(kHeaderSize, 0);
  std::uint8_t* h = out.data();
  std::memcpy(h, "TRACK", 5);
  const auto& md = t.metadata;
  const auto dim = split_values<std::int16_t>(md.find("trk.dim"), {1, 1, 1});
  const auto voxel_size = split_values<float>(md.find("trk.voxel_size"), {1.f, 1.f, 1.f});
  const auto origin = split_values<float>(md.find("trk.origin"), {0.f, 0.f, 0.f});
  const auto vox_to_ras = split_values<float>(md.find("trk.vox_to_ras"),
                                              {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  const auto orientation = split_values<float>(md.find("trk.image_orientation_patient"), {0, 0, 0, 0, 0, 0});
  const auto flags = split_values<int>(md.find("trk.flags"), {0, 0, 0, 0, 0, 0});
  const auto version = split_values<std::int32_t>(md.find("trk.version"), {2});
  for (int i = 0; i < 3; ++i) {
    detail::store_at(dim[i], kLE, h + kDim + 2 * i);
    detail::store_at(voxel_size[i], kLE, h + kVoxelSize + 4 * i);
    detail::store_at(origin[i], kLE, h + kOrigin + 4 * i);
  }
  for (int i = 0; i < 16; ++i) detail::store_at(vox_to_ras[i], kLE, h + kVoxToRas + 4 * i);
  for (int i = 0; i < 6; ++i) {
    detail::store_at(orientation[i], kLE, h + kImageOrientation + 4 * i);
    h[kFlags + i] = static_cast<std::uint8_t>(flags[i]);
  }
  {
    const std::string* order = md.find("trk.voxel_order");
    const std::string value = order ? order->substr(0, 4) : "RAS";
    std::memcpy(h + kVoxelOrder, value.data(), value.size());
  }
  detail::store_at(static_cast<std::int16_t>(n_scalars), kLE, h + kNScalars);
  detail::store_at(static_cast<std::int16_t>(n_properties), kLE, h + kNProperties);
  write_slots(t.vertex_scalars, h + kScalarNames, "scalar", warnings);
  write_slots(t.fiber_properties, h + kPropertyNames, "property", warnings);
  detail::store_at(static_cast<std::int32_t>(t.streamline_count()), kLE, h + kNCount);
  detail::store_at(version[0], kLE, h + kVersion);
  detail::store_at(static_cast<std::int32_t>(kHeaderSize), kLE, h + kHdrSize);
  warn_if_not_float32(t.vertex_scalars, warnings);
  warn_if_not_float32(t.fiber_properties, warnings);

  out.reserve(kHeaderSize + 4 * t.streamline_count() * (1 + n_properties) +
              4 * t.vertex_count() * (3 + n_scalars));
  for (std::size_t s = 0; s < t.streamline_count(); ++s) {
    detail::store(static_cast<std::int32_t>(t.streamline_length(s)), kLE, out);
    for (std::uint64_t v = t.offsets[s]; v < t.offsets[s + 1]; ++v) {
      for (int c = 0; c < 3; ++c) detail::store(static_cast<float>(t.coords[3 * v + c]), kLE, out);
      for (const auto& [name, f] : t.vertex_scalars) {
        for (std::size_t d = 0; d < f.dims; ++d) detail::store(static_cast<float>(f.values[v * f.dims + d]), kLE, out);
      }
    }
    for (const auto& [name, f] : t.fiber_properties) {
      for (std::size_t d = 0; d < f.dims; ++d) detail::store(static_cast<float>(f.values[s * f.dims + d]), kLE, out);
    }
  }
  return out;
}

}  // namespace trako::io
