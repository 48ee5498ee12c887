#include "trako/container.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "byte_io.hpp"
#include "trako/error.hpp"

namespace trako::container {

namespace {

constexpr int kByte = 5120;
constexpr int kUnsignedByte = 5121;
constexpr int kShort = 5122;
constexpr int kUnsignedShort = 5123;
constexpr int kUnsignedInt = 5125;
constexpr int kFloat = 5126;

constexpr std::uint32_t kGlbMagic = 0x46546C67;  // "glTF"
constexpr std::uint32_t kChunkJson = 0x4E4F534A;
constexpr std::uint32_t kChunkBin = 0x004E4942;
constexpr std::string_view kDataUriPrefix = "data:application/octet-stream;base64,";

constexpr auto kLE = std::endian::little;

std::optional<int> gltf_component_type(DeclaredType t) {
  switch (t) {
    case DeclaredType::Int8: return kByte;
    case DeclaredType::UInt8: return kUnsignedByte;
    case DeclaredType::Int16: return kShort;
    case DeclaredType::UInt16: return kUnsignedShort;
    case DeclaredType::UInt32: return kUnsignedInt;
    case DeclaredType::Float32: return kFloat;
    default: return std::nullopt;
  }
}

std::optional<DeclaredType> declared_from_component(int component_type) {
  switch (component_type) {
    case kByte: return DeclaredType::Int8;
    case kUnsignedByte: return DeclaredType::UInt8;
    case kShort: return DeclaredType::Int16;
    case kUnsignedShort: return DeclaredType::UInt16;
    case kUnsignedInt: return DeclaredType::UInt32;
    case kFloat: return DeclaredType::Float32;
    default: return std::nullopt;
  }
}

std::size_t component_size(int component_type) {
  switch (component_type) {
    case kByte:
    case kUnsignedByte: return 1;
    case kShort:
    case kUnsignedShort: return 2;
    default: return 4;
  }
}

std::size_t type_components(std::string_view type) {
  if (type == "SCALAR") return 1;
  if (type == "VEC2") return 2;
  if (type == "VEC3") return 3;
  if (type == "VEC4") return 4;
  if (type == "MAT2") return 4;
  if (type == "MAT3") return 9;
  if (type == "MAT4") return 16;
  return 0;
}

// Fields wider than VEC4 are exposed to glTF as flat SCALAR runs.
std::pair<std::string, std::size_t> accessor_shape(std::size_t dims, std::size_t elements) {
  switch (dims) {
    case 1: return {"SCALAR", elements};
    case 2: return {"VEC2", elements};
    case 3: return {"VEC3", elements};
    case 4: return {"VEC4", elements};
    default: return {"SCALAR", elements * dims};
  }
}

class Builder {
 public:
  std::size_t add_view(std::span<const std::uint8_t> bytes) {
    while (buffer_.size() % 4 != 0) buffer_.push_back(0);
    Json view = Json::object();
    view["buffer"] = 0;
    view["byteOffset"] = buffer_.size();
    view["byteLength"] = bytes.size();
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
    views_.push_back(std::move(view));
    return views_.size() - 1;
  }

  std::size_t add_accessor(Json accessor) {
    accessors_.push_back(std::move(accessor));
    return accessors_.size() - 1;
  }

  Json compressed_extension(const codec::CompressedAttribute& ca) {
    Json ext = Json::object();
    ext["version"] = kExtensionVersion;
    ext["bufferView"] = add_view(ca.payload);
    Json stages = Json::array();
    for (auto s : ca.stages) stages.push_back(std::string(codec::to_string(s)));
    ext["stages"] = std::move(stages);
    ext["bits"] = ca.params.bits;
    ext["min_values"] = ca.params.min_values;
    ext["max_values"] = ca.params.max_values;
    ext["count"] = ca.params.count;
    ext["components"] = ca.params.components;
    ext["declared_type"] = std::string(to_string(ca.declared_type));
    used_compression_ = true;
    return ext;
  }

  bool used_compression() const { return used_compression_; }
  std::vector<std::uint8_t>& buffer() { return buffer_; }
  Json& views() { return views_; }
  Json& accessors() { return accessors_; }

 private:
  std::vector<std::uint8_t> buffer_;
  Json views_ = Json::array();
  Json accessors_ = Json::array();
  bool used_compression_ = false;
};

std::size_t add_field(Builder& b, const AttributeField& f, const std::optional<codec::CodecConfig>& config) {
  const std::size_t elements = f.element_count();
  const auto [type, count] = accessor_shape(f.dims, elements);
  Json accessor = Json::object();
  const auto native = gltf_component_type(f.declared_type);
  if (config) {
    const auto ca = codec::encode_attribute(f.values, f.dims, *config, f.declared_type);
    accessor["componentType"] = native.value_or(kFloat);
    accessor["count"] = count;
    accessor["type"] = type;
    accessor["extensions"][kCompressedExtension] = b.compressed_extension(ca);
  } else if (native) {
    const auto raw = codec::encode_raw(f.values, f.dims, f.declared_type);
    accessor["bufferView"] = b.add_view(raw.payload);
    accessor["componentType"] = *native;
    accessor["count"] = count;
    accessor["type"] = type;
  } else {
    // int32/int64/uint64/float64 have no glTF component type; keep them
    // verbatim behind the extension (empty stage list).
    const auto raw = codec::encode_raw(f.values, f.dims, f.declared_type);
    accessor["componentType"] = kFloat;
    accessor["count"] = count;
    accessor["type"] = type;
    accessor["extensions"][kCompressedExtension] = b.compressed_extension(raw);
  }
  return b.add_accessor(std::move(accessor));
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::CorruptStream, "TKO: " + what); }

std::span<const std::uint8_t> view_bytes(const TrakoDocument& doc, std::size_t view_index) {
  const Json& views = doc.json.at("bufferViews");
  if (view_index >= views.size()) corrupt("bufferView " + std::to_string(view_index) + " does not exist");
  const Json& view = views.at(view_index);
  if (view.value("buffer", 0) != 0) corrupt("only buffer 0 is supported");
  const auto offset = view.value("byteOffset", std::size_t{0});
  const auto length = view.at("byteLength").get<std::size_t>();
  if (offset > doc.buffer.size() || length > doc.buffer.size() - offset) {
    corrupt("bufferView " + std::to_string(view_index) + " exceeds the buffer");
  }
  return std::span<const std::uint8_t>(doc.buffer).subspan(offset, length);
}

codec::CompressedAttribute read_extension(const TrakoDocument& doc, const Json& ext) {
  if (ext.value("version", 0) != kExtensionVersion) {
    throw Error(Errc::UnsupportedExtensionVersion,
                "TKO: TRAKO_compressed version " + ext.value("version", Json(0)).dump() + " is not supported");
  }
  codec::CompressedAttribute ca;
  for (const auto& s : ext.at("stages")) {
    const auto stage = codec::parse_stage(s.get<std::string>());
    if (!stage) corrupt("unknown codec stage " + s.dump());
    ca.stages.push_back(*stage);
  }
  ca.params.bits = ext.at("bits").get<int>();
  ca.params.min_values = ext.at("min_values").get<std::vector<double>>();
  ca.params.max_values = ext.at("max_values").get<std::vector<double>>();
  ca.params.count = ext.at("count").get<std::size_t>();
  ca.params.components = ext.at("components").get<std::size_t>();
  const auto declared = parse_declared_type(ext.at("declared_type").get<std::string>());
  if (!declared) corrupt("unknown declared_type " + ext.at("declared_type").dump());
  ca.declared_type = *declared;
  const auto bytes = view_bytes(doc, ext.at("bufferView").get<std::size_t>());
  ca.payload.assign(bytes.begin(), bytes.end());
  return ca;
}

const Json& accessor_at(const TrakoDocument& doc, std::size_t index) {
  const Json& accessors = doc.json.at("accessors");
  if (index >= accessors.size()) corrupt("accessor " + std::to_string(index) + " does not exist");
  return accessors.at(index);
}

const Json* compressed_ext(const Json& accessor) {
  if (!accessor.contains("extensions")) return nullptr;
  const Json& exts = accessor.at("extensions");
  if (!exts.contains(kCompressedExtension)) return nullptr;
  return &exts.at(kCompressedExtension);
}

struct Loaded {
  std::vector<double> values;
  DeclaredType declared_type;
};

Loaded load_accessor(const TrakoDocument& doc, std::size_t index, std::size_t expected_values) {
  const Json& accessor = accessor_at(doc, index);
  Loaded out;
  if (const Json* ext = compressed_ext(accessor)) {
    const auto ca = read_extension(doc, *ext);
    out.values = codec::decode_attribute(ca);
    out.declared_type = ca.declared_type;
  } else {
    const int component = accessor.at("componentType").get<int>();
    const auto declared = declared_from_component(component);
    if (!declared) corrupt("accessor " + std::to_string(index) + " has unsupported componentType");
    const auto count = accessor.at("count").get<std::size_t>();
    const auto components = type_components(accessor.at("type").get<std::string>());
    codec::CompressedAttribute raw;
    raw.declared_type = *declared;
    raw.params.components = 1;
    raw.params.count = count * components;
    raw.params.min_values = {0.0};
    raw.params.max_values = {0.0};
    if (raw.params.count > 0) {
      const auto bytes = view_bytes(doc, accessor.at("bufferView").get<std::size_t>());
      const std::size_t need = raw.params.count * byte_size(*declared);
      if (bytes.size() < need) corrupt("accessor " + std::to_string(index) + " overruns its bufferView");
      raw.payload.assign(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(need));
    }
    out.values = codec::decode_attribute(raw);
    out.declared_type = *declared;
  }
  if (out.values.size() != expected_values) {
    throw Error(Errc::LengthMismatch, "TKO: accessor " + std::to_string(index) + " holds " +
                                          std::to_string(out.values.size()) + " values, expected " +
                                          std::to_string(expected_values));
  }
  return out;
}

std::vector<std::uint64_t> load_offsets(const TrakoDocument& doc, std::size_t index) {
  const Json& accessor = accessor_at(doc, index);
  if (const Json* ext = compressed_ext(accessor)) {
    const auto ca = read_extension(doc, *ext);
    if (ca.stages.empty()) {
      const auto values = codec::decode_attribute(ca);
      return {values.begin(), values.end()};
    }
    return codec::decode_offsets(ca);
  }
  const auto count = accessor.at("count").get<std::size_t>();
  const auto values = load_accessor(doc, index, count).values;
  return {values.begin(), values.end()};
}

Tractogram parse_impl(const TrakoDocument& doc) {
  const Json& root = doc.json;
  if (!root.is_object() || !root.contains("meshes") || root.at("meshes").empty()) {
    throw Error(Errc::NotATrakoFile, "TKO: document has no mesh");
  }
  const Json& mesh = root.at("meshes").at(0);
  if (!mesh.contains("extensions") || !mesh.at("extensions").contains(kTractogramExtension)) {
    throw Error(Errc::NotATrakoFile, "TKO: mesh lacks the TRAKO_tractogram extension");
  }
  const Json& ext = mesh.at("extensions").at(kTractogramExtension);
  if (ext.value("version", 0) != kExtensionVersion) {
    throw Error(Errc::UnsupportedExtensionVersion,
                "TKO: TRAKO_tractogram version " + ext.value("version", Json(0)).dump() + " is not supported");
  }

  Tractogram t;
  t.offsets = load_offsets(doc, ext.at("offsets").get<std::size_t>());
  if (t.offsets.empty()) corrupt("offsets accessor is empty");
  const std::size_t vertices = t.offsets.back();
  const std::size_t streamlines = t.offsets.size() - 1;

  const auto position = mesh.at("primitives").at(0).at("attributes").at("POSITION").get<std::size_t>();
  t.coords = load_accessor(doc, position, 3 * vertices).values;

  auto load_fields = [&](const char* key, std::size_t elements, OrderedMap<AttributeField>& out) {
    if (!ext.contains(key)) return;
    for (const auto& [name, entry] : ext.at(key).items()) {
      AttributeField f;
      f.dims = entry.at("dims").get<std::size_t>();
      if (f.dims == 0) corrupt("field '" + name + "' has dims 0");
      auto loaded = load_accessor(doc, entry.at("accessor").get<std::size_t>(), elements * f.dims);
      f.values = std::move(loaded.values);
      const auto declared = parse_declared_type(entry.value("declared_type", std::string(to_string(loaded.declared_type))));
      if (!declared) corrupt("field '" + name + "' has an unknown declared_type");
      f.declared_type = *declared;
      out.set(name, std::move(f));
    }
  };
  load_fields("vertex_scalars", vertices, t.vertex_scalars);
  load_fields("fiber_properties", streamlines, t.fiber_properties);

  if (ext.contains("metadata")) {
    for (const auto& [key, value] : ext.at("metadata").items()) t.metadata.set(key, value.get<std::string>());
  }
  t.space = ext.value("space", std::string(space::kUnknown));

  const auto violations = validate(t);
  if (!violations.empty()) corrupt("restored tractogram is inconsistent: " + violations.front().detail);
  return t;
}

void pad_to_4(std::vector<std::uint8_t>& out, std::uint8_t fill) {
  while (out.size() % 4 != 0) out.push_back(fill);
}

constexpr std::array<char, 64> kBase64Alphabet = {
    'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'N', 'O', 'P', 'Q', 'R', 'S', 'T', 'U', 'V',
    'W', 'X', 'Y', 'Z', 'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r',
    's', 't', 'u', 'v', 'w', 'x', 'y', 'z', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9', '+', '/'};

}  // namespace

TrakoDocument build_document(const Tractogram& t, const std::optional<codec::CodecConfig>& config) {
  require_valid(t);
  if (config) config->check();

  Builder b;
  const std::size_t vertices = t.vertex_count();

  // POSITION
  std::size_t position = 0;
  {
    Json accessor = Json::object();
    std::vector<double> lo(3, 0.0), hi(3, 0.0);
    if (const auto s = stats(t); s.bbox) {
      for (int c = 0; c < 3; ++c) {
        lo[c] = s.bbox->min[c];
        hi[c] = s.bbox->max[c];
      }
    }
    if (config) {
      const auto ca = codec::encode_attribute(t.coords, 3, *config, DeclaredType::Float32);
      accessor["componentType"] = kFloat;
      accessor["count"] = vertices;
      accessor["type"] = "VEC3";
      accessor["min"] = lo;
      accessor["max"] = hi;
      accessor["extensions"][kCompressedExtension] = b.compressed_extension(ca);
    } else if (!std::all_of(t.coords.begin(), t.coords.end(),
                            [](double v) { return static_cast<double>(static_cast<float>(v)) == v; })) {
      // Coordinates beyond float32 precision stay float64 behind the extension.
      accessor["componentType"] = kFloat;
      accessor["count"] = vertices;
      accessor["type"] = "VEC3";
      accessor["min"] = lo;
      accessor["max"] = hi;
      accessor["extensions"][kCompressedExtension] =
          b.compressed_extension(codec::encode_raw(t.coords, 3, DeclaredType::Float64));
    } else {
      const auto raw = codec::encode_raw(t.coords, 3, DeclaredType::Float32);
      // Bounds must match the stored float32 values exactly.
      for (int c = 0; c < 3; ++c) {
        lo[c] = static_cast<float>(lo[c]);
        hi[c] = static_cast<float>(hi[c]);
      }
      accessor["bufferView"] = b.add_view(raw.payload);
      accessor["componentType"] = kFloat;
      accessor["count"] = vertices;
      accessor["type"] = "VEC3";
      accessor["min"] = lo;
      accessor["max"] = hi;
    }
    position = b.add_accessor(std::move(accessor));
  }

  // Streamline offsets (always lossless).
  std::size_t offsets = 0;
  {
    Json accessor = Json::object();
    accessor["componentType"] = kUnsignedInt;
    accessor["count"] = t.offsets.size();
    accessor["type"] = "SCALAR";
    if (config) {
      accessor["extensions"][kCompressedExtension] =
          b.compressed_extension(codec::encode_offsets(t.offsets, config->compression_level));
    } else if (t.offsets.back() <= std::numeric_limits<std::uint32_t>::max()) {
      std::vector<double> values(t.offsets.begin(), t.offsets.end());
      accessor = Json::object();
      accessor["bufferView"] = b.add_view(codec::encode_raw(values, 1, DeclaredType::UInt32).payload);
      accessor["componentType"] = kUnsignedInt;
      accessor["count"] = t.offsets.size();
      accessor["type"] = "SCALAR";
    } else {
      std::vector<double> values(t.offsets.begin(), t.offsets.end());
      accessor["extensions"][kCompressedExtension] =
          b.compressed_extension(codec::encode_raw(values, 1, DeclaredType::UInt64));
    }
    offsets = b.add_accessor(std::move(accessor));
  }

  auto field_map = [&](const OrderedMap<AttributeField>& fields) {
    Json map = Json::object();
    for (const auto& [name, f] : fields) {
      Json entry = Json::object();
      entry["accessor"] = add_field(b, f, config);
      entry["dims"] = f.dims;
      entry["declared_type"] = std::string(to_string(f.declared_type));
      map[name] = std::move(entry);
    }
    return map;
  };

  Json tractogram_ext = Json::object();
  tractogram_ext["version"] = kExtensionVersion;
  tractogram_ext["offsets"] = offsets;
  tractogram_ext["vertex_scalars"] = field_map(t.vertex_scalars);
  tractogram_ext["fiber_properties"] = field_map(t.fiber_properties);
  Json metadata = Json::object();
  for (const auto& [key, value] : t.metadata) metadata[key] = value;
  tractogram_ext["metadata"] = std::move(metadata);
  tractogram_ext["space"] = t.space;
  if (config) {
    Json encoding = Json::object();
    encoding["bits"] = config->bits;
    encoding["compression_level"] = config->compression_level;
    encoding["prediction"] = config->prediction == codec::Prediction::Delta ? "delta" : "none";
    encoding["lossless_integers"] = config->lossless_integers;
    tractogram_ext["encoding"] = std::move(encoding);
  }

  TrakoDocument doc;
  Json& root = doc.json;
  root = Json::object();
  root["asset"] = Json{{"version", "2.0"}, {"generator", "trako"}};
  Json used = Json::array();
  if (b.used_compression()) used.push_back(kCompressedExtension);
  used.push_back(kTractogramExtension);
  root["extensionsUsed"] = std::move(used);
  if (!b.buffer().empty()) {
    root["buffers"] = Json::array({Json{{"byteLength", b.buffer().size()}}});
    root["bufferViews"] = std::move(b.views());
  }
  root["accessors"] = std::move(b.accessors());
  Json primitive = Json::object();
  primitive["attributes"] = Json{{"POSITION", position}};
  primitive["mode"] = 0;  // POINTS: valid for any vertex count
  Json mesh = Json::object();
  mesh["primitives"] = Json::array({std::move(primitive)});
  mesh["extensions"][kTractogramExtension] = std::move(tractogram_ext);
  root["meshes"] = Json::array({std::move(mesh)});
  doc.buffer = std::move(b.buffer());
  return doc;
}

Tractogram parse_document(const TrakoDocument& doc) {
  try {
    return parse_impl(doc);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptStream, std::string("TKO: malformed container structure: ") + e.what());
  }
}

std::optional<codec::CodecConfig> document_config(const TrakoDocument& doc) {
  try {
    const Json& ext = doc.json.at("meshes").at(0).at("extensions").at(kTractogramExtension);
    if (!ext.contains("encoding")) return std::nullopt;
    const Json& enc = ext.at("encoding");
    codec::CodecConfig cfg;
    cfg.bits = enc.value("bits", cfg.bits);
    cfg.compression_level = enc.value("compression_level", cfg.compression_level);
    cfg.prediction = enc.value("prediction", std::string("delta")) == "none" ? codec::Prediction::None
                                                                             : codec::Prediction::Delta;
    cfg.lossless_integers = enc.value("lossless_integers", true);
    return cfg;
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::NotATrakoFile, "TKO: mesh lacks the TRAKO_tractogram extension");
  }
}

std::vector<std::uint8_t> write_tko_json(const TrakoDocument& doc) {
  Json root = doc.json;
  if (!doc.buffer.empty()) {
    root.at("buffers").at(0)["uri"] = std::string(kDataUriPrefix) + base64_encode(doc.buffer);
  }
  const std::string text = root.dump();
  return {text.begin(), text.end()};
}

TrakoDocument read_tko_json(std::span<const std::uint8_t> bytes) {
  TrakoDocument doc;
  doc.json = Json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.json.is_discarded() || !doc.json.is_object()) {
    throw Error(Errc::MalformedJson, "TKO: file is not a JSON object");
  }
  if (doc.json.contains("buffers")) {
    Json& buffers = doc.json.at("buffers");
    if (!buffers.is_array() || buffers.size() != 1) {
      throw Error(Errc::CorruptStream, "TKO: exactly one buffer is supported");
    }
    Json& buffer = buffers.at(0);
    if (!buffer.contains("uri") || !buffer.at("uri").is_string()) {
      throw Error(Errc::CorruptStream, "TKO: buffer has no embedded data URI");
    }
    const std::string uri = buffer.at("uri").get<std::string>();
    const auto comma = uri.find(',');
    if (!uri.starts_with("data:") || comma == std::string::npos ||
        uri.substr(0, comma).find(";base64") == std::string::npos) {
      throw Error(Errc::CorruptStream, "TKO: external buffer URIs are not supported");
    }
    doc.buffer = base64_decode(std::string_view(uri).substr(comma + 1));
    if (!buffer.contains("byteLength") || buffer.at("byteLength") != doc.buffer.size()) {
      throw Error(Errc::ChunkLengthMismatch, "TKO: buffer byteLength disagrees with its data URI");
    }
    buffer.erase("uri");
  }
  return doc;
}

std::vector<std::uint8_t> write_tko_binary(const TrakoDocument& doc) {
  const std::string text = doc.json.dump();
  std::vector<std::uint8_t> json_chunk(text.begin(), text.end());
  pad_to_4(json_chunk, ' ');
  std::vector<std::uint8_t> bin_chunk(doc.buffer);
  pad_to_4(bin_chunk, 0);

  std::size_t total = 12 + 8 + json_chunk.size();
  if (!doc.buffer.empty()) total += 8 + bin_chunk.size();
  if (total > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::InvalidArgument, "TKO: document exceeds the 4 GiB GLB limit");
  }

  std::vector<std::uint8_t> out;
  out.reserve(total);
  detail::store(kGlbMagic, kLE, out);
  detail::store(std::uint32_t{2}, kLE, out);
  detail::store(static_cast<std::uint32_t>(total), kLE, out);
  detail::store(static_cast<std::uint32_t>(json_chunk.size()), kLE, out);
  detail::store(kChunkJson, kLE, out);
  out.insert(out.end(), json_chunk.begin(), json_chunk.end());
  if (!doc.buffer.empty()) {
    detail::store(static_cast<std::uint32_t>(bin_chunk.size()), kLE, out);
    detail::store(kChunkBin, kLE, out);
    out.insert(out.end(), bin_chunk.begin(), bin_chunk.end());
  }
  return out;
}

TrakoDocument read_tko_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw Error(Errc::TruncatedFile, "GLB: file shorter than its 12-byte header", bytes.size());
  if (detail::load<std::uint32_t>(bytes.data(), kLE) != kGlbMagic) {
    throw Error(Errc::BadMagic, "GLB: missing 'glTF' magic at byte offset 0", 0);
  }
  const auto version = detail::load<std::uint32_t>(bytes.data() + 4, kLE);
  if (version != 2) throw Error(Errc::BadMagic, "GLB: unsupported container version " + std::to_string(version), 4);
  const auto total = detail::load<std::uint32_t>(bytes.data() + 8, kLE);
  if (total > bytes.size()) {
    throw Error(Errc::TruncatedFile, "GLB: header declares " + std::to_string(total) + " bytes, file has " +
                                         std::to_string(bytes.size()),
                bytes.size());
  }
  if (total < bytes.size()) {
    throw Error(Errc::ChunkLengthMismatch, "GLB: trailing bytes after the declared length", total);
  }

  std::size_t pos = 12;
  auto read_chunk = [&](std::uint32_t& type) {
    if (pos + 8 > bytes.size()) throw Error(Errc::TruncatedFile, "GLB: truncated chunk header", pos);
    const auto length = detail::load<std::uint32_t>(bytes.data() + pos, kLE);
    type = detail::load<std::uint32_t>(bytes.data() + pos + 4, kLE);
    pos += 8;
    if (length > bytes.size() - pos) {
      throw Error(Errc::ChunkLengthMismatch, "GLB: chunk length " + std::to_string(length) + " overruns the file",
                  pos - 8);
    }
    const auto chunk = bytes.subspan(pos, length);
    pos += length;
    return chunk;
  };

  std::uint32_t type = 0;
  const auto json_chunk = read_chunk(type);
  if (type != kChunkJson) throw Error(Errc::ChunkLengthMismatch, "GLB: first chunk is not JSON", 16);
  TrakoDocument doc;
  doc.json = Json::parse(json_chunk.begin(), json_chunk.end(), nullptr, false);
  if (doc.json.is_discarded() || !doc.json.is_object()) {
    throw Error(Errc::MalformedJson, "GLB: JSON chunk is not a JSON object", 20);
  }
  if (pos < bytes.size()) {
    const auto bin = read_chunk(type);
    if (type != kChunkBin) throw Error(Errc::ChunkLengthMismatch, "GLB: second chunk is not BIN");
    std::size_t length = bin.size();
    try {
      length = doc.json.at("buffers").at(0).at("byteLength").get<std::size_t>();
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::CorruptStream, "GLB: BIN chunk present but buffers[0].byteLength missing");
    }
    if (length > bin.size() || bin.size() - length > 3) {
      throw Error(Errc::ChunkLengthMismatch, "GLB: BIN chunk length disagrees with buffers[0].byteLength");
    }
    doc.buffer.assign(bin.begin(), bin.begin() + static_cast<std::ptrdiff_t>(length));
  }
  if (pos != bytes.size()) throw Error(Errc::ChunkLengthMismatch, "GLB: unexpected extra chunks", pos);
  return doc;
}

TrakoDocument read_tko(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "glTF", 4) == 0) return read_tko_binary(bytes);
  return read_tko_json(bytes);
}

std::vector<std::string> check_gltf(const TrakoDocument& doc) {
  std::vector<std::string> issues;
  const Json& root = doc.json;
  try {
    if (!root.contains("asset") || root.at("asset").value("version", std::string()) != "2.0") {
      issues.push_back("asset.version must be \"2.0\"");
    }
    std::vector<std::size_t> buffer_lengths;
    if (root.contains("buffers")) {
      for (const auto& buffer : root.at("buffers")) {
        const auto length = buffer.at("byteLength").get<std::size_t>();
        if (length < 1) issues.push_back("buffer byteLength must be >= 1");
        buffer_lengths.push_back(length);
      }
      if (!buffer_lengths.empty() && buffer_lengths[0] != doc.buffer.size()) {
        issues.push_back("buffers[0].byteLength does not match the binary payload");
      }
    }
    std::vector<std::size_t> view_lengths;
    if (root.contains("bufferViews")) {
      std::size_t i = 0;
      for (const auto& view : root.at("bufferViews")) {
        const auto buffer = view.at("buffer").get<std::size_t>();
        const auto offset = view.value("byteOffset", std::size_t{0});
        const auto length = view.at("byteLength").get<std::size_t>();
        if (length < 1) issues.push_back("bufferViews[" + std::to_string(i) + "].byteLength must be >= 1");
        if (buffer >= buffer_lengths.size()) {
          issues.push_back("bufferViews[" + std::to_string(i) + "] references a missing buffer");
        } else if (offset + length > buffer_lengths[buffer]) {
          issues.push_back("bufferViews[" + std::to_string(i) + "] exceeds its buffer");
        }
        view_lengths.push_back(length);
        ++i;
      }
    }
    std::size_t i = 0;
    const auto used = root.value("extensionsUsed", Json::array());
    auto declared = [&](std::string_view name) { return std::find(used.begin(), used.end(), name) != used.end(); };
    for (const auto& accessor : root.value("accessors", Json::array())) {
      const std::string where = "accessors[" + std::to_string(i++) + "]";
      const auto count = accessor.at("count").get<std::size_t>();
      const int component = accessor.at("componentType").get<int>();
      const auto components = type_components(accessor.at("type").get<std::string>());
      if (count < 1) issues.push_back(where + ".count must be >= 1");
      if (components == 0) issues.push_back(where + ".type is invalid");
      if (component != kByte && component != kUnsignedByte && component != kShort && component != kUnsignedShort &&
          component != kUnsignedInt && component != kFloat) {
        issues.push_back(where + ".componentType is invalid");
      }
      if (accessor.contains("bufferView")) {
        const auto view = accessor.at("bufferView").get<std::size_t>();
        const auto offset = accessor.value("byteOffset", std::size_t{0});
        if (view >= view_lengths.size()) {
          issues.push_back(where + " references a missing bufferView");
        } else {
          const auto need = offset + count * components * component_size(component);
          if (need > view_lengths[view]) issues.push_back(where + " does not fit its bufferView");
          const auto base = root.at("bufferViews").at(view).value("byteOffset", std::size_t{0});
          if ((base + offset) % component_size(component) != 0) issues.push_back(where + " is misaligned");
        }
      }
      if (accessor.contains("extensions")) {
        for (const auto& [name, value] : accessor.at("extensions").items()) {
          if (!declared(name)) issues.push_back(where + " uses undeclared extension " + name);
          if (name == kCompressedExtension) {
            const auto view = value.at("bufferView").get<std::size_t>();
            if (view >= view_lengths.size()) issues.push_back(where + " extension references a missing bufferView");
          }
        }
      }
    }
    const auto accessor_count = root.value("accessors", Json::array()).size();
    for (const auto& mesh : root.value("meshes", Json::array())) {
      for (const auto& primitive : mesh.at("primitives")) {
        const auto& attributes = primitive.at("attributes");
        if (attributes.empty()) issues.push_back("primitive has no attributes");
        if (attributes.contains("POSITION")) {
          const auto index = attributes.at("POSITION").get<std::size_t>();
          if (index >= accessor_count) {
            issues.push_back("POSITION references a missing accessor");
          } else {
            const auto& accessor = root.at("accessors").at(index);
            if (!accessor.contains("min") || !accessor.contains("max") || accessor.at("min").size() != 3 ||
                accessor.at("max").size() != 3) {
              issues.push_back("POSITION accessor requires 3-component min and max");
            }
          }
        }
      }
      if (mesh.contains("extensions")) {
        for (const auto& [name, value] : mesh.at("extensions").items()) {
          if (!declared(name)) issues.push_back("mesh uses undeclared extension " + name);
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    issues.push_back(std::string("malformed glTF structure: ") + e.what());
  }
  return issues;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += kBase64Alphabet[(n >> 6) & 63];
    out += kBase64Alphabet[n & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t n = bytes[i] << 16;
    if (rest == 2) n |= bytes[i + 1] << 8;
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += rest == 2 ? kBase64Alphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  static const auto table = [] {
    std::array<std::int8_t, 256> t{};
    t.fill(-1);
    for (std::size_t i = 0; i < kBase64Alphabet.size(); ++i) t[static_cast<unsigned char>(kBase64Alphabet[i])] = static_cast<std::int8_t>(i);
    return t;
  }();
  if (text.size() % 4 != 0) throw Error(Errc::CorruptStream, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    std::uint32_t n = 0;
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        ++pad;
        n <<= 6;
        continue;
      }
      const auto v = table[static_cast<unsigned char>(c)];
      if (v < 0 || pad > 0) throw Error(Errc::CorruptStream, "invalid base64 character at position " + std::to_string(i + k));
      n = (n << 6) | static_cast<std::uint32_t>(v);
    }
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
  }
  return out;
}

}  // namespace trako::container
