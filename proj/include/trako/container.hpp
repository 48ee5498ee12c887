#pragma once

// The .tko container: a glTF 2.0 document with one mesh whose single
// primitive carries the streamline vertices as POSITION. Streamline offsets,
// per-vertex scalars, per-streamline properties and metadata hang off the
// mesh-level TRAKO_tractogram extension; compressed accessors carry their
// codec parameters in a TRAKO_compressed extension that points at the
// payload's bufferView.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trako/codec.hpp"
#include "trako/model.hpp"

namespace trako::container {

inline constexpr std::string_view kTractogramExtension = "TRAKO_tractogram";
inline constexpr std::string_view kCompressedExtension = "TRAKO_compressed";
inline constexpr int kExtensionVersion = 1;

using Json = nlohmann::ordered_json;

/// glTF JSON (without buffer URIs) plus the single binary buffer it indexes.
struct TrakoDocument {
  Json json;
  std::vector<std::uint8_t> buffer;

  bool operator==(const TrakoDocument&) const = default;
};

/// Without a config every accessor is stored raw (little-endian, lossless).
TrakoDocument build_document(const Tractogram& t, const std::optional<codec::CodecConfig>& config);
Tractogram parse_document(const TrakoDocument& doc);

/// The codec settings a document was built with; nullopt when uncompressed.
std::optional<codec::CodecConfig> document_config(const TrakoDocument& doc);

/// Buffer embedded as a base64 data URI; compact, key order preserved.
std::vector<std::uint8_t> write_tko_json(const TrakoDocument& doc);
TrakoDocument read_tko_json(std::span<const std::uint8_t> bytes);

/// GLB: 12-byte header, space-padded JSON chunk, zero-padded BIN chunk.
std::vector<std::uint8_t> write_tko_binary(const TrakoDocument& doc);
TrakoDocument read_tko_binary(std::span<const std::uint8_t> bytes);

/// Dispatches on the leading bytes.
TrakoDocument read_tko(std::span<const std::uint8_t> bytes);

/// Structural glTF 2.0 checks (index ranges, byte ranges, alignment, required
/// fields). Returns one message per problem.
std::vector<std::string> check_gltf(const TrakoDocument& doc);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace trako::container
