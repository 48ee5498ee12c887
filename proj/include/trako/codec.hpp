#pragma once

// Attribute codec: quantize -> delta -> zigzag -> LEB128 varint -> raw DEFLATE.
//
// Payload layout: an optional raw-DEFLATE (RFC 1951) wrapper around a stream
// of LEB128 varints, one per component, elements in original order and
// components interleaved within each element. Each stage that was applied is
// listed in CompressedAttribute::stages, in encoding order.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "trako/model.hpp"

namespace trako::codec {

inline constexpr int kMinBits = 1;
inline constexpr int kMaxBits = 31;
inline constexpr int kMinLevel = 0;
inline constexpr int kMaxLevel = 10;

struct QuantizationParams {
  int bits = 14;
  std::vector<double> min_values;  // one per component
  std::vector<double> max_values;
  std::size_t components = 1;
  std::size_t count = 0;  // number of elements

  std::uint32_t max_code() const { return static_cast<std::uint32_t>((std::uint64_t{1} << bits) - 1); }
  /// Largest reconstruction error of component c: half a quantization step.
  double half_step(std::size_t c) const;
  bool operator==(const QuantizationParams&) const = default;
};

/// Computes per-component min/max over `values` (count * components entries).
QuantizationParams make_params(std::span<const double> values, std::size_t components, int bits);

enum class Prediction { Delta, None };

struct CodecConfig {
  int bits = 14;
  int compression_level = 10;
  Prediction prediction = Prediction::Delta;
  bool lossless_integers = true;

  /// Throws Errc::InvalidArgument when bits or level is out of range.
  void check() const;
};

enum class Stage { Quantize, Delta, Zigzag, Varint, Deflate };

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

struct CompressedAttribute {
  std::vector<std::uint8_t> payload;
  QuantizationParams params;
  std::vector<Stage> stages;  // empty: payload is raw little-endian declared_type values
  DeclaredType declared_type = DeclaredType::Float32;

  bool has_stage(Stage s) const;
  bool operator==(const CompressedAttribute&) const = default;
};

// Individual stages. encode_attribute/decode_attribute run a fused version of
// the same arithmetic; these are the reference forms.

std::vector<std::uint32_t> quantize(std::span<const double> values, const QuantizationParams& params);
std::vector<double> dequantize(std::span<const std::uint32_t> codes, const QuantizationParams& params);

std::vector<std::int64_t> delta_encode(std::span<const std::int64_t> values, std::size_t components);
std::vector<std::int64_t> delta_decode(std::span<const std::int64_t> deltas, std::size_t components);

constexpr std::uint64_t zigzag(std::int64_t s) {
  return (static_cast<std::uint64_t>(s) << 1) ^ static_cast<std::uint64_t>(s >> 63);
}
constexpr std::int64_t unzigzag(std::uint64_t u) {
  return static_cast<std::int64_t>(u >> 1) ^ -static_cast<std::int64_t>(u & 1);
}

void varint_append(std::uint64_t value, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> varint_encode(std::span<const std::uint64_t> values);
/// Rejects truncated input and non-minimal encodings.
std::vector<std::uint64_t> varint_decode(std::span<const std::uint8_t> bytes);

/// Maps the 0..10 compression level onto zlib: 0 off, 1..9 as is, 10 -> 9.
int deflate_level(int compression_level);
/// Raw DEFLATE; level 0 returns the input unchanged.
std::vector<std::uint8_t> deflate_stage(std::span<const std::uint8_t> bytes, int compression_level);
std::vector<std::uint8_t> inflate_stage(std::span<const std::uint8_t> bytes);

CompressedAttribute encode_attribute(std::span<const double> values, std::size_t dims, const CodecConfig& config,
                                     DeclaredType declared_type);
std::vector<double> decode_attribute(const CompressedAttribute& attribute);

/// Stores values verbatim as little-endian `declared_type` (no stages).
CompressedAttribute encode_raw(std::span<const double> values, std::size_t dims, DeclaredType declared_type);

/// Lossless: first entry verbatim, then streamline lengths, as varints.
CompressedAttribute encode_offsets(std::span<const std::uint64_t> offsets, int compression_level);
std::vector<std::uint64_t> decode_offsets(const CompressedAttribute& attribute);

}  // namespace trako::codec
