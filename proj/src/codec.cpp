#include "trako/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "trako/error.hpp"

namespace trako::codec {

namespace {

// Integers up to 2^53 survive the trip through double exactly.
constexpr double kMaxExactInteger = 9007199254740992.0;

void require_finite(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(Errc::NonFiniteInput, "non-finite value at index " + std::to_string(i));
    }
  }
}

void check_params(const QuantizationParams& p, bool quantized) {
  if (p.components == 0) throw Error(Errc::CorruptStream, "attribute has zero components");
  if (p.min_values.size() != p.components || p.max_values.size() != p.components) {
    throw Error(Errc::CorruptStream, "min/max arrays do not match component count");
  }
  if (quantized) {
    if (p.bits < kMinBits || p.bits > kMaxBits) {
      throw Error(Errc::CorruptStream, "quantization bits " + std::to_string(p.bits) + " outside 1-31");
    }
    for (std::size_t c = 0; c < p.components; ++c) {
      if (!(p.min_values[c] <= p.max_values[c])) {
        throw Error(Errc::CorruptStream, "min exceeds max for component " + std::to_string(c));
      }
    }
  }
}

std::uint32_t quantize_one(double v, double lo, double range, double max_code) {
  if (range == 0.0) return 0;
  // std::round: halfway cases away from zero.
  const double q = std::round((v - lo) * max_code / range);
  return static_cast<std::uint32_t>(std::clamp(q, 0.0, max_code));
}

double dequantize_one(std::uint64_t code, double lo, double range, double max_code) {
  if (range == 0.0) return lo;
  return lo + static_cast<double>(code) * range / max_code;
}

bool integral_path_possible(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) {
    return std::trunc(v) == v && std::fabs(v) <= kMaxExactInteger;
  });
}

// Reads one varint starting at `pos`, advancing it.
std::uint64_t read_varint(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  const std::size_t start = pos;
  std::uint64_t value = 0;
  for (int shift = 0;; shift += 7) {
    if (pos >= bytes.size()) {
      throw Error(Errc::TruncatedVarint, "varint truncated at byte " + std::to_string(start), start);
    }
    const std::uint8_t b = bytes[pos++];
    if (shift == 63 && b > 1) {
      throw Error(Errc::OverlongVarint, "varint exceeds 64 bits at byte " + std::to_string(start), start);
    }
    value |= static_cast<std::uint64_t>(b & 0x7F) << shift;
    if ((b & 0x80) == 0) {
      if (b == 0 && shift > 0) {
        throw Error(Errc::OverlongVarint, "non-minimal varint at byte " + std::to_string(start), start);
      }
      return value;
    }
    if (shift == 63) {
      throw Error(Errc::OverlongVarint, "varint exceeds 10 bytes at byte " + std::to_string(start), start);
    }
  }
}

template <typename T>
void put_le(T value, std::vector<std::uint8_t>& out) {
  auto bits = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.insert(out.end(), bits.begin(), bits.end());
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::array<std::uint8_t, sizeof(T)> bits;
  std::memcpy(bits.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

std::vector<double> decode_raw(const CompressedAttribute& a) {
  const std::size_t n = a.params.count * a.params.components;
  const std::size_t width = byte_size(a.declared_type);
  if (a.payload.size() != n * width) {
    throw Error(Errc::LengthMismatch, "raw payload holds " + std::to_string(a.payload.size()) + " bytes, expected " +
                                          std::to_string(n * width));
  }
  std::vector<double> out(n);
  const std::uint8_t* p = a.payload.data();
  for (std::size_t i = 0; i < n; ++i, p += width) {
    switch (a.declared_type) {
      case DeclaredType::Int8: out[i] = static_cast<std::int8_t>(*p); break;
      case DeclaredType::UInt8: out[i] = *p; break;
      case DeclaredType::Int16: out[i] = get_le<std::int16_t>(p); break;
      case DeclaredType::UInt16: out[i] = get_le<std::uint16_t>(p); break;
      case DeclaredType::Int32: out[i] = get_le<std::int32_t>(p); break;
      case DeclaredType::UInt32: out[i] = get_le<std::uint32_t>(p); break;
      case DeclaredType::Int64: out[i] = static_cast<double>(get_le<std::int64_t>(p)); break;
      case DeclaredType::UInt64: out[i] = static_cast<double>(get_le<std::uint64_t>(p)); break;
      case DeclaredType::Float32: out[i] = get_le<float>(p); break;
      case DeclaredType::Float64: out[i] = get_le<double>(p); break;
    }
  }
  return out;
}

struct ZStream {
  z_stream s{};
  bool deflating;
  explicit ZStream(bool deflate_mode) : deflating(deflate_mode) {}
  ~ZStream() {
    if (deflating) {
      deflateEnd(&s);
    } else {
      inflateEnd(&s);
    }
  }
  ZStream(const ZStream&) = delete;
  ZStream& operator=(const ZStream&) = delete;
};

}  // namespace

double QuantizationParams::half_step(std::size_t c) const {
  return (max_values[c] - min_values[c]) / (2.0 * static_cast<double>(max_code()));
}

QuantizationParams make_params(std::span<const double> values, std::size_t components, int bits) {
  if (components == 0) throw Error(Errc::InvalidArgument, "components must be >= 1");
  if (values.size() % components != 0) {
    throw Error(Errc::LengthMismatch, "value count is not a multiple of the component count");
  }
  require_finite(values);
  QuantizationParams p;
  p.bits = bits;
  p.components = components;
  p.count = values.size() / components;
  p.min_values.assign(components, 0.0);
  p.max_values.assign(components, 0.0);
  if (p.count > 0) {
    for (std::size_t c = 0; c < components; ++c) {
      p.min_values[c] = p.max_values[c] = values[c];
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::size_t c = i % components;
      p.min_values[c] = std::min(p.min_values[c], values[i]);
      p.max_values[c] = std::max(p.max_values[c], values[i]);
    }
  }
  return p;
}

void CodecConfig::check() const {
  if (bits < kMinBits || bits > kMaxBits) {
    throw Error(Errc::InvalidArgument,
                "quantization bits " + std::to_string(bits) + " outside the allowed range 1-31");
  }
  if (compression_level < kMinLevel || compression_level > kMaxLevel) {
    throw Error(Errc::InvalidArgument,
                "compression level " + std::to_string(compression_level) + " outside the allowed range 0-10");
  }
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Quantize: return "quantize";
    case Stage::Delta: return "delta";
    case Stage::Zigzag: return "zigzag";
    case Stage::Varint: return "varint";
    case Stage::Deflate: return "deflate";
  }
  return "";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : {Stage::Quantize, Stage::Delta, Stage::Zigzag, Stage::Varint, Stage::Deflate}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

bool CompressedAttribute::has_stage(Stage s) const {
  return std::find(stages.begin(), stages.end(), s) != stages.end();
}

std::vector<std::uint32_t> quantize(std::span<const double> values, const QuantizationParams& params) {
  check_params(params, true);
  if (values.size() != params.count * params.components) {
    throw Error(Errc::LengthMismatch, "value count does not match params");
  }
  require_finite(values);
  const double max_code = params.max_code();
  std::vector<std::uint32_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t c = i % params.components;
    out[i] = quantize_one(values[i], params.min_values[c], params.max_values[c] - params.min_values[c], max_code);
  }
  return out;
}

std::vector<double> dequantize(std::span<const std::uint32_t> codes, const QuantizationParams& params) {
  check_params(params, true);
  const std::uint32_t max_code = params.max_code();
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] > max_code) {
      throw Error(Errc::OutOfRangeCode, "code " + std::to_string(codes[i]) + " exceeds 2^q - 1 at index " +
                                            std::to_string(i));
    }
    const std::size_t c = i % params.components;
    out[i] = dequantize_one(codes[i], params.min_values[c], params.max_values[c] - params.min_values[c], max_code);
  }
  return out;
}

std::vector<std::int64_t> delta_encode(std::span<const std::int64_t> values, std::size_t components) {
  std::vector<std::int64_t> out(values.begin(), values.end());
  for (std::size_t i = values.size(); i-- > components;) out[i] -= values[i - components];
  return out;
}

std::vector<std::int64_t> delta_decode(std::span<const std::int64_t> deltas, std::size_t components) {
  std::vector<std::int64_t> out(deltas.begin(), deltas.end());
  for (std::size_t i = components; i < out.size(); ++i) out[i] += out[i - components];
  return out;
}

void varint_append(std::uint64_t value, std::vector<std::uint8_t>& out) {
  while (value >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(value | 0x80));
    value >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(value));
}

std::vector<std::uint8_t> varint_encode(std::span<const std::uint64_t> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size());
  for (std::uint64_t v : values) varint_append(v, out);
  return out;
}

std::vector<std::uint64_t> varint_decode(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) out.push_back(read_varint(bytes, pos));
  return out;
}

int deflate_level(int compression_level) {
  return std::clamp(compression_level, 0, 9);
}

std::vector<std::uint8_t> deflate_stage(std::span<const std::uint8_t> bytes, int compression_level) {
  if (compression_level < kMinLevel || compression_level > kMaxLevel) {
    throw Error(Errc::InvalidArgument, "compression level outside 0-10");
  }
  if (compression_level == 0) return {bytes.begin(), bytes.end()};

  ZStream z(true);
  if (deflateInit2(&z.s, deflate_level(compression_level), Z_DEFLATED, -15, 9, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(Errc::CorruptStream, "deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&z.s, static_cast<uLong>(bytes.size())));
  // Feed in slices so payloads above 4 GiB still fit zlib's 32-bit counters.
  constexpr std::size_t kSlice = std::size_t{1} << 30;
  std::size_t in_pos = 0;
  std::size_t out_pos = 0;
  int rc = Z_OK;
  do {
    if (z.s.avail_in == 0 && in_pos < bytes.size()) {
      const std::size_t take = std::min(bytes.size() - in_pos, kSlice);
      z.s.next_in = const_cast<Bytef*>(bytes.data() + in_pos);
      z.s.avail_in = static_cast<uInt>(take);
      in_pos += take;
    }
    if (out_pos == out.size()) out.resize(out.size() * 2 + 64);
    z.s.next_out = out.data() + out_pos;
    z.s.avail_out = static_cast<uInt>(std::min(out.size() - out_pos, kSlice));
    const int flush = (in_pos == bytes.size() && z.s.avail_in == 0) ? Z_FINISH : Z_NO_FLUSH;
    rc = deflate(&z.s, flush);
    if (rc == Z_STREAM_ERROR) throw Error(Errc::CorruptStream, "deflate failed");
    out_pos = static_cast<std::size_t>(z.s.next_out - out.data());
  } while (rc != Z_STREAM_END);
  out.resize(out_pos);
  return out;
}

std::vector<std::uint8_t> inflate_stage(std::span<const std::uint8_t> bytes) {
  ZStream z(false);
  if (inflateInit2(&z.s, -15) != Z_OK) throw Error(Errc::CorruptStream, "inflateInit2 failed");
  std::vector<std::uint8_t> out(std::max<std::size_t>(bytes.size() * 3, 256));
  constexpr std::size_t kSlice = std::size_t{1} << 30;
  std::size_t in_pos = 0;
  std::size_t out_pos = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (z.s.avail_in == 0) {
      const std::size_t take = std::min(bytes.size() - in_pos, kSlice);
      z.s.next_in = const_cast<Bytef*>(bytes.data() + in_pos);
      z.s.avail_in = static_cast<uInt>(take);
      in_pos += take;
    }
    if (out_pos == out.size()) out.resize(out.size() * 2);
    z.s.next_out = out.data() + out_pos;
    z.s.avail_out = static_cast<uInt>(std::min(out.size() - out_pos, kSlice));
    const uInt before_in = z.s.avail_in;
    const uInt before_out = z.s.avail_out;
    rc = inflate(&z.s, Z_NO_FLUSH);
    out_pos = static_cast<std::size_t>(z.s.next_out - out.data());
    if (rc == Z_DATA_ERROR || rc == Z_NEED_DICT || rc == Z_MEM_ERROR || rc == Z_STREAM_ERROR) {
      throw Error(Errc::CorruptStream, std::string("inflate failed: ") + (z.s.msg ? z.s.msg : "corrupt data"));
    }
    const bool stalled = before_in == z.s.avail_in && before_out == z.s.avail_out;
    if (rc != Z_STREAM_END && stalled && in_pos == bytes.size() && z.s.avail_in == 0) {
      throw Error(Errc::CorruptStream, "deflate stream truncated");
    }
  }
  if (z.s.avail_in != 0 || in_pos != bytes.size()) {
    throw Error(Errc::CorruptStream, "trailing bytes after deflate stream");
  }
  out.resize(out_pos);
  return out;
}

CompressedAttribute encode_attribute(std::span<const double> values, std::size_t dims, const CodecConfig& config,
                                     DeclaredType declared_type) {
  config.check();
  CompressedAttribute out;
  out.declared_type = declared_type;
  out.params = make_params(values, dims, config.bits);

  const bool lossless = config.lossless_integers && is_integer(declared_type) && integral_path_possible(values);
  const bool delta = config.prediction == Prediction::Delta;
  const bool signed_values = delta || lossless;
  if (!lossless) out.stages.push_back(Stage::Quantize);
  if (delta) out.stages.push_back(Stage::Delta);
  if (signed_values) out.stages.push_back(Stage::Zigzag);
  out.stages.push_back(Stage::Varint);

  const auto& p = out.params;
  const double max_code = p.max_code();
  std::vector<std::int64_t> previous(dims, 0);
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t c = i % dims;
    const std::int64_t x =
        lossless ? static_cast<std::int64_t>(values[i])
                 : quantize_one(values[i], p.min_values[c], p.max_values[c] - p.min_values[c], max_code);
    std::int64_t d = x;
    if (delta) {
      d = x - previous[c];
      previous[c] = x;
    }
    varint_append(signed_values ? zigzag(d) : static_cast<std::uint64_t>(d), bytes);
  }

  if (config.compression_level > 0) {
    out.payload = deflate_stage(bytes, config.compression_level);
    out.stages.push_back(Stage::Deflate);
  } else {
    out.payload = std::move(bytes);
  }
  return out;
}

std::vector<double> decode_attribute(const CompressedAttribute& a) {
  const auto& p = a.params;
  const bool quantized = a.has_stage(Stage::Quantize);
  check_params(p, quantized);
  if (a.stages.empty()) return decode_raw(a);
  if (!a.has_stage(Stage::Varint)) throw Error(Errc::CorruptStream, "stage list lacks varint");

  std::vector<std::uint8_t> inflated;
  std::span<const std::uint8_t> bytes = a.payload;
  if (a.has_stage(Stage::Deflate)) {
    inflated = inflate_stage(a.payload);
    bytes = inflated;
  }

  const bool delta = a.has_stage(Stage::Delta);
  const bool zz = a.has_stage(Stage::Zigzag);
  const std::size_t n = p.count * p.components;
  const double max_code = quantized ? static_cast<double>(p.max_code()) : 0.0;
  std::vector<double> out(n);
  std::vector<std::int64_t> previous(p.components, 0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pos >= bytes.size()) {
      throw Error(Errc::LengthMismatch,
                  "payload holds " + std::to_string(i) + " values, expected " + std::to_string(n));
    }
    const std::uint64_t u = read_varint(bytes, pos);
    std::int64_t x = zz ? unzigzag(u) : static_cast<std::int64_t>(u);
    const std::size_t c = i % p.components;
    if (delta) {
      // Wrapping add: corrupt input must not trigger signed overflow.
      x = static_cast<std::int64_t>(static_cast<std::uint64_t>(x) + static_cast<std::uint64_t>(previous[c]));
      previous[c] = x;
    }
    if (quantized) {
      if (x < 0 || static_cast<std::uint64_t>(x) > p.max_code()) {
        throw Error(Errc::OutOfRangeCode, "decoded code out of range at index " + std::to_string(i));
      }
      out[i] = dequantize_one(static_cast<std::uint64_t>(x), p.min_values[c], p.max_values[c] - p.min_values[c],
                              max_code);
    } else {
      out[i] = static_cast<double>(x);
    }
  }
  if (pos != bytes.size()) {
    throw Error(Errc::LengthMismatch, "payload has trailing data after " + std::to_string(n) + " values");
  }
  return out;
}

CompressedAttribute encode_raw(std::span<const double> values, std::size_t dims, DeclaredType declared_type) {
  CompressedAttribute out;
  out.declared_type = declared_type;
  out.params = make_params(values, dims, kMaxBits);
  out.payload.reserve(values.size() * byte_size(declared_type));
  for (double v : values) {
    switch (declared_type) {
      case DeclaredType::Int8: put_le(static_cast<std::int8_t>(v), out.payload); break;
      case DeclaredType::UInt8: put_le(static_cast<std::uint8_t>(v), out.payload); break;
      case DeclaredType::Int16: put_le(static_cast<std::int16_t>(v), out.payload); break;
      case DeclaredType::UInt16: put_le(static_cast<std::uint16_t>(v), out.payload); break;
      case DeclaredType::Int32: put_le(static_cast<std::int32_t>(v), out.payload); break;
      case DeclaredType::UInt32: put_le(static_cast<std::uint32_t>(v), out.payload); break;
      case DeclaredType::Int64: put_le(static_cast<std::int64_t>(v), out.payload); break;
      case DeclaredType::UInt64: put_le(static_cast<std::uint64_t>(v), out.payload); break;
      case DeclaredType::Float32: put_le(static_cast<float>(v), out.payload); break;
      case DeclaredType::Float64: put_le(v, out.payload); break;
    }
  }
  return out;
}

CompressedAttribute encode_offsets(std::span<const std::uint64_t> offsets, int compression_level) {
  if (compression_level < kMinLevel || compression_level > kMaxLevel) {
    throw Error(Errc::InvalidArgument, "compression level outside 0-10");
  }
  CompressedAttribute out;
  out.declared_type = DeclaredType::UInt64;
  out.params.bits = kMaxBits;
  out.params.components = 1;
  out.params.count = offsets.size();
  out.params.min_values = {offsets.empty() ? 0.0 : static_cast<double>(offsets.front())};
  out.params.max_values = {offsets.empty() ? 0.0 : static_cast<double>(offsets.back())};
  out.stages = {Stage::Delta, Stage::Varint};

  std::vector<std::uint8_t> bytes;
  bytes.reserve(offsets.size() * 2);
  std::uint64_t previous = 0;
  for (std::uint64_t o : offsets) {
    if (o < previous) throw Error(Errc::InvalidArgument, "offsets must be nondecreasing");
    varint_append(o - previous, bytes);
    previous = o;
  }
  if (compression_level > 0) {
    out.payload = deflate_stage(bytes, compression_level);
    out.stages.push_back(Stage::Deflate);
  } else {
    out.payload = std::move(bytes);
  }
  return out;
}

std::vector<std::uint64_t> decode_offsets(const CompressedAttribute& a) {
  if (a.params.components != 1 || a.has_stage(Stage::Quantize) || a.has_stage(Stage::Zigzag) ||
      !a.has_stage(Stage::Varint)) {
    throw Error(Errc::CorruptStream, "offsets attribute has an unexpected stage list");
  }
  std::vector<std::uint8_t> inflated;
  std::span<const std::uint8_t> bytes = a.payload;
  if (a.has_stage(Stage::Deflate)) {
    inflated = inflate_stage(a.payload);
    bytes = inflated;
  }
  std::vector<std::uint64_t> out = varint_decode(bytes);
  if (out.size() != a.params.count) {
    throw Error(Errc::LengthMismatch, "offsets payload holds " + std::to_string(out.size()) + " entries, expected " +
                                          std::to_string(a.params.count));
  }
  if (a.has_stage(Stage::Delta)) {
    for (std::size_t i = 1; i < out.size(); ++i) out[i] += out[i - 1];
  }
  return out;
}

}  // namespace trako::codec
