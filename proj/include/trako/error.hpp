#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trako {

enum class Errc {
  InvalidArgument,
  InvalidTractogram,
  IoError,
  // io_formats
  UnknownFormat,
  MalformedHeader,
  TruncatedBody,
  UnsupportedDatatype,
  BadMagic,
  HeaderSizeMismatch,
  CountMismatch,
  UnsupportedDataset,
  UnsupportedSection,
  NonFloatPoints,
  // codec
  NonFiniteInput,
  OutOfRangeCode,
  TruncatedVarint,
  OverlongVarint,
  CorruptStream,
  LengthMismatch,
  // container
  NotATrakoFile,
  UnsupportedExtensionVersion,
  MalformedJson,
  ChunkLengthMismatch,
  TruncatedFile,
  // metrics
  ZeroOriginalSize,
  ZeroCompressedSize,
  TopologyMismatch,
  StreamlineCountMismatch,
  FieldMismatch,
  EmptyTractogram,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library. `offset()` is set when the error can
/// be pinned to a byte position in the input.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::size_t> offset_;
};

}  // namespace trako
