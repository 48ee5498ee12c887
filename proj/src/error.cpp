#include "trako/error.hpp"

namespace trako {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidTractogram: return "InvalidTractogram";
    case Errc::IoError: return "IoError";
    case Errc::UnknownFormat: return "UnknownFormat";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::TruncatedBody: return "TruncatedBody";
    case Errc::UnsupportedDatatype: return "UnsupportedDatatype";
    case Errc::BadMagic: return "BadMagic";
    case Errc::HeaderSizeMismatch: return "HeaderSizeMismatch";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::UnsupportedDataset: return "UnsupportedDataset";
    case Errc::UnsupportedSection: return "UnsupportedSection";
    case Errc::NonFloatPoints: return "NonFloatPoints";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::OutOfRangeCode: return "OutOfRangeCode";
    case Errc::TruncatedVarint: return "TruncatedVarint";
    case Errc::OverlongVarint: return "OverlongVarint";
    case Errc::CorruptStream: return "CorruptStream";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NotATrakoFile: return "NotATrakoFile";
    case Errc::UnsupportedExtensionVersion: return "UnsupportedExtensionVersion";
    case Errc::MalformedJson: return "MalformedJson";
    case Errc::ChunkLengthMismatch: return "ChunkLengthMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::ZeroOriginalSize: return "ZeroOriginalSize";
    case Errc::ZeroCompressedSize: return "ZeroCompressedSize";
    case Errc::TopologyMismatch: return "TopologyMismatch";
    case Errc::StreamlineCountMismatch: return "StreamlineCountMismatch";
    case Errc::FieldMismatch: return "FieldMismatch";
    case Errc::EmptyTractogram: return "EmptyTractogram";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> offset)
    : std::runtime_error(message), code_(code), offset_(offset) {}

}  // namespace trako
