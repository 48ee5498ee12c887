#include "trako/io_formats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>

#include "byte_io.hpp"
#include "trako/error.hpp"

namespace trako::io {

namespace {

bool starts_with(std::span<const std::uint8_t> bytes, std::string_view prefix) {
  return bytes.size() >= prefix.size() && std::memcmp(bytes.data(), prefix.data(), prefix.size()) == 0;
}

std::string lower_extension(std::string_view filename) {
  const auto dot = filename.rfind('.');
  if (dot == std::string_view::npos) return {};
  std::string ext(filename.substr(dot + 1));
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

// Third header line of a legacy VTK file, when it is within reach.
std::optional<FormatTag> vtk_mode(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), std::min<std::size_t>(bytes.size(), 4096));
  const auto first = text.find('\n');
  if (first == std::string_view::npos) return std::nullopt;
  const auto second = text.find('\n', first + 1);
  if (second == std::string_view::npos) return std::nullopt;
  auto third = detail::trim(text.substr(second + 1, text.find('\n', second + 1) - second - 1));
  std::string mode(third);
  for (char& c : mode) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (mode == "BINARY") return FormatTag::VTK_LEGACY_BINARY;
  if (mode == "ASCII") return FormatTag::VTK_LEGACY_ASCII;
  return std::nullopt;
}

bool looks_like_gltf_json(std::span<const std::uint8_t> bytes) {
  std::size_t i = 0;
  while (i < bytes.size() && std::isspace(bytes[i])) ++i;
  if (i >= bytes.size() || bytes[i] != '{') return false;
  const auto doc = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (!doc.is_discarded()) return doc.is_object() && doc.contains("asset");
  // Only a prefix may have been supplied; fall back on a textual probe.
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return text.find("\"asset\"") != std::string_view::npos;
}

}  // namespace

std::string_view to_string(FormatTag tag) {
  switch (tag) {
    case FormatTag::TCK: return "TCK";
    case FormatTag::TRK: return "TRK";
    case FormatTag::VTK_LEGACY_ASCII: return "VTK_LEGACY_ASCII";
    case FormatTag::VTK_LEGACY_BINARY: return "VTK_LEGACY_BINARY";
    case FormatTag::TKO_JSON: return "TKO_JSON";
    case FormatTag::TKO_BINARY: return "TKO_BINARY";
  }
  return "";
}

FormatTag detect_format(std::span<const std::uint8_t> bytes, std::string_view filename_hint) {
  if (starts_with(bytes, "mrtrix tracks")) return FormatTag::TCK;
  if (starts_with(bytes, "TRACK")) return FormatTag::TRK;
  if (starts_with(bytes, "# vtk DataFile")) {
    if (auto mode = vtk_mode(bytes)) return *mode;
    return FormatTag::VTK_LEGACY_ASCII;
  }
  if (starts_with(bytes, "glTF")) return FormatTag::TKO_BINARY;
  if (looks_like_gltf_json(bytes)) return FormatTag::TKO_JSON;

  const std::string ext = lower_extension(filename_hint);
  if (!bytes.empty()) {
    // Content did not match any rule; only an extension can break the tie.
    if (ext == "tck") return FormatTag::TCK;
    if (ext == "trk") return FormatTag::TRK;
    if (ext == "vtk") return FormatTag::VTK_LEGACY_ASCII;
    if (ext == "glb") return FormatTag::TKO_BINARY;
    if (ext == "tko" || ext == "gltf") return FormatTag::TKO_JSON;
  }
  throw Error(Errc::UnknownFormat, "unrecognized file format" +
                                       (filename_hint.empty() ? std::string() : " for '" + std::string(filename_hint) + "'"));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> out(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size))) {
    throw Error(Errc::IoError, "cannot read '" + path.string() + "'");
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
}

Tractogram read_tractogram(std::span<const std::uint8_t> bytes, FormatTag tag, Warnings* warnings) {
  switch (tag) {
    case FormatTag::TCK: return read_tck(bytes);
    case FormatTag::TRK: return read_trk(bytes);
    case FormatTag::VTK_LEGACY_ASCII:
    case FormatTag::VTK_LEGACY_BINARY: return read_vtk(bytes, warnings);
    case FormatTag::TKO_JSON:
    case FormatTag::TKO_BINARY: break;
  }
  throw Error(Errc::InvalidArgument, "read_tractogram does not handle .tko containers");
}

std::vector<std::uint8_t> write_tractogram(const Tractogram& t, FormatTag tag, Warnings* warnings) {
  switch (tag) {
    case FormatTag::TCK: return write_tck(t, warnings);
    case FormatTag::TRK: return write_trk(t, warnings);
    case FormatTag::VTK_LEGACY_ASCII: return write_vtk(t, VtkMode::Ascii, warnings);
    case FormatTag::VTK_LEGACY_BINARY: return write_vtk(t, VtkMode::Binary, warnings);
    case FormatTag::TKO_JSON:
    case FormatTag::TKO_BINARY: break;
  }
  throw Error(Errc::InvalidArgument, "write_tractogram does not handle .tko containers");
}

}  // namespace trako::io
