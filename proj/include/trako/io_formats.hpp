#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trako/model.hpp"

namespace trako::io {

enum class FormatTag { TCK, TRK, VTK_LEGACY_ASCII, VTK_LEGACY_BINARY, TKO_JSON, TKO_BINARY };

std::string_view to_string(FormatTag tag);

/// Identifies a file from its leading bytes, falling back on the extension
/// of `filename_hint` only when the bytes are not conclusive.
FormatTag detect_format(std::span<const std::uint8_t> leading_bytes, std::string_view filename_hint = {});

/// Collects non-fatal notices (dropped fields, remapped connectivity).
using Warnings = std::vector<std::string>;

Tractogram read_tck(std::span<const std::uint8_t> bytes);
/// Always Float32LE. Attribute fields cannot be stored and are reported in
/// `warnings`.
std::vector<std::uint8_t> write_tck(const Tractogram& t, Warnings* warnings = nullptr);

Tractogram read_trk(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_trk(const Tractogram& t, Warnings* warnings = nullptr);

enum class VtkMode { Ascii, Binary };

Tractogram read_vtk(std::span<const std::uint8_t> bytes, Warnings* warnings = nullptr);
std::vector<std::uint8_t> write_vtk(const Tractogram& t, VtkMode mode, Warnings* warnings = nullptr);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Reads any of the streamline formats (not .tko) after detecting it.
Tractogram read_tractogram(std::span<const std::uint8_t> bytes, FormatTag tag, Warnings* warnings = nullptr);
std::vector<std::uint8_t> write_tractogram(const Tractogram& t, FormatTag tag, Warnings* warnings = nullptr);

}  // namespace trako::io
