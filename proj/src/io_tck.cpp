// MRtrix .tck: text header of "key: value" lines closed by "END", then
// float triplets. A NaN triplet ends a streamline, an Inf triplet the file.

#include <cmath>
#include <limits>

#include "byte_io.hpp"
#include "trako/error.hpp"
#include "trako/io_formats.hpp"

namespace trako::io {

namespace {

constexpr std::string_view kMagic = "mrtrix tracks";

bool writable_key(std::string_view key) {
  return !key.empty() && key.find_first_of(":\n\r") == std::string_view::npos && key != "END";
}

std::string build_header(const Tractogram& t, std::size_t data_offset) {
  std::string header = std::string(kMagic) + "\n";
  bool has_datatype = false, has_count = false, has_file = false;
  auto line = [&](std::string_view key, std::string_view value) {
    header.append(key).append(": ").append(value).append("\n");
  };
  for (const auto& [key, value] : t.metadata) {
    if (!writable_key(key)) continue;
    if (key == "datatype") {
      line(key, "Float32LE");
      has_datatype = true;
    } else if (key == "count") {
      line(key, std::to_string(t.streamline_count()));
      has_count = true;
    } else if (key == "file") {
      line(key, ". " + std::to_string(data_offset));
      has_file = true;
    } else {
      // Repeated keys were joined with newlines on read; split them back.
      std::string_view rest = value;
      while (true) {
        const auto nl = rest.find('\n');
        line(key, rest.substr(0, nl));
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
      }
    }
  }
  if (!has_datatype) line("datatype", "Float32LE");
  if (!has_count) line("count", std::to_string(t.streamline_count()));
  if (!has_file) line("file", ". " + std::to_string(data_offset));
  header += "END\n";
  return header;
}

}  // namespace

Tractogram read_tck(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!text.starts_with(kMagic)) {
    throw Error(Errc::MalformedHeader, "TCK: missing 'mrtrix tracks' magic at byte offset 0", 0);
  }

  Tractogram t;
  t.space = space::kScanner;
  std::size_t pos = text.find('\n');
  if (pos == std::string_view::npos) throw Error(Errc::MalformedHeader, "TCK: header has no END line", 0);
  ++pos;
  bool saw_end = false;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) break;
    const std::string_view raw = text.substr(pos, nl - pos);
    const std::size_t line_start = pos;
    pos = nl + 1;
    const std::string_view line = detail::trim(raw);
    if (line == "END") {
      saw_end = true;
      break;
    }
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(Errc::MalformedHeader,
                  "TCK: header line without ':' at byte offset " + std::to_string(line_start), line_start);
    }
    const std::string key(detail::trim(line.substr(0, colon)));
    const std::string value(detail::trim(line.substr(colon + 1)));
    if (auto* existing = t.metadata.find(key)) {
      existing->append("\n").append(value);
    } else {
      t.metadata.set(key, value);
    }
  }
  if (!saw_end) throw Error(Errc::MalformedHeader, "TCK: header has no END line", pos);

  const std::string* datatype = t.metadata.find("datatype");
  if (!datatype) throw Error(Errc::MalformedHeader, "TCK: header lacks 'datatype'", 0);
  std::endian order;
  if (*datatype == "Float32LE") {
    order = std::endian::little;
  } else if (*datatype == "Float32BE") {
    order = std::endian::big;
  } else {
    throw Error(Errc::UnsupportedDatatype, "TCK: unsupported datatype '" + *datatype + "'", 0);
  }

  const std::string* file = t.metadata.find("file");
  if (!file) throw Error(Errc::MalformedHeader, "TCK: header lacks 'file'", 0);
  std::size_t offset = 0;
  {
    std::string_view f = *file;
    if (!f.starts_with(".")) {
      throw Error(Errc::MalformedHeader, "TCK: external data files are not supported ('file: " + *file + "')", 0);
    }
    f = detail::trim(f.substr(1));
    if (!detail::parse_number(f, offset)) {
      throw Error(Errc::MalformedHeader, "TCK: cannot parse data offset in 'file: " + *file + "'", 0);
    }
  }
  if (offset < pos || offset > bytes.size()) {
    throw Error(Errc::TruncatedBody, "TCK: data offset " + std::to_string(offset) + " lies outside the file", offset);
  }

  std::size_t cursor = offset;
  std::uint64_t run = 0;
  bool terminated = false;
  while (cursor + 12 <= bytes.size()) {
    const float x = detail::load<float>(bytes.data() + cursor, order);
    const float y = detail::load<float>(bytes.data() + cursor + 4, order);
    const float z = detail::load<float>(bytes.data() + cursor + 8, order);
    if (std::isinf(x) && std::isinf(y) && std::isinf(z)) {
      terminated = true;
      break;
    }
    if (std::isnan(x) || std::isnan(y) || std::isnan(z)) {
      if (run > 0) t.offsets.push_back(t.offsets.back() + run);
      run = 0;
    } else if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw Error(Errc::TruncatedBody, "TCK: malformed sentinel triplet at byte offset " + std::to_string(cursor),
                  cursor);
    } else {
      t.coords.insert(t.coords.end(), {x, y, z});
      ++run;
    }
    cursor += 12;
  }
  if (!terminated) {
    throw Error(Errc::TruncatedBody,
                "TCK: end of file before the terminating Inf triplet at byte offset " + std::to_string(cursor), cursor);
  }
  // A final streamline without its NaN delimiter is still kept.
  if (run > 0) t.offsets.push_back(t.offsets.back() + run);
  return t;
}

std::vector<std::uint8_t> write_tck(const Tractogram& t, Warnings* warnings) {
  require_valid(t);
  if (warnings && (!t.vertex_scalars.empty() || !t.fiber_properties.empty())) {
    std::string dropped;
    for (const auto& [name, f] : t.vertex_scalars) dropped += (dropped.empty() ? "" : ", ") + name;
    for (const auto& [name, f] : t.fiber_properties) dropped += (dropped.empty() ? "" : ", ") + name;
    warnings->push_back("TCK cannot store per-vertex scalars or per-streamline properties; dropped: " + dropped);
  }

  // The header states its own length; iterate until the digit count settles.
  std::size_t offset = 0;
  std::string header = build_header(t, offset);
  while (header.size() != offset) {
    offset = header.size();
    header = build_header(t, offset);
  }

  std::vector<std::uint8_t> out;
  out.reserve(header.size() + 12 * (t.vertex_count() + t.streamline_count() + 1));
  detail::append(out, header);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const float inf = std::numeric_limits<float>::infinity();
  for (std::size_t s = 0; s < t.streamline_count(); ++s) {
    for (std::uint64_t v = t.offsets[s]; v < t.offsets[s + 1]; ++v) {
      for (int c = 0; c < 3; ++c) detail::store(static_cast<float>(t.coords[3 * v + c]), std::endian::little, out);
    }
    for (int c = 0; c < 3; ++c) detail::store(nan, std::endian::little, out);
  }
  for (int c = 0; c < 3; ++c) detail::store(inf, std::endian::little, out);
  return out;
}

}  // namespace trako::io
