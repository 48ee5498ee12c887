// Legacy VTK polydata (.vtk), ASCII or BINARY. Binary payloads are
// big-endian. Reads the classic LINES layout and the 5.x OFFSETS /
// CONNECTIVITY layout; writes the classic one.

#include <cctype>
#include <cmath>
#include <optional>

#include "byte_io.hpp"
#include "trako/error.hpp"
#include "trako/io_formats.hpp"

namespace trako::io {

namespace {

constexpr auto kBE = std::endian::big;

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

struct VtkType {
  DeclaredType declared;
  std::size_t width;
};

std::optional<VtkType> parse_vtk_type(std::string_view name) {
  const std::string n = upper(name);
  if (n == "CHAR") return VtkType{DeclaredType::Int8, 1};
  if (n == "UNSIGNED_CHAR") return VtkType{DeclaredType::UInt8, 1};
  if (n == "SHORT") return VtkType{DeclaredType::Int16, 2};
  if (n == "UNSIGNED_SHORT") return VtkType{DeclaredType::UInt16, 2};
  if (n == "INT" || n == "VTKIDTYPE" || n == "VTKTYPEINT32") return VtkType{DeclaredType::Int32, 4};
  if (n == "UNSIGNED_INT" || n == "VTKTYPEUINT32") return VtkType{DeclaredType::UInt32, 4};
  if (n == "LONG" || n == "VTKTYPEINT64") return VtkType{DeclaredType::Int64, 8};
  if (n == "UNSIGNED_LONG" || n == "VTKTYPEUINT64") return VtkType{DeclaredType::UInt64, 8};
  if (n == "FLOAT") return VtkType{DeclaredType::Float32, 4};
  if (n == "DOUBLE") return VtkType{DeclaredType::Float64, 8};
  return std::nullopt;
}

std::string_view vtk_type_name(DeclaredType t) {
  switch (t) {
    case DeclaredType::Int8: return "char";
    case DeclaredType::UInt8: return "unsigned_char";
    case DeclaredType::Int16: return "short";
    case DeclaredType::UInt16: return "unsigned_short";
    case DeclaredType::Int32: return "int";
    case DeclaredType::UInt32: return "unsigned_int";
    case DeclaredType::Int64: return "vtktypeint64";
    case DeclaredType::UInt64: return "vtktypeuint64";
    case DeclaredType::Float32: return "float";
    case DeclaredType::Float64: return "double";
  }
  return "float";
}

// Array names may not contain whitespace; VTK escapes them as %XX.
std::string encode_name(std::string_view name) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : name) {
    if (c <= ' ' || c == '%' || c >= 0x7F) {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string decode_name(std::string_view name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] == '%' && i + 2 < name.size() && std::isxdigit(static_cast<unsigned char>(name[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(name[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(name.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += name[i];
    }
  }
  return out;
}

class Cursor {
 public:
  Cursor(std::span<const std::uint8_t> bytes, bool binary) : bytes_(bytes), binary_(binary) {}

  std::size_t pos() const { return pos_; }
  bool at_end() {
    skip_space();
    return pos_ >= bytes_.size();
  }

  std::string_view line() {
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
    std::string_view out(reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start);
    if (pos_ < bytes_.size()) ++pos_;
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    return out;
  }

  std::string_view token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
    if (start == pos_) throw truncated("unexpected end of file");
    return {reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start};
  }

  std::string_view peek_token() {
    const std::size_t saved = pos_;
    skip_space();
    std::string_view out;
    if (pos_ < bytes_.size()) out = token();
    pos_ = saved;
    return out;
  }

  std::size_t count() {
    const std::size_t at = pos_;
    const auto tok = token();
    std::size_t n = 0;
    if (!detail::parse_number(tok, n)) {
      throw Error(Errc::MalformedHeader, "VTK: expected a count, found '" + std::string(tok) + "' at byte offset " +
                                             std::to_string(at),
                  at);
    }
    return n;
  }

  /// Reads `n` values of `type`; in binary mode the values start right after
  /// the current header line.
  std::vector<double> values(std::size_t n, const VtkType& type) {
    std::vector<double> out(n);
    if (binary_) {
      while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      if (pos_ < bytes_.size()) ++pos_;
      if (pos_ + n * type.width > bytes_.size()) {
        throw truncated("binary array of " + std::to_string(n) + " values overruns the file");
      }
      const std::uint8_t* p = bytes_.data() + pos_;
      for (std::size_t i = 0; i < n; ++i, p += type.width) out[i] = load_binary(p, type.declared);
      pos_ += n * type.width;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = pos_;
        const auto tok = token();
        bool ok;
        if (type.declared == DeclaredType::Float32) {
          float f = 0;
          ok = detail::parse_number(tok, f);
          out[i] = f;
        } else if (type.declared == DeclaredType::Float64) {
          ok = detail::parse_number(tok, out[i]);
        } else if (type.declared == DeclaredType::UInt64) {
          std::uint64_t u = 0;
          ok = detail::parse_number(tok, u);
          out[i] = static_cast<double>(u);
        } else {
          std::int64_t s = 0;
          ok = detail::parse_number(tok, s);
          out[i] = static_cast<double>(s);
        }
        if (!ok) {
          throw Error(Errc::MalformedHeader, "VTK: cannot parse value '" + std::string(tok) + "' at byte offset " +
                                                 std::to_string(at),
                      at);
        }
      }
    }
    return out;
  }

  Error truncated(const std::string& what) const {
    return Error(Errc::TruncatedBody, "VTK: " + what + " at byte offset " + std::to_string(pos_), pos_);
  }

 private:
  static bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
  void skip_space() {
    while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
  }
  static double load_binary(const std::uint8_t* p, DeclaredType t) {
    switch (t) {
      case DeclaredType::Int8: return static_cast<std::int8_t>(*p);
      case DeclaredType::UInt8: return *p;
      case DeclaredType::Int16: return detail::load<std::int16_t>(p, kBE);
      case DeclaredType::UInt16: return detail::load<std::uint16_t>(p, kBE);
      case DeclaredType::Int32: return detail::load<std::int32_t>(p, kBE);
      case DeclaredType::UInt32: return detail::load<std::uint32_t>(p, kBE);
      case DeclaredType::Int64: return static_cast<double>(detail::load<std::int64_t>(p, kBE));
      case DeclaredType::UInt64: return static_cast<double>(detail::load<std::uint64_t>(p, kBE));
      case DeclaredType::Float32: return detail::load<float>(p, kBE);
      case DeclaredType::Float64: return detail::load<double>(p, kBE);
    }
    return 0.0;
  }

  std::span<const std::uint8_t> bytes_;
  bool binary_;
  std::size_t pos_ = 0;
};

VtkType require_type(std::string_view name, std::size_t at) {
  const auto t = parse_vtk_type(name);
  if (!t) throw Error(Errc::UnsupportedDatatype, "VTK: unsupported data type '" + std::string(name) + "'", at);
  return *t;
}

// Reads attribute arrays after POINT_DATA / CELL_DATA until the next
// dataset-level keyword. Returns that keyword (empty at end of file).
std::string read_arrays(Cursor& in, std::size_t tuples, OrderedMap<AttributeField>& out) {
  auto add = [&](std::string name, std::size_t dims, const VtkType& type, std::size_t n_tuples) {
    AttributeField f;
    f.dims = dims;
    f.declared_type = type.declared;
    f.values = in.values(n_tuples * dims, type);
    if (n_tuples != tuples) {
      throw Error(Errc::CountMismatch, "VTK: array '" + name + "' has " + std::to_string(n_tuples) +
                                           " tuples, expected " + std::to_string(tuples),
                  in.pos());
    }
    out.set(decode_name(name), std::move(f));
  };

  while (!in.at_end()) {
    const std::size_t at = in.pos();
    const std::string key = upper(in.peek_token());
    if (key == "POINT_DATA" || key == "CELL_DATA") return key;
    in.token();
    if (key == "SCALARS") {
      std::string name(in.token());
      const VtkType type = require_type(in.token(), at);
      std::size_t dims = 1;
      const auto next = in.peek_token();
      if (!next.empty() && std::isdigit(static_cast<unsigned char>(next.front()))) dims = in.count();
      if (upper(in.peek_token()) == "LOOKUP_TABLE") {
        in.token();
        in.token();
      }
      add(std::move(name), dims, type, tuples);
    } else if (key == "VECTORS" || key == "NORMALS") {
      std::string name(in.token());
      add(std::move(name), 3, require_type(in.token(), at), tuples);
    } else if (key == "TENSORS") {
      std::string name(in.token());
      add(std::move(name), 9, require_type(in.token(), at), tuples);
    } else if (key == "TEXTURE_COORDINATES") {
      std::string name(in.token());
      const std::size_t dims = in.count();
      add(std::move(name), dims, require_type(in.token(), at), tuples);
    } else if (key == "FIELD") {
      in.token();
      const std::size_t arrays = in.count();
      for (std::size_t i = 0; i < arrays; ++i) {
        std::string name(in.token());
        if (upper(name) == "NULL_ARRAY") continue;
        const std::size_t dims = in.count();
        const std::size_t n_tuples = in.count();
        add(std::move(name), dims, require_type(in.token(), in.pos()), n_tuples);
      }
    } else if (key == "LOOKUP_TABLE") {
      in.token();
      const std::size_t n = in.count();
      in.values(4 * n, {DeclaredType::UInt8, 1});
    } else if (key == "METADATA") {
      // Runs until the next blank line.
      in.line();
      while (!in.at_end()) {
        if (detail::trim(in.line()).empty()) break;
      }
    } else {
      throw Error(Errc::UnsupportedSection, "VTK: unsupported section '" + key + "' at byte offset " +
                                                std::to_string(at),
                  at);
    }
  }
  return {};
}

void write_values(std::vector<std::uint8_t>& out, std::span<const double> values, DeclaredType type, VtkMode mode,
                  std::size_t per_line) {
  if (mode == VtkMode::Binary) {
    for (double v : values) {
      switch (type) {
        case DeclaredType::Int8: detail::store(static_cast<std::int8_t>(v), kBE, out); break;
        case DeclaredType::UInt8: detail::store(static_cast<std::uint8_t>(v), kBE, out); break;
        case DeclaredType::Int16: detail::store(static_cast<std::int16_t>(v), kBE, out); break;
        case DeclaredType::UInt16: detail::store(static_cast<std::uint16_t>(v), kBE, out); break;
        case DeclaredType::Int32: detail::store(static_cast<std::int32_t>(v), kBE, out); break;
        case DeclaredType::UInt32: detail::store(static_cast<std::uint32_t>(v), kBE, out); break;
        case DeclaredType::Int64: detail::store(static_cast<std::int64_t>(v), kBE, out); break;
        case DeclaredType::UInt64: detail::store(static_cast<std::uint64_t>(v), kBE, out); break;
        case DeclaredType::Float32: detail::store(static_cast<float>(v), kBE, out); break;
        case DeclaredType::Float64: detail::store(v, kBE, out); break;
      }
    }
    detail::append(out, "\n");
    return;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    std::string text;
    switch (type) {
      case DeclaredType::Float32: text = detail::format_number(static_cast<float>(v)); break;
      case DeclaredType::Float64: text = detail::format_number(v); break;
      case DeclaredType::UInt64: text = std::to_string(static_cast<std::uint64_t>(v)); break;
      default: text = std::to_string(static_cast<std::int64_t>(v)); break;
    }
    detail::append(out, text);
    detail::append(out, (i + 1) % per_line == 0 || i + 1 == values.size() ? "\n" : " ");
  }
}

void write_field_block(std::vector<std::uint8_t>& out, const OrderedMap<AttributeField>& fields, VtkMode mode) {
  detail::append(out, "FIELD FieldData " + std::to_string(fields.size()) + "\n");
  for (const auto& [name, f] : fields) {
    detail::append(out, encode_name(name) + " " + std::to_string(f.dims) + " " + std::to_string(f.element_count()) +
                            " " + std::string(vtk_type_name(f.declared_type)) + "\n");
    write_values(out, f.values, f.declared_type, mode, 9);
  }
}

}  // namespace

Tractogram read_vtk(std::span<const std::uint8_t> bytes, Warnings* warnings) {
  Cursor header(bytes, false);
  const auto first = header.line();
  if (!first.starts_with("# vtk DataFile")) {
    throw Error(Errc::MalformedHeader, "VTK: missing '# vtk DataFile' magic at byte offset 0", 0);
  }
  const std::string title(detail::trim(header.line()));
  const std::string mode = upper(detail::trim(header.line()));
  if (mode != "ASCII" && mode != "BINARY") {
    throw Error(Errc::MalformedHeader, "VTK: third line must be ASCII or BINARY", header.pos());
  }
  const bool binary = mode == "BINARY";

  Cursor in(bytes.subspan(header.pos()), binary);
  const std::size_t base = header.pos();
  auto where = [&] { return base + in.pos(); };

  if (upper(in.token()) != "DATASET") throw Error(Errc::MalformedHeader, "VTK: expected DATASET", where());
  const std::string dataset = upper(in.token());
  if (dataset != "POLYDATA") {
    throw Error(Errc::UnsupportedDataset, "VTK: dataset '" + dataset + "' is not POLYDATA", where());
  }

  Tractogram t;
  t.space = space::kWorld;
  t.metadata.set("vtk.title", title);

  std::vector<double> points;
  std::size_t n_points = 0;
  std::vector<std::vector<std::uint64_t>> lines;
  bool have_points = false;
  OrderedMap<AttributeField> point_data;
  OrderedMap<AttributeField> cell_data;

  std::string key;
  if (!in.at_end()) key = upper(in.token());
  while (!key.empty()) {
    const std::size_t at = where();
    if (key == "POINTS") {
      n_points = in.count();
      const auto type_name = in.token();
      const auto type = require_type(type_name, at);
      if (is_integer(type.declared)) {
        throw Error(Errc::NonFloatPoints, "VTK: POINTS of type '" + std::string(type_name) + "' are not float", at);
      }
      points = in.values(3 * n_points, type);
      for (double& v : points) {
        if (!std::isfinite(v)) throw Error(Errc::NonFloatPoints, "VTK: non-finite point coordinate", at);
        v = static_cast<float>(v);
      }
      have_points = true;
      key = in.at_end() ? "" : upper(in.token());
    } else if (key == "LINES") {
      const std::size_t a = in.count();
      const std::size_t b = in.count();
      if (upper(in.peek_token()) == "OFFSETS") {
        in.token();
        const auto offsets = in.values(a, require_type(in.token(), where()));
        if (upper(in.token()) != "CONNECTIVITY") {
          throw Error(Errc::MalformedHeader, "VTK: expected CONNECTIVITY after OFFSETS", where());
        }
        const auto conn = in.values(b, require_type(in.token(), where()));
        for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
          const auto lo = static_cast<std::size_t>(offsets[i]);
          const auto hi = static_cast<std::size_t>(offsets[i + 1]);
          if (lo > hi || hi > conn.size()) throw Error(Errc::MalformedHeader, "VTK: bad LINES offsets", at);
          std::vector<std::uint64_t> cell;
          for (std::size_t k = lo; k < hi; ++k) cell.push_back(static_cast<std::uint64_t>(conn[k]));
          lines.push_back(std::move(cell));
        }
      } else {
        const auto raw = in.values(b, {DeclaredType::Int32, 4});
        std::size_t k = 0;
        for (std::size_t i = 0; i < a; ++i) {
          if (k >= raw.size()) throw Error(Errc::TruncatedBody, "VTK: LINES list shorter than declared", at);
          const auto n = static_cast<std::size_t>(raw[k++]);
          if (k + n > raw.size()) throw Error(Errc::TruncatedBody, "VTK: LINES list shorter than declared", at);
          std::vector<std::uint64_t> cell(n);
          for (std::size_t j = 0; j < n; ++j) cell[j] = static_cast<std::uint64_t>(raw[k++]);
          lines.push_back(std::move(cell));
        }
      }
      key = in.at_end() ? "" : upper(in.token());
    } else if (key == "POINT_DATA") {
      const std::size_t n = in.count();
      if (n != n_points) {
        throw Error(Errc::CountMismatch, "VTK: POINT_DATA " + std::to_string(n) + " differs from POINTS " +
                                             std::to_string(n_points),
                    at);
      }
      key = read_arrays(in, n, point_data);
      if (!key.empty()) in.token();
    } else if (key == "CELL_DATA") {
      const std::size_t n = in.count();
      if (n != lines.size()) {
        throw Error(Errc::CountMismatch, "VTK: CELL_DATA " + std::to_string(n) + " differs from LINES " +
                                             std::to_string(lines.size()),
                    at);
      }
      key = read_arrays(in, n, cell_data);
      if (!key.empty()) in.token();
    } else if (key == "METADATA") {
      in.line();
      while (!in.at_end()) {
        if (detail::trim(in.line()).empty()) break;
      }
      key = in.at_end() ? "" : upper(in.token());
    } else {
      throw Error(Errc::UnsupportedSection, "VTK: unsupported section '" + key + "' at byte offset " +
                                                std::to_string(at),
                  at);
    }
  }
  if (!have_points && !lines.empty()) throw Error(Errc::MalformedHeader, "VTK: LINES without POINTS", 0);

  // Fast path: cells list every point exactly once, in order.
  bool consecutive = true;
  std::uint64_t expect = 0;
  for (const auto& cell : lines) {
    for (std::uint64_t idx : cell) {
      if (idx != expect++) consecutive = false;
    }
  }
  consecutive = consecutive && expect == n_points;

  std::vector<std::size_t> kept_cells;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::uint64_t idx : lines[i]) {
      if (idx >= n_points) {
        throw Error(Errc::MalformedHeader, "VTK: line " + std::to_string(i) + " references point " +
                                               std::to_string(idx) + " beyond POINTS " + std::to_string(n_points),
                    0);
      }
    }
    if (!lines[i].empty()) kept_cells.push_back(i);
  }
  if (warnings && kept_cells.size() != lines.size()) {
    warnings->push_back("VTK: dropped " + std::to_string(lines.size() - kept_cells.size()) + " empty line cells");
  }

  if (consecutive) {
    t.coords = std::move(points);
    for (const auto& cell : lines) {
      if (!cell.empty()) t.offsets.push_back(t.offsets.back() + cell.size());
    }
    t.vertex_scalars = std::move(point_data);
  } else {
    if (warnings) warnings->push_back("VTK: line connectivity is not a consecutive run; points were remapped");
    std::vector<std::uint64_t> order;
    for (const auto& cell : lines) order.insert(order.end(), cell.begin(), cell.end());
    t.coords.reserve(order.size() * 3);
    for (std::uint64_t idx : order) t.coords.insert(t.coords.end(), points.begin() + 3 * idx, points.begin() + 3 * idx + 3);
    for (const auto& cell : lines) {
      if (!cell.empty()) t.offsets.push_back(t.offsets.back() + cell.size());
    }
    for (const auto& [name, f] : point_data) {
      AttributeField g{f.dims, {}, f.declared_type};
      g.values.reserve(order.size() * f.dims);
      for (std::uint64_t idx : order) {
        g.values.insert(g.values.end(), f.values.begin() + idx * f.dims, f.values.begin() + (idx + 1) * f.dims);
      }
      t.vertex_scalars.set(name, std::move(g));
    }
  }
  for (const auto& [name, f] : cell_data) {
    AttributeField g{f.dims, {}, f.declared_type};
    for (std::size_t i : kept_cells) {
      g.values.insert(g.values.end(), f.values.begin() + i * f.dims, f.values.begin() + (i + 1) * f.dims);
    }
    t.fiber_properties.set(name, std::move(g));
  }
  return t;
}

std::vector<std::uint8_t> write_vtk(const Tractogram& t, VtkMode mode, Warnings* /*warnings*/) {
  require_valid(t);
  std::vector<std::uint8_t> out;
  std::string title = "trako";
  if (const auto* v = t.metadata.find("vtk.title")) title = v->substr(0, v->find('\n'));
  title = title.substr(0, 255);

  detail::append(out, "# vtk DataFile Version 4.2\n");
  detail::append(out, title + "\n");
  detail::append(out, mode == VtkMode::Binary ? "BINARY\n" : "ASCII\n");
  detail::append(out, "DATASET POLYDATA\n");
  detail::append(out, "POINTS " + std::to_string(t.vertex_count()) + " float\n");
  write_values(out, t.coords, DeclaredType::Float32, mode, 9);

  const std::size_t n_lines = t.streamline_count();
  detail::append(out, "LINES " + std::to_string(n_lines) + " " + std::to_string(n_lines + t.vertex_count()) + "\n");
  if (mode == VtkMode::Binary) {
    for (std::size_t s = 0; s < n_lines; ++s) {
      detail::store(static_cast<std::int32_t>(t.streamline_length(s)), kBE, out);
      for (std::uint64_t v = t.offsets[s]; v < t.offsets[s + 1]; ++v) {
        detail::store(static_cast<std::int32_t>(v), kBE, out);
      }
    }
    detail::append(out, "\n");
  } else {
    for (std::size_t s = 0; s < n_lines; ++s) {
      std::string line = std::to_string(t.streamline_length(s));
      for (std::uint64_t v = t.offsets[s]; v < t.offsets[s + 1]; ++v) line += " " + std::to_string(v);
      detail::append(out, line + "\n");
    }
  }

  if (!t.vertex_scalars.empty()) {
    detail::append(out, "POINT_DATA " + std::to_string(t.vertex_count()) + "\n");
    write_field_block(out, t.vertex_scalars, mode);
  }
  if (!t.fiber_properties.empty()) {
    detail::append(out, "CELL_DATA " + std::to_string(n_lines) + "\n");
    write_field_block(out, t.fiber_properties, mode);
  }
  return out;
}

}  // namespace trako::io
