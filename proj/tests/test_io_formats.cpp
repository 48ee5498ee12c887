#include <doctest.h>

#include <bit>
#include <cstring>
#include <limits>
#include <random>

#include "support.hpp"
#include "trako/error.hpp"
#include "trako/io_formats.hpp"

using namespace trako;
using namespace trako::io;

namespace {

template <typename F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected trako::Error");
  return Error(Errc::InvalidArgument, "");
}

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

template <typename T>
void put(std::vector<std::uint8_t>& out, std::size_t at, T v, std::endian order = std::endian::little) {
  auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
  if (order != std::endian::native) std::reverse(raw.begin(), raw.end());
  std::memcpy(out.data() + at, raw.data(), sizeof(T));
}

template <typename T>
void append(std::vector<std::uint8_t>& out, T v, std::endian order = std::endian::little) {
  out.resize(out.size() + sizeof(T));
  put(out, out.size() - sizeof(T), v, order);
}

std::vector<std::uint8_t> tck_bytes(std::string_view header_body, std::vector<std::array<float, 3>> triplets,
                                    std::endian order = std::endian::little) {
  std::string header = "mrtrix tracks\n" + std::string(header_body) + "file: . 128\nEND\n";
  header.resize(128, ' ');
  auto out = bytes_of(header);
  for (const auto& t : triplets) {
    for (float v : t) append(out, v, order);
  }
  return out;
}

constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();
constexpr float kInf = std::numeric_limits<float>::infinity();

}  // namespace

TEST_CASE("TCK reader splits streamlines on NaN and stops at Inf") {
  const auto bytes = tck_bytes("count: 2\ndatatype: Float32LE\nstep_size: 0.5\n",
                               {{1, 2, 3}, {4, 5, 6}, {kNaN, kNaN, kNaN}, {7, 8, 9}, {kNaN, kNaN, kNaN}, {kInf, kInf, kInf}});
  const auto t = read_tck(bytes);
  CHECK(t.offsets == std::vector<std::uint64_t>{0, 2, 3});
  CHECK(t.coords == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(t.metadata.at("step_size") == "0.5");
  CHECK(t.space == "scanner");
}

TEST_CASE("TCK reader handles big-endian data and repeated keys") {
  const auto bytes = tck_bytes("datatype: Float32BE\ncommand: a\ncommand: b\n",
                               {{1.5f, 2, 3}, {kNaN, kNaN, kNaN}, {kInf, kInf, kInf}}, std::endian::big);
  const auto t = read_tck(bytes);
  CHECK(t.coords == std::vector<double>{1.5, 2, 3});
  CHECK(t.metadata.at("command") == "a\nb");
  // Repeated keys come back as repeated lines.
  const auto again = read_tck(write_tck(t));
  CHECK(again.metadata.at("command") == "a\nb");
}

TEST_CASE("TCK writer rewrites datatype, count and file in place") {
  Tractogram t;
  t.add_streamline(std::vector<double>{0, 0, 0, 1, 1, 1});
  t.metadata.set("count", "999");
  t.metadata.set("datatype", "Float32BE");
  t.metadata.set("roi", "seed.mif");
  const auto bytes = write_tck(t);
  const std::string text(bytes.begin(), bytes.end());
  const auto header = text.substr(0, text.find("END\n") + 4);
  CHECK(header.starts_with("mrtrix tracks\ncount: 1\ndatatype: Float32LE\nroi: seed.mif\nfile: . "));
  const auto offset = std::stoul(header.substr(header.find("file: . ") + 8));
  CHECK(offset == header.size());
  const auto back = read_tck(bytes);
  CHECK(back.coords == t.coords);
  std::vector<std::string> keys;
  for (const auto& [k, v] : back.metadata) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"count", "datatype", "roi", "file"});
}

TEST_CASE("TCK errors carry format and byte offset") {
  auto e = error_of([] { read_tck(bytes_of("not a track file")); });
  CHECK(e.code() == Errc::MalformedHeader);

  auto bytes = tck_bytes("datatype: Float32LE\n", {{1, 2, 3}});
  e = error_of([&] { read_tck(bytes); });
  CHECK(e.code() == Errc::TruncatedBody);
  CHECK(e.offset() == 140u);
  CHECK(std::string(e.what()).find("TCK") != std::string::npos);

  bytes = tck_bytes("datatype: Int16\n", {{kInf, kInf, kInf}});
  CHECK(error_of([&] { read_tck(bytes); }).code() == Errc::UnsupportedDatatype);
}

TEST_CASE("TCK write warns about fields it cannot hold") {
  Tractogram t;
  t.add_streamline(std::vector<double>{0, 0, 0});
  t.vertex_scalars.set("fa", {1, {0.5}, DeclaredType::Float32});
  Warnings w;
  write_tck(t, &w);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("fa") != std::string::npos);
}

TEST_CASE("TRK reader follows the 1000-byte header layout") {
  std::vector<std::uint8_t> b(1000, 0);
  std::memcpy(b.data(), "TRACK", 6);
  put<std::int16_t>(b, 6, 100);
  put<float>(b, 12, 2.0f);
  put<std::int16_t>(b, 36, 1);
  std::memcpy(b.data() + 38, "fa", 2);
  put<std::int16_t>(b, 238, 2);
  std::memcpy(b.data() + 240, "len\0" "2", 5);
  std::memcpy(b.data() + 948, "LPS", 3);
  put<std::int32_t>(b, 988, 1);
  put<std::int32_t>(b, 992, 2);
  put<std::int32_t>(b, 996, 1000);
  append<std::int32_t>(b, 2);
  for (float v : {1.f, 2.f, 3.f, 0.25f, 4.f, 5.f, 6.f, 0.75f}) append(b, v);
  for (float v : {10.f, 20.f}) append(b, v);

  const auto t = read_trk(b);
  CHECK(t.offsets == std::vector<std::uint64_t>{0, 2});
  CHECK(t.coords == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(t.vertex_scalars.at("fa").values == std::vector<double>{0.25, 0.75});
  CHECK(t.fiber_properties.at("len").dims == 2);
  CHECK(t.fiber_properties.at("len").values == std::vector<double>{10, 20});
  CHECK(t.metadata.at("trk.voxel_order") == "LPS");
  CHECK(t.space == "voxmm");

  auto bad = b;
  put<std::int32_t>(bad, 996, 999);
  CHECK(error_of([&] { read_trk(bad); }).code() == Errc::HeaderSizeMismatch);
  bad = b;
  bad[0] = 'X';
  CHECK(error_of([&] { read_trk(bad); }).code() == Errc::BadMagic);
  bad = b;
  put<std::int32_t>(bad, 988, 3);
  CHECK(error_of([&] { read_trk(bad); }).code() == Errc::CountMismatch);
  bad = b;
  bad.resize(bad.size() - 4);
  const auto e = error_of([&] { read_trk(bad); });
  CHECK(e.code() == Errc::TruncatedBody);
  CHECK(e.offset().has_value());
}

TEST_CASE("TRK writer names unnamed and overflowing slots") {
  Tractogram t;
  t.add_streamline(std::vector<double>{0, 0, 0});
  t.vertex_scalars.set("a_rather_long_scalar_name", {1, {1.0}, DeclaredType::Float32});
  Warnings w;
  const auto back = read_trk(write_trk(t, &w));
  CHECK(back.vertex_scalars.size() == 1);
  CHECK(!w.empty());
}

TEST_CASE("VTK reader accepts classic LINES with attributes") {
  const auto text = R"(# vtk DataFile Version 3.0
bundle
ASCII
DATASET POLYDATA
POINTS 5 float
0 0 0 1 0 0 2 0 0
5 5 5 6 6 6
LINES 2 7
3 0 1 2
2 3 4
POINT_DATA 5
SCALARS fa float 1
LOOKUP_TABLE default
0.1 0.2 0.3 0.4 0.5
VECTORS dir float
1 0 0 1 0 0 1 0 0 0 1 0 0 1 0
CELL_DATA 2
FIELD FieldData 1
cluster 1 2 int
3 7
)";
  const auto t = read_vtk(bytes_of(text));
  CHECK(t.offsets == std::vector<std::uint64_t>{0, 3, 5});
  CHECK(t.vertex_scalars.at("fa").values.size() == 5);
  CHECK(t.vertex_scalars.at("dir").dims == 3);
  CHECK(t.fiber_properties.at("cluster").declared_type == DeclaredType::Int32);
  CHECK(t.fiber_properties.at("cluster").values == std::vector<double>{3, 7});
  CHECK(t.metadata.at("vtk.title") == "bundle");
  CHECK(detect_format(bytes_of(text)) == FormatTag::VTK_LEGACY_ASCII);
}

TEST_CASE("VTK reader accepts the OFFSETS/CONNECTIVITY layout") {
  const auto text = R"(# vtk DataFile Version 5.1
x
ASCII
DATASET POLYDATA
POINTS 3 double
0 0 0 1 1 1 2 2 2
LINES 3 3
OFFSETS vtktypeint64
0 1 3
CONNECTIVITY vtktypeint64
0 1 2
)";
  const auto t = read_vtk(bytes_of(text));
  CHECK(t.offsets == std::vector<std::uint64_t>{0, 1, 3});
  CHECK(t.coords[3] == 1.0);
}

TEST_CASE("VTK reader remaps non-consecutive connectivity with a warning") {
  const auto text = R"(# vtk DataFile Version 3.0
x
ASCII
DATASET POLYDATA
POINTS 3 float
0 0 0 1 1 1 2 2 2
LINES 1 4
3 2 0 1
)";
  Warnings w;
  const auto t = read_vtk(bytes_of(text), &w);
  CHECK(t.coords == std::vector<double>{2, 2, 2, 0, 0, 0, 1, 1, 1});
  CHECK(!w.empty());
}

TEST_CASE("VTK errors") {
  CHECK(error_of([] { read_vtk(bytes_of("# vtk DataFile Version 3.0\nx\nASCII\nDATASET STRUCTURED_POINTS\n")); })
            .code() == Errc::UnsupportedDataset);
  CHECK(error_of([] {
          read_vtk(bytes_of("# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 1 int\n0 0 0\n"));
        }).code() == Errc::NonFloatPoints);
  const auto e = error_of([] {
    read_vtk(bytes_of("# vtk DataFile Version 3.0\nx\nBINARY\nDATASET POLYDATA\nPOINTS 2 float\n\x01\x02"));
  });
  CHECK(e.code() == Errc::TruncatedBody);
  CHECK(e.offset().has_value());
}

TEST_CASE("VTK binary is big-endian") {
  Tractogram t;
  t.add_streamline(std::vector<double>{1.0, 2.0, 3.0});
  const auto bytes = write_vtk(t, VtkMode::Binary);
  const std::string text(bytes.begin(), bytes.end());
  const auto at = text.find("POINTS 1 float\n") + std::strlen("POINTS 1 float\n");
  CHECK(bytes[at] == 0x3F);  // 1.0f big-endian: 3F 80 00 00
  CHECK(bytes[at + 1] == 0x80);
  CHECK(detect_format(bytes) == FormatTag::VTK_LEGACY_BINARY);
}

TEST_CASE("detect_format uses magic bytes before the extension") {
  CHECK(detect_format(bytes_of("mrtrix tracks\nEND\n"), "x.vtk") == FormatTag::TCK);
  CHECK(detect_format(bytes_of("TRACK\0\0\0\0\0\0\0\0\0\0\0"), "x.tck") == FormatTag::TRK);
  CHECK(detect_format(bytes_of("glTF\x02\0\0\0\0\0\0\0\0\0\0\0"), "") == FormatTag::TKO_BINARY);
  CHECK(detect_format(bytes_of("{\"asset\":{\"version\":\"2.0\"}}"), "") == FormatTag::TKO_JSON);
  CHECK(detect_format(bytes_of("????????????????"), "a.tck") == FormatTag::TCK);
  CHECK(error_of([] { detect_format(bytes_of("????????????????"), "a.txt"); }).code() == Errc::UnknownFormat);
}

TEST_CASE("random round-trips through every format") {
  std::mt19937_64 rng(21);
  const DeclaredType float_only[] = {DeclaredType::Float32};
  for (int i = 0; i < 30; ++i) {
    auto t = testing::random_tractogram(rng, {.scalars = 0, .properties = 0, .allow_empty = true});
    t.space = "scanner";
    CHECK(testing::same_content(t, read_tck(write_tck(t))));

    t = testing::random_tractogram(rng, {.scalars = 2, .properties = 2}, float_only, 2);
    t.space = "voxmm";
    CHECK(testing::same_content(t, read_trk(write_trk(t))));

    t = testing::random_tractogram(rng, {.scalars = 3, .properties = 3, .allow_empty = true}, testing::kAllTypes, 12);
    t.space = "world";
    t.metadata.set("vtk.title", "random " + std::to_string(i));
    CHECK(testing::same_content(t, read_vtk(write_vtk(t, VtkMode::Ascii))));
    CHECK(testing::same_content(t, read_vtk(write_vtk(t, VtkMode::Binary))));
  }
}

TEST_CASE("field names with spaces survive VTK") {
  Tractogram t;
  t.space = "world";
  t.add_streamline(std::vector<double>{0, 0, 0});
  t.vertex_scalars.set("fractional anisotropy %", {1, {0.5}, DeclaredType::Float32});
  CHECK(testing::same_content(t, read_vtk(write_vtk(t, VtkMode::Ascii))));
}
