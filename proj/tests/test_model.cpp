#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "support.hpp"
#include "trako/error.hpp"
#include "trako/model.hpp"

using namespace trako;

namespace {

Tractogram two_streamlines() {
  Tractogram t;
  t.add_streamline(std::vector<double>{0, 0, 0, 1, 0, 0, 2, 0, 0});
  t.add_streamline(std::vector<double>{5, 5, 5});
  return t;
}

}  // namespace

TEST_CASE("add_streamline maintains offsets") {
  const auto t = two_streamlines();
  CHECK(t.offsets == std::vector<std::uint64_t>{0, 3, 4});
  CHECK(t.vertex_count() == 4);
  CHECK(t.streamline_count() == 2);
  CHECK(t.streamline_length(0) == 3);
  CHECK(t.streamline_length(1) == 1);
  CHECK(t.vertex(3) == Vec3{5, 5, 5});
}

TEST_CASE("validate accepts a well-formed tractogram and the empty one") {
  CHECK(validate(two_streamlines()).empty());
  CHECK(validate(Tractogram{}).empty());
}

TEST_CASE("validate flags non-increasing offsets") {
  Tractogram t;
  t.coords.assign(9, 0.0);
  t.offsets = {0, 5, 3};
  const auto v = validate(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].detail == "offsets not strictly increasing at index 2");
  CHECK(v[0].index == 2);
}

TEST_CASE("validate flags a scalar field of the wrong length") {
  auto t = two_streamlines();
  t.vertex_scalars.set("fa", AttributeField{1, {0.1, 0.2, 0.3}, DeclaredType::Float32});
  const auto v = validate(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].detail.starts_with("ScalarField length mismatch"));
  CHECK(v[0].field == "fa");
}

TEST_CASE("validate flags property length, zero dims, bad terminal offset and NaN") {
  auto t = two_streamlines();
  t.fiber_properties.set("len", AttributeField{1, {1.0}, DeclaredType::Float32});
  CHECK(validate(t).size() == 1);

  t = two_streamlines();
  t.vertex_scalars.set("x", AttributeField{0, {}, DeclaredType::Float32});
  CHECK(!validate(t).empty());

  t = two_streamlines();
  t.offsets.back() = 7;
  CHECK(!validate(t).empty());

  t = two_streamlines();
  t.coords[4] = std::numeric_limits<double>::quiet_NaN();
  const auto v = validate(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].index == 1);
}

TEST_CASE("require_valid throws InvalidTractogram") {
  Tractogram t;
  t.coords.assign(9, 0.0);
  t.offsets = {0, 5, 3};
  try {
    require_valid(t);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidTractogram);
  }
}

TEST_CASE("stats counts vertices, streamlines and single-point streamlines") {
  auto t = two_streamlines();
  t.vertex_scalars.set("fa", AttributeField{1, {0.5, 0.1, 0.9, 0.3}, DeclaredType::Float32});
  const auto s = stats(t);
  CHECK(s.streamline_count == 2);
  CHECK(s.vertex_count == 4);
  CHECK(s.single_point_streamlines == 1);
  REQUIRE(s.bbox);
  CHECK(s.bbox->min == Vec3{0, 0, 0});
  CHECK(s.bbox->max == Vec3{5, 5, 5});
  REQUIRE(s.attributes.size() == 1);
  CHECK(s.attributes[0].min == 0.1);
  CHECK(s.attributes[0].max == 0.9);

  CHECK(!stats(Tractogram{}).bbox);
}

TEST_CASE("stats agree with offsets on random tractograms") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto t = testing::random_tractogram(rng, {.allow_empty = true});
    const auto s = stats(t);
    CHECK(s.vertex_count == t.offsets.back());
    CHECK(s.streamline_count == t.offsets.size() - 1);
    CHECK(validate(t).empty());
  }
}

TEST_CASE("OrderedMap keeps insertion order and replaces in place") {
  OrderedMap<int> m;
  m.set("b", 1);
  m.set("a", 2);
  m.set("b", 3);
  std::vector<std::string> keys;
  for (const auto& [k, v] : m) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"b", "a"});
  CHECK(m.at("b") == 3);
  CHECK(m.erase("b"));
  CHECK(!m.contains("b"));
  CHECK_THROWS_AS(m.at("zzz"), std::out_of_range);
}

TEST_CASE("declared type names round-trip") {
  for (auto t : testing::kAllTypes) {
    CHECK(parse_declared_type(to_string(t)) == t);
  }
  CHECK(!parse_declared_type("float16"));
  CHECK(byte_size(DeclaredType::UInt16) == 2);
  CHECK(is_integer(DeclaredType::Int64));
  CHECK(!is_integer(DeclaredType::Float64));
}
