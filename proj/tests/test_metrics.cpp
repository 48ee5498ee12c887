#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "trako/codec.hpp"
#include "trako/container.hpp"
#include "trako/error.hpp"
#include "trako/generator.hpp"
#include "trako/metrics.hpp"

using namespace trako;
using namespace trako::metrics;

namespace {

template <typename F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected trako::Error");
  return Errc::InvalidArgument;
}

Tractogram shifted(Tractogram t, double dx) {
  for (std::size_t v = 0; v < t.vertex_count(); ++v) t.coords[3 * v] += dx;
  return t;
}

// Straightforward per-axis histogram overlap, written independently of the
// library: explicit bin edges and a search for the containing bin.
double reference_overlap(const Tractogram& a, const Tractogram& b, int bins) {
  double total = 0;
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> xa, xb;
    for (std::size_t v = 0; v < a.vertex_count(); ++v) xa.push_back(a.coords[3 * v + axis]);
    for (std::size_t v = 0; v < b.vertex_count(); ++v) xb.push_back(b.coords[3 * v + axis]);
    const double lo = std::min(*std::min_element(xa.begin(), xa.end()), *std::min_element(xb.begin(), xb.end()));
    const double hi = std::max(*std::max_element(xa.begin(), xa.end()), *std::max_element(xb.begin(), xb.end()));
    if (hi == lo) {
      total += 1;
      continue;
    }
    auto hist = [&](const std::vector<double>& xs) {
      std::vector<double> h(bins, 0);
      for (double x : xs) {
        int k = bins - 1;
        for (int i = 0; i < bins; ++i) {
          const double right = lo + (hi - lo) * (i + 1) / bins;
          if (x < right) {
            k = i;
            break;
          }
        }
        h[k] += 1.0 / static_cast<double>(xs.size());
      }
      return h;
    };
    const auto p = hist(xa), q = hist(xb);
    for (int i = 0; i < bins; ++i) total += std::sqrt(p[i] * q[i]);
  }
  return total / 3;
}

Tractogram sample(std::uint64_t seed, std::size_t scalars = 2, std::size_t properties = 2) {
  gen::GeneratorConfig g;
  g.streamlines = 60;
  g.points = 40;
  g.scalars = scalars;
  g.properties = properties;
  g.seed = seed;
  return gen::generate(g);
}

}  // namespace

TEST_CASE("compression ratio and factor") {
  CHECK(compression_ratio(16.55, 1.46) == doctest::Approx(91.178).epsilon(1e-4));
  CHECK(compression_factor(16.55, 1.46) == doctest::Approx(11.3356).epsilon(1e-4));
  CHECK(compression_ratio(10, 10) == 0.0);
  CHECK(compression_ratio(10, 5) == 50.0);
  CHECK(compression_factor(10, 10) == 1.0);
  CHECK(compression_factor(10, 1) == 10.0);
  CHECK(error_of([] { compression_ratio(0, 1); }) == Errc::ZeroOriginalSize);
  CHECK(error_of([] { compression_factor(1, 0); }) == Errc::ZeroCompressedSize);
}

TEST_CASE("summarize computes population statistics") {
  const std::vector<double> e{1, 2, 3, 4};
  const auto s = summarize(e);
  CHECK(s.min == 1);
  CHECK(s.max == 4);
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(s.sum == 10);
  CHECK(s.count == 4);
  CHECK(summarize({}) == ErrorStats{});
}

TEST_CASE("identical tractograms have zero error and unit overlap") {
  const auto t = sample(1);
  const auto p = pointwise_errors(t, t);
  CHECK(p.max == 0);
  CHECK(endpoint_errors(t, t).max == 0);
  for (const auto& [name, s] : attribute_errors(t, t)) CHECK(s.max == 0);
  CHECK(std::abs(bhattacharyya_overlap(t, t) - 1.0) <= 1e-12);
  const auto r = compare(t, t, 100, 100);
  CHECK(r.ratio == 0);
  CHECK(r.factor == 1);
  CHECK(r.bhattacharyya == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a uniform shift shows up as a constant error") {
  const auto t = sample(2);
  const auto u = shifted(t, 0.1);
  const auto p = pointwise_errors(t, u);
  CHECK(p.min == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(p.max == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(p.mean == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(p.std == doctest::Approx(0.0).epsilon(1e-9));
  const auto e = endpoint_errors(t, u);
  CHECK(e.count == 2 * t.streamline_count());
  CHECK(e.mean == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("endpoint errors use one vertex for single-point streamlines") {
  Tractogram a;
  a.add_streamline(std::vector<double>{0, 0, 0});
  a.add_streamline(std::vector<double>{0, 0, 0, 1, 0, 0, 2, 0, 0});
  auto b = a;
  b.coords[3 * 2] = 1.5;  // middle vertex of the second streamline
  CHECK(endpoint_distances(a, b).size() == 3);
  CHECK(endpoint_errors(a, b).max == 0);
  CHECK(pointwise_errors(a, b).max == 0.5);
}

TEST_CASE("mismatched inputs are rejected") {
  const auto t = sample(3);
  auto other = t;
  other.add_streamline(std::vector<double>{0, 0, 0});
  CHECK(error_of([&] { pointwise_errors(t, other); }) == Errc::TopologyMismatch);
  CHECK(error_of([&] { endpoint_errors(t, other); }) == Errc::StreamlineCountMismatch);

  auto renamed = t;
  renamed.vertex_scalars.erase("scalar0");
  CHECK(error_of([&] { attribute_errors(t, renamed); }) == Errc::FieldMismatch);

  CHECK(error_of([&] { bhattacharyya_overlap(t, Tractogram{}); }) == Errc::EmptyTractogram);
  CHECK(error_of([&] { bhattacharyya_overlap(t, t, 1); }) == Errc::InvalidArgument);
}

TEST_CASE("overlap is zero on disjoint supports") {
  Tractogram neg, pos;
  neg.add_streamline(std::vector<double>{-3, -3, -3, -2, -1, -2});
  pos.add_streamline(std::vector<double>{1, 2, 1, 3, 3, 3});
  CHECK(bhattacharyya_overlap(neg, pos) == 0.0);
}

TEST_CASE("overlap matches an independent histogram computation") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20; ++i) {
    const auto a = testing::random_tractogram(rng, {.scalars = 0, .properties = 0});
    const auto b = testing::random_tractogram(rng, {.box = 150, .scalars = 0, .properties = 0});
    for (int bins : {2, 7, 128}) {
      CHECK(bhattacharyya_overlap(a, b, bins) == doctest::Approx(reference_overlap(a, b, bins)).epsilon(1e-12));
    }
  }
}

TEST_CASE("overlap is symmetric and ignores vertex order") {
  const auto a = sample(5);
  const auto b = shifted(sample(6), 3.0);
  CHECK(bhattacharyya_overlap(a, b) == doctest::Approx(bhattacharyya_overlap(b, a)).epsilon(1e-14));
  Tractogram reversed;
  for (std::size_t v = a.vertex_count(); v-- > 0;) {
    const auto p = a.vertex(v);
    reversed.add_streamline(std::vector<double>{p[0], p[1], p[2]});
  }
  CHECK(bhattacharyya_overlap(reversed, b) == doctest::Approx(bhattacharyya_overlap(a, b)).epsilon(1e-14));
}

TEST_CASE("q=14 round-trip stays within the quantization bound") {
  const auto t = sample(7);
  codec::CodecConfig c;
  const auto back = container::parse_document(container::build_document(t, c));
  const auto s = stats(t);
  double worst_half_step = 0;
  for (int a = 0; a < 3; ++a) {
    worst_half_step = std::max(worst_half_step, (s.bbox->max[a] - s.bbox->min[a]) / (2.0 * 16383.0));
  }
  const auto p = pointwise_errors(t, back);
  CHECK(p.max <= std::sqrt(3.0) * worst_half_step);
  CHECK(endpoint_errors(t, back).max <= p.max);
  const auto attrs = attribute_errors(t, back);
  CHECK(attrs.at("scalar1").max == 0);  // int32 labels are lossless
  CHECK(bhattacharyya_overlap(t, back) >= 0.99);
}

TEST_CASE("report serialization round-trips") {
  const auto t = sample(8, 3, 3);
  codec::CodecConfig c;
  c.bits = 10;
  const auto back = container::parse_document(container::build_document(t, c));
  auto r = compare(t, back, 123456, 7890);
  r.encode_ms = 12.5;
  r.decode_ms = 3.25;
  const auto j = to_json(r);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(std::vector<std::string>(keys.begin(), keys.begin() + 11) ==
        std::vector<std::string>{"original_size", "compressed_size", "ratio", "factor", "vertex_errors",
                                 "endpoint_errors", "attribute_errors", "bhattacharyya", "encode_ms", "decode_ms",
                                 "streamline_count"});
  CHECK(report_from_json(nlohmann::ordered_json::parse(j.dump())) == r);
  CHECK(std::abs(r.factor - 100.0 / (100.0 - r.ratio)) <= 1e-9 * r.factor);
  const auto table = format_table(r);
  CHECK(table.find("bhattacharyya") != std::string::npos);
  CHECK(table.find("scalar2") != std::string::npos);
}

TEST_CASE("property names clashing with scalar names are prefixed") {
  Tractogram t;
  t.add_streamline(std::vector<double>{0, 0, 0});
  t.vertex_scalars.set("x", {1, {1}, DeclaredType::Float32});
  t.fiber_properties.set("x", {1, {2}, DeclaredType::Float32});
  const auto e = attribute_errors(t, t);
  CHECK(e.contains("x"));
  CHECK(e.contains("property:x"));
}
