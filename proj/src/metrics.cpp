#include "trako/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "trako/error.hpp"

namespace trako::metrics {

namespace {

using Json = nlohmann::ordered_json;

double distance(const Tractogram& a, const Tractogram& b, std::size_t v) {
  const double dx = a.coords[3 * v] - b.coords[3 * v];
  const double dy = a.coords[3 * v + 1] - b.coords[3 * v + 1];
  const double dz = a.coords[3 * v + 2] - b.coords[3 * v + 2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void check_fields(const OrderedMap<AttributeField>& a, const OrderedMap<AttributeField>& b, const char* kind) {
  if (a.size() != b.size()) {
    throw Error(Errc::FieldMismatch, std::string(kind) + " field counts differ: " + std::to_string(a.size()) +
                                         " vs " + std::to_string(b.size()));
  }
  for (const auto& [name, f] : a) {
    const auto* g = b.find(name);
    if (!g) throw Error(Errc::FieldMismatch, std::string(kind) + " field '" + name + "' missing from restored data");
    if (g->dims != f.dims || g->values.size() != f.values.size()) {
      throw Error(Errc::FieldMismatch, std::string(kind) + " field '" + name + "' differs in dims or length");
    }
  }
}

ErrorStats field_errors(const AttributeField& a, const AttributeField& b) {
  std::vector<double> diff(a.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(a.values[i] - b.values[i]);
  return summarize(diff);
}

Json stats_json(const ErrorStats& s) {
  return Json{{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"std", s.std}, {"sum", s.sum}, {"count", s.count}};
}

ErrorStats stats_from_json(const Json& j) {
  ErrorStats s;
  s.min = j.at("min").get<double>();
  s.max = j.at("max").get<double>();
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  s.sum = j.value("sum", s.mean * static_cast<double>(j.value("count", std::size_t{0})));
  s.count = j.value("count", std::size_t{0});
  return s;
}

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

}  // namespace

ErrorStats summarize(std::span<const double> errors) {
  ErrorStats s;
  if (errors.empty()) return s;
  s.count = errors.size();
  s.min = errors[0];
  s.max = errors[0];
  for (double e : errors) {
    s.min = std::min(s.min, e);
    s.max = std::max(s.max, e);
    s.sum += e;
  }
  s.mean = s.sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (double e : errors) sq += (e - s.mean) * (e - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.count));
  // Keep min <= mean <= max despite summation rounding.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

double compression_ratio(double original_size, double compressed_size) {
  if (!(original_size > 0.0)) throw Error(Errc::ZeroOriginalSize, "compression ratio needs original size > 0");
  return 100.0 * (1.0 - compressed_size / original_size);
}

double compression_factor(double original_size, double compressed_size) {
  if (!(compressed_size > 0.0)) throw Error(Errc::ZeroCompressedSize, "compression factor needs compressed size > 0");
  return original_size / compressed_size;
}

std::vector<double> vertex_distances(const Tractogram& original, const Tractogram& restored) {
  if (original.offsets != restored.offsets || original.coords.size() != restored.coords.size()) {
    throw Error(Errc::TopologyMismatch,
                "streamline topology differs: " + std::to_string(original.streamline_count()) + " streamlines / " +
                    std::to_string(original.vertex_count()) + " vertices vs " +
                    std::to_string(restored.streamline_count()) + " / " + std::to_string(restored.vertex_count()));
  }
  std::vector<double> d(original.vertex_count());
  for (std::size_t v = 0; v < d.size(); ++v) d[v] = distance(original, restored, v);
  return d;
}

ErrorStats pointwise_errors(const Tractogram& original, const Tractogram& restored) {
  return summarize(vertex_distances(original, restored));
}

std::vector<double> endpoint_distances(const Tractogram& original, const Tractogram& restored) {
  if (original.streamline_count() != restored.streamline_count()) {
    throw Error(Errc::StreamlineCountMismatch, "streamline counts differ: " +
                                                   std::to_string(original.streamline_count()) + " vs " +
                                                   std::to_string(restored.streamline_count()));
  }
  if (original.offsets != restored.offsets || original.coords.size() != restored.coords.size()) {
    throw Error(Errc::TopologyMismatch, "streamline lengths differ");
  }
  std::vector<double> d;
  d.reserve(2 * original.streamline_count());
  for (std::size_t s = 0; s < original.streamline_count(); ++s) {
    const auto first = original.offsets[s];
    const auto last = original.offsets[s + 1] - 1;
    d.push_back(distance(original, restored, first));
    if (last != first) d.push_back(distance(original, restored, last));
  }
  return d;
}

ErrorStats endpoint_errors(const Tractogram& original, const Tractogram& restored) {
  return summarize(endpoint_distances(original, restored));
}

OrderedMap<ErrorStats> attribute_errors(const Tractogram& original, const Tractogram& restored) {
  check_fields(original.vertex_scalars, restored.vertex_scalars, "scalar");
  check_fields(original.fiber_properties, restored.fiber_properties, "property");
  OrderedMap<ErrorStats> out;
  for (const auto& [name, f] : original.vertex_scalars) out.set(name, field_errors(f, restored.vertex_scalars.at(name)));
  for (const auto& [name, f] : original.fiber_properties) {
    const std::string key = original.vertex_scalars.contains(name) ? "property:" + name : name;
    out.set(key, field_errors(f, restored.fiber_properties.at(name)));
  }
  return out;
}

double bhattacharyya_overlap(const Tractogram& a, const Tractogram& b, int bins) {
  if (bins < 2) throw Error(Errc::InvalidArgument, "bhattacharyya_overlap needs bins >= 2, got " + std::to_string(bins));
  if (a.vertex_count() == 0 || b.vertex_count() == 0) {
    throw Error(Errc::EmptyTractogram, "bhattacharyya_overlap needs two nonempty tractograms");
  }
  double total = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    double lo = a.coords[axis], hi = a.coords[axis];
    for (const auto* t : {&a, &b}) {
      for (std::size_t v = 0; v < t->vertex_count(); ++v) {
        lo = std::min(lo, t->coords[3 * v + axis]);
        hi = std::max(hi, t->coords[3 * v + axis]);
      }
    }
    if (!(hi > lo)) {
      total += 1.0;  // both marginals are the same point mass
      continue;
    }
    const double scale = bins / (hi - lo);
    auto histogram = [&](const Tractogram& t) {
      std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
      for (std::size_t v = 0; v < t.vertex_count(); ++v) {
        const auto k = static_cast<std::size_t>((t.coords[3 * v + axis] - lo) * scale);
        h[std::min(k, h.size() - 1)] += 1.0;
      }
      const double n = static_cast<double>(t.vertex_count());
      for (auto& x : h) x /= n;
      return h;
    };
    const auto p = histogram(a);
    const auto q = histogram(b);
    double coefficient = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) coefficient += std::sqrt(p[i] * q[i]);
    total += coefficient;
  }
  return std::clamp(total / 3.0, 0.0, 1.0);
}

ComparisonReport compare(const Tractogram& original, const Tractogram& restored, std::uint64_t original_size,
                         std::uint64_t compressed_size, int bins) {
  ComparisonReport r;
  r.original_size = original_size;
  r.compressed_size = compressed_size;
  r.ratio = compression_ratio(static_cast<double>(original_size), static_cast<double>(compressed_size));
  r.factor = compression_factor(static_cast<double>(original_size), static_cast<double>(compressed_size));
  r.vertex_errors = pointwise_errors(original, restored);
  r.endpoint_errors = endpoint_errors(original, restored);
  r.attribute_errors = attribute_errors(original, restored);
  r.bhattacharyya = original.vertex_count() == 0 && restored.vertex_count() == 0
                        ? 1.0
                        : bhattacharyya_overlap(original, restored, bins);
  const auto s = stats(original);
  r.streamline_count = s.streamline_count;
  r.vertex_count = s.vertex_count;
  r.single_point_streamlines = s.single_point_streamlines;
  return r;
}

nlohmann::ordered_json to_json(const ComparisonReport& r) {
  Json j = Json::object();
  j["original_size"] = r.original_size;
  j["compressed_size"] = r.compressed_size;
  j["ratio"] = r.ratio;
  j["factor"] = r.factor;
  j["vertex_errors"] = stats_json(r.vertex_errors);
  j["endpoint_errors"] = stats_json(r.endpoint_errors);
  Json attrs = Json::object();
  for (const auto& [name, s] : r.attribute_errors) attrs[name] = stats_json(s);
  j["attribute_errors"] = std::move(attrs);
  j["bhattacharyya"] = r.bhattacharyya;
  j["encode_ms"] = r.encode_ms;
  j["decode_ms"] = r.decode_ms;
  j["streamline_count"] = r.streamline_count;
  j["vertex_count"] = r.vertex_count;
  j["single_point_streamlines"] = r.single_point_streamlines;
  return j;
}

ComparisonReport report_from_json(const nlohmann::ordered_json& j) {
  try {
    ComparisonReport r;
    r.original_size = j.at("original_size").get<std::uint64_t>();
    r.compressed_size = j.at("compressed_size").get<std::uint64_t>();
    r.ratio = j.at("ratio").get<double>();
    r.factor = j.at("factor").get<double>();
    r.vertex_errors = stats_from_json(j.at("vertex_errors"));
    r.endpoint_errors = stats_from_json(j.at("endpoint_errors"));
    for (const auto& [name, s] : j.at("attribute_errors").items()) r.attribute_errors.set(name, stats_from_json(s));
    r.bhattacharyya = j.at("bhattacharyya").get<double>();
    r.encode_ms = j.value("encode_ms", 0.0);
    r.decode_ms = j.value("decode_ms", 0.0);
    r.streamline_count = j.value("streamline_count", std::size_t{0});
    r.vertex_count = j.value("vertex_count", std::size_t{0});
    r.single_point_streamlines = j.value("single_point_streamlines", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedJson, std::string("comparison report: ") + e.what());
  }
}

std::string format_table(const ComparisonReport& r) {
  std::string out;
  out += fmt("%-22s %llu\n", "original size [B]", static_cast<unsigned long long>(r.original_size));
  out += fmt("%-22s %llu\n", "compressed size [B]", static_cast<unsigned long long>(r.compressed_size));
  out += fmt("%-22s %.2f %%\n", "compression ratio", r.ratio);
  out += fmt("%-22s %.3f x\n", "compression factor", r.factor);
  out += fmt("%-22s %zu (%zu vertices, %zu single-point)\n", "streamlines", r.streamline_count, r.vertex_count,
             r.single_point_streamlines);
  out += fmt("%-22s %12s %12s %12s %12s\n", "", "min", "max", "mean", "std");
  auto row = [&](const std::string& label, const ErrorStats& s) {
    out += fmt("%-22s %12.6g %12.6g %12.6g %12.6g\n", label.c_str(), s.min, s.max, s.mean, s.std);
  };
  row("vertex error [mm]", r.vertex_errors);
  row("endpoint error [mm]", r.endpoint_errors);
  for (const auto& [name, s] : r.attribute_errors) row(name, s);
  out += fmt("%-22s %.6f\n", "bhattacharyya B", r.bhattacharyya);
  out += fmt("%-22s %.1f ms encode, %.1f ms decode\n", "timings", r.encode_ms, r.decode_ms);
  return out;
}

}  // namespace trako::metrics
