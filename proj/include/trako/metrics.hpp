#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "trako/model.hpp"

namespace trako::metrics {

inline constexpr int kDefaultBins = 128;

struct ErrorStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double sum = 0.0;
  std::size_t count = 0;

  bool operator==(const ErrorStats&) const = default;
};

/// Stats over nonnegative errors; all zero for an empty sequence.
ErrorStats summarize(std::span<const double> errors);

/// Percent saved: 100 * (1 - compressed / original).
double compression_ratio(double original_size, double compressed_size);
/// original / compressed.
double compression_factor(double original_size, double compressed_size);

/// Euclidean distance between corresponding vertices. Throws TopologyMismatch
/// unless both tractograms have identical offsets.
std::vector<double> vertex_distances(const Tractogram& original, const Tractogram& restored);
ErrorStats pointwise_errors(const Tractogram& original, const Tractogram& restored);

/// First and last vertex of every streamline (one vertex for length-1 ones).
std::vector<double> endpoint_distances(const Tractogram& original, const Tractogram& restored);
ErrorStats endpoint_errors(const Tractogram& original, const Tractogram& restored);

/// |original - restored| per element value, one entry per field. Vertex
/// scalars come first; a property whose name clashes with a scalar is keyed
/// "property:<name>". Throws FieldMismatch on differing names, dims or counts.
OrderedMap<ErrorStats> attribute_errors(const Tractogram& original, const Tractogram& restored);

/// Mean over x, y, z of the Bhattacharyya coefficient of the vertex-coordinate
/// histograms, binned over the union range of both inputs.
double bhattacharyya_overlap(const Tractogram& a, const Tractogram& b, int bins = kDefaultBins);

struct ComparisonReport {
  std::uint64_t original_size = 0;
  std::uint64_t compressed_size = 0;
  double ratio = 0.0;
  double factor = 0.0;
  ErrorStats vertex_errors;
  ErrorStats endpoint_errors;
  OrderedMap<ErrorStats> attribute_errors;
  double bhattacharyya = 1.0;
  double encode_ms = 0.0;
  double decode_ms = 0.0;
  std::size_t streamline_count = 0;
  std::size_t vertex_count = 0;
  std::size_t single_point_streamlines = 0;

  bool operator==(const ComparisonReport&) const = default;
};

ComparisonReport compare(const Tractogram& original, const Tractogram& restored, std::uint64_t original_size,
                         std::uint64_t compressed_size, int bins = kDefaultBins);

nlohmann::ordered_json to_json(const ComparisonReport& report);
ComparisonReport report_from_json(const nlohmann::ordered_json& json);
std::string format_table(const ComparisonReport& report);

}  // namespace trako::metrics
