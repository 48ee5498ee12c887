#pragma once

#include <cstddef>
#include <cstdint>

#include "trako/model.hpp"

namespace trako::gen {

struct GeneratorConfig {
  std::size_t streamlines = 1000;
  std::size_t points = 100;  // vertices per streamline
  double box = 200.0;        // edge length of the cube centred on the origin, mm
  double step = 0.5;         // distance between consecutive vertices, mm, in (0, 1]
  std::size_t scalars = 0;
  std::size_t properties = 0;
  std::uint64_t seed = 0;

  /// Throws Errc::InvalidArgument on out-of-range settings.
  void check() const;
};

/// Deterministic synthetic tractogram. Streamlines are smooth random walks
/// with fixed step length that reflect off the box walls; coordinates are
/// float32-representable so every file format stores them exactly.
///
/// Scalar field i is "scalar<i>", property field j is "property<j>". Every
/// third field (index % 3 == 2) is multi-component (9 for scalars, 10 for
/// properties); odd-indexed fields are int32 labels in [0, 39], the rest
/// float32.
Tractogram generate(const GeneratorConfig& config);

}  // namespace trako::gen
