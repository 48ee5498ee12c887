#include "trako/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "trako/error.hpp"

namespace trako::gen {

namespace {

// std::uniform_real_distribution and std::normal_distribution are not
// specified bit-for-bit, so draw from the engine directly.
class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

  double normal() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

Vec3 normalized(Vec3 v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (n == 0.0) return {1.0, 0.0, 0.0};
  return {v[0] / n, v[1] / n, v[2] / n};
}

constexpr int kLabelCount = 40;

}  // namespace

void GeneratorConfig::check() const {
  if (streamlines < 1) throw Error(Errc::InvalidArgument, "generator needs at least 1 streamline");
  if (points < 1) throw Error(Errc::InvalidArgument, "generator needs at least 1 point per streamline");
  if (!(box > 0.0) || !std::isfinite(box)) throw Error(Errc::InvalidArgument, "generator box must be positive");
  if (!(step > 0.0) || step > 1.0) throw Error(Errc::InvalidArgument, "generator step must lie in (0, 1] mm");
}

Tractogram generate(const GeneratorConfig& config) {
  config.check();
  Random rng(config.seed);
  Tractogram t;
  t.space = std::string(space::kScanner);
  const std::size_t vertices = config.streamlines * config.points;
  t.coords.reserve(3 * vertices);
  t.offsets.reserve(config.streamlines + 1);

  const double half = config.box / 2.0;
  // Shrunk by the worst-case float32 rounding of both endpoints so the
  // stored step never exceeds `step`.
  const double step = std::max(config.step - 8.0 * half * 0x1p-24, 0.5 * config.step);
  const double wobble = 0.15;

  for (std::size_t s = 0; s < config.streamlines; ++s) {
    Vec3 p{rng.uniform(-0.8, 0.8) * half, rng.uniform(-0.8, 0.8) * half, rng.uniform(-0.8, 0.8) * half};
    Vec3 dir = normalized({rng.normal(), rng.normal(), rng.normal()});
    for (std::size_t i = 0; i < config.points; ++i) {
      if (i > 0) {
        dir = normalized({dir[0] + wobble * rng.normal(), dir[1] + wobble * rng.normal(),
                          dir[2] + wobble * rng.normal()});
        for (int c = 0; c < 3; ++c) {
          double x = p[c] + step * dir[c];
          // Mirroring across a wall never lengthens the step.
          if (x > half) {
            x = 2.0 * half - x;
            dir[c] = -dir[c];
          } else if (x < -half) {
            x = -2.0 * half - x;
            dir[c] = -dir[c];
          }
          p[c] = std::clamp(x, -half, half);
        }
      }
      for (int c = 0; c < 3; ++c) {
        p[c] = static_cast<float>(p[c]);
        t.coords.push_back(p[c]);
      }
    }
    t.offsets.push_back(t.offsets.back() + config.points);
  }

  for (std::size_t i = 0; i < config.scalars; ++i) {
    AttributeField f;
    f.dims = i % 3 == 2 ? 9 : 1;
    const bool label = i % 2 == 1;
    f.declared_type = label ? DeclaredType::Int32 : DeclaredType::Float32;
    f.values.resize(vertices * f.dims);
    for (std::size_t v = 0; v < vertices; ++v) {
      for (std::size_t d = 0; d < f.dims; ++d) {
        double value;
        if (label) {
          value = static_cast<double>(rng.below(kLabelCount));
        } else {
          // Smooth in space plus a little noise, roughly in [0, 1].
          const double x = t.coords[3 * v] / config.box, y = t.coords[3 * v + 1] / config.box;
          value = 0.5 + 0.4 * std::sin(6.0 * x + static_cast<double>(d)) * std::cos(5.0 * y) + 0.05 * rng.normal();
        }
        f.values[v * f.dims + d] = static_cast<float>(value);
      }
    }
    t.vertex_scalars.set("scalar" + std::to_string(i), std::move(f));
  }

  for (std::size_t j = 0; j < config.properties; ++j) {
    AttributeField f;
    f.dims = j % 3 == 2 ? 10 : 1;
    const bool label = j % 2 == 1;
    f.declared_type = label ? DeclaredType::Int32 : DeclaredType::Float32;
    f.values.resize(config.streamlines * f.dims);
    for (auto& value : f.values) {
      value = label ? static_cast<double>(rng.below(kLabelCount)) : static_cast<float>(rng.uniform(0.0, 100.0));
    }
    t.fiber_properties.set("property" + std::to_string(j), std::move(f));
  }
  return t;
}

}  // namespace trako::gen
