#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "spocta/cli/scene_file.hpp"

namespace spocta {

enum class Distribution { Uniform, SurfaceLike };
Distribution parse_distribution(std::string_view text);
std::string_view to_string(Distribution d);

struct GenOptions {
  std::uint16_t extent = 64;
  double density = 0.01;
  Distribution distribution = Distribution::Uniform;
  std::uint64_t seed = 0;
  std::size_t channels = 16;
  Dtype dtype = Dtype::Int8;
  /// Fraction of non-zero feature channels.
  double feature_density = 0.5;
};

/// Uniform integer in [0, n) that does not depend on the standard library's
/// distribution implementation.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n);

/// round(density * extent^3) distinct sites (at least one), sorted.
/// Uniform picks sites uniformly; SurfaceLike fills each column nearest a
/// smooth height field first. Throws Error(BadDensity) unless density is
/// in (0, 1].
std::vector<Coordinate> generate_coords(std::uint16_t extent, double density,
                                        Distribution distribution, std::uint64_t seed);

Scene generate_scene(const GenOptions& options);

}  // namespace spocta
