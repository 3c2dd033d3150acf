#include "spocta/cli/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_set>

#include "spocta/error.hpp"

namespace spocta {

Distribution parse_distribution(std::string_view text) {
  if (text == "uniform") return Distribution::Uniform;
  if (text == "surface" || text == "surface-like") return Distribution::SurfaceLike;
  throw Error(ErrorCode::ConfigInvalid, "unknown distribution '" + std::string(text) + "'");
}

std::string_view to_string(Distribution d) {
  return d == Distribution::Uniform ? "uniform" : "surface-like";
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
  // Rejection keeps every residue equally likely.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

namespace {

Coordinate from_index(std::uint64_t i, std::uint64_t e) {
  return Coordinate{static_cast<std::uint16_t>(i % e), static_cast<std::uint16_t>((i / e) % e),
                    static_cast<std::uint16_t>(i / (e * e))};
}

std::vector<Coordinate> uniform_sites(std::uint64_t e, std::uint64_t n, std::mt19937_64& rng) {
  const std::uint64_t cells = e * e * e;
  std::vector<Coordinate> out;
  out.reserve(n);
  if (cells <= (1u << 24)) {
    std::vector<std::uint32_t> idx(cells);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::swap(idx[i], idx[i + bounded_draw(rng, cells - i)]);
      out.push_back(from_index(idx[i], e));
    }
  } else {
    std::unordered_set<std::uint64_t> taken;
    while (out.size() < n) {
      const std::uint64_t i = bounded_draw(rng, cells);
      if (taken.insert(i).second) out.push_back(from_index(i, e));
    }
  }
  return out;
}

// Cells nearest a smooth height field come first in every column; columns
// are filled in random order at each distance rank.
std::vector<Coordinate> surface_sites(std::uint64_t e, std::uint64_t n, std::mt19937_64& rng) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  constexpr double kAmplitude = 0.12;
  double phase[3];
  for (double& p : phase) p = kTwoPi * static_cast<double>(bounded_draw(rng, 1u << 20)) / (1u << 20);
  const double ed = static_cast<double>(e);
  auto height = [&](double x, double y) {
    const double wave = 0.5 * std::sin(kTwoPi * x / ed + phase[0]) +
                        0.3 * std::sin(2.0 * kTwoPi * y / ed + phase[1]) +
                        0.2 * std::sin(kTwoPi * (x + y) / ed + phase[2]);
    return 0.5 * (ed - 1.0) + kAmplitude * ed * wave;
  };

  const std::uint64_t columns = e * e;
  const std::uint64_t ranks = std::min<std::uint64_t>(e, (n + columns - 1) / columns);
  struct Candidate {
    std::uint64_t rank;
    std::uint64_t key;
    Coordinate c;
  };
  std::vector<Candidate> cand;
  cand.reserve(columns * ranks);
  std::vector<std::pair<double, std::uint16_t>> column;
  for (std::uint64_t y = 0; y < e; ++y) {
    for (std::uint64_t x = 0; x < e; ++x) {
      const double h = height(static_cast<double>(x), static_cast<double>(y));
      const auto centre = static_cast<long long>(std::llround(std::clamp(h, 0.0, ed - 1.0)));
      column.clear();
      const long long lo = std::max<long long>(0, centre - static_cast<long long>(ranks));
      const long long hi = std::min<long long>(static_cast<long long>(e) - 1, centre + static_cast<long long>(ranks));
      for (long long z = lo; z <= hi; ++z) {
        column.emplace_back(std::abs(static_cast<double>(z) - h), static_cast<std::uint16_t>(z));
      }
      std::sort(column.begin(), column.end());
      for (std::uint64_t r = 0; r < ranks && r < column.size(); ++r) {
        cand.push_back(Candidate{r, rng(),
                                 Coordinate{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                                            column[r].second}});
      }
    }
  }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.rank, a.key) < std::tie(b.rank, b.key);
  });
  std::vector<Coordinate> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n && i < cand.size(); ++i) out.push_back(cand[i].c);
  return out;
}

}  // namespace

std::vector<Coordinate> generate_coords(std::uint16_t extent, double density,
                                        Distribution distribution, std::uint64_t seed) {
  if (!(density > 0.0) || density > 1.0) {
    throw Error(ErrorCode::BadDensity, "density must lie in (0, 1], got " + std::to_string(density));
  }
  if (extent == 0) throw Error(ErrorCode::ConfigInvalid, "extent must be positive");
  const std::uint64_t e = extent;
  const std::uint64_t cells = e * e * e;
  const auto n = std::clamp<std::uint64_t>(
      static_cast<std::uint64_t>(std::llround(density * static_cast<double>(cells))), 1, cells);
  std::mt19937_64 rng(seed);
  auto coords = distribution == Distribution::Uniform ? uniform_sites(e, n, rng)
                                                      : surface_sites(e, n, rng);
  std::sort(coords.begin(), coords.end());
  return coords;
}

namespace {

template <typename T>
SparseTensor<T> random_features(std::vector<Coordinate> coords, std::size_t channels,
                                double feature_density, std::mt19937_64& rng) {
  SparseTensor<T> t;
  t.channels = channels;
  t.features.resize(coords.size() * channels);
  const auto keep = static_cast<std::uint64_t>(std::llround(feature_density * 1'000'000.0));
  for (T& f : t.features) {
    if (bounded_draw(rng, 1'000'000) >= keep) continue;
    if constexpr (std::is_same_v<T, float>) {
      f = static_cast<float>(1 + bounded_draw(rng, 1000)) / 1000.0f;
    } else {
      f = static_cast<std::int8_t>(1 + bounded_draw(rng, 127));
    }
  }
  t.coords = std::move(coords);
  return t;
}

}  // namespace

Scene generate_scene(const GenOptions& options) {
  if (!(options.feature_density >= 0.0) || options.feature_density > 1.0) {
    throw Error(ErrorCode::BadDensity, "feature density must lie in [0, 1]");
  }
  if (options.channels == 0 || options.channels > 0xffff) {
    throw Error(ErrorCode::ConfigInvalid, "channel count must be in [1, 65535]");
  }
  Scene s;
  s.extent = Coordinate{options.extent, options.extent, options.extent};
  auto coords = generate_coords(options.extent, options.density, options.distribution, options.seed);
  std::mt19937_64 rng(options.seed ^ 0x5eedfea7u);
  if (options.dtype == Dtype::Int8) {
    s.tensor = random_features<std::int8_t>(std::move(coords), options.channels,
                                            options.feature_density, rng);
  } else {
    s.tensor = random_features<float>(std::move(coords), options.channels, options.feature_density, rng);
  }
  return s;
}

}  // namespace spocta
