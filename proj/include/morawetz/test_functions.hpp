#pragma once

// Reproducible smooth test functions: windowed sums of Gaussians with random
// centers, widths and amplitudes. They are continuum functions, so the same
// family can be sampled on several grids for refinement studies.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "morawetz/grid.hpp"
#include "morawetz/smooth.hpp"

namespace morawetz {

struct GaussianSum {
  double lo = 0.0, hi = 1.0, ramp = 1.0;  // window: rises on [lo, lo+ramp], falls on [hi-ramp, hi]
  std::vector<double> centers, widths, amplitudes;

  double window(double r) const {
    return unit_step((r - lo) / ramp) * (1.0 - unit_step((r - (hi - ramp)) / ramp));
  }

  double operator()(double r) const {
    const double win = window(r);
    if (win == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double x = (r - centers[i]) / widths[i];
      s += amplitudes[i] * std::exp(-x * x);
    }
    return win * s;
  }

  Vec sample(const RadialGrid& grid) const {
    Vec u(grid.size());
    for (int j = 0; j < grid.size(); ++j) u[j] = (*this)(grid.r()[j]);
    return u;
  }
};

struct GaussianSumFamily {
  double lo, hi, ramp;
  double min_width, max_width;
  int terms = 3;
};

inline std::vector<GaussianSum> make_gaussian_sums(const GaussianSumFamily& fam, int count,
                                                   std::uint64_t seed = 42) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GaussianSum> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    GaussianSum g;
    g.lo = fam.lo;
    g.hi = fam.hi;
    g.ramp = fam.ramp;
    for (int i = 0; i < fam.terms; ++i) {
      g.centers.push_back(fam.lo + (fam.hi - fam.lo) * unit(rng));
      g.widths.push_back(fam.min_width + (fam.max_width - fam.min_width) * unit(rng));
      g.amplitudes.push_back(2.0 * unit(rng) - 1.0);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace morawetz
