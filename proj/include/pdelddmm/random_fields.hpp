#pragma once

// Smooth band-limited random fields for derivative checks and tests.

#include <cmath>
#include <numbers>

#include "diffop.hpp"
#include "grid.hpp"
#include "rng.hpp"

namespace pdelddmm {

/// White noise restricted to integer wavenumbers |k| <= max_mode, scaled so
/// that max |f| = amplitude.
inline ScalarField random_smooth_scalar(const Grid& g, Rng& rng, double max_mode, double amplitude)
{
  const auto fg = fourier(g);
  std::vector<double> noise(g.size());
  for (auto& x : noise)
    x = rng.normal();
  auto s = fg->forward(noise);
  for (std::size_t c = 0; c < s.size(); ++c) {
    double k2 = 0.0;
    for (int a = 0; a < g.ndim(); ++a) {
      const double kint = fg->full_wavenumber(a)[c] * g.extent(a) / (2.0 * std::numbers::pi);
      k2 += kint * kint;
    }
    if (k2 > max_mode * max_mode)
      s[c] = 0.0;
  }
  ScalarField f(g, fg->inverse(s));
  const double m = max_abs(f);
  if (m > 0.0)
    f *= amplitude / m;
  return f;
}

/// Each component drawn independently; max pointwise norm = amplitude.
inline VectorField random_smooth_vector(const Grid& g, Rng& rng, double max_mode, double amplitude)
{
  VectorField v(g);
  for (int a = 0; a < g.ndim(); ++a)
    v.set_component(a, random_smooth_scalar(g, rng, max_mode, 1.0));
  const double m = max_abs(v);
  if (m > 0.0)
    v *= amplitude / m;
  return v;
}

} // namespace pdelddmm
