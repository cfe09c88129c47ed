#pragma once

// Synthetic image pairs with matching background/object segmentations.
//
//   blobs     Gaussian blob and a copy shifted by a whole number of voxels
//   c2circle  annulus with a 60 degree gap ("C") and the closed annulus
//   bull      concentric rings and a copy with radially perturbed rings
//
// Coordinates are in the unit cell of the grid; 3D grids extrude the 2D
// shapes along axis 2, except blobs, which are isotropic.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "rng.hpp"

namespace pdelddmm {

struct SynthPair {
  ScalarField source;
  ScalarField target;
  LabelField source_labels;
  LabelField target_labels;
};

struct SynthOptions {
  std::size_t n = 64;
  int ndim = 2;
  std::uint64_t seed = 0;
  /// Blob shift in voxels along axis 0.
  int shift = 4;
  /// Standard deviation of additive Gaussian noise on both images.
  double noise = 0.0;
};

inline const std::vector<std::string>& synth_names()
{
  static const std::vector<std::string> names{"blobs", "c2circle", "bull"};
  return names;
}

namespace detail {

/// Position relative to the cell centre, in units of the smallest extent.
inline std::array<double, 3> centred(const Grid& g, std::size_t idx)
{
  double ext = g.extent(0);
  for (int a = 1; a < g.ndim(); ++a)
    ext = std::min(ext, g.extent(a));
  std::array<double, 3> p{};
  for (int a = 0; a < g.ndim(); ++a)
    p[a] = (g.coordinate(idx, a) - 0.5 * g.extent(a)) / ext;
  return p;
}

inline SynthPair from_masks(const Grid& g, const std::vector<unsigned>& src, const std::vector<unsigned>& tgt)
{
  SynthPair p{ScalarField(g), ScalarField(g), LabelField(g, src), LabelField(g, tgt)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    p.source[i] = src[i] ? 1.0 : 0.0;
    p.target[i] = tgt[i] ? 1.0 : 0.0;
  }
  return p;
}

inline void add_noise(SynthPair& p, Rng& rng, double sd)
{
  if (sd <= 0.0)
    return;
  for (auto& x : p.source.values)
    x += sd * rng.normal();
  for (auto& x : p.target.values)
    x += sd * rng.normal();
}

inline SynthPair blobs(const Grid& g, const SynthOptions& o, Rng&)
{
  const double width = 6.0 * g.spacing(0);
  SynthPair p{ScalarField(g), ScalarField(g), LabelField(g), LabelField(g)};
  std::array<double, 3> c{}, c_shift{};
  for (int a = 0; a < g.ndim(); ++a)
    c[a] = c_shift[a] = 0.5 * g.extent(a);
  c[0] -= 0.5 * o.shift * g.spacing(0);
  c_shift[0] = c[0] + o.shift * g.spacing(0);
  auto value = [&](std::size_t i, const std::array<double, 3>& centre) {
    double r2 = 0.0;
    for (int a = 0; a < g.ndim(); ++a) {
      double d = g.coordinate(i, a) - centre[a];
      d -= g.extent(a) * std::round(d / g.extent(a));
      r2 += d * d;
    }
    return std::exp(-0.5 * r2 / (width * width));
  };
  for (std::size_t i = 0; i < g.size(); ++i) {
    p.source[i] = value(i, c);
    p.target[i] = value(i, c_shift);
    p.source_labels.labels[i] = p.source[i] >= 0.5;
    p.target_labels.labels[i] = p.target[i] >= 0.5;
  }
  return p;
}

inline SynthPair c2circle(const Grid& g, const SynthOptions&, Rng&)
{
  const double r_in = 0.16, r_out = 0.30;
  const double half_gap = std::numbers::pi / 6.0;
  std::vector<unsigned> src(g.size()), tgt(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto p = centred(g, i);
    const double r = std::hypot(p[0], p[1]);
    const bool ring = r >= r_in && r <= r_out;
    const double theta = std::atan2(p[1], p[0]);
    tgt[i] = ring;
    src[i] = ring && std::abs(theta) > half_gap;
  }
  return from_masks(g, src, tgt);
}

inline SynthPair bull(const Grid& g, const SynthOptions&, Rng& rng)
{
  const std::array<double, 2> radii{0.14, 0.28};
  const double half_width = 0.04;
  const double eps = rng.uniform(0.06, 0.10);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const int lobes = 3;
  std::vector<unsigned> src(g.size()), tgt(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto p = centred(g, i);
    const double r = std::hypot(p[0], p[1]);
    const double theta = std::atan2(p[1], p[0]);
    const double scale = 1.0 + eps * std::cos(lobes * theta + phase);
    for (double r0 : radii) {
      src[i] |= std::abs(r - r0) <= half_width;
      tgt[i] |= std::abs(r - r0 * scale) <= half_width;
    }
  }
  return from_masks(g, src, tgt);
}

} // namespace detail

/// Deterministic in (name, options).
inline SynthPair make_synthetic(const std::string& name, const SynthOptions& o)
{
  if (o.ndim != 2 && o.ndim != 3)
    throw std::invalid_argument("synthetic data supports ndim 2 or 3");
  const Grid g = Grid::unit(o.ndim, o.n);
  Rng rng(o.seed);
  SynthPair p;
  if (name == "blobs")
    p = detail::blobs(g, o, rng);
  else if (name == "c2circle")
    p = detail::c2circle(g, o, rng);
  else if (name == "bull")
    p = detail::bull(g, o, rng);
  else
    throw std::invalid_argument("unknown synthetic pair '" + name + "'");
  detail::add_noise(p, rng, o.noise);
  return p;
}

} // namespace pdelddmm
