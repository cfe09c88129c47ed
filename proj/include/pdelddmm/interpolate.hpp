#pragma once

// Periodic multilinear and nearest-neighbour interpolation at physical points.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace pdelddmm {

enum class InterpolationScheme { linear, nearest };

using Point = std::array<double, 3>;

namespace detail {

struct Stencil {
  std::array<std::size_t, 3> lo{};
  std::array<std::size_t, 3> hi{};
  std::array<double, 3> w{}; // weight of hi
};

inline Stencil stencil(const Grid& g, const Point& x)
{
  Stencil st;
  for (int a = 0; a < g.ndim(); ++a) {
    if (!std::isfinite(x[a]))
      throw std::invalid_argument("non-finite interpolation point");
    const double n = static_cast<double>(g.dim(a));
    double s = x[a] / g.spacing(a);
    s -= n * std::floor(s / n);
    double f = std::floor(s);
    // s can round up to exactly n.
    if (f >= n)
      f -= n;
    const auto i = static_cast<std::size_t>(f);
    st.lo[a] = i;
    st.hi[a] = (i + 1 == g.dim(a)) ? 0 : i + 1;
    st.w[a] = s - std::floor(s);
  }
  return st;
}

inline std::size_t wrap_index(const Grid& g, const Point& x)
{
  std::array<std::size_t, 3> i{};
  for (int a = 0; a < g.ndim(); ++a) {
    if (!std::isfinite(x[a]))
      throw std::invalid_argument("non-finite interpolation point");
    const long n = static_cast<long>(g.dim(a));
    long k = std::lround(x[a] / g.spacing(a));
    k %= n;
    if (k < 0)
      k += n;
    i[a] = static_cast<std::size_t>(k);
  }
  return g.index(i[0], i[1], i[2]);
}

} // namespace detail

/// Value of a scalar array living on grid g at physical point x.
inline double sample_linear(const Grid& g, std::span<const double> values, const Point& x)
{
  const auto st = detail::stencil(g, x);
  if (g.ndim() == 2) {
    const double w0 = st.w[0], w1 = st.w[1];
    return (1 - w1) * ((1 - w0) * values[g.index(st.lo[0], st.lo[1])] + w0 * values[g.index(st.hi[0], st.lo[1])]) +
           w1 * ((1 - w0) * values[g.index(st.lo[0], st.hi[1])] + w0 * values[g.index(st.hi[0], st.hi[1])]);
  }
  double acc = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    double w = 1.0;
    std::array<std::size_t, 3> i{};
    for (int a = 0; a < 3; ++a) {
      const bool up = (corner >> a) & 1;
      i[a] = up ? st.hi[a] : st.lo[a];
      w *= up ? st.w[a] : 1.0 - st.w[a];
    }
    acc += w * values[g.index(i[0], i[1], i[2])];
  }
  return acc;
}

inline double sample(const ScalarField& f, const Point& x, InterpolationScheme scheme = InterpolationScheme::linear)
{
  if (scheme == InterpolationScheme::nearest)
    return f.values[detail::wrap_index(f.grid, x)];
  return sample_linear(f.grid, f.values, x);
}

inline std::vector<double> interpolate(const ScalarField& f, const std::vector<Point>& points,
                                       InterpolationScheme scheme = InterpolationScheme::linear)
{
  std::vector<double> out(points.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    out[p] = sample(f, points[p], scheme);
  return out;
}

/// Component-major result: out[a * points.size() + p].
inline std::vector<double> interpolate(const VectorField& f, const std::vector<Point>& points,
                                       InterpolationScheme scheme = InterpolationScheme::linear)
{
  std::vector<double> out(points.size() * f.ndim());
  for (int a = 0; a < f.ndim(); ++a) {
    const auto comp = f.component(a);
    for (std::size_t p = 0; p < points.size(); ++p)
      out[a * points.size() + p] = scheme == InterpolationScheme::nearest
                                       ? comp[detail::wrap_index(f.grid, points[p])]
                                       : sample_linear(f.grid, comp, points[p]);
  }
  return out;
}

inline Point node_point(const Grid& g, std::size_t idx)
{
  const auto i = g.unravel(idx);
  Point x{};
  for (int a = 0; a < g.ndim(); ++a)
    x[a] = static_cast<double>(i[a]) * g.spacing(a);
  return x;
}

inline ScalarField normalize_intensity(const ScalarField& image)
{
  ScalarField out(image.grid);
  if (image.values.empty())
    return out;
  const auto [lo, hi] = std::minmax_element(image.values.begin(), image.values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0))
    return out;
  for (std::size_t i = 0; i < image.size(); ++i)
    out[i] = std::clamp((image[i] - *lo) / range, 0.0, 1.0);
  return out;
}

} // namespace pdelddmm
