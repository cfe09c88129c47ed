#pragma once

// Classical RK4 over the uniform time nodes t_k = k / nt, forward or backward.
//
// The right-hand side is called as rhs(s, y) where s is the step position
// (k, k + 1/2 or k + 1), so callers can sample time-dependent coefficients
// at nodes or midpoints. The first stage at each node is kept as the node's
// rate, which later lets Trajectory::midpoint use Hermite interpolation.

#include <utility>

#include "grid.hpp"

namespace pdelddmm {

template <class F>
F combine(const F& y, double c, const F& k)
{
  F out = y;
  axpy(c, k, out);
  return out;
}

template <class F, class Rhs, class Guard>
Trajectory<F> rk4_forward(F y0, int nt, Rhs&& rhs, Guard&& guard)
{
  Trajectory<F> tr;
  tr.frames.reserve(nt + 1);
  tr.rates.reserve(nt + 1);
  const double dt = 1.0 / nt;
  tr.frames.push_back(std::move(y0));
  for (int k = 0; k < nt; ++k) {
    const F& y = tr.frames.back();
    F k1 = rhs(k, y);
    F k2 = rhs(k + 0.5, combine(y, 0.5 * dt, k1));
    F k3 = rhs(k + 0.5, combine(y, 0.5 * dt, k2));
    F k4 = rhs(k + 1.0, combine(y, dt, k3));
    F next = y;
    axpy(dt / 6.0, k1, next);
    axpy(dt / 3.0, k2, next);
    axpy(dt / 3.0, k3, next);
    axpy(dt / 6.0, k4, next);
    guard(next);
    tr.rates.push_back(std::move(k1));
    tr.frames.push_back(std::move(next));
  }
  tr.rates.push_back(rhs(nt, tr.frames.back()));
  return tr;
}

/// Integrates from the terminal value at t = 1 down to t = 0.
template <class F, class Rhs, class Guard>
Trajectory<F> rk4_backward(F y1, int nt, Rhs&& rhs, Guard&& guard)
{
  std::vector<F> frames(nt + 1);
  std::vector<F> rates(nt + 1);
  const double dt = 1.0 / nt;
  frames[nt] = std::move(y1);
  for (int k = nt - 1; k >= 0; --k) {
    const F& y = frames[k + 1];
    F k1 = rhs(k + 1.0, y);
    F k2 = rhs(k + 0.5, combine(y, -0.5 * dt, k1));
    F k3 = rhs(k + 0.5, combine(y, -0.5 * dt, k2));
    F k4 = rhs(static_cast<double>(k), combine(y, -dt, k3));
    F prev = y;
    axpy(-dt / 6.0, k1, prev);
    axpy(-dt / 3.0, k2, prev);
    axpy(-dt / 3.0, k3, prev);
    axpy(-dt / 6.0, k4, prev);
    guard(prev);
    rates[k + 1] = std::move(k1);
    frames[k] = std::move(prev);
  }
  rates[0] = rhs(0.0, frames[0]);
  Trajectory<F> tr;
  tr.frames = std::move(frames);
  tr.rates = std::move(rates);
  return tr;
}

} // namespace pdelddmm
