#pragma once

// Matrix-free PCG, inexact forcing, backtracking line search and a plain
// gradient-descent loop. Everything is templated on the iterate type F,
// which needs copy, +=, *= and an axpy(alpha, x, y) overload.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

namespace pdelddmm {

enum class Termination { converged, max_iter, negative_curvature };

inline std::string to_string(Termination t)
{
  switch (t) {
  case Termination::converged:
    return "converged";
  case Termination::max_iter:
    return "max_iter";
  case Termination::negative_curvature:
    return "negative_curvature";
  }
  return "?";
}

struct KrylovReport {
  int iterations = 0;
  /// Preconditioned residual norm sqrt(<r, M r>) after each iteration,
  /// starting with the initial residual.
  std::vector<double> residual_history;
  Termination termination = Termination::max_iter;
};

struct OptimizerConfig {
  int max_outer = 10;
  int max_pcg = 50;
  /// Initial line-search step.
  double step = 1.0;
  int ls_max = 10;
  double grad_rtol = 1e-2;

  void validate() const
  {
    if (max_outer < 1 || max_pcg < 1 || ls_max < 1)
      throw std::invalid_argument("optimizer counts must be >= 1");
    if (!(step > 0.0))
      throw std::invalid_argument("optimizer step must be > 0");
    if (!(grad_rtol >= 0.0))
      throw std::invalid_argument("grad_rtol must be >= 0");
  }
};

template <class F>
struct PcgResult {
  F x;
  KrylovReport report;
};

/// Preconditioned CG from a zero initial guess. `inner` is the inner product
/// in which apply_H is self-adjoint and apply_M is SPD. Stops when
/// sqrt(<r, M r>) <= rtol * sqrt(<r0, M r0>), after max_iter iterations, or
/// on <p, H p> <= 0, in which case the current iterate is returned.
template <class F, class ApplyH, class ApplyM, class Inner>
PcgResult<F> pcg(ApplyH&& apply_H, const F& rhs, ApplyM&& apply_M, double rtol, int max_iter, Inner&& inner)
{
  if (max_iter < 1)
    throw std::invalid_argument("pcg: max_iter must be >= 1");
  PcgResult<F> out{rhs, {}};
  out.x *= 0.0;
  F r = rhs;
  F z = apply_M(r);
  double rz = inner(r, z);
  if (!std::isfinite(rz))
    throw NumericalError("pcg: non-finite residual");
  const double r0 = std::sqrt(std::max(rz, 0.0));
  out.report.residual_history.push_back(r0);
  if (r0 == 0.0) {
    out.report.termination = Termination::converged;
    return out;
  }
  F p = z;
  for (int it = 0; it < max_iter; ++it) {
    F Hp = apply_H(p);
    const double pHp = inner(p, Hp);
    if (!std::isfinite(pHp))
      throw NumericalError("pcg: non-finite curvature");
    if (pHp <= 0.0) {
      out.report.termination = Termination::negative_curvature;
      return out;
    }
    const double alpha = rz / pHp;
    axpy(alpha, p, out.x);
    axpy(-alpha, Hp, r);
    z = apply_M(r);
    const double rz_next = inner(r, z);
    if (!std::isfinite(rz_next))
      throw NumericalError("pcg: non-finite residual");
    out.report.iterations = it + 1;
    const double res = std::sqrt(std::max(rz_next, 0.0));
    out.report.residual_history.push_back(res);
    if (res <= rtol * r0) {
      out.report.termination = Termination::converged;
      return out;
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    p *= beta;
    p += z;
  }
  out.report.termination = Termination::max_iter;
  return out;
}

/// min(0.5, sqrt(now / initial)).
inline double forcing_tolerance(double grad_norm_now, double grad_norm_initial)
{
  if (!(grad_norm_initial > 0.0))
    return 0.0;
  return std::min(0.5, std::sqrt(std::max(grad_norm_now, 0.0) / grad_norm_initial));
}

struct LineSearchResult {
  double step = 0.0;
  double energy = std::numeric_limits<double>::infinity();
  int trials = 0;
  bool stalled = false;
};

/// Halve the step until eval_energy(x + step * dir) < energy_now. An
/// exception from eval_energy counts as a rejected trial.
template <class F, class Eval>
LineSearchResult backtracking_line_search(Eval&& eval_energy, const F& x, const F& direction, double energy_now,
                                          double step0, int ls_max)
{
  LineSearchResult res;
  if (max_abs(direction) == 0.0) {
    res.stalled = true;
    return res;
  }
  double step = step0;
  for (int k = 0; k < ls_max; ++k, step *= 0.5) {
    ++res.trials;
    F trial = x;
    axpy(step, direction, trial);
    double e = std::numeric_limits<double>::infinity();
    try {
      e = eval_energy(trial);
    } catch (const NumericalError&) {
    }
    if (std::isfinite(e) && e < energy_now) {
      res.step = step;
      res.energy = e;
      return res;
    }
  }
  res.stalled = true;
  return res;
}

struct DescentHistory {
  std::vector<double> energies;
  std::vector<double> steps;
  bool stalled = false;
  bool stopped = false;
};

/// x <- x - step * grad(x), line-searched; the trial step doubles after each
/// accepted step and restarts from the accepted value. `on_accept(x, e)` sees
/// every accepted iterate and returns true to stop early.
template <class F, class Grad, class Eval, class OnAccept>
DescentHistory gradient_descent_loop(F& x, Grad&& eval_grad, Eval&& eval_energy, const OptimizerConfig& cfg,
                                     OnAccept&& on_accept)
{
  cfg.validate();
  DescentHistory h;
  double e = eval_energy(x);
  h.energies.push_back(e);
  double step = cfg.step;
  for (int it = 0; it < cfg.max_outer; ++it) {
    F dir = eval_grad(x);
    dir *= -1.0;
    const auto ls = backtracking_line_search(eval_energy, x, dir, e, step, cfg.ls_max);
    if (ls.stalled) {
      h.stalled = true;
      break;
    }
    axpy(ls.step, dir, x);
    e = ls.energy;
    h.energies.push_back(e);
    h.steps.push_back(ls.step);
    step = 2.0 * ls.step;
    if (on_accept(x, e)) {
      h.stopped = true;
      break;
    }
  }
  return h;
}

template <class F, class Grad, class Eval>
DescentHistory gradient_descent_loop(F& x, Grad&& eval_grad, Eval&& eval_energy, const OptimizerConfig& cfg)
{
  return gradient_descent_loop(x, eval_grad, eval_energy, cfg, [](const F&, double) { return false; });
}

} // namespace pdelddmm
