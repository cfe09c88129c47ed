#pragma once

// Energy, gradient and Hessian-vector products for geodesic shooting (EPDiff
// parameterization) and for the stationary-velocity baseline, plus the
// outer optimization loops and evaluation metrics.
//
//   E(v0) = <L v0, v0> + (1 / sigma^2) || m(1) - I1 ||^2
//
// Gradients come in two conventions: g_L2 (Riesz representer in L2) and
// g_V = K g_L2 (representer in V). The adjoint Jacobi system works on
// V-representers throughout, so its terminal value is K (lambda(1) grad m(1)).

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "diffop.hpp"
#include "geodesic.hpp"
#include "grid.hpp"
#include "interpolate.hpp"
#include "optim.hpp"
#include "transport.hpp"

namespace pdelddmm {

enum class Variant { pde_epdiff_gn_v, pde_epdiff_gn_l2, st_pde_lddmm_gn, epdiff_gd };

inline std::string to_string(Variant v)
{
  switch (v) {
  case Variant::pde_epdiff_gn_v:
    return "pde-epdiff-gn-v";
  case Variant::pde_epdiff_gn_l2:
    return "pde-epdiff-gn-l2";
  case Variant::st_pde_lddmm_gn:
    return "st-pde-lddmm-gn";
  case Variant::epdiff_gd:
    return "epdiff-gd";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s)
{
  for (auto v : {Variant::pde_epdiff_gn_v, Variant::pde_epdiff_gn_l2, Variant::st_pde_lddmm_gn, Variant::epdiff_gd})
    if (to_string(v) == s)
      return v;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

/// Which representer a variant optimizes with.
inline bool uses_v_gradient(Variant v) { return v == Variant::pde_epdiff_gn_v || v == Variant::epdiff_gd; }

struct RegistrationConfig {
  /// Metric weight; <= 0 selects (0.1 * mean extent)^2, a kernel length of
  /// a tenth of the domain independent of the grid resolution.
  double alpha = 0.0;
  int s = 2;
  double sigma = 1.0;
  int nt = 10;
  Variant variant = Variant::pde_epdiff_gn_v;
  OptimizerConfig optimizer;
  /// Gaussian width in voxels applied after intensity normalization.
  double presmooth_sigma = 1.0;
  TransportOptions transport;
  GeodesicOptions geodesic;

  double resolved_alpha(const Grid& g) const
  {
    if (alpha > 0.0)
      return alpha;
    double ext = 0.0;
    for (int a = 0; a < g.ndim(); ++a)
      ext += g.extent(a) / g.ndim();
    return 0.01 * ext * ext;
  }

  void validate() const
  {
    if (!(sigma > 0.0))
      throw std::invalid_argument("sigma must be > 0");
    if (nt < 1)
      throw std::invalid_argument("nt must be >= 1");
    if (s < 0)
      throw std::invalid_argument("s must be >= 0");
    if (!(presmooth_sigma >= 0.0))
      throw std::invalid_argument("presmooth_sigma must be >= 0");
    optimizer.validate();
  }
};

inline MetricOperator make_metric(const RegistrationConfig& cfg, const Grid& g)
{
  return MetricOperator(g, cfg.resolved_alpha(g), cfg.s);
}

inline ScalarField preprocess(const RegistrationConfig& cfg, const ScalarField& image)
{
  return gaussian_smooth(normalize_intensity(image), cfg.presmooth_sigma);
}

struct EnergyBreakdown {
  double regularization = 0.0;
  double similarity = 0.0;
  double total = 0.0;
};

/// Forward state of the geodesic parameterization.
struct ForwardCache {
  Trajectory<VectorField> v;
  Trajectory<ScalarField> m;
};

/// Forward state of the stationary parameterization.
struct StationaryCache {
  VectorField v;
  int nt = 1;
  Trajectory<ScalarField> m;
  VelocityPath path() const { return VelocityPath(v, nt); }
};

namespace detail {

inline double similarity(const RegistrationConfig& cfg, const ScalarField& m1, const ScalarField& I1)
{
  const auto r = m1 - I1;
  return dot_l2(r, r) / (cfg.sigma * cfg.sigma);
}

inline VectorField scalar_times_grad(const ScalarField& a, const ScalarField& m)
{
  auto g = grad(m);
  for (int c = 0; c < g.ndim(); ++c) {
    auto gc = g.component(c);
    for (std::size_t i = 0; i < gc.size(); ++i)
      gc[i] *= a[i];
  }
  return g;
}

/// Integral over [0,1] of a(t) grad m(t): Simpson for even nt, else trapezoid.
inline VectorField time_integral_scalar_grad(const Trajectory<ScalarField>& a, const Trajectory<ScalarField>& m)
{
  const int nt = m.nt();
  const double dt = m.dt();
  VectorField out(m.front().grid);
  for (int k = 0; k <= nt; ++k) {
    double w;
    if (nt % 2 == 0)
      w = (k == 0 || k == nt) ? 1.0 / 3.0 : (k % 2 ? 4.0 / 3.0 : 2.0 / 3.0);
    else
      w = (k == 0 || k == nt) ? 0.5 : 1.0;
    axpy(w * dt, scalar_times_grad(a[k], m[k]), out);
  }
  return out;
}

} // namespace detail

/// lambda(1) = -(2 / sigma^2) (m1 - I1).
inline ScalarField similarity_terminal_adjoint(const RegistrationConfig& cfg, const ScalarField& m1,
                                               const ScalarField& I1)
{
  require_same_grid(m1.grid, I1.grid, "similarity_terminal_adjoint");
  auto l = m1 - I1;
  l *= -2.0 / (cfg.sigma * cfg.sigma);
  return l;
}

struct EnergyResult {
  EnergyBreakdown energy;
  ForwardCache cache;
};

inline EnergyResult evaluate_energy(const RegistrationConfig& cfg, const MetricOperator& op, const ScalarField& I0,
                                    const ScalarField& I1, const VectorField& v0)
{
  require_same_grid(I0.grid, I1.grid, "evaluate_energy");
  require_same_grid(I0.grid, v0.grid, "evaluate_energy");
  EnergyResult r;
  r.cache.v = integrate_epdiff(op, v0, cfg.nt, cfg.geodesic);
  r.cache.m = solve_state(VelocityPath(r.cache.v), I0, cfg.transport);
  r.energy.regularization = op.dot_v(v0, v0);
  r.energy.similarity = detail::similarity(cfg, r.cache.m.back(), I1);
  r.energy.total = r.energy.regularization + r.energy.similarity;
  return r;
}

struct GradientResult {
  VectorField g_l2;
  VectorField g_v;
  GeodesicCache geodesic;

  const VectorField& native(Variant v) const { return uses_v_gradient(v) ? g_v : g_l2; }
};

inline GradientResult gradient(const RegistrationConfig& cfg, const MetricOperator& op, const ScalarField& I1,
                               const ForwardCache& fwd)
{
  const auto& m1 = fwd.m.back();
  const auto lambda1 = similarity_terminal_adjoint(cfg, m1, I1);
  const auto U1 = op.apply_K(detail::scalar_times_grad(lambda1, m1));
  auto jac = backward_adjoint_jacobi(op, fwd.v, U1, cfg.geodesic);
  GradientResult out;
  out.g_v = fwd.v.front();
  out.g_v *= 2.0;
  out.g_v += jac.w0;
  out.g_l2 = op.apply_L(out.g_v);
  out.geodesic = std::move(jac.cache);
  return out;
}

/// Hessian-vector product; `v_convention` selects the V or L2 representer.
inline VectorField hessian_vector_product(const RegistrationConfig& cfg, const MetricOperator& op,
                                          const ForwardCache& fwd, const GeodesicCache& geo, const ScalarField& I1,
                                          const VectorField& dv0, HessianMode mode, bool v_convention)
{
  const auto dv = integrate_incremental_epdiff(op, fwd.v, dv0, cfg.geodesic);
  const VelocityPath vpath(fwd.v), dvpath(dv);
  const auto dm = solve_incremental_state(vpath, fwd.m, dvpath, cfg.transport);
  const auto& m1 = fwd.m.back();
  auto dlambda1 = dm.back();
  dlambda1 *= -2.0 / (cfg.sigma * cfg.sigma);
  auto dU1 = detail::scalar_times_grad(dlambda1, m1);
  if (mode == HessianMode::full)
    dU1 += detail::scalar_times_grad(similarity_terminal_adjoint(cfg, m1, I1), dm.back());
  dU1 = op.apply_K(dU1);
  auto h = backward_incremental_adjoint_jacobi(op, geo, dv, dU1, mode, cfg.geodesic);
  axpy(2.0, dv0, h);
  return v_convention ? h : op.apply_L(h);
}

// Stationary-velocity baseline: m transported by one field v over [0,1].

struct StationaryEnergyResult {
  EnergyBreakdown energy;
  StationaryCache cache;
};

inline StationaryEnergyResult evaluate_energy_stationary(const RegistrationConfig& cfg, const MetricOperator& op,
                                                         const ScalarField& I0, const ScalarField& I1,
                                                         const VectorField& v)
{
  require_same_grid(I0.grid, I1.grid, "evaluate_energy_stationary");
  require_same_grid(I0.grid, v.grid, "evaluate_energy_stationary");
  StationaryEnergyResult r;
  r.cache.v = v;
  r.cache.nt = cfg.nt;
  r.cache.m = solve_state(r.cache.path(), I0, cfg.transport);
  r.energy.regularization = op.dot_v(v, v);
  r.energy.similarity = detail::similarity(cfg, r.cache.m.back(), I1);
  r.energy.total = r.energy.regularization + r.energy.similarity;
  return r;
}

struct StationaryGradientResult {
  VectorField g_l2;
  Trajectory<ScalarField> lambda;
};

/// g_L2 = 2 L v + int_0^1 lambda grad m dt.
inline StationaryGradientResult gradient_stationary(const RegistrationConfig& cfg, const MetricOperator& op,
                                                    const ScalarField& I1, const StationaryCache& fwd)
{
  StationaryGradientResult out;
  out.lambda = solve_adjoint(fwd.path(), similarity_terminal_adjoint(cfg, fwd.m.back(), I1), cfg.transport);
  out.g_l2 = op.apply_L(fwd.v);
  out.g_l2 *= 2.0;
  out.g_l2 += detail::time_integral_scalar_grad(out.lambda, fwd.m);
  return out;
}

/// L2 Hessian-vector product of the stationary energy.
inline VectorField hessian_vector_product_stationary(const RegistrationConfig& cfg, const MetricOperator& op,
                                                     const StationaryCache& fwd,
                                                     const Trajectory<ScalarField>& lambda, const VectorField& dv,
                                                     HessianMode mode)
{
  const auto vpath = fwd.path();
  const VelocityPath dvpath(dv, fwd.nt);
  const auto dm = solve_incremental_state(vpath, fwd.m, dvpath, cfg.transport);
  auto dlambda1 = dm.back();
  dlambda1 *= -2.0 / (cfg.sigma * cfg.sigma);
  const auto dlambda = solve_incremental_adjoint(vpath, lambda, dvpath, dlambda1, mode, cfg.transport);
  auto h = op.apply_L(dv);
  h *= 2.0;
  h += detail::time_integral_scalar_grad(dlambda, fwd.m);
  if (mode == HessianMode::full)
    h += detail::time_integral_scalar_grad(lambda, dm);
  return h;
}

// Metrics.

struct IterationMetrics {
  int iter = 0;
  double rmse_rel = 0.0;
  double grad_inf_rel = 1.0;
  EnergyBreakdown energy;
  int pcg_iters = 0;
  double jac_min = 1.0;
  double jac_max = 1.0;
  double wall_seconds = 0.0;
};

/// ||m1 - I1||^2 / ||I0 - I1||^2 (0 when I0 = I1) and the relative sup-norm
/// of the gradient; jacobian extrema from `jac`.
inline IterationMetrics compute_metrics(const ScalarField& I0, const ScalarField& I1, const ScalarField& m1,
                                        double g_now, double g_init, const ScalarField& jac)
{
  IterationMetrics m;
  const auto d0 = I0 - I1;
  const double den = dot_l2(d0, d0);
  if (den > 0.0) {
    const auto d1 = m1 - I1;
    m.rmse_rel = dot_l2(d1, d1) / den;
  }
  m.grad_inf_rel = g_init > 0.0 ? g_now / g_init : 0.0;
  const auto [lo, hi] = std::minmax_element(jac.values.begin(), jac.values.end());
  m.jac_min = *lo;
  m.jac_max = *hi;
  return m;
}

/// 2 |A n B| / (|A| + |B|) for one label; 1 when the label is absent from both.
inline double dice_coefficient(const LabelField& a, const LabelField& b, unsigned label)
{
  require_same_grid(a.grid, b.grid, "dice_coefficient");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const bool ia = a.labels[i] == label;
    const bool ib = b.labels[i] == label;
    na += ia;
    nb += ib;
    both += ia && ib;
  }
  if (na + nb == 0)
    return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

/// Nearest-neighbour pullback of labels through the map.
inline LabelField warp_labels(const LabelField& labels, const DeformationMap& map)
{
  require_same_grid(labels.grid, map.grid, "warp_labels");
  LabelField out(labels.grid);
  for (std::size_t i = 0; i < out.labels.size(); ++i)
    out.labels[i] = labels.labels[detail::wrap_index(labels.grid, map(i))];
  return out;
}

// Outer loops.

enum class RunStatus { converged, max_outer, stalled };

inline std::string to_string(RunStatus s)
{
  switch (s) {
  case RunStatus::converged:
    return "converged";
  case RunStatus::max_outer:
    return "max_outer";
  case RunStatus::stalled:
    return "stalled";
  }
  return "?";
}

struct RegistrationResult {
  VectorField v0_final;
  DeformationMap inverse_map;
  std::vector<IterationMetrics> history;
  ScalarField warped;
  RunStatus status = RunStatus::max_outer;
  int negative_curvature_events = 0;
};

namespace detail {

class Stopwatch {
public:
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline IterationMetrics metrics_row(int iter, const ScalarField& I0, const ScalarField& I1, const ScalarField& m1,
                                    const EnergyBreakdown& e, double g_now, double g_init, const VelocityPath& path,
                                    const TransportOptions& topt, int pcg_iters, const Stopwatch& clock,
                                    DeformationMap* map_out = nullptr)
{
  auto map = integrate_inverse_map(path, topt);
  auto row = compute_metrics(I0, I1, m1, g_now, g_init, jacobian_determinant(map));
  row.iter = iter;
  row.energy = e;
  row.pcg_iters = pcg_iters;
  row.wall_seconds = clock.seconds();
  if (map_out)
    *map_out = std::move(map);
  return row;
}

inline bool identical(const ScalarField& a, const ScalarField& b)
{
  const auto d = a - b;
  return dot_l2(d, d) == 0.0;
}

inline void finish(RegistrationResult& res, const ScalarField& I0, DeformationMap map)
{
  res.warped = warp_image(I0, map);
  res.inverse_map = std::move(map);
}

} // namespace detail

/// Geodesic shooting, Gauss-Newton-Krylov. Images must already be
/// preprocessed; `register_images` does that.
inline RegistrationResult register_geodesic_gn(const RegistrationConfig& cfg, const ScalarField& I0,
                                               const ScalarField& I1)
{
  cfg.validate();
  require_same_grid(I0.grid, I1.grid, "register");
  const detail::Stopwatch clock;
  const auto op = make_metric(cfg, I0.grid);
  const bool vconv = uses_v_gradient(cfg.variant);
  const auto& ocfg = cfg.optimizer;

  RegistrationResult res;
  VectorField v0(I0.grid);
  auto fwd = evaluate_energy(cfg, op, I0, I1, v0);
  DeformationMap map;
  if (detail::identical(I0, I1)) {
    res.history.push_back(detail::metrics_row(0, I0, I1, fwd.cache.m.back(), fwd.energy, 0.0, 0.0,
                                              VelocityPath(fwd.cache.v), cfg.transport, 0, clock, &map));
    res.status = RunStatus::converged;
    res.v0_final = v0;
    detail::finish(res, I0, std::move(map));
    return res;
  }
  auto g = gradient(cfg, op, I1, fwd.cache);
  const double g0 = max_abs(g.native(cfg.variant));
  res.history.push_back(detail::metrics_row(0, I0, I1, fwd.cache.m.back(), fwd.energy, g0, g0,
                                            VelocityPath(fwd.cache.v), cfg.transport, 0, clock, &map));

  auto inner = [&](const VectorField& a, const VectorField& b) { return vconv ? op.dot_v(a, b) : dot_l2(a, b); };
  auto precond = [&](const VectorField& r) { return vconv ? r : op.apply_K(r); };
  auto energy_at = [&](const VectorField& x) { return evaluate_energy(cfg, op, I0, I1, x).energy.total; };

  res.status = RunStatus::max_outer;
  for (int it = 1; it <= ocfg.max_outer; ++it) {
    const double gnow = max_abs(g.native(cfg.variant));
    if (g0 == 0.0 || gnow / g0 <= ocfg.grad_rtol) {
      res.status = RunStatus::converged;
      break;
    }
    auto rhs = g.native(cfg.variant);
    rhs *= -1.0;
    auto apply_H = [&](const VectorField& d) {
      return hessian_vector_product(cfg, op, fwd.cache, g.geodesic, I1, d, HessianMode::gauss_newton, vconv);
    };
    auto sol = pcg(apply_H, rhs, precond, forcing_tolerance(gnow, g0), ocfg.max_pcg, inner);
    if (sol.report.termination == Termination::negative_curvature)
      ++res.negative_curvature_events;
    if (sol.report.iterations == 0 && sol.report.termination == Termination::negative_curvature)
      sol.x = rhs;
    const auto ls = backtracking_line_search(energy_at, v0, sol.x, fwd.energy.total, ocfg.step, ocfg.ls_max);
    if (ls.stalled) {
      res.status = RunStatus::stalled;
      break;
    }
    axpy(ls.step, sol.x, v0);
    fwd = evaluate_energy(cfg, op, I0, I1, v0);
    g = gradient(cfg, op, I1, fwd.cache);
    res.history.push_back(detail::metrics_row(it, I0, I1, fwd.cache.m.back(), fwd.energy,
                                              max_abs(g.native(cfg.variant)), g0, VelocityPath(fwd.cache.v),
                                              cfg.transport, sol.report.iterations, clock, &map));
  }
  res.v0_final = v0;
  detail::finish(res, I0, std::move(map));
  return res;
}

/// Stationary-velocity baseline, Gauss-Newton-Krylov with preconditioner K.
inline RegistrationResult register_st_pde_lddmm(const RegistrationConfig& cfg, const ScalarField& I0,
                                                const ScalarField& I1)
{
  cfg.validate();
  require_same_grid(I0.grid, I1.grid, "register_st_pde_lddmm");
  const detail::Stopwatch clock;
  const auto op = make_metric(cfg, I0.grid);
  const auto& ocfg = cfg.optimizer;

  RegistrationResult res;
  VectorField v(I0.grid);
  auto fwd = evaluate_energy_stationary(cfg, op, I0, I1, v);
  DeformationMap map;
  if (detail::identical(I0, I1)) {
    res.history.push_back(detail::metrics_row(0, I0, I1, fwd.cache.m.back(), fwd.energy, 0.0, 0.0,
                                              fwd.cache.path(), cfg.transport, 0, clock, &map));
    res.status = RunStatus::converged;
    res.v0_final = v;
    detail::finish(res, I0, std::move(map));
    return res;
  }
  auto g = gradient_stationary(cfg, op, I1, fwd.cache);
  const double g0 = max_abs(g.g_l2);
  res.history.push_back(detail::metrics_row(0, I0, I1, fwd.cache.m.back(), fwd.energy, g0, g0, fwd.cache.path(),
                                            cfg.transport, 0, clock, &map));

  auto inner = [](const VectorField& a, const VectorField& b) { return dot_l2(a, b); };
  auto precond = [&](const VectorField& r) { return op.apply_K(r); };
  auto energy_at = [&](const VectorField& x) { return evaluate_energy_stationary(cfg, op, I0, I1, x).energy.total; };

  res.status = RunStatus::max_outer;
  for (int it = 1; it <= ocfg.max_outer; ++it) {
    const double gnow = max_abs(g.g_l2);
    if (g0 == 0.0 || gnow / g0 <= ocfg.grad_rtol) {
      res.status = RunStatus::converged;
      break;
    }
    auto rhs = g.g_l2;
    rhs *= -1.0;
    auto apply_H = [&](const VectorField& d) {
      return hessian_vector_product_stationary(cfg, op, fwd.cache, g.lambda, d, HessianMode::gauss_newton);
    };
    auto sol = pcg(apply_H, rhs, precond, forcing_tolerance(gnow, g0), ocfg.max_pcg, inner);
    if (sol.report.termination == Termination::negative_curvature)
      ++res.negative_curvature_events;
    if (sol.report.iterations == 0 && sol.report.termination == Termination::negative_curvature)
      sol.x = op.apply_K(rhs);
    const auto ls = backtracking_line_search(energy_at, v, sol.x, fwd.energy.total, ocfg.step, ocfg.ls_max);
    if (ls.stalled) {
      res.status = RunStatus::stalled;
      break;
    }
    axpy(ls.step, sol.x, v);
    fwd = evaluate_energy_stationary(cfg, op, I0, I1, v);
    g = gradient_stationary(cfg, op, I1, fwd.cache);
    res.history.push_back(detail::metrics_row(it, I0, I1, fwd.cache.m.back(), fwd.energy, max_abs(g.g_l2), g0,
                                              fwd.cache.path(), cfg.transport, sol.report.iterations, clock, &map));
  }
  res.v0_final = v;
  detail::finish(res, I0, std::move(map));
  return res;
}

/// Geodesic shooting by gradient descent on the V-gradient.
inline RegistrationResult register_epdiff_gd(const RegistrationConfig& cfg, const ScalarField& I0,
                                             const ScalarField& I1)
{
  cfg.validate();
  require_same_grid(I0.grid, I1.grid, "register_epdiff_gd");
  const detail::Stopwatch clock;
  const auto op = make_metric(cfg, I0.grid);

  RegistrationResult res;
  VectorField v0(I0.grid);
  auto fwd = evaluate_energy(cfg, op, I0, I1, v0);
  DeformationMap map;
  if (detail::identical(I0, I1)) {
    res.history.push_back(detail::metrics_row(0, I0, I1, fwd.cache.m.back(), fwd.energy, 0.0, 0.0,
                                              VelocityPath(fwd.cache.v), cfg.transport, 0, clock, &map));
    res.status = RunStatus::converged;
    res.v0_final = v0;
    detail::finish(res, I0, std::move(map));
    return res;
  }
  auto g = gradient(cfg, op, I1, fwd.cache);
  const double g0 = max_abs(g.g_v);
  res.history.push_back(detail::metrics_row(0, I0, I1, fwd.cache.m.back(), fwd.energy, g0, g0,
                                            VelocityPath(fwd.cache.v), cfg.transport, 0, clock, &map));

  res.status = RunStatus::max_outer;
  if (g0 == 0.0 || cfg.optimizer.grad_rtol >= 1.0) {
    res.status = RunStatus::converged;
  } else {
    int it = 0;
    auto eval_energy = [&](const VectorField& x) { return evaluate_energy(cfg, op, I0, I1, x).energy.total; };
    // The gradient at the current iterate is always the one computed on accept.
    auto eval_grad = [&](const VectorField&) { return g.g_v; };
    auto on_accept = [&](const VectorField& x, double) {
      fwd = evaluate_energy(cfg, op, I0, I1, x);
      g = gradient(cfg, op, I1, fwd.cache);
      const double gnow = max_abs(g.g_v);
      res.history.push_back(detail::metrics_row(++it, I0, I1, fwd.cache.m.back(), fwd.energy, gnow, g0,
                                                VelocityPath(fwd.cache.v), cfg.transport, 0, clock, &map));
      return gnow / g0 <= cfg.optimizer.grad_rtol;
    };
    const auto h = gradient_descent_loop(v0, eval_grad, eval_energy, cfg.optimizer, on_accept);
    if (h.stalled)
      res.status = RunStatus::stalled;
    else if (h.stopped)
      res.status = RunStatus::converged;
  }
  res.v0_final = v0;
  detail::finish(res, I0, std::move(map));
  return res;
}

/// Preprocess both images and run the configured variant.
inline RegistrationResult register_images(const RegistrationConfig& cfg, const ScalarField& source,
                                          const ScalarField& target)
{
  const auto I0 = preprocess(cfg, source);
  const auto I1 = preprocess(cfg, target);
  switch (cfg.variant) {
  case Variant::pde_epdiff_gn_v:
  case Variant::pde_epdiff_gn_l2:
    return register_geodesic_gn(cfg, I0, I1);
  case Variant::st_pde_lddmm_gn:
    return register_st_pde_lddmm(cfg, I0, I1);
  case Variant::epdiff_gd:
    return register_epdiff_gd(cfg, I0, I1);
  }
  throw std::invalid_argument("unknown variant");
}

} // namespace pdelddmm
