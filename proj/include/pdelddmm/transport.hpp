#pragma once

// Hyperbolic solvers for the image state, its adjoint (continuity form),
// their incremental versions, inverse-map integration and Jacobian
// determinants.
//
// Two schemes share one interface:
//  - spectral: method of lines, spectral derivatives, RK4 in time. Smooth
//    in the velocity, so the discrete energies it produces have well-defined
//    derivatives that the adjoint machinery reproduces closely.
//  - semi_lagrangian: RK2 backward characteristics with periodic multilinear
//    interpolation; unconditionally stable but only piecewise smooth in v.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "diffop.hpp"
#include "grid.hpp"
#include "interpolate.hpp"
#include "rk4.hpp"

namespace pdelddmm {

enum class TransportScheme { spectral, semi_lagrangian };

inline std::string to_string(TransportScheme s)
{
  return s == TransportScheme::spectral ? "spectral" : "semi-lagrangian";
}

inline TransportScheme parse_transport_scheme(const std::string& s)
{
  if (s == "spectral")
    return TransportScheme::spectral;
  if (s == "semi-lagrangian" || s == "semi_lagrangian")
    return TransportScheme::semi_lagrangian;
  throw std::invalid_argument("unknown transport scheme '" + s + "'");
}

/// Velocity over [0,1]: a single stationary field or a trajectory.
/// Holds references; the referenced fields must outlive the path.
class VelocityPath {
public:
  VelocityPath(const VectorField& stationary, int nt) : stationary_(&stationary), nt_(nt)
  {
    if (nt < 1)
      throw std::invalid_argument("nt must be >= 1");
  }
  explicit VelocityPath(const Trajectory<VectorField>& traj) : traj_(&traj), nt_(traj.nt())
  {
    if (nt_ < 1)
      throw std::invalid_argument("trajectory needs at least two frames");
  }

  int nt() const { return nt_; }
  double dt() const { return 1.0 / nt_; }
  bool stationary() const { return stationary_ != nullptr; }
  const Grid& grid() const { return stationary_ ? stationary_->grid : traj_->front().grid; }

  const VectorField& node(int k) const { return stationary_ ? *stationary_ : (*traj_)[k]; }

  /// Sample at step position s; midpoints use Hermite when rates exist.
  VectorField at_step(double s) const { return stationary_ ? *stationary_ : traj_->at_step(s); }

  /// Sample at step position s with linear interpolation in time.
  VectorField linear_at_step(double s) const
  {
    if (stationary_)
      return *stationary_;
    const int k = static_cast<int>(std::floor(s));
    if (static_cast<double>(k) == s)
      return (*traj_)[k];
    VectorField out = (*traj_)[k];
    out += (*traj_)[k + 1];
    out *= 0.5;
    return out;
  }

private:
  const VectorField* stationary_ = nullptr;
  const Trajectory<VectorField>* traj_ = nullptr;
  int nt_ = 1;
};

struct TransportOptions {
  TransportScheme scheme = TransportScheme::spectral;
};

/// psi(x) = x + displacement(x), displacement periodic.
struct DeformationMap {
  Grid grid;
  VectorField displacement;

  static DeformationMap identity(const Grid& g) { return {g, VectorField(g)}; }

  Point operator()(std::size_t idx) const
  {
    Point p = node_point(grid, idx);
    for (int a = 0; a < grid.ndim(); ++a)
      p[a] += displacement(a, idx);
    return p;
  }
};

namespace detail {

template <class F>
void check_finite(const F& f, const char* what)
{
  if (!all_finite(f))
    throw NumericalError(std::string(what) + ": non-finite values");
}

/// -(grad m . v)
inline ScalarField advection_rate(const ScalarField& m, const VectorField& v)
{
  const auto g = grad(m);
  ScalarField out(m.grid);
  for (int a = 0; a < v.ndim(); ++a) {
    const auto ga = g.component(a);
    const auto va = v.component(a);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] -= ga[i] * va[i];
  }
  return out;
}

/// -div(lambda v)
inline ScalarField flux_rate(const ScalarField& lambda, const VectorField& v)
{
  VectorField flux(v.grid);
  for (int a = 0; a < v.ndim(); ++a) {
    auto fa = flux.component(a);
    const auto va = v.component(a);
    for (std::size_t i = 0; i < lambda.size(); ++i)
      fa[i] = lambda[i] * va[i];
  }
  auto out = divergence(flux);
  out *= -1.0;
  return out;
}

inline Point add_scaled(Point x, double c, const VectorField& v, std::size_t idx)
{
  for (int a = 0; a < v.ndim(); ++a)
    x[a] += c * v(a, idx);
  return x;
}

inline Point add_scaled(Point x, double c, const std::vector<double>& v_at, std::size_t p, std::size_t npts, int d)
{
  for (int a = 0; a < d; ++a)
    x[a] += c * v_at[a * npts + p];
  return x;
}

/// RK2 midpoint characteristic tracing over one step of length dt.
/// sign = -1 traces the forward flow back to its departure point;
/// sign = +1 traces backward-in-time transport (velocity -v).
inline std::vector<Point> departure_points(const VectorField& v_arrival, const VectorField& v_mid, double dt,
                                           double sign)
{
  const Grid& g = v_arrival.grid;
  const std::size_t n = g.size();
  const int d = g.ndim();
  std::vector<Point> half(n);
  for (std::size_t i = 0; i < n; ++i)
    half[i] = add_scaled(node_point(g, i), sign * 0.5 * dt, v_arrival, i);
  const auto vm = interpolate(v_mid, half);
  std::vector<Point> dep(n);
  for (std::size_t i = 0; i < n; ++i)
    dep[i] = add_scaled(node_point(g, i), sign * dt, vm, i, n, d);
  return dep;
}

inline ScalarField resample(const ScalarField& f, const std::vector<Point>& pts)
{
  return ScalarField(f.grid, interpolate(f, pts));
}

inline ScalarField product(const ScalarField& a, const ScalarField& b)
{
  ScalarField out(a.grid);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a[i] * b[i];
  return out;
}

} // namespace detail

/// Forward solve of dm/dt + grad m . v = 0, m(0) = m0.
inline Trajectory<ScalarField> solve_state(const VelocityPath& v, const ScalarField& m0,
                                           const TransportOptions& opt = {})
{
  require_same_grid(v.grid(), m0.grid, "solve_state");
  auto guard = [](const ScalarField& f) { detail::check_finite(f, "solve_state"); };
  if (opt.scheme == TransportScheme::spectral)
    return rk4_forward(
        m0, v.nt(), [&](double s, const ScalarField& m) { return detail::advection_rate(m, v.at_step(s)); }, guard);

  Trajectory<ScalarField> tr;
  tr.frames.push_back(m0);
  for (int k = 0; k < v.nt(); ++k) {
    const auto dep = detail::departure_points(v.node(k + 1), v.linear_at_step(k + 0.5), v.dt(), -1.0);
    tr.frames.push_back(detail::resample(tr.frames.back(), dep));
    guard(tr.frames.back());
  }
  return tr;
}

/// Backward solve of -dl/dt - div(l v) = 0 from l(1) = lambda1.
inline Trajectory<ScalarField> solve_adjoint(const VelocityPath& v, const ScalarField& lambda1,
                                             const TransportOptions& opt = {})
{
  require_same_grid(v.grid(), lambda1.grid, "solve_adjoint");
  auto guard = [](const ScalarField& f) { detail::check_finite(f, "solve_adjoint"); };
  if (opt.scheme == TransportScheme::spectral)
    return rk4_backward(
        lambda1, v.nt(), [&](double s, const ScalarField& l) { return detail::flux_rate(l, v.at_step(s)); }, guard);

  // Advective form along -v with the divergence source l div v, trapezoidal
  // in the source (predictor-corrector).
  const int nt = v.nt();
  const double dt = v.dt();
  std::vector<ScalarField> frames(nt + 1);
  frames[nt] = lambda1;
  auto div_next = divergence(v.node(nt));
  for (int k = nt - 1; k >= 0; --k) {
    const auto div_now = divergence(v.node(k));
    const auto dep = detail::departure_points(v.node(k), v.linear_at_step(k + 0.5), dt, +1.0);
    const auto carried = detail::resample(frames[k + 1], dep);
    const auto src_dep = detail::resample(detail::product(frames[k + 1], div_next), dep);
    ScalarField pred = carried;
    axpy(dt, src_dep, pred);
    ScalarField next = carried;
    axpy(0.5 * dt, src_dep, next);
    axpy(0.5 * dt, detail::product(pred, div_now), next);
    guard(next);
    frames[k] = std::move(next);
    div_next = div_now;
  }
  Trajectory<ScalarField> tr;
  tr.frames = std::move(frames);
  return tr;
}

/// Forward solve of d(dm)/dt + grad dm . v + grad m . dv = 0, dm(0) = 0.
inline Trajectory<ScalarField> solve_incremental_state(const VelocityPath& v, const Trajectory<ScalarField>& m,
                                                       const VelocityPath& dv, const TransportOptions& opt = {})
{
  if (m.nt() != v.nt() || dv.nt() != v.nt())
    throw std::invalid_argument("solve_incremental_state: frame-count mismatch");
  require_same_grid(v.grid(), m.front().grid, "solve_incremental_state");
  require_same_grid(v.grid(), dv.grid(), "solve_incremental_state");
  auto guard = [](const ScalarField& f) { detail::check_finite(f, "solve_incremental_state"); };
  const ScalarField zero(v.grid());
  if (opt.scheme == TransportScheme::spectral)
    return rk4_forward(
        zero, v.nt(),
        [&](double s, const ScalarField& dm) {
          auto r = detail::advection_rate(dm, v.at_step(s));
          r += detail::advection_rate(m.at_step(s), dv.at_step(s));
          return r;
        },
        guard);

  const double dt = v.dt();
  Trajectory<ScalarField> tr;
  tr.frames.push_back(zero);
  auto src_prev = detail::advection_rate(m[0], dv.node(0));
  for (int k = 0; k < v.nt(); ++k) {
    const auto src_next = detail::advection_rate(m[k + 1], dv.node(k + 1));
    const auto dep = detail::departure_points(v.node(k + 1), v.linear_at_step(k + 0.5), dt, -1.0);
    ScalarField next = detail::resample(tr.frames.back(), dep);
    axpy(0.5 * dt, detail::resample(src_prev, dep), next);
    axpy(0.5 * dt, src_next, next);
    guard(next);
    tr.frames.push_back(std::move(next));
    src_prev = src_next;
  }
  return tr;
}

enum class HessianMode { gauss_newton, full };

inline std::string to_string(HessianMode m) { return m == HessianMode::full ? "full" : "gauss-newton"; }

/// Backward solve of -d(dl)/dt - div(dl v) - div(l dv) = 0 from dl(1) = dlambda1.
/// Gauss-Newton mode drops the l-bearing term, which leaves the plain adjoint.
inline Trajectory<ScalarField> solve_incremental_adjoint(const VelocityPath& v, const Trajectory<ScalarField>& lambda,
                                                         const VelocityPath& dv, const ScalarField& dlambda1,
                                                         HessianMode mode, const TransportOptions& opt = {})
{
  if (lambda.nt() != v.nt() || dv.nt() != v.nt())
    throw std::invalid_argument("solve_incremental_adjoint: frame-count mismatch");
  if (mode == HessianMode::gauss_newton)
    return solve_adjoint(v, dlambda1, opt);

  auto guard = [](const ScalarField& f) { detail::check_finite(f, "solve_incremental_adjoint"); };
  if (opt.scheme == TransportScheme::spectral)
    return rk4_backward(
        dlambda1, v.nt(),
        [&](double s, const ScalarField& dl) {
          auto r = detail::flux_rate(dl, v.at_step(s));
          r += detail::flux_rate(lambda.at_step(s), dv.at_step(s));
          return r;
        },
        guard);

  // Along -v: d(dl)/dtau = dl div v + div(l dv).
  const int nt = v.nt();
  const double dt = v.dt();
  auto forcing = [&](int k) {
    auto f = detail::flux_rate(lambda[k], dv.node(k));
    f *= -1.0;
    return f;
  };
  std::vector<ScalarField> frames(nt + 1);
  frames[nt] = dlambda1;
  auto div_next = divergence(v.node(nt));
  auto force_next = forcing(nt);
  for (int k = nt - 1; k >= 0; --k) {
    const auto div_now = divergence(v.node(k));
    const auto force_now = forcing(k);
    const auto dep = detail::departure_points(v.node(k), v.linear_at_step(k + 0.5), dt, +1.0);
    auto src_next = detail::product(frames[k + 1], div_next);
    src_next += force_next;
    const auto carried = detail::resample(frames[k + 1], dep);
    const auto src_dep = detail::resample(src_next, dep);
    ScalarField pred = carried;
    axpy(dt, src_dep, pred);
    ScalarField next = carried;
    axpy(0.5 * dt, src_dep, next);
    auto src_now = detail::product(pred, div_now);
    src_now += force_now;
    axpy(0.5 * dt, src_now, next);
    guard(next);
    frames[k] = std::move(next);
    div_next = div_now;
    force_next = force_now;
  }
  Trajectory<ScalarField> tr;
  tr.frames = std::move(frames);
  return tr;
}

/// psi = (phi_1)^{-1} from d psi/dt + D psi v = 0, psi(0) = id, carried as a
/// periodic displacement u = psi - id: du/dt = -v - Du v.
inline DeformationMap integrate_inverse_map(const VelocityPath& v, const TransportOptions& opt = {})
{
  const Grid& g = v.grid();
  const int d = g.ndim();
  auto guard = [](const VectorField& f) { detail::check_finite(f, "integrate_inverse_map"); };
  if (opt.scheme == TransportScheme::spectral) {
    auto tr = rk4_forward(
        VectorField(g), v.nt(),
        [&](double s, const VectorField& u) {
          const auto vs = v.at_step(s);
          VectorField r = vs;
          r *= -1.0;
          for (int a = 0; a < d; ++a) {
            const auto ra = detail::advection_rate(u.component_field(a), vs);
            auto rc = r.component(a);
            for (std::size_t i = 0; i < ra.size(); ++i)
              rc[i] += ra[i];
          }
          return r;
        },
        guard);
    return {g, tr.back()};
  }

  VectorField u(g);
  const std::size_t n = g.size();
  for (int k = 0; k < v.nt(); ++k) {
    const auto dep = detail::departure_points(v.node(k + 1), v.linear_at_step(k + 0.5), v.dt(), -1.0);
    const auto carried = interpolate(u, dep);
    VectorField next(g);
    for (int a = 0; a < d; ++a)
      for (std::size_t i = 0; i < n; ++i)
        next(a, i) = carried[a * n + i] + (dep[i][a] - static_cast<double>(g.unravel(i)[a]) * g.spacing(a));
    guard(next);
    u = std::move(next);
  }
  return {g, u};
}

/// det(I + D displacement) per node, spectral derivatives.
inline ScalarField jacobian_determinant(const DeformationMap& map)
{
  const auto J = jacobian_matrix(map.displacement);
  const Grid& g = map.grid;
  ScalarField det(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto m = [&](int r, int c) { return J.entry(r, c)[i] + (r == c ? 1.0 : 0.0); };
    if (g.ndim() == 2) {
      det[i] = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    } else {
      det[i] = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    }
  }
  return det;
}

/// Image pulled back through the map: out(x) = f(psi(x)), linear.
inline ScalarField warp_image(const ScalarField& f, const DeformationMap& map)
{
  require_same_grid(f.grid, map.grid, "warp_image");
  ScalarField out(f.grid);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = sample(f, map(i));
  return out;
}

} // namespace pdelddmm
