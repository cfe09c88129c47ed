#pragma once

// Geodesic shooting under EPDiff and the backward adjoint Jacobi systems that
// carry final-time gradients and Hessian-vector products back to t = 0.
//
// All equations are ODEs in field space once ad / ad-dagger are evaluated
// spectrally; they are integrated with RK4 on the uniform time nodes, and
// time-dependent coefficients are sampled at midpoints by cubic Hermite
// interpolation from the stored rates.

#include <string>

#include "diffop.hpp"
#include "grid.hpp"
#include "rk4.hpp"
#include "transport.hpp"

namespace pdelddmm {

struct GeodesicOptions {
  /// Error out when a frame exceeds this multiple of the reference magnitude.
  double blowup_factor = 1e3;
  /// Multiplies every ad-dagger term of the adjoint Jacobi equations. Only
  /// the derivative checker changes it, to prove a corrupted sign is caught.
  double adjoint_sign = 1.0;
};

/// Trajectories shared between the gradient and Hessian passes.
struct GeodesicCache {
  Trajectory<VectorField> v;
  Trajectory<VectorField> U;
  Trajectory<VectorField> w;
  bool has_v = false;
  bool has_U = false;
  bool has_w = false;
};

namespace detail {

struct FieldPair {
  VectorField a;
  VectorField b;
};

inline void axpy(double alpha, const FieldPair& x, FieldPair& y)
{
  pdelddmm::axpy(alpha, x.a, y.a);
  pdelddmm::axpy(alpha, x.b, y.b);
}

inline auto blowup_guard(double reference, double factor, const char* what)
{
  return [=](const auto& f) {
    check_finite(f, what);
    if (reference > 0.0 && max_abs(f) > factor * reference)
      throw NumericalError(std::string(what) + ": blow-up guard tripped");
  };
}

inline auto pair_guard(double reference, double factor, const char* what)
{
  auto g = blowup_guard(reference, factor, what);
  return [=](const FieldPair& p) {
    g(p.a);
    g(p.b);
  };
}

inline std::pair<Trajectory<VectorField>, Trajectory<VectorField>> split(Trajectory<FieldPair>&& tr)
{
  Trajectory<VectorField> a, b;
  for (auto& f : tr.frames) {
    a.frames.push_back(std::move(f.a));
    b.frames.push_back(std::move(f.b));
  }
  for (auto& r : tr.rates) {
    a.rates.push_back(std::move(r.a));
    b.rates.push_back(std::move(r.b));
  }
  return {std::move(a), std::move(b)};
}

} // namespace detail

/// dv/dt = -ad-dagger_v v, v(0) = v0.
inline Trajectory<VectorField> integrate_epdiff(const MetricOperator& op, const VectorField& v0, int nt,
                                                const GeodesicOptions& opt = {})
{
  if (nt < 1)
    throw std::invalid_argument("integrate_epdiff: nt must be >= 1");
  require_same_grid(v0.grid, op.grid(), "integrate_epdiff");
  detail::check_finite(v0, "integrate_epdiff");
  return rk4_forward(
      v0, nt,
      [&](double, const VectorField& v) {
        auto r = ad_dagger(op, v, v);
        r *= -1.0;
        return r;
      },
      detail::blowup_guard(max_abs(v0), opt.blowup_factor, "integrate_epdiff"));
}

/// d(dv)/dt = -ad-dagger_{dv} v - ad-dagger_v dv, dv(0) = dv0.
inline Trajectory<VectorField> integrate_incremental_epdiff(const MetricOperator& op, const Trajectory<VectorField>& v,
                                                            const VectorField& dv0, const GeodesicOptions& opt = {})
{
  require_same_grid(dv0.grid, op.grid(), "integrate_incremental_epdiff");
  return rk4_forward(
      dv0, v.nt(),
      [&](double s, const VectorField& dv) {
        const auto vs = v.at_step(s);
        auto r = ad_dagger(op, dv, vs);
        r += ad_dagger(op, vs, dv);
        r *= -1.0;
        return r;
      },
      detail::blowup_guard(max_abs(dv0), opt.blowup_factor, "integrate_incremental_epdiff"));
}

struct AdjointJacobiResult {
  VectorField w0;
  GeodesicCache cache;
};

/// Backward integration of
///   dU/dt + ad-dagger_v U = 0
///   dw/dt + U - ad_v w + ad-dagger_w v = 0
/// from U(1) = U1, w(1) = 0. Returns w(0) and the cached trajectories.
inline AdjointJacobiResult backward_adjoint_jacobi(const MetricOperator& op, const Trajectory<VectorField>& v,
                                                   const VectorField& U1, const GeodesicOptions& opt = {})
{
  require_same_grid(U1.grid, op.grid(), "backward_adjoint_jacobi");
  const double sgn = opt.adjoint_sign;
  detail::FieldPair terminal{U1, VectorField(U1.grid)};
  auto tr = rk4_backward(
      std::move(terminal), v.nt(),
      [&](double s, const detail::FieldPair& y) {
        const auto vs = v.at_step(s);
        detail::FieldPair r{ad_dagger(op, vs, y.a), ad(vs, y.b)};
        r.a *= -sgn;
        r.b -= y.a;
        axpy(-sgn, ad_dagger(op, y.b, vs), r.b);
        return r;
      },
      detail::pair_guard(max_abs(U1), opt.blowup_factor, "backward_adjoint_jacobi"));

  AdjointJacobiResult out;
  out.w0 = tr.frames.front().b;
  auto [U, w] = detail::split(std::move(tr));
  out.cache.v = v;
  out.cache.U = std::move(U);
  out.cache.w = std::move(w);
  out.cache.has_v = out.cache.has_U = out.cache.has_w = true;
  return out;
}

/// Backward integration of the incremental adjoint Jacobi system
///   d(dU)/dt + ad-dagger_{dv} U + ad-dagger_v dU = 0
///   d(dw)/dt + dU - ad_{dv} w - ad_v dw + ad-dagger_{dw} v + ad-dagger_w dv = 0
/// from dU(1) = dU1, dw(1) = 0; returns dw(0). Gauss-Newton mode drops every
/// term that couples dv to a first-order multiplier (ad-dagger_{dv} U,
/// ad_{dv} w, ad-dagger_w dv). What remains is the adjoint Jacobi operator
/// itself, so the GN product is J^T J plus the regularization and stays
/// symmetric positive definite; it reads neither cache.U nor cache.w.
inline VectorField backward_incremental_adjoint_jacobi(const MetricOperator& op, const GeodesicCache& cache,
                                                       const Trajectory<VectorField>& dv, const VectorField& dU1,
                                                       HessianMode mode, const GeodesicOptions& opt = {})
{
  if (!cache.has_v)
    throw std::invalid_argument("backward_incremental_adjoint_jacobi: cache lacks the v pass");
  if (mode == HessianMode::full && !(cache.has_U && cache.has_w))
    throw std::invalid_argument("backward_incremental_adjoint_jacobi: full mode needs the cached U and w passes");
  if (dv.nt() != cache.v.nt())
    throw std::invalid_argument("backward_incremental_adjoint_jacobi: frame-count mismatch");
  require_same_grid(dU1.grid, op.grid(), "backward_incremental_adjoint_jacobi");

  const double sgn = opt.adjoint_sign;
  const bool full = mode == HessianMode::full;
  const double ref = std::max(max_abs(dU1), max_abs(dv.front()));
  detail::FieldPair terminal{dU1, VectorField(dU1.grid)};
  auto tr = rk4_backward(
      std::move(terminal), cache.v.nt(),
      [&](double s, const detail::FieldPair& y) {
        const auto vs = cache.v.at_step(s);
        detail::FieldPair r{ad_dagger(op, vs, y.a), ad(vs, y.b)};
        r.b -= y.a;
        axpy(-sgn, ad_dagger(op, y.b, vs), r.b);
        if (full) {
          const auto dvs = dv.at_step(s);
          const auto ws = cache.w.at_step(s);
          r.a += ad_dagger(op, dvs, cache.U.at_step(s));
          r.b += ad(dvs, ws);
          axpy(-sgn, ad_dagger(op, ws, dvs), r.b);
        }
        r.a *= -sgn;
        return r;
      },
      detail::pair_guard(ref, opt.blowup_factor, "backward_incremental_adjoint_jacobi"));
  return tr.frames.front().b;
}

} // namespace pdelddmm
