#pragma once

// Finite-difference and identity checks of the derivative machinery on small
// smooth problem instances. Used by `check-derivatives` and the test suite.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "diffop.hpp"
#include "geodesic.hpp"
#include "random_fields.hpp"
#include "registration.hpp"

namespace pdelddmm {

struct CheckPreset {
  std::string name;
  int ndim = 2;
  std::size_t n = 32;
  int nt = 10;
  int directions = 5;
  double h = 1e-4;
};

inline const std::vector<CheckPreset>& check_presets()
{
  static const std::vector<CheckPreset> presets{
      {"small-2d", 2, 32, 10, 5, 1e-4},
      {"small-3d", 3, 24, 10, 2, 1e-4},
  };
  return presets;
}

inline const CheckPreset& find_check_preset(const std::string& name)
{
  for (const auto& p : check_presets())
    if (p.name == name)
      return p;
  throw std::invalid_argument("unknown preset '" + name + "'");
}

struct CheckRow {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass() const { return std::isfinite(error) && error <= tolerance; }
};

/// Two smooth Gaussian blobs of different centre and width, a smooth random
/// initial velocity, and a registration config on the unit domain.
struct CheckInstance {
  Grid grid;
  RegistrationConfig cfg;
  ScalarField I0, I1;
  VectorField v0;
};

inline CheckInstance make_check_instance(int ndim, std::size_t n, int nt, Rng& rng)
{
  CheckInstance c;
  c.grid = Grid::unit(ndim, n);
  c.cfg.nt = nt;
  c.I0 = ScalarField(c.grid);
  c.I1 = ScalarField(c.grid);
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    double r0 = 0.0, r1 = 0.0;
    for (int a = 0; a < ndim; ++a) {
      const double x = c.grid.coordinate(i, a);
      const double c0 = a == 0 ? 0.45 : 0.5;
      const double c1 = a == 0 ? 0.55 : 0.52;
      r0 += (x - c0) * (x - c0);
      r1 += (x - c1) * (x - c1);
    }
    c.I0[i] = std::exp(-r0 / (2.0 * 0.10 * 0.10));
    c.I1[i] = std::exp(-r1 / (2.0 * 0.12 * 0.12));
  }
  c.v0 = random_smooth_vector(c.grid, rng, 3, 0.05);
  return c;
}

/// Worst |<g_L2, h> - FD| / max(|FD|, 1e-12) over random smooth directions.
inline double gradient_fd_error(const CheckInstance& c, int directions, double h, Rng& rng)
{
  const auto op = make_metric(c.cfg, c.grid);
  const auto fwd = evaluate_energy(c.cfg, op, c.I0, c.I1, c.v0);
  const auto g = gradient(c.cfg, op, c.I1, fwd.cache);
  auto energy = [&](const VectorField& v) { return evaluate_energy(c.cfg, op, c.I0, c.I1, v).energy.total; };
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    const auto dir = random_smooth_vector(c.grid, rng, 4, 1.0);
    auto vp = c.v0, vm = c.v0;
    axpy(h, dir, vp);
    axpy(-h, dir, vm);
    const double fd = (energy(vp) - energy(vm)) / (2.0 * h);
    const double an = dot_l2(g.g_l2, dir);
    worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(fd), 1e-12));
  }
  return worst;
}

/// Worst ||H dir - FD(g_L2)|| / ||FD(g_L2)|| for the full Hessian.
inline double hessian_fd_error(const CheckInstance& c, int directions, double h, Rng& rng)
{
  const auto op = make_metric(c.cfg, c.grid);
  const auto fwd = evaluate_energy(c.cfg, op, c.I0, c.I1, c.v0);
  const auto g = gradient(c.cfg, op, c.I1, fwd.cache);
  auto grad_at = [&](const VectorField& v) {
    return gradient(c.cfg, op, c.I1, evaluate_energy(c.cfg, op, c.I0, c.I1, v).cache).g_l2;
  };
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    const auto dir = random_smooth_vector(c.grid, rng, 4, 1.0);
    const auto Hd = hessian_vector_product(c.cfg, op, fwd.cache, g.geodesic, c.I1, dir, HessianMode::full, false);
    auto vp = c.v0, vm = c.v0;
    axpy(h, dir, vp);
    axpy(-h, dir, vm);
    auto fd = grad_at(vp) - grad_at(vm);
    fd *= 1.0 / (2.0 * h);
    const double den = norm_l2(fd);
    worst = std::max(worst, norm_l2(Hd - fd) / std::max(den, 1e-12));
  }
  return worst;
}

/// Worst |<ad-dagger_v u, w>_V - <u, ad_v w>_V| / max of the two magnitudes.
inline double adjoint_identity_error(const MetricOperator& op, int triples, Rng& rng, double max_mode = 4.0)
{
  double worst = 0.0;
  for (int k = 0; k < triples; ++k) {
    const auto v = random_smooth_vector(op.grid(), rng, max_mode, 1.0);
    const auto u = random_smooth_vector(op.grid(), rng, max_mode, 1.0);
    const auto w = random_smooth_vector(op.grid(), rng, max_mode, 1.0);
    const double lhs = op.dot_v(ad_dagger(op, v, u), w);
    const double rhs = op.dot_v(u, ad(v, w));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}));
  }
  return worst;
}

/// max_t |<L v_t, v_t> - <L v_0, v_0>| / <L v_0, v_0> along an EPDiff geodesic.
inline double epdiff_energy_drift(const MetricOperator& op, const VectorField& v0, int nt)
{
  const auto v = integrate_epdiff(op, v0, nt);
  const double e0 = op.dot_v(v0, v0);
  double worst = 0.0;
  for (const auto& f : v.frames)
    worst = std::max(worst, std::abs(op.dot_v(f, f) - e0) / e0);
  return worst;
}

/// All four suites. `geo` is applied to the instance, which is how a
/// corrupted adjoint sign is injected.
inline std::vector<CheckRow> run_derivative_checks(const CheckPreset& p, std::uint64_t seed,
                                                   const GeodesicOptions& geo = {})
{
  Rng rng(seed);
  auto inst = make_check_instance(p.ndim, p.n, p.nt, rng);
  inst.cfg.geodesic = geo;
  std::vector<CheckRow> rows;
  rows.push_back({"gradient-fd", gradient_fd_error(inst, p.directions, p.h, rng), 1e-4});
  rows.push_back({"hessian-fd", hessian_fd_error(inst, p.directions, p.h, rng), 1e-3});
  const auto op = make_metric(inst.cfg, inst.grid);
  rows.push_back({"adjoint-identity", adjoint_identity_error(op, p.directions, rng), 1e-3});
  const auto v0 = random_smooth_vector(inst.grid, rng, 3, 0.1);
  rows.push_back({"epdiff-conservation", epdiff_energy_drift(op, v0, 2 * p.nt), 1e-2});
  return rows;
}

} // namespace pdelddmm
