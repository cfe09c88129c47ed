#pragma once

// Spectral differential operators on periodic grids: the metric operator
// L = (Id - alpha Lap)^s and its inverse K, gradient, divergence, Jacobian
// matrices, and the Lie-algebra operators ad and ad-dagger.

#include <cmath>
#include <memory>
#include <stdexcept>

#include "grid.hpp"
#include "spectral.hpp"

namespace pdelddmm {

namespace detail {

inline void multiply(Spectrum& s, const std::vector<double>& m)
{
  for (std::size_t c = 0; c < s.size(); ++c)
    s[c] *= m[c];
}

/// s * (i k_a)
inline Spectrum derivative(const Spectrum& s, const std::vector<double>& k)
{
  Spectrum out(s.size());
  for (std::size_t c = 0; c < s.size(); ++c)
    out[c] = Complex(-k[c] * s[c].imag(), k[c] * s[c].real());
  return out;
}

inline void apply_mask(Spectrum& s, const std::vector<unsigned char>& keep)
{
  for (std::size_t c = 0; c < s.size(); ++c)
    if (!keep[c])
      s[c] = 0.0;
}

} // namespace detail

/// Fourier multipliers of L = (Id - alpha Lap)^s and K = L^{-1} on one grid.
class MetricOperator {
public:
  MetricOperator(const Grid& grid, double alpha, int s) : grid_(grid), alpha_(alpha), s_(s)
  {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("metric alpha must be positive");
    if (s < 1)
      throw std::invalid_argument("metric exponent s must be >= 1");
    fourier_ = fourier(grid);
    const auto& k2 = fourier_->k_squared();
    mult_.resize(k2.size());
    inv_.resize(k2.size());
    for (std::size_t c = 0; c < k2.size(); ++c) {
      mult_[c] = std::pow(1.0 + alpha * k2[c], s);
      inv_[c] = 1.0 / mult_[c];
    }
  }

  const Grid& grid() const { return grid_; }
  double alpha() const { return alpha_; }
  int exponent() const { return s_; }
  const FourierGrid& fourier_grid() const { return *fourier_; }
  const std::vector<double>& multipliers() const { return mult_; }
  const std::vector<double>& inverse_multipliers() const { return inv_; }

  ScalarField apply_L(const ScalarField& f) const { return apply(f, mult_, "apply_L"); }
  ScalarField apply_K(const ScalarField& f) const { return apply(f, inv_, "apply_K"); }
  VectorField apply_L(const VectorField& f) const { return apply(f, mult_, "apply_L"); }
  VectorField apply_K(const VectorField& f) const { return apply(f, inv_, "apply_K"); }

  /// <a, b>_V = <L a, b>_{L2}
  double dot_v(const VectorField& a, const VectorField& b) const { return dot_l2(apply_L(a), b); }

private:
  ScalarField apply(const ScalarField& f, const std::vector<double>& m, const char* what) const
  {
    require_same_grid(f.grid, grid_, what);
    auto s = fourier_->forward(f.values);
    detail::multiply(s, m);
    return ScalarField(grid_, fourier_->inverse(s));
  }

  VectorField apply(const VectorField& f, const std::vector<double>& m, const char* what) const
  {
    require_same_grid(f.grid, grid_, what);
    VectorField out(grid_);
    for (int a = 0; a < grid_.ndim(); ++a) {
      auto s = fourier_->forward(f.component(a));
      detail::multiply(s, m);
      fourier_->inverse(s, out.component(a));
    }
    return out;
  }

  Grid grid_;
  double alpha_;
  int s_;
  std::shared_ptr<const FourierGrid> fourier_;
  std::vector<double> mult_;
  std::vector<double> inv_;
};

/// Partial derivatives of u: entry(i, j) = d u_i / d x_j.
struct JacobianField {
  Grid grid;
  std::vector<ScalarField> entries;

  int ndim() const { return grid.ndim(); }
  const ScalarField& entry(int i, int j) const { return entries[i * grid.ndim() + j]; }
  ScalarField& entry(int i, int j) { return entries[i * grid.ndim() + j]; }
};

inline VectorField grad(const ScalarField& f)
{
  const auto fg = fourier(f.grid);
  const auto s = fg->forward(f.values);
  VectorField out(f.grid);
  for (int a = 0; a < f.grid.ndim(); ++a)
    fg->inverse(detail::derivative(s, fg->wavenumber(a)), out.component(a));
  return out;
}

inline ScalarField divergence(const VectorField& u)
{
  const auto fg = fourier(u.grid);
  Spectrum acc(fg->spectral_size());
  for (int a = 0; a < u.ndim(); ++a) {
    const auto da = detail::derivative(fg->forward(u.component(a)), fg->wavenumber(a));
    for (std::size_t c = 0; c < acc.size(); ++c)
      acc[c] += da[c];
  }
  return ScalarField(u.grid, fg->inverse(acc));
}

inline ScalarField laplacian(const ScalarField& f)
{
  const auto fg = fourier(f.grid);
  auto s = fg->forward(f.values);
  const auto& k2 = fg->k_squared();
  for (std::size_t c = 0; c < s.size(); ++c)
    s[c] *= -k2[c];
  return ScalarField(f.grid, fg->inverse(s));
}

inline JacobianField jacobian_matrix(const VectorField& u)
{
  const auto fg = fourier(u.grid);
  const int d = u.ndim();
  JacobianField J{u.grid, std::vector<ScalarField>(d * d, ScalarField(u.grid))};
  for (int i = 0; i < d; ++i) {
    const auto s = fg->forward(u.component(i));
    for (int j = 0; j < d; ++j)
      fg->inverse(detail::derivative(s, fg->wavenumber(j)), J.entry(i, j).values);
  }
  return J;
}

/// Zero the modes outside the two-thirds band.
inline VectorField dealias(const VectorField& u)
{
  const auto fg = fourier(u.grid);
  VectorField out(u.grid);
  for (int a = 0; a < u.ndim(); ++a) {
    auto s = fg->forward(u.component(a));
    detail::apply_mask(s, fg->dealias_mask());
    fg->inverse(s, out.component(a));
  }
  return out;
}

/// Periodic Gaussian smoothing with standard deviation given in voxels.
inline ScalarField gaussian_smooth(const ScalarField& f, double sigma_voxels)
{
  if (sigma_voxels <= 0.0)
    return f;
  const auto fg = fourier(f.grid);
  auto s = fg->forward(f.values);
  const int d = f.grid.ndim();
  std::vector<double> damp(s.size());
  for (std::size_t c = 0; c < s.size(); ++c) {
    double e = 0.0;
    for (int a = 0; a < d; ++a) {
      const double sk = sigma_voxels * f.grid.spacing(a) * fg->full_wavenumber(a)[c];
      e += sk * sk;
    }
    damp[c] = std::exp(-0.5 * e);
  }
  detail::multiply(s, damp);
  return ScalarField(f.grid, fg->inverse(s));
}

/// ad_v u = Dv u - Du v, dealiased.
inline VectorField ad(const VectorField& v, const VectorField& u)
{
  require_same_grid(v.grid, u.grid, "ad");
  const int d = v.ndim();
  const std::size_t n = v.nodes();
  const auto Dv = jacobian_matrix(v);
  const auto Du = jacobian_matrix(u);
  VectorField out(v.grid);
  for (int i = 0; i < d; ++i) {
    auto oi = out.component(i);
    for (int j = 0; j < d; ++j) {
      const auto& dvij = Dv.entry(i, j).values;
      const auto& duij = Du.entry(i, j).values;
      const auto uj = u.component(j);
      const auto vj = v.component(j);
      for (std::size_t x = 0; x < n; ++x)
        oi[x] += dvij[x] * uj[x] - duij[x] * vj[x];
    }
  }
  return dealias(out);
}

/// ad-dagger_v u = K [ (Dv)^T L u + D(L u) v + (L u) div v ], dealiased.
inline VectorField ad_dagger(const MetricOperator& op, const VectorField& v, const VectorField& u)
{
  require_same_grid(v.grid, u.grid, "ad_dagger");
  require_same_grid(v.grid, op.grid(), "ad_dagger");
  const int d = v.ndim();
  const std::size_t n = v.nodes();
  const auto& fg = op.fourier_grid();

  // Lu and its derivatives from one transform per component.
  VectorField Lu(v.grid);
  JacobianField DLu{v.grid, std::vector<ScalarField>(d * d, ScalarField(v.grid))};
  for (int i = 0; i < d; ++i) {
    auto s = fg.forward(u.component(i));
    detail::multiply(s, op.multipliers());
    fg.inverse(s, Lu.component(i));
    for (int j = 0; j < d; ++j)
      fg.inverse(detail::derivative(s, fg.wavenumber(j)), DLu.entry(i, j).values);
  }
  const auto Dv = jacobian_matrix(v);

  VectorField acc(v.grid);
  for (int i = 0; i < d; ++i) {
    auto ai = acc.component(i);
    const auto lui = Lu.component(i);
    for (int j = 0; j < d; ++j) {
      const auto& dvji = Dv.entry(j, i).values;
      const auto& dvjj = Dv.entry(j, j).values;
      const auto& dluij = DLu.entry(i, j).values;
      const auto luj = Lu.component(j);
      const auto vj = v.component(j);
      for (std::size_t x = 0; x < n; ++x)
        ai[x] += dvji[x] * luj[x] + dluij[x] * vj[x] + lui[x] * dvjj[x];
    }
  }

  VectorField out(v.grid);
  for (int i = 0; i < d; ++i) {
    auto s = fg.forward(acc.component(i));
    detail::multiply(s, op.inverse_multipliers());
    detail::apply_mask(s, fg.dealias_mask());
    fg.inverse(s, out.component(i));
  }
  return out;
}

} // namespace pdelddmm
