#pragma once

// Real-to-complex FFTs on periodic grids plus the per-mode symbols the
// differential operators need. Backed by FFTW; plans are built once per
// grid shape and executed with the new-array interface, which is safe to
// call concurrently.

#include <array>
#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "grid.hpp"

namespace pdelddmm {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

class FourierGrid {
public:
  explicit FourierGrid(const Grid& g) : grid_(g)
  {
    const int d = g.ndim();
    // FFTW wants the slowest axis first.
    int n[3];
    for (int a = 0; a < d; ++a)
      n[a] = static_cast<int>(g.dim(d - 1 - a));
    nc0_ = g.dim(0) / 2 + 1;
    nspec_ = nc0_ * g.dim(1) * (d == 3 ? g.dim(2) : 1);

    {
      std::lock_guard lock(planner_mutex());
      double* rbuf = fftw_alloc_real(g.size());
      fftw_complex* cbuf = fftw_alloc_complex(nspec_);
      const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
      forward_ = fftw_plan_dft_r2c(d, n, rbuf, cbuf, flags);
      inverse_ = fftw_plan_dft_c2r(d, n, cbuf, rbuf, flags);
      fftw_free(rbuf);
      fftw_free(cbuf);
    }
    if (!forward_ || !inverse_)
      throw std::runtime_error("FFTW planning failed");

    for (int a = 0; a < d; ++a) {
      kder_[a].resize(nspec_);
      kfull_[a].resize(nspec_);
    }
    k2_.resize(nspec_);
    keep_.resize(nspec_);
    for (std::size_t c = 0; c < nspec_; ++c) {
      auto j = unravel(c);
      double k2 = 0.0;
      bool keep = true;
      for (int a = 0; a < d; ++a) {
        const long na = static_cast<long>(g.dim(a));
        const long kint = signed_index(j[a], na);
        const double k = 2.0 * M_PI * static_cast<double>(kint) / g.extent(a);
        k2 += k * k;
        const bool nyquist = (na % 2 == 0) && (std::labs(kint) == na / 2);
        kder_[a][c] = nyquist ? 0.0 : k;
        kfull_[a][c] = k;
        if (std::labs(kint) > na / 3)
          keep = false;
      }
      k2_[c] = k2;
      keep_[c] = keep ? 1 : 0;
    }
  }

  FourierGrid(const FourierGrid&) = delete;
  FourierGrid& operator=(const FourierGrid&) = delete;

  ~FourierGrid()
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  const Grid& grid() const { return grid_; }
  std::size_t spectral_size() const { return nspec_; }

  /// Angular wavenumber along axis a used for derivatives (Nyquist zeroed).
  const std::vector<double>& wavenumber(int a) const { return kder_[a]; }
  /// Angular wavenumber along axis a with the Nyquist modes kept.
  const std::vector<double>& full_wavenumber(int a) const { return kfull_[a]; }
  /// |k|^2 including the Nyquist modes; -|k|^2 is the symbol of the Laplacian.
  const std::vector<double>& k_squared() const { return k2_; }
  /// 1 for modes kept by the two-thirds rule.
  const std::vector<unsigned char>& dealias_mask() const { return keep_; }

  Spectrum forward(std::span<const double> x) const
  {
    std::vector<double> in(x.begin(), x.end());
    Spectrum out(nspec_);
    fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  /// Normalized inverse transform; c2r leaves an exactly real result.
  void inverse(const Spectrum& s, std::span<double> out) const
  {
    Spectrum tmp(s);
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(tmp.data()), out.data());
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (double& x : out)
      x *= scale;
  }

  std::vector<double> inverse(const Spectrum& s) const
  {
    std::vector<double> out(grid_.size());
    inverse(s, out);
    return out;
  }

private:
  static std::mutex& planner_mutex()
  {
    // Leaked so it outlives the plan cache during static destruction.
    static std::mutex* m = new std::mutex;
    return *m;
  }

  static long signed_index(std::size_t j, long n)
  {
    const long jj = static_cast<long>(j);
    return jj <= n / 2 ? jj : jj - n;
  }

  std::array<std::size_t, 3> unravel(std::size_t c) const
  {
    std::array<std::size_t, 3> j{};
    j[0] = c % nc0_;
    c /= nc0_;
    j[1] = c % grid_.dim(1);
    j[2] = c / grid_.dim(1);
    return j;
  }

  Grid grid_;
  std::size_t nc0_ = 0;
  std::size_t nspec_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
  std::array<std::vector<double>, 3> kder_;
  std::array<std::vector<double>, 3> kfull_;
  std::vector<double> k2_;
  std::vector<unsigned char> keep_;
};

/// Shared FourierGrid per grid shape.
inline std::shared_ptr<const FourierGrid> fourier(const Grid& g)
{
  using Key = std::tuple<std::vector<std::size_t>, std::vector<double>>;
  static std::mutex m;
  static std::map<Key, std::shared_ptr<const FourierGrid>> cache;
  std::lock_guard lock(m);
  Key key{g.dims(), g.spacings()};
  auto it = cache.find(key);
  if (it != cache.end())
    return it->second;
  auto fg = std::make_shared<const FourierGrid>(g);
  cache.emplace(std::move(key), fg);
  return fg;
}

} // namespace pdelddmm
