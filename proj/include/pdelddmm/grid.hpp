#pragma once

// Periodic grids and the sampled fields that live on them.
//
// Storage is row-major with axis 1 (index 0 here) varying fastest:
//   linear = i0 + n0 * (i1 + n1 * i2)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace pdelddmm {

/// Thrown when a solver produces non-finite values or trips a blow-up guard.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class Grid {
public:
  Grid() = default;

  Grid(std::vector<std::size_t> dims, std::vector<double> spacing)
  {
    if (dims.size() != 2 && dims.size() != 3)
      throw std::invalid_argument("grid dimension must be 2 or 3");
    if (spacing.size() != dims.size())
      throw std::invalid_argument("grid spacing count does not match dimension");
    d_ = static_cast<int>(dims.size());
    for (int a = 0; a < d_; ++a) {
      if (dims[a] < 4)
        throw std::invalid_argument("grid dims must be >= 4");
      if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
        throw std::invalid_argument("grid spacing must be positive and finite");
      n_[a] = dims[a];
      h_[a] = spacing[a];
    }
  }

  /// Square/cubic grid on the unit periodic domain.
  static Grid unit(int d, std::size_t n)
  {
    return Grid(std::vector<std::size_t>(d, n), std::vector<double>(d, 1.0 / static_cast<double>(n)));
  }

  int ndim() const { return d_; }
  std::size_t dim(int a) const { return n_[a]; }
  double spacing(int a) const { return h_[a]; }
  double extent(int a) const { return static_cast<double>(n_[a]) * h_[a]; }
  std::size_t size() const { return n_[0] * n_[1] * n_[2]; }

  double cell_volume() const
  {
    double v = 1.0;
    for (int a = 0; a < d_; ++a)
      v *= h_[a];
    return v;
  }

  double mean_spacing() const
  {
    double s = 0.0;
    for (int a = 0; a < d_; ++a)
      s += h_[a];
    return s / d_;
  }

  std::vector<std::size_t> dims() const { return {n_.begin(), n_.begin() + d_}; }
  std::vector<double> spacings() const { return {h_.begin(), h_.begin() + d_}; }

  std::size_t index(std::size_t i0, std::size_t i1, std::size_t i2 = 0) const
  {
    return i0 + n_[0] * (i1 + n_[1] * i2);
  }

  std::array<std::size_t, 3> unravel(std::size_t idx) const
  {
    std::array<std::size_t, 3> i{};
    i[0] = idx % n_[0];
    idx /= n_[0];
    i[1] = idx % n_[1];
    i[2] = idx / n_[1];
    return i;
  }

  /// Physical coordinate of node idx along axis a (origin at node 0).
  double coordinate(std::size_t idx, int a) const
  {
    return static_cast<double>(unravel(idx)[a]) * h_[a];
  }

  friend bool operator==(const Grid& a, const Grid& b)
  {
    return a.d_ == b.d_ && a.n_ == b.n_ && a.h_ == b.h_;
  }

private:
  int d_ = 2;
  std::array<std::size_t, 3> n_{1, 1, 1};
  std::array<double, 3> h_{1.0, 1.0, 1.0};
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what)
{
  if (!(a == b))
    throw std::invalid_argument(std::string("grid mismatch in ") + what);
}

struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(Grid g, double fill = 0.0) : grid(std::move(g)), values(grid.size(), fill) {}
  ScalarField(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v))
  {
    if (values.size() != grid.size())
      throw std::invalid_argument("scalar field value count does not match grid");
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  ScalarField& operator+=(const ScalarField& o)
  {
    for (std::size_t i = 0; i < values.size(); ++i)
      values[i] += o.values[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o)
  {
    for (std::size_t i = 0; i < values.size(); ++i)
      values[i] -= o.values[i];
    return *this;
  }
  ScalarField& operator*=(double s)
  {
    for (double& x : values)
      x *= s;
    return *this;
  }
};

/// d components stored back to back in one buffer.
struct VectorField {
  Grid grid;
  std::vector<double> data;

  VectorField() = default;
  explicit VectorField(Grid g, double fill = 0.0)
      : grid(std::move(g)), data(grid.size() * static_cast<std::size_t>(grid.ndim()), fill)
  {
  }

  int ndim() const { return grid.ndim(); }
  std::size_t nodes() const { return grid.size(); }

  std::span<double> component(int a) { return {data.data() + a * nodes(), nodes()}; }
  std::span<const double> component(int a) const { return {data.data() + a * nodes(), nodes()}; }

  double& operator()(int a, std::size_t i) { return data[a * nodes() + i]; }
  double operator()(int a, std::size_t i) const { return data[a * nodes() + i]; }

  ScalarField component_field(int a) const
  {
    auto c = component(a);
    return ScalarField(grid, std::vector<double>(c.begin(), c.end()));
  }
  void set_component(int a, const ScalarField& f)
  {
    std::copy(f.values.begin(), f.values.end(), component(a).begin());
  }

  VectorField& operator+=(const VectorField& o)
  {
    for (std::size_t i = 0; i < data.size(); ++i)
      data[i] += o.data[i];
    return *this;
  }
  VectorField& operator-=(const VectorField& o)
  {
    for (std::size_t i = 0; i < data.size(); ++i)
      data[i] -= o.data[i];
    return *this;
  }
  VectorField& operator*=(double s)
  {
    for (double& x : data)
      x *= s;
    return *this;
  }
};

struct LabelField {
  Grid grid;
  std::vector<unsigned> labels;

  LabelField() = default;
  explicit LabelField(Grid g, unsigned fill = 0) : grid(std::move(g)), labels(grid.size(), fill) {}
  LabelField(Grid g, std::vector<unsigned> l) : grid(std::move(g)), labels(std::move(l))
  {
    if (labels.size() != grid.size())
      throw std::invalid_argument("label count does not match grid");
  }
};

template <class F>
F operator+(F a, const F& b)
  requires std::is_same_v<F, ScalarField> || std::is_same_v<F, VectorField>
{
  a += b;
  return a;
}

template <class F>
F operator-(F a, const F& b)
  requires std::is_same_v<F, ScalarField> || std::is_same_v<F, VectorField>
{
  a -= b;
  return a;
}

template <class F>
F operator*(double s, F a)
  requires std::is_same_v<F, ScalarField> || std::is_same_v<F, VectorField>
{
  a *= s;
  return a;
}

template <class F>
F operator-(F a)
  requires std::is_same_v<F, ScalarField> || std::is_same_v<F, VectorField>
{
  a *= -1.0;
  return a;
}

inline std::span<double> raw(ScalarField& f) { return f.values; }
inline std::span<const double> raw(const ScalarField& f) { return f.values; }
inline std::span<double> raw(VectorField& f) { return f.data; }
inline std::span<const double> raw(const VectorField& f) { return f.data; }

/// y += alpha * x
template <class F>
void axpy(double alpha, const F& x, F& y)
{
  auto xs = raw(x);
  auto ys = raw(y);
  for (std::size_t i = 0; i < ys.size(); ++i)
    ys[i] += alpha * xs[i];
}

/// Discrete L2 inner product: sum of products times the cell volume.
template <class F>
double dot_l2(const F& a, const F& b)
{
  auto as = raw(a);
  auto bs = raw(b);
  double s = 0.0;
  for (std::size_t i = 0; i < as.size(); ++i)
    s += as[i] * bs[i];
  return s * a.grid.cell_volume();
}

template <class F>
double norm_l2(const F& a)
{
  return std::sqrt(dot_l2(a, a));
}

inline double max_abs(const ScalarField& f)
{
  double m = 0.0;
  for (double x : f.values)
    m = std::max(m, std::abs(x));
  return m;
}

/// Largest pointwise Euclidean magnitude.
inline double max_abs(const VectorField& f)
{
  const std::size_t n = f.nodes();
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int a = 0; a < f.ndim(); ++a)
      s += f(a, i) * f(a, i);
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

template <class F>
bool all_finite(const F& f)
{
  for (double x : raw(f))
    if (!std::isfinite(x))
      return false;
  return true;
}

/// Time series of fields at t_k = k / nt, k = 0..nt.
///
/// `rates` optionally holds d/dt at every node; when present, mid-step
/// samples use cubic Hermite interpolation, otherwise linear.
template <class F>
struct Trajectory {
  std::vector<F> frames;
  std::vector<F> rates;

  int nt() const { return static_cast<int>(frames.size()) - 1; }
  double dt() const { return 1.0 / nt(); }
  bool has_rates() const { return rates.size() == frames.size(); }

  const F& front() const { return frames.front(); }
  const F& back() const { return frames.back(); }
  const F& operator[](int k) const { return frames[k]; }

  /// Sample at t = (k + 1/2) dt.
  F midpoint(int k) const
  {
    F out = frames[k];
    out += frames[k + 1];
    out *= 0.5;
    if (has_rates()) {
      // Hermite basis at theta = 1/2: h10 = 1/8, h11 = -1/8.
      axpy(dt() / 8.0, rates[k], out);
      axpy(-dt() / 8.0, rates[k + 1], out);
    }
    return out;
  }

  /// Sample at a half-integer step position s in [0, nt] (s = k or k + 0.5).
  F at_step(double s) const
  {
    const int k = static_cast<int>(std::floor(s));
    if (static_cast<double>(k) == s)
      return frames[k];
    return midpoint(k);
  }
};

} // namespace pdelddmm
