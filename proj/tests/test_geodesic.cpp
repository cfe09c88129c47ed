#include <gtest/gtest.h>

#include <cmath>

#include "pdelddmm/geodesic.hpp"
#include "pdelddmm/random_fields.hpp"

using namespace pdelddmm;

namespace {

double rel(const VectorField& a, const VectorField& b)
{
  return norm_l2(a - b) / std::max(norm_l2(b), 1e-300);
}

const Grid g32 = Grid::unit(2, 32);
const MetricOperator op32(g32, 0.01, 2);

Trajectory<VectorField> zeros(const Grid& g, int nt)
{
  Trajectory<VectorField> t;
  t.frames.assign(nt + 1, VectorField(g));
  return t;
}

} // namespace

TEST(Epdiff, ConstantFieldIsFixedPoint)
{
  VectorField c(g32);
  for (std::size_t i = 0; i < g32.size(); ++i) {
    c(0, i) = 0.3;
    c(1, i) = -0.1;
  }
  const auto v = integrate_epdiff(op32, c, 10);
  ASSERT_EQ(v.nt(), 10);
  for (const auto& f : v.frames)
    EXPECT_LT(max_abs(f - c), 1e-14);
}

TEST(Epdiff, FirstFrameIsInitial)
{
  Rng rng(40);
  const auto v0 = random_smooth_vector(g32, rng, 3, 0.1);
  EXPECT_EQ(integrate_epdiff(op32, v0, 5).front().data, v0.data);
}

TEST(Epdiff, ConservesEnergy)
{
  Rng rng(41);
  const auto v0 = random_smooth_vector(g32, rng, 3, 0.1);
  const auto v = integrate_epdiff(op32, v0, 20);
  const double e0 = op32.dot_v(v0, v0);
  for (const auto& f : v.frames)
    EXPECT_LE(std::abs(op32.dot_v(f, f) - e0), 1e-2 * e0);
}

TEST(Epdiff, SelfConvergenceOrder)
{
  Rng rng(42);
  const auto v0 = random_smooth_vector(g32, rng, 3, 0.1);
  const auto a = integrate_epdiff(op32, v0, 5).back();
  const auto b = integrate_epdiff(op32, v0, 10).back();
  const auto c = integrate_epdiff(op32, v0, 20).back();
  EXPECT_GE(std::log2(norm_l2(a - b) / norm_l2(b - c)), 1.8);
}

TEST(Epdiff, Guards)
{
  Rng rng(43);
  const auto v0 = random_smooth_vector(g32, rng, 3, 0.1);
  EXPECT_THROW(integrate_epdiff(op32, v0, 0), std::invalid_argument);
  EXPECT_THROW(integrate_epdiff(op32, VectorField(Grid::unit(2, 8)), 4), std::invalid_argument);
  auto bad = v0;
  bad(1, 7) = INFINITY;
  EXPECT_THROW(integrate_epdiff(op32, bad, 4), NumericalError);
  // A large velocity on a weak metric grows fast; a tight factor trips.
  GeodesicOptions tight;
  tight.blowup_factor = 1.0 + 1e-9;
  const MetricOperator weak(g32, 1e-4, 1);
  const auto big = random_smooth_vector(g32, rng, 6, 2.0);
  EXPECT_THROW(integrate_epdiff(weak, big, 10, tight), NumericalError);
}

TEST(IncrementalEpdiff, ZeroDirection)
{
  Rng rng(44);
  const auto v = integrate_epdiff(op32, random_smooth_vector(g32, rng, 3, 0.1), 10);
  const auto dv = integrate_incremental_epdiff(op32, v, VectorField(g32));
  for (const auto& f : dv.frames)
    EXPECT_EQ(max_abs(f), 0.0);
}

TEST(IncrementalEpdiff, MatchesFiniteDifference)
{
  Rng rng(45);
  const auto v0 = random_smooth_vector(g32, rng, 3, 0.1);
  const auto dv0 = random_smooth_vector(g32, rng, 3, 1.0);
  const double h = 1e-4;
  const auto v = integrate_epdiff(op32, v0, 10);
  const auto dv = integrate_incremental_epdiff(op32, v, dv0);
  const auto vp = integrate_epdiff(op32, v0 + h * dv0, 10);
  const auto vm = integrate_epdiff(op32, v0 - h * dv0, 10);
  for (int k : {0, 3, 10}) {
    auto fd = vp[k] - vm[k];
    fd *= 1.0 / (2 * h);
    EXPECT_LE(rel(dv[k], fd), 1e-4) << "frame " << k;
  }
}

TEST(IncrementalEpdiff, Linear)
{
  Rng rng(46);
  const auto v = integrate_epdiff(op32, random_smooth_vector(g32, rng, 3, 0.1), 10);
  const auto dv0 = random_smooth_vector(g32, rng, 3, 1.0);
  const auto a = integrate_incremental_epdiff(op32, v, dv0).back();
  const auto b = integrate_incremental_epdiff(op32, v, 3.0 * dv0).back();
  EXPECT_LE(norm_l2(b - 3.0 * a), 1e-10 * norm_l2(b));
}

TEST(AdjointJacobi, ZeroTerminal)
{
  Rng rng(47);
  const auto v = integrate_epdiff(op32, random_smooth_vector(g32, rng, 3, 0.1), 10);
  const auto r = backward_adjoint_jacobi(op32, v, VectorField(g32));
  EXPECT_EQ(max_abs(r.w0), 0.0);
  for (const auto& U : r.cache.U.frames)
    EXPECT_EQ(max_abs(U), 0.0);
  EXPECT_TRUE(r.cache.has_v && r.cache.has_U && r.cache.has_w);
}

TEST(AdjointJacobi, ZeroVelocityReducesToIntegral)
{
  Rng rng(48);
  const auto U1 = random_smooth_vector(g32, rng, 3, 1.0);
  const auto r = backward_adjoint_jacobi(op32, zeros(g32, 8), U1);
  for (const auto& U : r.cache.U.frames)
    EXPECT_LT(rel(U, U1), 1e-14);
  EXPECT_LT(rel(r.w0, U1), 1e-14);
}

TEST(AdjointJacobi, LinearInTerminal)
{
  Rng rng(49);
  const auto v = integrate_epdiff(op32, random_smooth_vector(g32, rng, 3, 0.1), 10);
  const auto a = random_smooth_vector(g32, rng, 3, 1.0);
  const auto b = random_smooth_vector(g32, rng, 3, 1.0);
  const auto wa = backward_adjoint_jacobi(op32, v, a).w0;
  const auto wb = backward_adjoint_jacobi(op32, v, b).w0;
  const auto wab = backward_adjoint_jacobi(op32, v, a + b).w0;
  EXPECT_LE(norm_l2(wab - wa - wb), 1e-10 * norm_l2(wab));
}

TEST(IncrementalAdjointJacobi, ZeroInputs)
{
  Rng rng(50);
  const auto v = integrate_epdiff(op32, random_smooth_vector(g32, rng, 3, 0.1), 10);
  const auto cache = backward_adjoint_jacobi(op32, v, random_smooth_vector(g32, rng, 3, 1.0)).cache;
  for (auto mode : {HessianMode::gauss_newton, HessianMode::full}) {
    const auto dw0 = backward_incremental_adjoint_jacobi(op32, cache, zeros(g32, 10), VectorField(g32), mode);
    EXPECT_EQ(max_abs(dw0), 0.0);
  }
}

TEST(IncrementalAdjointJacobi, ZeroVelocityGaussNewton)
{
  Rng rng(51);
  const auto v = zeros(g32, 8);
  const auto cache = backward_adjoint_jacobi(op32, v, random_smooth_vector(g32, rng, 3, 1.0)).cache;
  const auto dv = integrate_incremental_epdiff(op32, v, random_smooth_vector(g32, rng, 3, 1.0));
  const auto dU1 = random_smooth_vector(g32, rng, 3, 1.0);
  const auto dw0 = backward_incremental_adjoint_jacobi(op32, cache, dv, dU1, HessianMode::gauss_newton);
  EXPECT_LT(rel(dw0, dU1), 1e-14);
}

TEST(IncrementalAdjointJacobi, GaussNewtonIgnoresMultiplierCaches)
{
  Rng rng(52);
  const auto v = integrate_epdiff(op32, random_smooth_vector(g32, rng, 3, 0.1), 10);
  auto cache = backward_adjoint_jacobi(op32, v, random_smooth_vector(g32, rng, 3, 1.0)).cache;
  const auto dv = integrate_incremental_epdiff(op32, v, random_smooth_vector(g32, rng, 3, 1.0));
  const auto dU1 = random_smooth_vector(g32, rng, 3, 1.0);
  const auto ref = backward_incremental_adjoint_jacobi(op32, cache, dv, dU1, HessianMode::gauss_newton);
  for (auto& f : cache.w.frames)
    f *= 7.0;
  for (auto& f : cache.U.frames)
    f *= -3.0;
  EXPECT_EQ(backward_incremental_adjoint_jacobi(op32, cache, dv, dU1, HessianMode::gauss_newton).data, ref.data);
  EXPECT_NE(backward_incremental_adjoint_jacobi(op32, cache, dv, dU1, HessianMode::full).data,
            backward_incremental_adjoint_jacobi(op32, cache, dv, dU1, HessianMode::gauss_newton).data);
}

TEST(IncrementalAdjointJacobi, LinearInTerminal)
{
  Rng rng(53);
  const auto v = integrate_epdiff(op32, random_smooth_vector(g32, rng, 3, 0.1), 10);
  const auto cache = backward_adjoint_jacobi(op32, v, random_smooth_vector(g32, rng, 3, 1.0)).cache;
  const auto z = zeros(g32, 10);
  const auto a = random_smooth_vector(g32, rng, 3, 1.0);
  const auto b = random_smooth_vector(g32, rng, 3, 1.0);
  for (auto mode : {HessianMode::gauss_newton, HessianMode::full}) {
    const auto wa = backward_incremental_adjoint_jacobi(op32, cache, z, a, mode);
    const auto wb = backward_incremental_adjoint_jacobi(op32, cache, z, b, mode);
    const auto wab = backward_incremental_adjoint_jacobi(op32, cache, z, a + b, mode);
    EXPECT_LE(norm_l2(wab - wa - wb), 1e-10 * norm_l2(wab));
  }
}

TEST(IncrementalAdjointJacobi, MissingPasses)
{
  Rng rng(54);
  const auto v = integrate_epdiff(op32, random_smooth_vector(g32, rng, 3, 0.1), 4);
  auto cache = backward_adjoint_jacobi(op32, v, random_smooth_vector(g32, rng, 3, 1.0)).cache;
  const auto dv = zeros(g32, 4);
  const VectorField dU1(g32);
  cache.has_w = false;
  EXPECT_THROW(backward_incremental_adjoint_jacobi(op32, cache, dv, dU1, HessianMode::full), std::invalid_argument);
  EXPECT_NO_THROW(backward_incremental_adjoint_jacobi(op32, cache, dv, dU1, HessianMode::gauss_newton));
  cache.has_v = false;
  EXPECT_THROW(backward_incremental_adjoint_jacobi(op32, cache, dv, dU1, HessianMode::gauss_newton),
               std::invalid_argument);
  cache.has_v = true;
  EXPECT_THROW(backward_incremental_adjoint_jacobi(op32, cache, zeros(g32, 5), dU1, HessianMode::gauss_newton),
               std::invalid_argument);
}
