// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lowerbounds.hpp"
#include "matfun.hpp"
#include "oracles.hpp"
#include "simulate.hpp"

using namespace tgb;

TEST_CASE("shifted-growth floor arithmetic")
{
  matfun::MatFunction t = matfun::Pencil{CMatrix::Constant(1, 1, Cplx(-1.0, 0.0))};
  CHECK(lowerbounds::LbGeneral(t, 0.5, 0.0, -0.25) == doctest::Approx(0.0));
  CHECK(lowerbounds::LbGeneral(t, 0.5, -1.0, -0.25) == doctest::Approx(1.5));
  CHECK(lowerbounds::LbGeneral(t, 0.25, 0.0, 0.1) == doctest::Approx(0.4));
}

TEST_CASE("scalar resolvent scan matches the closed form and stays below 1")
{
  // T(z) = z + 1: x * max_y |1/(x + 1 + iy)| = x/(x+1), increasing toward 1.
  matfun::MatFunction t = matfun::Pencil{CMatrix::Constant(1, 1, Cplx(-1.0, 0.0))};
  for (double x : {0.3, 1.0, 4.0, 25.0})
  {
    double lb = lowerbounds::LbPractical(t, x, 10.0);
    CHECK(lb == doctest::Approx(x / (x + 1.0)).epsilon(1e-6));
    CHECK(lb <= 1.0 + 1e-12);  // sup ||Psi|| = ||Psi(0)|| = 1 for this system
  }
}

TEST_CASE("beyond the truncation height the axis value dominates")
{
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  CMatrix m(3, 3);
  m << Cplx(-1.0, 0.0), Cplx(4.0, 0.0), Cplx(0.0, 0.0),
       Cplx(0.0, 0.0), Cplx(-2.0, 0.5), Cplx(1.0, -1.0),
       Cplx(0.0, 0.0), Cplx(0.0, 0.0), Cplx(-0.5, -1.5);
  matfun::MatFunction pencil = matfun::Pencil{m};

  matfun::MatFunction delay = matfun::DelayChar{
      CMatrix::Constant(1, 1, Cplx(-1.0, 0.0)),
      CMatrix::Constant(1, 1, Cplx(-0.5, 0.0)), 1.0};

  for (const matfun::MatFunction *fn : {&pencil, &delay})
  {
    for (double x : {0.5, 2.0})
    {
      double height = lowerbounds::LbTruncationHeight(*fn, x);
      REQUIRE(std::isfinite(height));
      REQUIRE(height > 0.0);
      double axis = matfun::ResolventNorm(*fn, Cplx(x, 0.0));
      for (int k = 0; k < 10000; k++)
      {
        double y = height * (1.0 + 9.0 * unif(rng));  // heights in [h, 10h]
        double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
        double val = matfun::ResolventNorm(*fn, Cplx(x, sign * y));
        REQUIRE(val <= axis * (1.0 + 1e-12));
      }
    }
  }
}

TEST_CASE("scan equals the brute-force maximum over its own mesh")
{
  CMatrix m(2, 2);
  m << Cplx(-1.0, 0.0), Cplx(20.0, 0.0), Cplx(0.0, 0.0), Cplx(-2.0, 0.0);
  matfun::MatFunction t = matfun::Pencil{m};
  int n_x = 50;
  lowerbounds::ScanResult scan = lowerbounds::LbScan(t, 0.5, 5.0, n_x);
  REQUIRE(scan.xs.size() == static_cast<std::size_t>(n_x));
  REQUIRE(scan.values.size() == scan.xs.size());

  double best = 0.0;
  double best_x = 0.0;
  for (std::size_t k = 0; k < scan.xs.size(); k++)
  {
    CHECK(scan.xs[k] == doctest::Approx(0.5 + 4.5 * k / (n_x - 1)).epsilon(1e-12));
    if (scan.values[k] > best)
    {
      best = scan.values[k];
      best_x = scan.xs[k];
    }
  }
  CHECK(scan.value == doctest::Approx(best).epsilon(1e-12));
  CHECK(scan.x == doctest::Approx(best_x).epsilon(1e-12));

  // Per-x table entries agree with direct evaluation at their own height.
  for (std::size_t k = 0; k < scan.xs.size(); k += 7)
  {
    double x = scan.xs[k];
    double direct = lowerbounds::LbPractical(t, x, lowerbounds::LbTruncationHeight(t, x));
    CHECK(scan.values[k] == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("scan validity against densely sampled transient growth")
{
  CMatrix m(2, 2);
  m << Cplx(-1.0, 0.0), Cplx(20.0, 0.0), Cplx(0.0, 0.0), Cplx(-2.0, 0.0);
  matfun::MatFunction t = matfun::Pencil{m};
  lowerbounds::ScanResult scan = lowerbounds::LbScan(t, 0.5, 5.0, 50);

  simulate::NormCurve sim = simulate::ExpmNormCurve(m, 25.0, 4000);
  double sup = 0.0;
  for (Eigen::Index k = 0; k < sim.values.size(); k++)
  {
    sup = std::max(sup, sim.values(k));
  }
  CHECK(scan.value <= sup * (1.0 + 1e-6));
  // This matrix genuinely grows before it decays; the floor should notice.
  CHECK(scan.value > 2.0);
  CHECK(sup > scan.value * 0.9);
}

TEST_CASE("large abscissae drive the floor toward the initial value")
{
  // x ||T(x)^{-1}|| -> ||Psi(0)|| = 1 as x grows, and sup_t ||Psi|| >= 1
  // always; the scan must therefore sit within a whisker of 1 for a system
  // with no transient growth at all.
  matfun::MatFunction t = matfun::DelayChar{
      CMatrix::Constant(1, 1, Cplx(-1.0, 0.0)),
      CMatrix::Constant(1, 1, Cplx(-0.5, 0.0)), 1.0};
  lowerbounds::ScanResult scan = lowerbounds::LbScan(t, 1.0, 60.0, 40);
  CHECK(scan.value <= 1.0 + 1e-9);
  CHECK(scan.value > 0.9);
}

TEST_CASE("argument validation")
{
  matfun::MatFunction t = matfun::Pencil{CMatrix::Constant(1, 1, Cplx(-1.0, 0.0))};
  CHECK_THROWS_AS(lowerbounds::LbPractical(t, -1.0, 10.0), Error);
  CHECK_THROWS_AS(lowerbounds::LbPractical(t, 1.0, -2.0), Error);
  CHECK_THROWS_AS(lowerbounds::LbScan(t, 2.0, 1.0, 10), Error);
  CHECK_THROWS_AS(lowerbounds::LbScan(t, 1.0, 2.0, 1), Error);
  CHECK_THROWS_AS(lowerbounds::LbGeneral(t, 0.0, 0.0, -1.0), Error);
}
