// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "odebounds.hpp"
#include "oracles.hpp"
#include "problems.hpp"
#include "simulate.hpp"

using namespace tgb;

namespace
{

constexpr double kPi = 3.14159265358979323846;

std::vector<double> Linspace(double lo, double hi, int n)
{
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; i++)
  {
    out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  }
  return out;
}

odebounds::BoundOptions CoarseOpts(int n = 140)
{
  odebounds::BoundOptions opts;
  opts.level.nx = n;
  opts.level.ny = n;
  opts.level.certify = false;
  return opts;
}

}  // namespace

TEST_CASE("scalar resolvent bound has the exact disk form")
{
  // M = [-1], eps = 1/4: the level set is the circle of radius eps around -1,
  // L = 2 pi eps, alpha_eps = -3/4, so bound(t) = e^{-0.75 t} and bound(0) = 1.
  CMatrix m = CMatrix::Constant(1, 1, Cplx(-1.0, 0.0));
  std::vector<double> ts = Linspace(0.0, 5.0, 26);
  odebounds::BoundCurve c = odebounds::OdeUpperBound(m, 0.25, ts);
  REQUIRE(c.values.size() == ts.size());
  CHECK(!c.discrete);
  CHECK(c.certified);
  for (std::size_t k = 0; k < ts.size(); k++)
  {
    CHECK(c.values[k] == doctest::Approx(std::exp(-0.75 * ts[k])).epsilon(1e-10));
    CHECK(c.values[k] >= std::exp(-ts[k]) - 1e-12);  // dominates ||e^{tM}||
  }
  CHECK(c.values[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("normal matrix: bound dominates the decay at the shifted rate")
{
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = -1.0;
  m(1, 1) = -2.0;
  std::vector<double> ts = Linspace(0.0, 8.0, 33);
  odebounds::BoundCurve c = odebounds::OdeUpperBound(m, 0.1, ts);
  for (std::size_t k = 0; k < ts.size(); k++)
  {
    CHECK(c.values[k] >= std::exp(-ts[k]) - 1e-12);
  }
  REQUIRE(!c.terms.empty());
  double alpha_sum = -1.0 + 0.1;
  for (const auto &term : c.terms)
  {
    CHECK(term.epsilon == doctest::Approx(0.1));
  }
  // The dominant decay rate of the assembled curve is alpha + eps.
  std::size_t last = ts.size() - 1;
  double rate = std::log(c.values[last] / c.values[last - 1]) / (ts[last] - ts[last - 1]);
  CHECK(rate == doctest::Approx(alpha_sum).epsilon(1e-3));
}

TEST_CASE("nonnormal 2x2: bound dominates the norm of the matrix exponential")
{
  CMatrix m(2, 2);
  m << Cplx(-1.0, 0.0), Cplx(20.0, 0.0), Cplx(0.0, 0.0), Cplx(-2.0, 0.0);
  simulate::NormCurve sim = simulate::ExpmNormCurve(m, 10.0, 200);
  odebounds::BoundCurve c = odebounds::OdeUpperBound(m, 1e-2, sim.times);
  REQUIRE(c.values.size() == sim.times.size());
  for (std::size_t k = 0; k < sim.times.size(); k++)
  {
    double s = sim.values(static_cast<Eigen::Index>(k));
    CHECK(c.values[k] >= s * (1.0 - 1e-8));
  }
}

TEST_CASE("resolvent-based floor on weighted transient growth")
{
  // Scalar decayed case: floor is vacuous.
  CMatrix m1 = CMatrix::Constant(1, 1, Cplx(-1.0, 0.0));
  CHECK(odebounds::OdeLowerBound(m1, 0.25, 0.0) == doctest::Approx(0.0));

  // Normal case with a shifting weight: alpha_eps = alpha + eps exactly, so
  // the floor is (alpha + eps - omega)/eps = (-1 + 1 + 2)/1 = 2.
  CMatrix m2 = CMatrix::Zero(2, 2);
  m2(0, 0) = -1.0;
  m2(1, 1) = -3.0;
  double lb = odebounds::OdeLowerBound(m2, 1.0, -2.0, CoarseOpts());
  CHECK(lb == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("floor consistency against dense time sampling")
{
  CMatrix m(2, 2);
  m << Cplx(-1.0, 0.0), Cplx(20.0, 0.0), Cplx(0.0, 0.0), Cplx(-2.0, 0.0);
  simulate::NormCurve sim = simulate::ExpmNormCurve(m, 40.0, 2000);
  for (double omega : {0.0, -1.0})
  {
    double sup = 0.0;
    for (std::size_t k = 0; k < sim.times.size(); k++)
    {
      sup = std::max(sup, std::exp(-omega * sim.times[k]) *
                              sim.values(static_cast<Eigen::Index>(k)));
    }
    for (int ke = 0; ke <= 8; ke++)
    {
      double eps = std::pow(10.0, -0.25 * ke);
      double lb = odebounds::OdeLowerBound(m, eps, omega, CoarseOpts());
      CHECK(lb <= sup + 1e-6);
    }
  }
}

TEST_CASE("first-order case of the initial-data split reduces to the resolvent bound")
{
  CMatrix m(2, 2);
  m << Cplx(-0.4, 0.0), Cplx(2.0, 0.0), Cplx(0.0, 0.0), Cplx(-0.9, 0.0);
  odebounds::HODEProblem h;
  h.discrete = false;
  h.coeffs = {m};
  CVector y0(2);
  y0 << Cplx(0.6, 0.0), Cplx(-0.8, 0.0);
  h.initial = {y0};
  std::vector<double> ts = Linspace(0.0, 6.0, 25);
  odebounds::BoundCurve hb = odebounds::HodeUpperBound(h, 0.05, ts);
  odebounds::BoundCurve ob = odebounds::OdeUpperBound(m, 0.05, ts);
  REQUIRE(hb.values.size() == ob.values.size());
  for (std::size_t k = 0; k < ts.size(); k++)
  {
    CHECK(hb.values[k] == doctest::Approx(ob.values[k] * y0.norm()).epsilon(1e-8));
  }
}

TEST_CASE("damped oscillator: split bound dominates the reference trajectory")
{
  // y'' = -y - 0.1 y', y(0) = 1, y'(0) = 0.
  odebounds::HODEProblem h;
  h.discrete = false;
  h.coeffs = {CMatrix::Constant(1, 1, Cplx(-1.0, 0.0)),
              CMatrix::Constant(1, 1, Cplx(-0.1, 0.0))};
  h.initial = {CVector::Constant(1, Cplx(1.0, 0.0)), CVector::Zero(1)};

  auto deriv = [](double, const double *y, double *dy) {
    dy[0] = y[1];
    dy[1] = -y[0] - 0.1 * y[1];
  };
  int n_out = 300;
  auto traj = oracle::Rk4(deriv, {1.0, 0.0}, 30.0, 60000, n_out);
  std::vector<double> ts = Linspace(0.0, 30.0, static_cast<int>(traj.size()));

  odebounds::BoundCurve c = odebounds::HodeUpperBound(h, 0.1, ts);
  REQUIRE(c.values.size() == traj.size());
  for (std::size_t k = 0; k < traj.size(); k++)
  {
    CHECK(c.values[k] >= std::abs(traj[k][0]) * (1.0 - 1e-8));
  }

  // The companion-matrix route bounds the full state vector and is lazier
  // than the component-wise split: its supremum must not be smaller.
  odebounds::BoundCurve comp =
      odebounds::OdeUpperBound(odebounds::CompanionMatrix(h), 0.1, ts);
  double sup_split = 0.0;
  double sup_comp = 0.0;
  for (std::size_t k = 0; k < ts.size(); k++)
  {
    sup_split = std::max(sup_split, c.values[k]);
    sup_comp = std::max(sup_comp, comp.values[k]);
  }
  CHECK(sup_split <= sup_comp * (1.0 + 1e-9));
}

TEST_CASE("companion matrix shapes")
{
  odebounds::HODEProblem h;
  h.discrete = false;
  h.coeffs = {CMatrix::Constant(1, 1, Cplx(-1.0, 0.0)),
              CMatrix::Constant(1, 1, Cplx(-0.1, 0.0))};
  h.initial = {CVector::Constant(1, Cplx(1.0, 0.0)), CVector::Zero(1)};
  CMatrix c = odebounds::CompanionMatrix(h);
  REQUIRE(c.rows() == 2);
  // x' = [[0, 1], [-1, -0.1]] x for the scalar oscillator.
  CHECK(std::abs(c(0, 0)) < 1e-15);
  CHECK(std::abs(c(0, 1) - Cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(c(1, 0) - Cplx(-1.0, 0.0)) < 1e-15);
  CHECK(std::abs(c(1, 1) - Cplx(-0.1, 0.0)) < 1e-15);

  matfun::MatrixPoly p = odebounds::CharacteristicPoly(h);
  REQUIRE(p.coeffs.size() == 3);
  // P(z) = z^2 + 0.1 z + 1 for the oscillator.
  CHECK(std::abs(p.coeffs[0](0, 0) - Cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(p.coeffs[1](0, 0) - Cplx(0.1, 0.0)) < 1e-15);
  CHECK(std::abs(p.coeffs[2](0, 0) - Cplx(1.0, 0.0)) < 1e-15);
}

TEST_CASE("scalar geometric recursion: bound is exactly the shifted ratio power")
{
  odebounds::HODEProblem h;
  h.discrete = true;
  h.coeffs = {CMatrix::Constant(1, 1, Cplx(0.5, 0.0))};
  h.initial = {CVector::Constant(1, Cplx(1.0, 0.0))};
  std::vector<int> steps;
  for (int n = 0; n <= 50; n += 5)
  {
    steps.push_back(n);
  }
  double eps = 0.37;
  odebounds::BoundCurve c = odebounds::DiffeqUpperBound(h, eps, steps);
  REQUIRE(c.values.size() == steps.size());
  CHECK(c.discrete);
  for (std::size_t k = 0; k < steps.size(); k++)
  {
    double expect = std::pow(0.5 + eps, steps[k]);
    CHECK(std::abs(c.values[k] - expect) <= 1e-10 * std::max(1.0, expect));
    CHECK(c.values[k] >= std::pow(0.5, steps[k]) - 1e-15);
  }
}

TEST_CASE("zero lagged data contributes no terms")
{
  odebounds::HODEProblem h;
  h.discrete = true;
  h.coeffs = {CMatrix::Constant(1, 1, Cplx(0.4, 0.0)),
              CMatrix::Constant(1, 1, Cplx(0.2, 0.0))};
  h.initial = {CVector::Constant(1, Cplx(1.0, 0.0)), CVector::Zero(1)};
  odebounds::BoundCurve c = odebounds::DiffeqUpperBound(h, 0.1, {0, 1, 2, 3});
  CHECK(c.terms.size() == 1);
}

TEST_CASE("one-lag matrix recursion dominates matrix powers")
{
  CMatrix a0(2, 2);
  a0 << Cplx(0.3, 0.0), Cplx(0.5, 0.0), Cplx(0.0, 0.0), Cplx(0.4, 0.0);
  odebounds::HODEProblem h;
  h.discrete = true;
  h.coeffs = {a0};
  CVector y0(2);
  y0 << 1.0, 0.0;
  h.initial = {y0};
  std::vector<int> steps;
  for (int n = 0; n <= 60; n++)
  {
    steps.push_back(n);
  }
  odebounds::BoundCurve c = odebounds::DiffeqUpperBound(h, 0.05, steps);
  CMatrix pow = CMatrix::Identity(2, 2);
  for (std::size_t k = 0; k < steps.size(); k++)
  {
    if (k > 0)
    {
      pow = (a0 * pow).eval();
    }
    CHECK(c.values[k] >= oracle::SvdNorm2(pow) * y0.norm() * (1.0 - 1e-8));
  }
}

TEST_CASE("majorant contours: laser recursion bound dominates direct iteration")
{
  problems::ProblemDef p = problems::LaserDiffeqProblem(10);
  simulate::DiffeqTrajectory sim =
      simulate::SimulateDiffeq(p.hode.coeffs, p.hode.initial, 400);
  std::vector<int> steps;
  for (int n = 0; n <= 400; n += 8)
  {
    steps.push_back(n);
  }
  odebounds::BoundOptions opts;
  opts.majorant = true;
  odebounds::BoundCurve c = odebounds::DiffeqUpperBound(p.hode, 1e-2, steps, opts);
  for (std::size_t k = 0; k < steps.size(); k++)
  {
    double s = sim.norms(steps[k]);
    CHECK(c.values[k] >= s * (1.0 - 1e-8));
  }
}

TEST_CASE("majorant contours require vanishing middle coefficients")
{
  odebounds::HODEProblem h;
  h.discrete = true;
  h.coeffs = {CMatrix::Constant(1, 1, Cplx(0.4, 0.0)),
              CMatrix::Constant(1, 1, Cplx(0.3, 0.0)),
              CMatrix::Constant(1, 1, Cplx(0.2, 0.0))};
  h.initial = {CVector::Constant(1, Cplx(1.0, 0.0)), CVector::Constant(1, Cplx(1.0, 0.0)),
               CVector::Constant(1, Cplx(1.0, 0.0))};
  odebounds::BoundOptions opts;
  opts.majorant = true;
  CHECK_THROWS_AS(odebounds::DiffeqUpperBound(h, 0.1, {0, 1, 2}, opts), Error);
}

TEST_CASE("pointwise envelope")
{
  odebounds::BoundCurve a;
  a.times = {0.0, 1.0, 2.0};
  a.values = {3.0, 1.0, 5.0};
  odebounds::BoundCurve b = a;
  b.values = {2.0, 4.0, 4.0};
  odebounds::BoundCurve e = odebounds::EnvelopeMin({a, b});
  CHECK(e.values == std::vector<double>{2.0, 1.0, 4.0});
}

TEST_CASE("per-cluster refined abscissa matches the normal identity")
{
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = -1.0;
  m(1, 1) = -2.0;
  double a = odebounds::PencilAlphaEps(m, 0.1, CoarseOpts());
  CHECK(a == doctest::Approx(-0.9).epsilon(1e-6));
}

TEST_CASE("hode validation rejects malformed problems")
{
  odebounds::HODEProblem h;
  h.discrete = false;
  h.coeffs = {CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)};
  h.initial = {CVector::Zero(2), CVector::Zero(2)};
  CHECK_THROWS_AS(odebounds::ValidateHode(h), Error);

  odebounds::HODEProblem empty;
  CHECK_THROWS_AS(odebounds::ValidateHode(empty), Error);
}

TEST_CASE("arc length never undercuts the disk minimum in the term records")
{
  CMatrix m(2, 2);
  m << Cplx(-1.0, 0.0), Cplx(5.0, 0.0), Cplx(0.0, 0.0), Cplx(-2.0, 0.0);
  odebounds::BoundCurve c = odebounds::OdeUpperBound(m, 0.05, Linspace(0.0, 3.0, 7));
  for (const auto &term : c.terms)
  {
    CHECK(term.arc_length >= 2.0 * kPi * term.epsilon * (1.0 - 1e-9));
  }
}
