// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "simulate.hpp"

using namespace tgb;

namespace
{

simulate::DelaySystem ScalarSystem()
{
  simulate::DelaySystem sys;
  sys.a = CMatrix::Constant(1, 1, Cplx(-1.0, 0.0));
  sys.b = CMatrix::Constant(1, 1, Cplx(-0.5, 0.0));
  sys.tau = 1.0;
  return sys;
}

simulate::History ConstantHistory(const CVector &v)
{
  simulate::History h;
  h.type = simulate::History::Type::CONSTANT;
  h.data = v;
  return h;
}

}  // namespace

TEST_CASE("scalar delay equation matches the closed form on [0, 2]")
{
  simulate::DelaySystem sys = ScalarSystem();
  CVector u0 = CVector::Constant(1, Cplx(1.0, 0.0));
  simulate::DdeOptions opts;
  opts.h_req = 1.0 / 200.0;
  opts.samples = 0;  // keep every step
  simulate::Trajectory tr = simulate::SimulateDde(sys, ConstantHistory(u0), u0, 2.0, opts);

  REQUIRE(tr.times.size() >= 400);
  CHECK(tr.h == doctest::Approx(1.0 / 200.0).epsilon(1e-12));
  double max_err = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); k++)
  {
    double t = tr.times[k];
    if (t > 2.0 + 1e-12)
    {
      continue;
    }
    max_err = std::max(max_err, std::abs(tr.norms(static_cast<Eigen::Index>(k)) -
                                         std::abs(oracle::ScalarDdeExact(t))));
  }
  CHECK(max_err <= 1e-8);
}

TEST_CASE("u(1) accuracy and fourth-order step convergence")
{
  simulate::DelaySystem sys = ScalarSystem();
  CVector u0 = CVector::Constant(1, Cplx(1.0, 0.0));
  auto value_at_one = [&](double h) {
    simulate::DdeOptions opts;
    opts.h_req = h;
    opts.samples = 0;
    simulate::Trajectory tr = simulate::SimulateDde(sys, ConstantHistory(u0), u0, 1.0, opts);
    for (std::size_t k = 0; k < tr.times.size(); k++)
    {
      if (std::abs(tr.times[k] - 1.0) < 1e-12)
      {
        return tr.states(0, static_cast<Eigen::Index>(k)).real();
      }
    }
    REQUIRE(false);
    return 0.0;
  };
  double exact = oracle::ScalarDdeValueAtOne();
  double e200 = std::abs(value_at_one(1.0 / 200.0) - exact);
  double e400 = std::abs(value_at_one(1.0 / 400.0) - exact);
  CHECK(e200 <= 1e-8);
  // Classic fourth-order stepper: halving h divides the error by ~16.
  CHECK(e200 / e400 >= 11.0);
  CHECK(e200 / e400 <= 22.0);
}

TEST_CASE("fundamental solution matches the series closed form")
{
  simulate::DelaySystem sys = ScalarSystem();
  simulate::NormCurve c = simulate::FundamentalNorms(sys, 5.0, 400, 1.0 / 128.0);
  REQUIRE(!c.times.empty());
  CHECK(c.times.front() == doctest::Approx(0.0));
  CHECK(c.values(0) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < c.times.size(); k++)
  {
    double ref =
        std::abs(oracle::ScalarFundamental(Cplx(-1.0, 0.0), Cplx(-0.5, 0.0), 1.0, c.times[k]));
    CHECK(std::abs(c.values(static_cast<Eigen::Index>(k)) - ref) <= 1e-8);
  }
}

TEST_CASE("fundamental evaluation at off-step times")
{
  simulate::DelaySystem sys = ScalarSystem();
  for (double t : {0.37, 1.5, 2.921})
  {
    CMatrix psi = simulate::FundamentalAt(sys, t, 1.0 / 128.0);
    REQUIRE(psi.rows() == 1);
    double ref =
        std::abs(oracle::ScalarFundamental(Cplx(-1.0, 0.0), Cplx(-0.5, 0.0), 1.0, t));
    CHECK(std::abs(std::abs(psi(0, 0)) - ref) <= 1e-8);
  }
}

TEST_CASE("diagonal systems decouple into scalar series")
{
  simulate::DelaySystem sys;
  sys.a = CMatrix::Zero(2, 2);
  sys.a(0, 0) = Cplx(-1.0, 0.0);
  sys.a(1, 1) = Cplx(-0.3, 0.0);
  sys.b = CMatrix::Zero(2, 2);
  sys.b(0, 0) = Cplx(-0.5, 0.0);
  sys.b(1, 1) = Cplx(-0.1, 0.0);
  sys.tau = 1.0;
  CMatrix psi = simulate::FundamentalAt(sys, 2.25, 1.0 / 64.0);
  CHECK(std::abs(psi(0, 1)) < 1e-12);
  CHECK(std::abs(psi(1, 0)) < 1e-12);
  CHECK(std::abs(psi(0, 0) - oracle::ScalarFundamental(Cplx(-1.0, 0.0), Cplx(-0.5, 0.0), 1.0,
                                                       2.25)) <= 1e-8);
  CHECK(std::abs(psi(1, 1) - oracle::ScalarFundamental(Cplx(-0.3, 0.0), Cplx(-0.1, 0.0), 1.0,
                                                       2.25)) <= 1e-8);
}

TEST_CASE("sampled history is interpolated accurately")
{
  // History phi(s) = e^s on [-1, 0], u(0) = 1: on [0, 1]
  // u' + u = -0.5 e^{t-1}  =>  u = (1 + 0.25/e) e^{-t} - 0.25 e^{t-1}.
  simulate::DelaySystem sys = ScalarSystem();
  simulate::History h;
  h.type = simulate::History::Type::SAMPLES;
  int m = 65;
  h.data = CMatrix(1, m);
  for (int j = 0; j < m; j++)
  {
    double s = -1.0 + static_cast<double>(j) / (m - 1);
    h.data(0, j) = std::exp(s);
  }
  CVector u0 = CVector::Constant(1, Cplx(1.0, 0.0));
  simulate::DdeOptions opts;
  opts.h_req = 1.0 / 128.0;
  opts.samples = 0;
  simulate::Trajectory tr = simulate::SimulateDde(sys, h, u0, 1.0, opts);
  double c = 1.0 + 0.25 / std::exp(1.0);
  double max_err = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); k++)
  {
    double t = tr.times[k];
    double ref = c * std::exp(-t) - 0.25 * std::exp(t - 1.0);
    max_err = std::max(max_err,
                       std::abs(tr.states(0, static_cast<Eigen::Index>(k)).real() - ref));
  }
  CHECK(max_err <= 1e-4);
}

TEST_CASE("matrix ode trajectories")
{
  CMatrix j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  CVector u0(2);
  u0 << 1.0, 0.0;
  simulate::Trajectory tr = simulate::SimulateOde(j, u0, 6.0, 120);
  for (std::size_t k = 0; k < tr.times.size(); k++)
  {
    double t = tr.times[k];
    Eigen::Index c = static_cast<Eigen::Index>(k);
    CHECK(std::abs(tr.states(0, c) - std::cos(t)) < 1e-10);
    CHECK(std::abs(tr.states(1, c) - std::sin(t)) < 1e-10);
    CHECK(tr.norms(c) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("expm norm curve: normal case is exactly exponential")
{
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = Cplx(-1.0, 0.0);
  d(1, 1) = Cplx(-2.0, 0.0);
  simulate::NormCurve c = simulate::ExpmNormCurve(d, 4.0, 80);
  for (std::size_t k = 0; k < c.times.size(); k++)
  {
    CHECK(std::abs(c.values(static_cast<Eigen::Index>(k)) - std::exp(-c.times[k])) <= 1e-10);
  }
}

TEST_CASE("expm norm curve: propagation does not drift on a nonnormal matrix")
{
  CMatrix m(2, 2);
  m << Cplx(-1.0, 0.0), Cplx(20.0, 0.0), Cplx(0.0, 0.0), Cplx(-2.0, 0.0);
  simulate::NormCurve c = simulate::ExpmNormCurve(m, 10.0, 160);
  for (std::size_t k = 0; k < c.times.size(); k += 13)
  {
    double ref = oracle::SvdNorm2(oracle::EigExpm(m, c.times[k]));
    CHECK(c.values(static_cast<Eigen::Index>(k)) ==
          doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("difference equation iteration")
{
  // Scalar halving.
  std::vector<CMatrix> half = {CMatrix::Constant(1, 1, Cplx(0.5, 0.0))};
  std::vector<CVector> init = {CVector::Constant(1, Cplx(1.0, 0.0))};
  simulate::DiffeqTrajectory tr = simulate::SimulateDiffeq(half, init, 20);
  REQUIRE(tr.norms.size() == 21);
  for (int k = 0; k <= 20; k++)
  {
    CHECK(tr.norms(k) == doctest::Approx(std::pow(0.5, k)).epsilon(1e-13));
  }

  // Fibonacci: y_{k+1} = y_k + y_{k-1}, y_0 = y_{-1} = 1 -> 2, 3, 5, 8, 13.
  std::vector<CMatrix> fib = {CMatrix::Constant(1, 1, Cplx(1.0, 0.0)),
                              CMatrix::Constant(1, 1, Cplx(1.0, 0.0))};
  std::vector<CVector> finit = {CVector::Constant(1, Cplx(1.0, 0.0)),
                                CVector::Constant(1, Cplx(1.0, 0.0))};
  simulate::DiffeqTrajectory ftr = simulate::SimulateDiffeq(fib, finit, 5);
  CHECK(ftr.norms(1) == doctest::Approx(2.0));
  CHECK(ftr.norms(2) == doctest::Approx(3.0));
  CHECK(ftr.norms(3) == doctest::Approx(5.0));
  CHECK(ftr.norms(4) == doctest::Approx(8.0));
  CHECK(ftr.norms(5) == doctest::Approx(13.0));
}

TEST_CASE("step selection honors the request and the stability floor")
{
  simulate::DelaySystem sys = ScalarSystem();
  CHECK(simulate::StepsPerDelay(sys, 0.25) == 4);

  simulate::DelaySystem stiff;
  stiff.a = CMatrix::Zero(2, 2);
  stiff.a(0, 0) = Cplx(-500.0, 0.0);
  stiff.a(1, 1) = Cplx(-1.0, 0.0);
  stiff.b = CMatrix::Zero(2, 2);
  stiff.tau = 1.0;
  // A requested step far beyond the explicit stability limit must be refused.
  int m = simulate::StepsPerDelay(stiff, 0.5);
  CHECK(m >= 200);
}

TEST_CASE("input validation")
{
  simulate::DelaySystem sys = ScalarSystem();
  CVector u0 = CVector::Constant(1, Cplx(1.0, 0.0));
  CVector bad2 = CVector::Constant(2, Cplx(1.0, 0.0));
  CHECK_THROWS_AS(simulate::SimulateDde(sys, ConstantHistory(u0), bad2, 1.0, {}), Error);
  CHECK_THROWS_AS(simulate::SimulateDde(sys, ConstantHistory(u0), u0, -1.0, {}), Error);

  CVector nan1 = CVector::Constant(1, Cplx(std::nan(""), 0.0));
  CHECK_THROWS_AS(simulate::SimulateDde(sys, ConstantHistory(u0), nan1, 1.0, {}), Error);

  simulate::DelaySystem mixed = sys;
  mixed.b = CMatrix::Zero(2, 2);
  CHECK_THROWS_AS(simulate::SimulateDde(mixed, ConstantHistory(u0), u0, 1.0, {}), Error);
}
