// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "linalg.hpp"
#include "oracles.hpp"
#include "problems.hpp"
#include "pseudo.hpp"

using namespace tgb;

#ifndef TGB_DATA_DIR
#define TGB_DATA_DIR "."
#endif

namespace
{

constexpr double kPi = 3.14159265358979323846;

bool SameMatrix(const CMatrix &a, const CMatrix &b, double tol = 1e-15)
{
  if (a.rows() != b.rows() || a.cols() != b.cols())
  {
    return false;
  }
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

TEST_CASE("kind names round-trip")
{
  for (problems::Kind k : {problems::Kind::kOde, problems::Kind::kHode, problems::Kind::kDiffeq,
                           problems::Kind::kDde})
  {
    CHECK(problems::KindFromName(problems::KindName(k)) == k);
  }
  CHECK_THROWS_AS(problems::KindFromName("nonsense"), Error);
}

TEST_CASE("builtin catalog")
{
  std::vector<std::string> names = problems::BuiltinNames();
  CHECK(std::find(names.begin(), names.end(), "laser") != names.end());
  CHECK(std::find(names.begin(), names.end(), "pdde") != names.end());
  CHECK(std::find(names.begin(), names.end(), "scalar") != names.end());
  CHECK(std::find(names.begin(), names.end(), "laser-diffeq") != names.end());
  for (const std::string &n : names)
  {
    problems::ProblemDef p = problems::BuiltinProblem(n);
    CHECK_NOTHROW(problems::Validate(p));
    CHECK(p.name == n);
  }
  CHECK_THROWS_AS(problems::BuiltinProblem("no-such-problem"), Error);
  CHECK_THROWS_AS(problems::BuiltinProblem("pdde:1"), Error);
}

TEST_CASE("scalar builtin values")
{
  problems::ProblemDef p = problems::BuiltinProblem("scalar");
  REQUIRE(p.kind == problems::Kind::kDde);
  CHECK(p.dde.a(0, 0) == Cplx(-1.0, 0.0));
  CHECK(p.dde.b(0, 0) == Cplx(-0.5, 0.0));
  CHECK(p.dde.tau == doctest::Approx(1.0));
  CHECK(p.history.type == simulate::History::Type::CONSTANT);
  CHECK(p.history.data(0, 0) == Cplx(1.0, 0.0));
  CHECK(p.dde_u0(0) == Cplx(1.0, 0.0));
}

TEST_CASE("reaction-diffusion builtin structure")
{
  int n = 50;
  problems::ProblemDef p = problems::BuiltinProblem("pdde:50");
  REQUIRE(p.kind == problems::Kind::kDde);
  REQUIRE(p.dde.a.rows() == n);
  CHECK(p.dde.tau == doctest::Approx(0.2));

  double h = kPi / (n + 1);
  // Symmetric tridiagonal second-difference block plus the 1/2 shift: its
  // spectral abscissa is 0.5 - (4/h^2) sin^2(pi/(2(n+1))).
  double alpha_expect = 0.5 - (4.0 / (h * h)) * std::pow(std::sin(kPi / (2.0 * (n + 1))), 2);
  CHECK(linalg::SpectralAbscissa(p.dde.a) == doctest::Approx(alpha_expect).epsilon(1e-9));

  // B is diagonal with entries -4.1 + x (1 - e^{x - pi}) at the grid points,
  // so its norm is the largest magnitude over the grid.
  double bmax = 0.0;
  for (int j = 1; j <= n; j++)
  {
    double x = j * h;
    bmax = std::max(bmax, std::abs(-4.1 + x * (1.0 - std::exp(x - kPi))));
  }
  CHECK(linalg::Norm2(p.dde.b) == doctest::Approx(bmax).epsilon(1e-12));
  for (int i = 0; i < n; i++)
  {
    for (int j = 0; j < n; j++)
    {
      if (i != j)
      {
        CHECK(p.dde.b(i, j) == Cplx(0.0, 0.0));
      }
    }
  }

  // Unit initial kick, zero history.
  CHECK(p.dde_u0.norm() == doctest::Approx(1.0));
  CHECK(p.history.data.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  // Default size is 100.
  CHECK(problems::BuiltinProblem("pdde").dde.a.rows() == 100);
}

TEST_CASE("laser builtin is small, delayed, and stable")
{
  problems::ProblemDef p = problems::BuiltinProblem("laser");
  REQUIRE(p.kind == problems::Kind::kDde);
  REQUIRE(p.dde.a.rows() == 3);
  CHECK(p.dde.tau == doctest::Approx(1.0));
  double u0 = p.dde_u0.norm();
  CHECK(u0 > 0.0117);
  CHECK(u0 < 0.0119);
  // Constant history equal to the initial displacement.
  CHECK(p.history.type == simulate::History::Type::CONSTANT);
  CHECK(SameMatrix(p.history.data, p.dde_u0, 0.0));

  pseudo::DdeAbscissa alpha = pseudo::DdeSpectralAbscissaChecked(p.dde.a, p.dde.b, p.dde.tau);
  CHECK(alpha.converged);
  CHECK(alpha.value < 0.0);
}

TEST_CASE("difference-equation builtin mirrors the stepped model")
{
  int n = 10;
  problems::ProblemDef p = problems::BuiltinProblem("laser-diffeq");
  REQUIRE(p.kind == problems::Kind::kDiffeq);
  REQUIRE(p.hode.discrete);
  REQUIRE(p.hode.coeffs.size() == static_cast<std::size_t>(n + 1));
  REQUIRE(p.hode.initial.size() == p.hode.coeffs.size());

  problems::ProblemDef laser = problems::BuiltinProblem("laser");
  double h = 1.0 / n;
  CMatrix expect0 = CMatrix::Identity(3, 3) + h * laser.dde.a;
  CHECK(SameMatrix(p.hode.coeffs[0], expect0, 1e-15));
  CHECK(SameMatrix(p.hode.coeffs[static_cast<std::size_t>(n)], CMatrix(h * laser.dde.b), 1e-15));
  for (int j = 1; j < n; j++)
  {
    CHECK(p.hode.coeffs[static_cast<std::size_t>(j)].cwiseAbs().maxCoeff() == 0.0);
  }
  for (const CVector &y : p.hode.initial)
  {
    CHECK(SameMatrix(y, laser.dde_u0, 0.0));
  }
  CHECK(problems::BuiltinProblem("laser-diffeq:25").hode.coeffs.size() == 26);
}

TEST_CASE("characteristic functions by kind")
{
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  auto random_z = [&]() { return Cplx(unif(rng), unif(rng)); };

  // First-order system: the pencil zI - M.
  problems::ProblemDef ode;
  ode.kind = problems::Kind::kOde;
  ode.m = CMatrix(2, 2);
  ode.m << Cplx(-1.0, 0.0), Cplx(2.0, 0.0), Cplx(0.0, 0.0), Cplx(-3.0, 0.0);
  ode.u0 = CVector::Constant(2, Cplx(1.0, 0.0));
  matfun::MatFunction f_ode = problems::CharacteristicFunction(ode);
  for (int k = 0; k < 5; k++)
  {
    Cplx z = random_z();
    CMatrix expect = z * CMatrix::Identity(2, 2) - ode.m;
    CHECK(SameMatrix(matfun::Eval(f_ode, z), expect, 1e-14));
  }

  // Delay system: zI - A - B e^{-tau z}.
  problems::ProblemDef dde = problems::BuiltinProblem("scalar");
  matfun::MatFunction f_dde = problems::CharacteristicFunction(dde);
  for (int k = 0; k < 5; k++)
  {
    Cplx z = random_z();
    Cplx expect = z + 1.0 + 0.5 * std::exp(-z);
    CHECK(std::abs(matfun::Eval(f_dde, z)(0, 0) - expect) <= 1e-14);
  }

  // Difference equation: P(z) = z^{N+1} I - sum_j A_j z^{N-j}.
  problems::ProblemDef dq = problems::BuiltinProblem("laser-diffeq");
  matfun::MatFunction f_dq = problems::CharacteristicFunction(dq);
  int big_n = static_cast<int>(dq.hode.coeffs.size()) - 1;  // deepest lag N
  for (int k = 0; k < 3; k++)
  {
    Cplx z = random_z();
    CMatrix expect = std::pow(z, big_n + 1) * CMatrix::Identity(3, 3);
    for (int j = 0; j <= big_n; j++)
    {
      expect -= std::pow(z, big_n - j) * dq.hode.coeffs[static_cast<std::size_t>(j)];
    }
    CHECK(SameMatrix(matfun::Eval(f_dq, z), expect, 1e-12));
  }
}

TEST_CASE("validation rejects malformed problems")
{
  problems::ProblemDef p;
  p.kind = problems::Kind::kOde;
  p.m = CMatrix::Identity(2, 2);
  p.u0 = CVector::Zero(3);  // dimension mismatch
  CHECK_THROWS_AS(problems::Validate(p), Error);

  problems::ProblemDef d = problems::BuiltinProblem("scalar");
  d.dde.tau = -1.0;
  CHECK_THROWS_AS(problems::Validate(d), Error);

  problems::ProblemDef h = problems::BuiltinProblem("scalar");
  h.dde.a(0, 0) = Cplx(std::nan(""), 0.0);
  CHECK_THROWS_AS(problems::Validate(h), Error);
}

TEST_CASE("JSON round-trips every builtin")
{
  for (const std::string &n : problems::BuiltinNames())
  {
    problems::ProblemDef p = problems::BuiltinProblem(n);
    std::string text = problems::ProblemToJson(p);
    problems::ProblemDef q = problems::ParseProblemJson(text);
    CHECK(q.kind == p.kind);
    switch (p.kind)
    {
      case problems::Kind::kOde:
        CHECK(SameMatrix(q.m, p.m));
        break;
      case problems::Kind::kDde:
        CHECK(SameMatrix(q.dde.a, p.dde.a));
        CHECK(SameMatrix(q.dde.b, p.dde.b));
        CHECK(q.dde.tau == doctest::Approx(p.dde.tau).epsilon(1e-15));
        CHECK(q.history.type == p.history.type);
        CHECK(SameMatrix(q.history.data, p.history.data));
        CHECK(SameMatrix(q.dde_u0, p.dde_u0));
        break;
      case problems::Kind::kHode:
      case problems::Kind::kDiffeq:
        REQUIRE(q.hode.coeffs.size() == p.hode.coeffs.size());
        for (std::size_t j = 0; j < p.hode.coeffs.size(); j++)
        {
          CHECK(SameMatrix(q.hode.coeffs[j], p.hode.coeffs[j]));
          CHECK(SameMatrix(q.hode.initial[j], p.hode.initial[j]));
        }
        break;
    }
  }
}

TEST_CASE("JSON parsing specifics")
{
  // Complex scalars as [re, im] pairs.
  problems::ProblemDef p = problems::ParseProblemJson(R"({
    "kind": "ode",
    "M": [[[-1.0, 2.0]]],
    "u0": [1.0]
  })");
  CHECK(p.m(0, 0) == Cplx(-1.0, 2.0));

  // Builder names expand to the builtin coefficient matrices.
  problems::ProblemDef built = problems::ParseProblemJson(R"({
    "kind": "dde",
    "n": 10,
    "A": "pdde",
    "B": "pdde",
    "tau": 0.2,
    "history": {"type": "constant", "data": [0,0,0,0,0,0,0,0,0,0]},
    "u0": [1,0,0,0,0,0,0,0,0,0]
  })");
  problems::ProblemDef ref = problems::PddeProblem(10);
  CHECK(SameMatrix(built.dde.a, ref.dde.a));
  CHECK(SameMatrix(built.dde.b, ref.dde.b));

  // Constant history defaults u0 to the history column.
  problems::ProblemDef dflt = problems::ParseProblemJson(R"({
    "kind": "dde",
    "A": [[-1.0]],
    "B": [[-0.5]],
    "tau": 1.0,
    "history": {"type": "constant", "data": [2.5]}
  })");
  CHECK(dflt.dde_u0(0) == Cplx(2.5, 0.0));

  CHECK_THROWS_AS(problems::ParseProblemJson("not json at all"), Error);
  CHECK_THROWS_AS(problems::ParseProblemJson(R"({"kind": "banana"})"), Error);
  CHECK_THROWS_AS(problems::ParseProblemJson(R"({"kind": "ode", "u0": [1.0]})"), Error);

  try
  {
    problems::ParseProblemJson(R"({"kind": "ode", "M": [[1, 2]], "u0": [1]})");
    FAIL("accepted a non-square system matrix");
  }
  catch (const Error &e)
  {
    CHECK(e.kind() == ErrKind::PARSE);
  }
}

TEST_CASE("file save and load round-trip")
{
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tgb_problems_test";
  fs::create_directories(dir);
  fs::path file = dir / "roundtrip.json";

  problems::ProblemDef p = problems::BuiltinProblem("scalar");
  problems::SaveProblem(p, file.string());
  problems::ProblemDef q = problems::LoadProblem(file.string());
  CHECK(q.kind == p.kind);
  CHECK(SameMatrix(q.dde.a, p.dde.a));
  CHECK(q.name == "roundtrip");  // file stem becomes the display name

  CHECK_THROWS_AS(problems::LoadProblem((dir / "missing.json").string()), Error);
  fs::remove_all(dir);
}

TEST_CASE("shipped example problem file matches the builtin")
{
  namespace fs = std::filesystem;
  fs::path file = fs::path(TGB_DATA_DIR) / "scalar_dde.json";
  REQUIRE(fs::exists(file));
  problems::ProblemDef p = problems::LoadProblem(file.string());
  problems::ProblemDef ref = problems::BuiltinProblem("scalar");
  CHECK(p.kind == ref.kind);
  CHECK(SameMatrix(p.dde.a, ref.dde.a));
  CHECK(SameMatrix(p.dde.b, ref.dde.b));
  CHECK(p.dde.tau == doctest::Approx(ref.dde.tau));
  CHECK(SameMatrix(p.dde_u0, ref.dde_u0));
}
