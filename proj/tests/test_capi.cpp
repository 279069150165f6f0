// SPDX-License-Identifier: Apache-2.0

// Exercises the shared-library boundary only: no internal headers, so this
// binary proves the public C surface is self-sufficient.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <tgbounds.h>

namespace
{

// |Psi(t)| for u' = -u - 0.5 u(t-1): the method-of-steps power series.
double ScalarFundamentalAbs(double t)
{
  double sum = 0.0;
  int kmax = static_cast<int>(std::floor(t));
  for (int k = 0; k <= kmax; k++)
  {
    double s = t - k;
    double term = std::exp(-s);
    for (int j = 1; j <= k; j++)
    {
      term *= -0.5 * s / j;
    }
    sum += term;
  }
  return std::abs(sum);
}

// u(t) on [1, 2] for the same system with history and initial value 1.
double ScalarSolutionAbs2()
{
  return std::abs(1.5 * std::exp(-2.0) - 0.75 * 2.0 * std::exp(1.0 - 2.0) + 0.25);
}

int ColIndex(const tgb_table *t, const char *name)
{
  for (int c = 0; c < tgb_table_ncols(t); c++)
  {
    if (std::strcmp(tgb_table_col_name(t, c), name) == 0)
    {
      return c;
    }
  }
  return -1;
}

double MetaNum(const tgb_table *t, const char *key)
{
  const char *v = tgb_table_meta_get(t, key);
  REQUIRE(v != nullptr);
  return std::stod(v);
}

}  // namespace

TEST_CASE("version and status names")
{
  REQUIRE(tgb_version() != nullptr);
  CHECK(std::string(tgb_version()).find('.') != std::string::npos);
  CHECK(tgb_status_name(TGB_OK) != nullptr);
  CHECK(std::string(tgb_status_name(TGB_ERR_NOT_FOUND)) !=
        std::string(tgb_status_name(TGB_ERR_PARSE)));
}

TEST_CASE("builtin problems and accessors")
{
  tgb_problem *p = nullptr;
  REQUIRE(tgb_problem_builtin("scalar", &p) == TGB_OK);
  REQUIRE(p != nullptr);
  CHECK(std::string(tgb_problem_kind(p)) == "dde");
  CHECK(std::string(tgb_problem_name(p)) == "scalar");
  CHECK(tgb_problem_dim(p) == 1);
  CHECK(tgb_problem_delay(p) == doctest::Approx(1.0));
  tgb_problem_free(p);

  tgb_problem *laser = nullptr;
  REQUIRE(tgb_problem_builtin("laser", &laser) == TGB_OK);
  CHECK(tgb_problem_dim(laser) == 3);
  tgb_problem_free(laser);

  tgb_problem *dq = nullptr;
  REQUIRE(tgb_problem_builtin("laser-diffeq", &dq) == TGB_OK);
  CHECK(std::string(tgb_problem_kind(dq)) == "diffeq");
  CHECK(tgb_problem_dim(dq) == 3);
  CHECK(tgb_problem_delay(dq) == doctest::Approx(0.0));  // no continuous delay
  tgb_problem_free(dq);
}

TEST_CASE("error reporting")
{
  tgb_problem *p = nullptr;
  CHECK(tgb_problem_builtin("no-such-problem", &p) == TGB_ERR_NOT_FOUND);
  CHECK(p == nullptr);
  CHECK(tgb_last_error() != nullptr);
  CHECK(std::strlen(tgb_last_error()) > 0);

  CHECK(tgb_problem_builtin(nullptr, &p) == TGB_ERR_INVALID_ARGUMENT);
  CHECK(tgb_problem_builtin("scalar", nullptr) == TGB_ERR_INVALID_ARGUMENT);
  CHECK(tgb_problem_parse_json("{ not json", &p) == TGB_ERR_PARSE);
}

TEST_CASE("JSON and file round-trips through the C surface")
{
  tgb_problem *p = nullptr;
  REQUIRE(tgb_problem_builtin("scalar", &p) == TGB_OK);
  char *text = nullptr;
  REQUIRE(tgb_problem_to_json(p, &text) == TGB_OK);
  REQUIRE(text != nullptr);
  tgb_problem *q = nullptr;
  REQUIRE(tgb_problem_parse_json(text, &q) == TGB_OK);
  CHECK(std::string(tgb_problem_kind(q)) == "dde");
  CHECK(tgb_problem_dim(q) == 1);
  tgb_string_free(text);
  tgb_problem_free(q);

  namespace fs = std::filesystem;
  fs::path file = fs::temp_directory_path() / "tgb_capi_roundtrip.json";
  REQUIRE(tgb_problem_save(p, file.string().c_str()) == TGB_OK);
  tgb_problem *r = nullptr;
  REQUIRE(tgb_problem_load(file.string().c_str(), &r) == TGB_OK);
  CHECK(std::string(tgb_problem_kind(r)) == "dde");
  tgb_problem_free(r);
  fs::remove(file);
  tgb_problem_free(p);

  CHECK(tgb_problem_load("/nonexistent/path.json", &r) == TGB_ERR_IO);
}

TEST_CASE("simulation matches the piecewise closed form")
{
  tgb_problem *p = nullptr;
  REQUIRE(tgb_problem_builtin("scalar", &p) == TGB_OK);
  tgb_table *t = nullptr;
  REQUIRE(tgb_simulate(p, 1.0 / 200.0, 2.0, 0, 0, &t) == TGB_OK);
  REQUIRE(t != nullptr);
  int tc = ColIndex(t, "t");
  int nc = ColIndex(t, "norm");
  REQUIRE(tc >= 0);
  REQUIRE(nc >= 0);
  int rows = tgb_table_nrows(t);
  REQUIRE(rows == 401);  // every step kept
  const double *times = tgb_table_col(t, tc);
  const double *norms = tgb_table_col(t, nc);
  CHECK(times[0] == doctest::Approx(0.0));
  CHECK(norms[0] == doctest::Approx(1.0));
  CHECK(times[rows - 1] == doctest::Approx(2.0));
  CHECK(norms[rows - 1] == doctest::Approx(ScalarSolutionAbs2()).epsilon(1e-7));
  tgb_table_free(t);
  tgb_problem_free(p);
}

TEST_CASE("fundamental norms start at one")
{
  tgb_problem *p = nullptr;
  REQUIRE(tgb_problem_builtin("scalar", &p) == TGB_OK);
  tgb_table *t = nullptr;
  REQUIRE(tgb_fundamental_norms(p, 3.0, 13, 0.0, &t) == TGB_OK);
  const double *times = tgb_table_col(t, ColIndex(t, "t"));
  const double *norms = tgb_table_col(t, ColIndex(t, "norm"));
  REQUIRE(times != nullptr);
  REQUIRE(norms != nullptr);
  CHECK(times[0] == doctest::Approx(0.0));
  CHECK(norms[0] == doctest::Approx(1.0));
  for (int k = 0; k < tgb_table_nrows(t); k++)
  {
    CHECK(norms[k] == doctest::Approx(ScalarFundamentalAbs(times[k])).epsilon(1e-6));
  }
  tgb_table_free(t);
  tgb_problem_free(p);
}

TEST_CASE("delay bound table dominates the solution and brackets the supremum")
{
  tgb_problem *p = nullptr;
  REQUIRE(tgb_problem_builtin("scalar", &p) == TGB_OK);
  std::vector<double> times;
  for (int k = 0; k < 39; k++)
  {
    times.push_back(1.0 + 0.5 * k);
  }
  tgb_table *t = nullptr;
  REQUIRE(tgb_bound_dde(p, "split", -1.0, times.data(), static_cast<int>(times.size()), 0, 0,
                        &t) == TGB_OK);
  REQUIRE(t != nullptr);
  const double *bound = tgb_table_col(t, ColIndex(t, "bound"));
  REQUIRE(bound != nullptr);
  double max_bound = 0.0;
  for (std::size_t k = 0; k < times.size(); k++)
  {
    CHECK(bound[k] >= ScalarFundamentalAbs(times[k]) * (1.0 - 1e-8));
    max_bound = std::max(max_bound, bound[k]);
  }
  for (const char *key : {"mode", "y0", "eta", "x0", "I0", "C", "alpha_T", "initial_sup",
                          "decay_cap"})
  {
    CHECK(tgb_table_meta_get(t, key) != nullptr);
  }
  CHECK(tgb_table_meta_get(t, "definitely-not-a-key") == nullptr);

  // sup_t |Psi(t)| = 1 (attained at t = 0): the bracket must cover it.
  double initial_sup = MetaNum(t, "initial_sup");
  const char *decay = tgb_table_meta_get(t, "decay_cap");
  double decay_cap = std::string(decay) == "inf" ? 0.0 : std::stod(decay);
  double bracket = std::max({initial_sup, max_bound, decay_cap});
  CHECK(initial_sup >= 1.0 - 1e-9);
  CHECK(bracket >= 1.0 - 1e-9);
  tgb_table_free(t);

  // Variant with times below tau is a window error.
  double bad_time = 0.25;
  CHECK(tgb_bound_dde(p, "split", -1.0, &bad_time, 1, 0, 0, &t) == TGB_ERR_INVALID_ARGUMENT);
  // Unknown variant name.
  double one = 1.5;
  CHECK(tgb_bound_dde(p, "sideways", -1.0, &one, 1, 0, 0, &t) == TGB_ERR_INVALID_ARGUMENT);
  tgb_problem_free(p);
}

TEST_CASE("pseudospectrum tables have the documented shape")
{
  tgb_problem *p = nullptr;
  REQUIRE(tgb_problem_builtin("scalar", &p) == TGB_OK);
  double eps[2] = {0.1, 0.01};
  tgb_table *field = nullptr;
  tgb_table *levels = nullptr;
  tgb_table *summary = nullptr;
  REQUIRE(tgb_pseudospectrum(p, eps, 2, nullptr, 60, 60, 0, &field, &levels, &summary) ==
          TGB_OK);

  REQUIRE(field != nullptr);
  CHECK(tgb_table_nrows(field) == 3600);
  CHECK(ColIndex(field, "re") >= 0);
  CHECK(ColIndex(field, "im") >= 0);
  CHECK(ColIndex(field, "sigma_min") >= 0);

  REQUIRE(levels != nullptr);
  CHECK(tgb_table_nrows(levels) > 0);
  for (const char *name : {"eps", "curve", "re", "im"})
  {
    CHECK(ColIndex(levels, name) >= 0);
  }

  REQUIRE(summary != nullptr);
  REQUIRE(tgb_table_nrows(summary) == 2);
  const double *alpha = tgb_table_col(summary, ColIndex(summary, "alpha"));
  const double *se = tgb_table_col(summary, ColIndex(summary, "eps"));
  REQUIRE(alpha != nullptr);
  CHECK(se[0] == doctest::Approx(0.1));
  CHECK(se[1] == doctest::Approx(0.01));
  // alpha_eps hugs the rightmost root near -1.1027, pushed right by ~eps/|T'|.
  CHECK(alpha[0] > -1.2);
  CHECK(alpha[0] < -0.9);
  CHECK(alpha[1] < alpha[0]);

  tgb_table_free(field);
  tgb_table_free(levels);
  tgb_table_free(summary);
  tgb_problem_free(p);
}

TEST_CASE("lower-bound scan stays below the known supremum")
{
  tgb_problem *p = nullptr;
  REQUIRE(tgb_problem_builtin("scalar", &p) == TGB_OK);
  tgb_table *t = nullptr;
  REQUIRE(tgb_lower_bound(p, 0.2, 2.0, 30, &t) == TGB_OK);
  REQUIRE(tgb_table_nrows(t) == 30);
  REQUIRE(ColIndex(t, "x") >= 0);
  REQUIRE(ColIndex(t, "lower_bound") >= 0);
  double best = MetaNum(t, "best");
  // This system never grows: sup_t |Psi(t)| = 1, and the scan is a lower
  // bound for it.
  CHECK(best <= 1.0 + 1e-6);
  CHECK(best > 0.0);
  const double *vals = tgb_table_col(t, ColIndex(t, "lower_bound"));
  double col_max = 0.0;
  for (int k = 0; k < tgb_table_nrows(t); k++)
  {
    col_max = std::max(col_max, vals[k]);
  }
  CHECK(best == doctest::Approx(col_max).epsilon(1e-12));
  tgb_table_free(t);
  tgb_problem_free(p);
}

TEST_CASE("kind mismatches are rejected as unsupported")
{
  tgb_problem *dde = nullptr;
  REQUIRE(tgb_problem_builtin("scalar", &dde) == TGB_OK);
  tgb_problem *ode = nullptr;
  REQUIRE(tgb_problem_parse_json(R"({"kind":"ode","M":[[-1.0]],"u0":[1.0]})", &ode) == TGB_OK);
  tgb_problem *dq = nullptr;
  REQUIRE(tgb_problem_builtin("laser-diffeq", &dq) == TGB_OK);

  double eps = 0.1;
  double time = 1.0;
  tgb_table *t = nullptr;
  CHECK(tgb_bound(dde, &eps, 1, &time, 1, 0, &t) == TGB_ERR_UNSUPPORTED);
  CHECK(tgb_bound_dde(ode, "split", -1.0, &time, 1, 0, 0, &t) == TGB_ERR_UNSUPPORTED);
  CHECK(tgb_lower_bound(dq, 0.5, 2.0, 10, &t) == TGB_ERR_UNSUPPORTED);

  // The ode kind works through tgb_bound.
  std::vector<double> times = {0.0, 1.0, 2.0};
  REQUIRE(tgb_bound(ode, &eps, 1, times.data(), 3, 0, &t) == TGB_OK);
  const double *bound = tgb_table_col(t, ColIndex(t, "bound"));
  REQUIRE(bound != nullptr);
  // Scalar M = [-1], eps = 0.1: exact disk bound e^{-0.9 t}.
  CHECK(bound[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(bound[2] == doctest::Approx(std::exp(-1.8)).epsilon(1e-9));
  tgb_table_free(t);

  tgb_problem_free(dde);
  tgb_problem_free(ode);
  tgb_problem_free(dq);
}
