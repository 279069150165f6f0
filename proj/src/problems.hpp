// SPDX-License-Identifier: Apache-2.0

#ifndef TGB_PROBLEMS_HPP
#define TGB_PROBLEMS_HPP

#include <string>
#include <vector>

#include "common.hpp"
#include "matfun.hpp"
#include "odebounds.hpp"
#include "simulate.hpp"

namespace tgb::problems
{

// A named problem instance: the dynamical system plus its initial data.
// Immutable after construction / load; freely shareable across threads.

enum class Kind
{
  kOde,     // u' = M u
  kHode,    // y^(n) = sum_k A_k y^(k)
  kDiffeq,  // y_{k+1} = sum_j A_j y_{k-j}
  kDde      // u'(t) = A u(t) + B u(t - tau)
};

const char *KindName(Kind k);
Kind KindFromName(const std::string &name);

struct ProblemDef
{
  Kind kind = Kind::kOde;
  std::string name;                // display name (builtin id or file stem)
  std::vector<std::string> notes;  // free-form remarks carried into manifests

  // kind == kOde
  CMatrix m;
  CVector u0;

  // kind == kHode / kDiffeq (coefficients + initial data)
  odebounds::HODEProblem hode;

  // kind == kDde
  simulate::DelaySystem dde;
  simulate::History history;
  CVector dde_u0;  // value at t = 0+ (a jump from history(0) is allowed)
};

// Shape/finiteness checks for every kind; throws on malformed problems.
void Validate(const ProblemDef &p);

// The problem's characteristic matrix function: the pencil zI - M for a
// first-order system, the delay characteristic zI - A - B e^{-tau z} for a
// DDE, and the characteristic matrix polynomial for the higher-order kinds.
matfun::MatFunction CharacteristicFunction(const ProblemDef &p);

// ---- Built-in problems -----------------------------------------------------

// Three-variable laser feedback model linearized at an equilibrium;
// delay 1, constant history equal to the initial displacement.
ProblemDef LaserProblem();

// Finite-difference discretization (n interior points) of a 1-D
// reaction-diffusion equation with one constant feedback delay (tau = 0.2);
// A is symmetric tridiagonal, B diagonal.
ProblemDef PddeProblem(int n = 100);

// Scalar test equation u' = -u - 0.5 u(t-1) with history identically 1.
ProblemDef ScalarDdeProblem();

// Forward-Euler discretization of the laser model with n_per_delay steps per
// delay interval: a linear difference equation whose only nonzero
// coefficients are lag 0 and the deepest lag.
ProblemDef LaserDiffeqProblem(int n_per_delay = 10);

// Lookup by id: "laser", "pdde", "pdde:50", "scalar", "laser-diffeq",
// "laser-diffeq:25". Throws NOT_FOUND for unknown names.
ProblemDef BuiltinProblem(const std::string &spec);

// All builtin ids (the parameterized ones in their default form).
std::vector<std::string> BuiltinNames();

// ---- JSON I/O ----------------------------------------------------------------

// Schema: {kind, name?, notes?, then per kind:
//   ode:    M, u0
//   dde:    A, B, tau, history {type: "constant"|"samples", data}, u0?
//   hode:   coeffs (list of matrices A_0..A_{n-1}), initial (list of vectors)
//   diffeq: coeffs (list of matrices A_0..A_N),     initial (list of vectors)}
// Scalars are numbers or [re, im] pairs; matrices are arrays of rows;
// history data is one vector (constant) or a list of sample vectors.
// A and B may also be builder names ("laser", "pdde" with top-level n).
ProblemDef ParseProblemJson(const std::string &text);
std::string ProblemToJson(const ProblemDef &p);

ProblemDef LoadProblem(const std::string &path);
void SaveProblem(const ProblemDef &p, const std::string &path);

}  // namespace tgb::problems

#endif  // TGB_PROBLEMS_HPP
