// SPDX-License-Identifier: Apache-2.0

#ifndef TGB_COMMON_HPP
#define TGB_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tgb
{

using Cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Error taxonomy shared by the whole library. Every failure mode that can
// reach a caller is classified so the C API can map it onto a stable status
// code and the CLI onto an exit code.
enum class ErrKind
{
  INVALID_ARGUMENT,  // bad parameter value (negative tolerance, eps <= 0, ...)
  DIMENSION,         // mismatched or non-square matrix dimensions
  SINGULAR,          // exactly singular matrix in a solve
  INFEASIBLE,        // no admissible contour/parameter satisfies the constraints
  UNSUPPORTED,       // structurally valid input outside the implemented scope
  NOT_FOUND,         // lookup failure (unknown builtin name, missing column)
  WINDOW,            // level set touches the search window boundary
  NUMERIC,           // iteration failed to converge / nonfinite intermediate
  PRECONDITION,      // operation preconditions violated (unstable base point, t < tau)
  IO,                // file read/write failure
  PARSE              // malformed problem description
};

class Error : public std::runtime_error
{
public:
  Error(ErrKind kind, const std::string &msg) : std::runtime_error(msg), kind_(kind) {}
  ErrKind kind() const { return kind_; }

private:
  ErrKind kind_;
};

[[noreturn]] inline void Fail(ErrKind kind, const std::string &msg)
{
  throw Error(kind, msg);
}

inline void Require(bool cond, ErrKind kind, const std::string &msg)
{
  if (!cond)
  {
    Fail(kind, msg);
  }
}

// All matrices entering the library must be finite; NaN/Inf are rejected at
// module boundaries rather than propagated into factorizations.
void CheckFinite(const CMatrix &m, const std::string &what);
void CheckFinite(const CVector &v, const std::string &what);

// Deterministic index-space map used for grid sweeps. The numerical results
// must not depend on the execution order; this box runs it serially.
template <typename F>
void ForIndex(std::size_t n, F &&f)
{
  for (std::size_t i = 0; i < n; i++)
  {
    f(i);
  }
}

}  // namespace tgb

#endif  // TGB_COMMON_HPP
