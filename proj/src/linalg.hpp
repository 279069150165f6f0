// SPDX-License-Identifier: Apache-2.0

#ifndef TGB_LINALG_HPP
#define TGB_LINALG_HPP

#include "common.hpp"

namespace tgb::linalg
{

// Dense kernels used throughout the library. Everything is double precision;
// matrices up to a few thousand rows are in scope. LAPACK (via LAPACKE) does
// the heavy lifting, with closed forms for 1x1 and 2x2 where it pays off.

// Smallest singular value. sigma_min(A) = 1/||A^{-1}||_2 when A is invertible.
double SigmaMin(const CMatrix &a);

// All singular values, descending.
RVector SingularValues(const CMatrix &a);

// Spectral norm ||A||_2 = sigma_max(A).
double Norm2(const CMatrix &a);
double Norm2(const RMatrix &a);

// 2-norm condition number sigma_max/sigma_min; +inf for singular input.
double Cond2(const CMatrix &a);

// Eigenvalues (and optionally right eigenvectors) of a general square matrix.
// Real input is routed to the real-arithmetic driver.
CVector Eigenvalues(const CMatrix &a);

struct EigResult
{
  CVector values;
  CMatrix vectors;  // columns are right eigenvectors, unit 2-norm
};
EigResult Eig(const CMatrix &a);

// max Re(lambda) over the spectrum.
double SpectralAbscissa(const CMatrix &a);

// max |lambda| over the spectrum.
double SpectralRadius(const CMatrix &a);

// Solve A X = B by partial-pivoted LU; throws ErrKind::SINGULAR on exact
// singularity.
CMatrix Solve(const CMatrix &a, const CMatrix &b);

CMatrix Inverse(const CMatrix &a);

// Matrix exponential e^{t A} by scaling-and-squaring with a degree-13 Pade
// approximant (1-norm based scaling).
CMatrix Expm(const CMatrix &a, double t = 1.0);

// Whether a complex matrix has (numerically) zero imaginary part.
bool IsRealMatrix(const CMatrix &a, double tol = 0.0);

// Repeated sigma_min(z I - M) evaluation for fixed M: one Schur factorization
// up front, then inverse iteration on the shifted triangular factor per point.
// The estimate converges to sigma_min from above; on slow convergence the
// evaluator falls back to a dense SVD so accuracy never degrades silently.
class ShiftedSigmaMin
{
public:
  explicit ShiftedSigmaMin(const CMatrix &m);

  double operator()(Cplx z) const;

  // Counters for test introspection.
  mutable long fallbacks = 0;

private:
  Eigen::Index n_;
  CMatrix t_;  // upper triangular Schur factor
  CVector start_;
  mutable CMatrix shifted_;
  mutable CVector x_, y_;
};

// Repeated (z I - M)^{-1} B application for fixed M and skinny B: Schur
// factorization up front, triangular solves per point.
class ShiftedSolver
{
public:
  ShiftedSolver(const CMatrix &m, const CMatrix &b);

  // Returns (z I - M)^{-1} B. Throws ErrKind::SINGULAR if z is an eigenvalue.
  CMatrix Apply(Cplx z) const;

private:
  Eigen::Index n_;
  CMatrix t_;   // upper triangular Schur factor
  CMatrix q_;   // unitary factor
  CMatrix qb_;  // Q^H B
  mutable CMatrix work_;
};

}  // namespace tgb::linalg

#endif  // TGB_LINALG_HPP
