// SPDX-License-Identifier: Apache-2.0

#ifndef TGB_MATFUN_HPP
#define TGB_MATFUN_HPP

#include <memory>
#include <variant>
#include <vector>

#include "common.hpp"
#include "linalg.hpp"

namespace tgb::matfun
{

// Matrix-valued functions T(z) whose inverse norms drive every bound in the
// library. Two of the forms (TransferBlock, ScaledPower) only define the
// map z -> ||T(z)^{-1}||, not T(z) itself.

// T(z) = z I - M.
struct Pencil
{
  CMatrix m;
};

// T(z) = z I - A - B e^{-tau z}, the characteristic function of a constant
// single-delay system u' = A u + B u(t - tau).
struct DelayChar
{
  CMatrix a;
  CMatrix b;
  double tau = 1.0;
};

// T(z) = sum_k coeffs[k] z^k.
struct MatrixPoly
{
  std::vector<CMatrix> coeffs;
};

// ||T(z)^{-1}|| = ||E_row^T (z I - M)^{-1} E_col||_2 where M is partitioned
// into square blocks of size `sub` and E_k selects the k-th block column
// (0-based). Used for the transfer functions of companion linearizations.
struct TransferBlock
{
  CMatrix m;
  Eigen::Index sub = 1;   // block size
  Eigen::Index row = 0;   // output block index
  Eigen::Index col = 0;   // input block index
};

// ||T(z)^{-1}|| = ||P(z)^{-1}||_2 * scale * |z|^power, a majorant form for
// transfer functions whose numerator is a scaled power of z.
struct ScaledPower
{
  MatrixPoly poly;
  double scale = 1.0;
  int power = 0;
};

using MatFunction = std::variant<Pencil, DelayChar, MatrixPoly, TransferBlock, ScaledPower>;

// Row dimension of T(z) (the block size for the inverse-only forms).
Eigen::Index Dim(const MatFunction &t);

// T(z) itself. Throws ErrKind::UNSUPPORTED for the inverse-only forms.
CMatrix Eval(const MatFunction &t, Cplx z);

// One-shot ||T(z)^{-1}||_2; +inf where T(z) is singular. For repeated
// evaluation over many z build an Evaluator instead.
double ResolventNorm(const MatFunction &t, Cplx z);

// Points near which ||T^{-1}|| blows up (or is largest), used to seed search
// windows: eigenvalues for pencil-like forms, polynomial eigenvalues for
// matrix polynomials, and a bracket heuristic for the delay form whose root
// chains extend infinitely to the left.
std::vector<Cplx> SeedPoints(const MatFunction &t);

// Repeated-evaluation engine. Precomputes a Schur factorization for the
// shifted-solve forms so grid sweeps cost O(n^2) per point instead of O(n^3).
class Evaluator
{
public:
  explicit Evaluator(const MatFunction &t);

  // 1 / ||T(z)^{-1}||_2 (equals sigma_min(T(z)) for the square forms),
  // clamped to a large finite value where the resolvent vanishes.
  double Sigma(Cplx z) const;

  double ResolventNorm(Cplx z) const;

  Eigen::Index Dim() const { return dim_; }

private:
  const MatFunction &fn_;
  Eigen::Index dim_;
  std::unique_ptr<linalg::ShiftedSigmaMin> pencil_sigma_;
  std::unique_ptr<linalg::ShiftedSolver> transfer_solver_;
};

// Companion-form eigenvalues of a matrix polynomial with invertible leading
// coefficient (all finite roots of det T(z) = 0).
std::vector<Cplx> PolyEigenvalues(const MatrixPoly &p);

}  // namespace tgb::matfun

#endif  // TGB_MATFUN_HPP
