// SPDX-License-Identifier: Apache-2.0

#ifndef TGB_ODEBOUNDS_HPP
#define TGB_ODEBOUNDS_HPP

#include <string>
#include <vector>

#include "common.hpp"
#include "matfun.hpp"
#include "pseudo.hpp"

namespace tgb::odebounds
{

// One additive term of a growth-bound curve, with the contour measurements
// it was assembled from.
struct BoundTerm
{
  std::string label;            // which component the term bounds
  double epsilon = 0.0;
  double weight = 1.0;          // initial-data norm multiplying the term
  double rate = 0.0;            // exponential rate (continuous) or ratio (discrete)
  double arc_length = 0.0;      // contour length used in the prefactor
  double arc_length_raw = 0.0;  // boundary length as measured on the grid
  double hull_perimeter = 0.0;  // convex-hull alternative (also admissible)
  double safety = 0.0;          // additive margin applied to the measured length
  bool certified = false;       // grid-doubling stability held
  bool exact = false;           // closed-form geometry was available
  int nx = 0, ny = 0;           // finest grid used
};

// An upper (or lower) envelope on a transient-growth quantity, sampled at
// caller-chosen times or step indices.
struct BoundCurve
{
  bool discrete = false;            // times hold integer step indices
  std::vector<double> times;
  std::vector<double> values;
  std::string method;               // how the curve was produced
  bool certified = true;            // every contributing contour certified
  std::vector<BoundTerm> terms;
  std::vector<std::string> notes;   // warnings and provenance remarks
};

// A higher-order ODE y^(n) = sum_k A_k y^(k) (continuous) or a linear
// difference equation y_{k+1} = sum_j A_j y_{k-j} (discrete), with its
// initial data.
struct HODEProblem
{
  bool discrete = false;
  // Continuous: coeffs[k] = A_k for k = 0..n-1.
  // Discrete:   coeffs[j] = A_j for j = 0..N (lag j).
  std::vector<CMatrix> coeffs;
  // Continuous: initial[j] = y^{(j)}(0) for j = 0..n-1.
  // Discrete:   initial[j] = y_{-j} for j = 0..N.
  std::vector<CVector> initial;
};

// Component dimension d (each coefficient is d x d).
Eigen::Index HodeDim(const HODEProblem &h);

// Dimension/shape/finite checks; throws on malformed problems.
void ValidateHode(const HODEProblem &h);

// First-order companion form: block superdiagonal identities with the
// coefficients in the last block row (continuous), or coefficients in the
// first block row with subdiagonal identities (discrete shift form).
CMatrix CompanionMatrix(const HODEProblem &h);

// The characteristic matrix polynomial P (degree n, leading identity).
matfun::MatrixPoly CharacteristicPoly(const HODEProblem &h);

// The j-th transfer component: the (0, j) block of the companion resolvent,
// whose inverse norm drives the j-th term of the initial-data bound split.
matfun::MatFunction TransferFunction(const HODEProblem &h, int j);

struct BoundOptions
{
  pseudo::LevelOptions level;      // grid resolution / window / certification
  bool majorant = false;           // discrete only: scaled-power majorant contours
};

// exp(tM) norm bound L_eps * e^(t alpha_eps) / (2 pi eps) from the
// eps-level set of the resolvent of M.
BoundCurve OdeUpperBound(const CMatrix &m, double epsilon, const std::vector<double> &times,
                         const BoundOptions &opts = {});

// max(0, (alpha_eps(M) - omega) / eps), a floor on sup_t ||e^{-omega t} e^{tM}||.
double OdeLowerBound(const CMatrix &m, double epsilon, double omega,
                     const BoundOptions &opts = {});

// Higher-order initial-value bound: sum over derivative orders j of
// L_eps^(j) e^(t alpha_eps^(j)) / (2 pi eps) * ||y0^(j)||, one transfer
// component per order, zero-data terms skipped.
BoundCurve HodeUpperBound(const HODEProblem &h, double epsilon, const std::vector<double> &times,
                          const BoundOptions &opts = {});

// Difference-equation analogue with geometric factors rho_eps^(j)^n. With
// opts.majorant the level sets are those of the scaled-power majorant
// ||P^{-1}|| * ||A_N|| * |z|^(j-1), which requires every middle coefficient
// to vanish; without it the companion-resolvent blocks are used directly.
BoundCurve DiffeqUpperBound(const HODEProblem &h, double epsilon, const std::vector<int> &steps,
                            const BoundOptions &opts = {});

// Pointwise minimum of curves sharing the same time axis (envelope over eps).
BoundCurve EnvelopeMin(const std::vector<BoundCurve> &curves);

// Refined sup of Re z over the eps-level set of the resolvent of m, using
// per-eigenvalue-cluster windows so small, well-separated components stay
// resolved. Shared by the bound assembly and the lower-bound helpers.
double PencilAlphaEps(const CMatrix &m, double epsilon, const BoundOptions &opts = {});

}  // namespace tgb::odebounds

#endif  // TGB_ODEBOUNDS_HPP
