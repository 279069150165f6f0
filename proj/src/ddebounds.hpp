// SPDX-License-Identifier: Apache-2.0

#ifndef TGB_DDEBOUNDS_HPP
#define TGB_DDEBOUNDS_HPP

#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "linalg.hpp"
#include "odebounds.hpp"
#include "simulate.hpp"

namespace tgb::ddebounds
{

// Certified envelopes for the fundamental solution of u' = A u(t) + B u(t-tau)
// built from a contour that hugs the delay system's spectrum: a vertical
// segment at abscissa x0 up to height y0, continued by the curved branches
// x(y) where the delay term becomes a small perturbation of the resolvent.

enum class ContourMode
{
  kHermitian,       // A Hermitian: resolvent norm along the contour is 1/|y|
  kDiagonalizable,  // general A: constants pick up the eigenbasis conditioning
};

enum class BoundVariant
{
  kSplit,     // curved contour, expm + I0 + algebraically decaying tail
  kVertical,  // straight vertical contour through x0, no 1/t tail decay
  kNonsplit,  // no resolvent subtraction; expm term absorbed into I0-tilde
};

const char *ModeName(ContourMode mode);
const char *VariantName(BoundVariant variant);

struct ContourParams
{
  double y0 = 0.0;   // corner height: vertical segment covers |y| <= y0
  double eta = 0.0;  // Neumann margin parameter
  double tau = 0.0;
  double beta = 0.0;  // max |Im eigenvalue(A)|; 0 in Hermitian mode
  double x0 = 0.0;    // contour abscissa at the corner (derived, negative)
  ContourMode mode = ContourMode::kHermitian;
  BoundVariant variant = BoundVariant::kSplit;
  double cond_v = 1.0;  // kappa_2 of A's eigenbasis (1 in Hermitian mode)
  double e_norm = 0.0;  // ||B||_2 (Hermitian) or ||V^{-1} B V||_2
};

struct DdeBoundTerms
{
  double i0 = 0.0;
  double i0_error = 0.0;  // quadrature error estimate attached to i0
  bool i0_converged = true;
  double c = 0.0;
  double x0 = 0.0;
  simulate::NormCurve exp_at;  // ||e^{At}|| at the curve's sample times
  BoundVariant variant = BoundVariant::kSplit;
};

struct DdeBoundResult
{
  odebounds::BoundCurve curve;
  DdeBoundTerms terms;
  ContourParams params;
};

struct DdeBoundOptions
{
  // Tail factor e^{x0 (t-tau)} (the conservative derivation form) is the
  // default; the flag switches to the smaller published display e^{x0 t}.
  bool statement_tail = false;
  // Diagonalizable-mode C constant: default uses exponent -2 under the
  // radical; the flag selects the -1 variant for comparison runs.
  bool compat_tail_power = false;
  double quad_tol = 1e-10;
  // Optional precomputed ||e^{At}|| at exactly the requested times.
  const simulate::NormCurve *expm_cache = nullptr;
};

// Neumann-series bound ||(X - Y)^{-1}|| <= 1/(1/||X^{-1}|| - ||Y||).
// Pre: x_inv_norm * y_norm < 1.
double NeumannInverseBound(double x_inv_norm, double y_norm);

// Re-checks the full admissibility chain for already-chosen contour
// parameters; throws INFEASIBLE naming the violated link. drop_alpha_a must
// only be set for the nonsplit variant.
void VerifyChain(const ContourParams &p, double alpha_t, double alpha_a,
                 bool drop_alpha_a = false);

// Contour feasibility: picks eta as the log-space midpoint of the admissible
// interval and re-verifies the full inequality chain. alpha_t is the spectral
// abscissa of the delay system (from the collocation routine or the caller).
// drop_alpha_a removes the e^{-alpha(A) tau} endpoint from the chain; that is
// only admissible for the nonsplit variant, whose derivation never integrates
// the resolvent of A along the contour.
ContourParams ChooseContour(const CMatrix &a, const CMatrix &b, double tau, double y0,
                            double alpha_t, ContourMode mode,
                            BoundVariant variant = BoundVariant::kSplit,
                            bool drop_alpha_a = false);

// Scans a log mesh of y0 candidates and keeps the parameters whose bound value
// at t_ref (default 5 tau) is smallest. n_candidates >= 2.
ContourParams ChooseContourAuto(const CMatrix &a, const CMatrix &b, double tau, double alpha_t,
                                ContourMode mode, BoundVariant variant = BoundVariant::kSplit,
                                bool drop_alpha_a = false, double t_ref = 0.0,
                                int n_candidates = 12);

// Abscissa of the curved contour branch at height y.
// Pre: |y| >= y0 (Hermitian mode) or |y| > beta (diagonalizable mode).
double ContourX(double y, const ContourParams &p);

struct I0Result
{
  double value = 0.0;
  double error = 0.0;  // absolute error estimate, after the 1/(2 pi) factor
  bool converged = true;
  long evals = 0;
};

// (1/2pi) integral over the vertical segment of ||T^{-1} - R|| (split and
// vertical variants) or ||T^{-1}|| (nonsplit variant).
I0Result ComputeI0(const CMatrix &a, const CMatrix &b, double tau, const ContourParams &p,
                   double tol = 1e-10);

// The variant's tail constant. beta and cond_v are ignored in Hermitian mode.
double CConstant(double b_or_e_norm, double eta, double tau, double y0, double beta,
                 ContourMode mode, BoundVariant variant, double cond_v = 1.0,
                 bool compat_tail_power = false);

// Upper bound on ||Psi(t)||_2 at the given times (all >= tau for split and
// vertical variants; > 0 for nonsplit). B = 0 degenerates to ||e^{At}||.
DdeBoundResult FundamentalBound(const CMatrix &a, const CMatrix &b, double tau,
                                const ContourParams &p, const std::vector<double> &times,
                                const DdeBoundOptions &opts = {});

// Upper bound on ||u(t)|| for initial value u0 and history phi:
// k1(t) ||u0|| + k2(t) phi_weight, with the piecewise k2 built from windowed
// suprema of ||e^{As}|| (dense mesh, refinement-doubling certified).
// phi_weight = integral over one delay interval of ||B phi||.
DdeBoundResult HistoryBound(const CMatrix &a, const CMatrix &b, double tau,
                            const ContourParams &p, double u0_norm, double phi_weight,
                            const std::vector<double> &times, const DdeBoundOptions &opts = {});

// integral_0^tau ||B phi(v - tau)|| dv for a constant or sampled history.
double HistoryWeight(const CMatrix &b, const simulate::History &history, double tau);

struct VerifyResult
{
  double residual = 0.0;    // max over the two contours of ||integral - Psi(t)||
  double quad_error = 0.0;  // worst quadrature error estimate
  bool converged = true;
};

// Desk-scale consistency check of the contour deformation: evaluates the
// inverse-transform integral over the truncated curved contour and over the
// truncated vertical line Re z = gamma, and compares both against the
// simulated fundamental solution at t_sample. Not a bound.
VerifyResult VerifyContourDeformation(const CMatrix &a, const CMatrix &b, double tau,
                                      const ContourParams &p, double t_sample, double gamma,
                                      double y_max = 0.0);

// n points on the truncated contour (vertical segment plus curved branches up
// to |y| = y_max), uniformly spaced in y. For validity spot checks.
std::vector<Cplx> SampleGamma(const ContourParams &p, double y_max, int n);

}  // namespace tgb::ddebounds

#endif  // TGB_DDEBOUNDS_HPP
