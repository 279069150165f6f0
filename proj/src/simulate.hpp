// SPDX-License-Identifier: Apache-2.0

#ifndef TGB_SIMULATE_HPP
#define TGB_SIMULATE_HPP

#include <vector>

#include "common.hpp"

namespace tgb::simulate
{

// Reference trajectories the bounds are validated against. All integrators
// here are deterministic fixed-step schemes so runs are exactly reproducible.

// u'(t) = A u(t) + B u(t - tau), one constant delay.
struct DelaySystem
{
  CMatrix a;
  CMatrix b;
  double tau = 1.0;
};

// Initial data on [-tau, 0]. The trajectory value at 0+ is supplied
// separately (u0), so a jump at t = 0 is representable; the fundamental
// solution needs exactly that.
struct History
{
  enum class Type
  {
    CONSTANT,  // phi(s) = data.col(0)
    SAMPLES    // uniform samples on [-tau, 0], data.col(j) = phi(-tau + j*dt)
  };
  Type type = Type::CONSTANT;
  CMatrix data;
};

struct Trajectory
{
  std::vector<double> times;
  RVector norms;   // ||u(t)||_2 per sample
  CMatrix states;  // column per sample (empty when states are not kept)
  double h = 0.0;  // step size actually used
};

struct NormCurve
{
  std::vector<double> times;
  RVector values;
};

struct DdeOptions
{
  double h_req = 0.0;      // requested step; 0 = automatic (tau/64 + stability)
  int samples = 0;         // 0 = every step; otherwise ~samples uniform rows
  bool keep_states = true;
};

// Method-of-steps classic RK4 with the step chosen so tau is an integer
// multiple of h. Delayed reads at half-steps use cubic Hermite interpolation
// on stored (value, derivative) node pairs, which preserves the fourth-order
// accuracy of the stepper.
Trajectory SimulateDde(const DelaySystem &sys, const History &history, const CVector &u0,
                       double t_end, const DdeOptions &opts = {});

// ||Psi(t)||_2 for the fundamental solution (zero history, identity initial
// value), sampled at ~samples step-aligned times on [0, t_end].
NormCurve FundamentalNorms(const DelaySystem &sys, double t_end, int samples,
                           double h_req = 0.0);

// Psi(t) itself at one time; a partial final RK4 step (with Hermite delayed
// reads) covers times that are not step multiples.
CMatrix FundamentalAt(const DelaySystem &sys, double t, double h_req = 0.0);

// ||e^{t M}||_2 on a uniform grid: one matrix exponential per step width,
// then repeated propagation with periodic direct-recomputation checkpoints.
NormCurve ExpmNormCurve(const CMatrix &m, double t_end, int samples);

// e^{t M} u0 on a uniform grid (exact up to the matrix exponential).
Trajectory SimulateOde(const CMatrix &m, const CVector &u0, double t_end, int samples);

// y_{k+1} = sum_{j=0}^{N} coeffs[j] y_{k-j}, with initial window
// initial[j] = y_{-j} (j = 0..N). Returns ||y_k|| for k = 0..n_steps and the
// states themselves.
struct DiffeqTrajectory
{
  RVector norms;   // n_steps + 1 entries, k = 0..n_steps
  CMatrix states;  // column k = y_k
};
DiffeqTrajectory SimulateDiffeq(const std::vector<CMatrix> &coeffs,
                                const std::vector<CVector> &initial, int n_steps);

// Step count per delay interval consistent with the explicit-stepper
// stability limit and the requested step size.
int StepsPerDelay(const DelaySystem &sys, double h_req);

}  // namespace tgb::simulate

#endif  // TGB_SIMULATE_HPP
