// SPDX-License-Identifier: Apache-2.0

#ifndef TGB_LOWERBOUNDS_HPP
#define TGB_LOWERBOUNDS_HPP

#include <vector>

#include "common.hpp"
#include "matfun.hpp"

namespace tgb::lowerbounds
{

// Lower bounds on worst-case transient growth sup_t ||Psi(t)|| (continuous
// time). Every routine here errs on the low side: grid maxima and iterative
// resolvent-norm estimates only ever under-approximate, so results stay valid
// bounds no matter how coarse the sampling.

// max(0, (alpha_eps - omega) / eps): a floor on sup_t e^{-omega t} ||Psi(t)||.
// alpha_eps is supplied by the caller (finite by assumption).
double LbGeneral(const matfun::MatFunction &t, double epsilon, double omega, double alpha_eps);

// x * max_y ||T(x+iy)^{-1}|| over an n_mesh grid of y in [0, y_max]
// (conjugate symmetry; complex-data problems scan [-y_max, y_max]), polished
// by golden-section refinement around the grid argmax.
double LbPractical(const matfun::MatFunction &t, double x, double y_max, int n_mesh = 2048);

// Height above which ||T(x+iy)^{-1}|| is dominated by its x-axis value, so a
// finite y-scan loses nothing. Supports the delay characteristic function
// (Hermitian and general branches) and the pencil.
double LbTruncationHeight(const matfun::MatFunction &t, double x);

struct ScanResult
{
  double value = 0.0;  // best lower bound found
  double x = 0.0;      // abscissa achieving it
  // Per-x table. Every entry is itself a valid lower bound; entries the
  // pruning pass left coarsely meshed are simply weaker.
  std::vector<double> xs;
  std::vector<double> values;
};

// Best LbPractical over an equally spaced x-mesh of [x_lo, x_hi], each x with
// its own truncation height. Large delay problems prune the mesh with a
// coarse pass first; every stage value remains a valid lower bound.
ScanResult LbScan(const matfun::MatFunction &t, double x_lo, double x_hi, int n_x);

}  // namespace tgb::lowerbounds

#endif  // TGB_LOWERBOUNDS_HPP
