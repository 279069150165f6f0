// SPDX-License-Identifier: Apache-2.0

#ifndef TGB_PSEUDO_HPP
#define TGB_PSEUDO_HPP

#include <optional>
#include <vector>

#include "common.hpp"
#include "matfun.hpp"

namespace tgb::pseudo
{

// Level sets of z -> ||T(z)^{-1}||_2 and the derived quantities the transient
// bounds consume: boundary arc length, rightmost real part, largest modulus.

struct Window
{
  double x_lo = -1.0, x_hi = 1.0;
  double y_lo = -1.0, y_hi = 1.0;

  double Width() const { return x_hi - x_lo; }
  double Height() const { return y_hi - y_lo; }
  double Diag() const;
  bool Contains(Cplx z) const;
};

// sigma(i, j) = 1 / ||T(xs[i] + i ys[j])^{-1}|| sampled on a uniform grid.
struct PseudoField
{
  Window win;
  std::vector<double> xs, ys;
  RMatrix sigma;  // xs.size() rows, ys.size() cols

  double MinSigma() const { return sigma.minCoeff(); }
};

PseudoField ComputeField(const matfun::MatFunction &t, const Window &win, int nx, int ny);

struct Polyline
{
  std::vector<Cplx> pts;
  bool closed = false;

  double Length() const;
};

struct LevelSet
{
  double eps = 0.0;
  std::vector<Polyline> curves;
  bool touches_boundary = false;  // level set reaches the window border
  double arc_length = 0.0;        // total boundary length over all curves
  double hull_perimeter = 0.0;    // perimeter of the convex hull of all vertices
};

// Marching-squares extraction of { z : sigma(z) = eps } from a sampled field.
// Crossing positions use linear interpolation along cell edges; saddle cells
// are disambiguated by the cell-center average.
LevelSet ExtractBoundary(const PseudoField &field, double eps);

// Perimeter of the convex hull of a point set (0 for fewer than 3 points).
double HullPerimeter(const std::vector<Cplx> &pts);

struct LevelOptions
{
  std::optional<Window> window;  // absent: auto-size from seed points
  int nx = 400, ny = 400;
  bool certify = true;        // grid-doubling stability check on the arc length
  bool exact_scalar = true;   // closed-form disk geometry for 1x1 pencils
  double refine_tol = 1e-8;   // bisection width for the abscissa/radius polish
  int max_expansions = 3;     // automatic window growth on boundary contact
};

struct LevelSummary
{
  double eps = 0.0;
  double alpha = 0.0;              // sup Re over the level set, refined
  double rho = 0.0;                // sup |z| over the level set, refined
  double arc_length = 0.0;         // finest grid
  double arc_length_coarse = 0.0;  // pre-doubling grid (equal when uncertified)
  double hull_perimeter = 0.0;     // convex hull alternative (also a valid contour)
  bool certified = false;          // doubled grid agrees within 1% and window clean
  bool exact = false;              // closed-form path was taken
  bool touched = false;            // level set clipped by the window border
  Window window;                   // window actually used
  int nx = 0, ny = 0;              // finest grid actually used
  std::vector<Polyline> curves;
};

// Full level-set analysis driver: window sizing, extraction, refinement of
// the extremal abscissa/radius by 1-D bisection on sigma, and grid-doubling
// certification of the arc length.
LevelSummary AnalyzeLevel(const matfun::MatFunction &t, double eps, const LevelOptions &opts);

// sup { Re z : ||T(z)^{-1}|| >= 1/eps }, refined to ~opts.refine_tol.
LevelSummary PseudoAbscissa(const matfun::MatFunction &t, double eps, const LevelOptions &opts);

// sup { |z| : ||T(z)^{-1}|| >= 1/eps }.
LevelSummary PseudoRadius(const matfun::MatFunction &t, double eps, const LevelOptions &opts);

// Window sized from the seed points of T padded in proportion to eps and the
// spectral extent.
Window AutoWindow(const matfun::MatFunction &t, double eps_max);

// Level analysis for a family of scaled-power forms sharing one matrix
// polynomial: sigma_k(z) = sigma_min(P(z)) / (scale_k * |z|^power_k). The
// sigma_min(P) grid is computed once and reused across the whole family,
// which is what makes many-term difference-equation bounds affordable.
std::vector<LevelSummary> AnalyzePowerFamily(const matfun::MatrixPoly &p,
                                             const std::vector<std::pair<double, int>> &forms,
                                             double eps, const LevelOptions &opts);

// Spectral abscissa of the delay system u' = A u + B u(t - tau), estimated as
// the rightmost eigenvalue of an (n_nodes+1)-point Chebyshev collocation of
// the solution-operator generator on [-tau, 0].
double DdeSpectralAbscissa(const CMatrix &a, const CMatrix &b, double tau, int n_nodes);

struct DdeAbscissa
{
  double value = 0.0;          // doubled-resolution estimate
  double doubled_delta = 0.0;  // |value(n) - value(2n)|
  bool converged = false;      // delta within 1e-4
  int n_nodes = 0;             // base resolution used
};

// Runs the collocation at n_nodes and 2*n_nodes and reports agreement;
// base_nodes <= 0 picks a resolution from the problem size.
DdeAbscissa DdeSpectralAbscissaChecked(const CMatrix &a, const CMatrix &b, double tau,
                                       int base_nodes = 0);

}  // namespace tgb::pseudo

#endif  // TGB_PSEUDO_HPP
