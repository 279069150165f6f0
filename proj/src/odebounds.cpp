// SPDX-License-Identifier: Apache-2.0

#include "odebounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace tgb::odebounds
{

namespace
{

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kValueCap = 1e300;

void ValidateTimes(const std::vector<double> &times)
{
  Require(!times.empty(), ErrKind::INVALID_ARGUMENT, "at least one sample time is required");
  for (std::size_t k = 0; k < times.size(); k++)
  {
    Require(std::isfinite(times[k]), ErrKind::INVALID_ARGUMENT, "sample times must be finite");
    Require(times[k] >= 0.0, ErrKind::INVALID_ARGUMENT, "sample times must be nonnegative");
    Require(k == 0 || times[k] > times[k - 1], ErrKind::INVALID_ARGUMENT,
            "sample times must be strictly increasing");
  }
}

void ValidateSteps(const std::vector<int> &steps)
{
  Require(!steps.empty(), ErrKind::INVALID_ARGUMENT, "at least one step index is required");
  for (std::size_t k = 0; k < steps.size(); k++)
  {
    Require(steps[k] >= 0, ErrKind::INVALID_ARGUMENT, "step indices must be nonnegative");
    Require(k == 0 || steps[k] > steps[k - 1], ErrKind::INVALID_ARGUMENT,
            "step indices must be strictly increasing");
  }
}

double CappedExp(double x)
{
  if (x > 690.0)
  {
    return kValueCap;
  }
  return std::exp(x);
}

double CappedPow(double base, int n)
{
  double v = std::pow(base, n);
  if (!std::isfinite(v) || v > kValueCap)
  {
    return kValueCap;
  }
  return v;
}

// Aggregated level-set measurements for a matrix pencil, assembled from
// per-eigenvalue-cluster windows so that small well-separated components are
// resolved at every eps.
struct PencilLevels
{
  double arc_raw = 0.0;     // summed boundary length (finest grids)
  double arc_coarse = 0.0;  // summed pre-doubling lengths
  double hull = 0.0;        // perimeter of the hull of all boundary vertices
  double alpha = -std::numeric_limits<double>::infinity();
  double rho = 0.0;
  double safety = 0.0;      // certification-gap margin for the arc length
  bool certified = true;
  bool touched = false;
  bool exact = false;
  bool heuristic_cover = false;  // eigenbasis too ill-conditioned for rigorous windows
  int nx = 0, ny = 0;
};

enum class PencilGoal
{
  kFull,
  kAlphaOnly
};

void AccumulateSummary(PencilLevels &acc, const pseudo::LevelSummary &s, int weight,
                       std::vector<Cplx> &vertices)
{
  acc.arc_raw += weight * s.arc_length;
  acc.arc_coarse += weight * s.arc_length_coarse;
  acc.safety += 2.0 * weight * std::abs(s.arc_length - s.arc_length_coarse);
  acc.alpha = std::max(acc.alpha, s.alpha);
  acc.rho = std::max(acc.rho, s.rho);
  acc.certified = acc.certified && s.certified;
  acc.touched = acc.touched || s.touched;
  acc.nx = std::max(acc.nx, s.nx);
  acc.ny = std::max(acc.ny, s.ny);
  for (const auto &c : s.curves)
  {
    for (Cplx z : c.pts)
    {
      vertices.push_back(z);
      if (weight == 2)
      {
        vertices.push_back(std::conj(z));
      }
    }
  }
}

PencilLevels AnalyzePencilClusters(const CMatrix &m, double eps,
                                   const pseudo::LevelOptions &level_opts, PencilGoal goal)
{
  Require(m.rows() == m.cols() && m.rows() >= 1, ErrKind::DIMENSION,
          "pencil matrix must be square");
  CheckFinite(m, "pencil matrix");
  Require(eps > 0.0 && std::isfinite(eps), ErrKind::INVALID_ARGUMENT, "eps must be positive");

  matfun::MatFunction fn = matfun::Pencil{m};
  PencilLevels acc;
  std::vector<Cplx> vertices;

  // Closed-form geometry for 1x1, or a caller-pinned window, short-circuits
  // the clustering.
  if (m.rows() == 1 || level_opts.window.has_value())
  {
    pseudo::LevelOptions o = level_opts;
    o.certify = level_opts.certify && goal == PencilGoal::kFull;
    pseudo::LevelSummary s = pseudo::AnalyzeLevel(fn, eps, o);
    AccumulateSummary(acc, s, 1, vertices);
    acc.exact = s.exact;
    acc.hull = s.exact ? s.hull_perimeter : pseudo::HullPerimeter(vertices);
    if (s.exact)
    {
      acc.certified = true;
    }
    return acc;
  }

  CVector eig_v = linalg::Eigenvalues(m);
  std::vector<Cplx> eigs(eig_v.data(), eig_v.data() + eig_v.size());
  double scale = 1.0;
  for (Cplx e : eigs)
  {
    scale = std::max(scale, std::abs(e));
  }

  double kappa = 1.0;
  try
  {
    auto [vals, vecs] = linalg::Eig(m);
    kappa = linalg::Cond2(vecs);
  }
  catch (const Error &)
  {
    kappa = std::numeric_limits<double>::infinity();
  }
  if (!std::isfinite(kappa))
  {
    kappa = std::numeric_limits<double>::infinity();
  }

  // Bauer-Fike: the eps-level set lies within eps * cond(V) of the spectrum.
  double cover = std::max(2.0 * eps, 1.05 * eps * kappa);
  double diam = 0.0;
  for (std::size_t i = 0; i < eigs.size(); i++)
  {
    for (std::size_t j = i + 1; j < eigs.size(); j++)
    {
      diam = std::max(diam, std::abs(eigs[i] - eigs[j]));
    }
  }
  double cover_cap = 4.0 * (diam + scale + 1.0);
  if (cover > cover_cap)
  {
    cover = cover_cap;
    acc.heuristic_cover = true;
  }
  double half = 1.3 * cover + 1e-3 * scale;

  // One window when the coverage disks blanket the whole spectrum anyway.
  if (cover >= 0.35 * diam || eigs.size() == 1)
  {
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (Cplx e : eigs)
    {
      x_lo = std::min(x_lo, e.real());
      x_hi = std::max(x_hi, e.real());
      y_lo = std::min(y_lo, e.imag());
      y_hi = std::max(y_hi, e.imag());
    }
    pseudo::LevelOptions o = level_opts;
    o.window = pseudo::Window{x_lo - half, x_hi + half, y_lo - half, y_hi + half};
    if (linalg::IsRealMatrix(m))
    {
      double y = std::max(std::abs(o.window->y_lo), std::abs(o.window->y_hi));
      o.window->y_lo = -y;
      o.window->y_hi = y;
    }
    o.certify = level_opts.certify && goal == PencilGoal::kFull;
    o.exact_scalar = false;
    pseudo::LevelSummary s = pseudo::AnalyzeLevel(fn, eps, o);
    AccumulateSummary(acc, s, 1, vertices);
    acc.hull = pseudo::HullPerimeter(vertices);
    return acc;
  }

  // Union-find clustering of eigenvalues whose coverage boxes overlap.
  std::size_t n = eigs.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i)
  {
    while (parent[i] != i)
    {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (std::size_t i = 0; i < n; i++)
  {
    for (std::size_t j = i + 1; j < n; j++)
    {
      if (std::abs(eigs[i].real() - eigs[j].real()) <= 2.0 * half &&
          std::abs(eigs[i].imag() - eigs[j].imag()) <= 2.0 * half)
      {
        parent[find(i)] = find(j);
      }
    }
  }

  struct Cluster
  {
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    double max_re = -std::numeric_limits<double>::infinity();
  };
  std::map<std::size_t, Cluster> clusters;
  for (std::size_t i = 0; i < n; i++)
  {
    Cluster &c = clusters[find(i)];
    c.x_lo = std::min(c.x_lo, eigs[i].real());
    c.x_hi = std::max(c.x_hi, eigs[i].real());
    c.y_lo = std::min(c.y_lo, eigs[i].imag());
    c.y_hi = std::max(c.y_hi, eigs[i].imag());
    c.max_re = std::max(c.max_re, eigs[i].real());
  }

  bool real_data = linalg::IsRealMatrix(m);
  double axis_tol = 1e-9 * scale;

  struct Job
  {
    pseudo::Window win;
    int weight = 1;
    double upper_alpha = 0.0;  // rigorous cap on Re z over this cluster's lobes
  };
  std::vector<Job> jobs;
  for (const auto &[root, c] : clusters)
  {
    if (real_data && c.y_hi < -axis_tol)
    {
      continue;  // mirror of a cluster strictly above the axis
    }
    Job job;
    job.win = pseudo::Window{c.x_lo - half, c.x_hi + half, c.y_lo - half, c.y_hi + half};
    if (real_data && c.y_lo > axis_tol)
    {
      job.weight = 2;  // counts for itself and its conjugate mirror
    }
    else if (real_data)
    {
      double y = std::max(std::abs(job.win.y_lo), std::abs(job.win.y_hi));
      job.win.y_lo = -y;
      job.win.y_hi = y;
    }
    job.upper_alpha = c.max_re + cover;
    jobs.push_back(job);
  }
  std::sort(jobs.begin(), jobs.end(),
            [](const Job &a, const Job &b) { return a.upper_alpha > b.upper_alpha; });

  for (const Job &job : jobs)
  {
    if (goal == PencilGoal::kAlphaOnly && job.upper_alpha <= acc.alpha)
    {
      continue;  // cannot contain the rightmost boundary point
    }
    pseudo::LevelOptions o = level_opts;
    o.window = job.win;
    o.certify = level_opts.certify && goal == PencilGoal::kFull;
    o.exact_scalar = false;
    pseudo::LevelSummary s = pseudo::AnalyzeLevel(fn, eps, o);
    AccumulateSummary(acc, s, job.weight, vertices);
  }
  acc.hull = pseudo::HullPerimeter(vertices);
  return acc;
}

// The 2-norm level set always contains the open eps-disk around each
// eigenvalue, so its extremes and boundary length have closed-form floors.
void ApplyPencilFloors(PencilLevels &lv, const CMatrix &m, double eps)
{
  double sa = linalg::SpectralAbscissa(m);
  double sr = linalg::SpectralRadius(m);
  lv.alpha = std::max(lv.alpha, sa + eps * (1.0 - 1e-9));
  lv.rho = std::max(lv.rho, sr + eps * (1.0 - 1e-9));
}

struct TermGeometry
{
  double length_used = 0.0;
  double rate = 0.0;  // alpha or rho, chosen by caller
};

// Select the admissible contour length: the measured boundary or its convex
// hull, whichever is shorter, inflated by the certification gap.
double UsedLength(double arc_raw, double hull, double safety, bool touched)
{
  double used = arc_raw + safety;
  if (!touched && hull > 0.0)
  {
    used = std::min(used, hull + safety);
  }
  return used;
}

BoundTerm MakePencilTerm(const std::string &label, double eps, double weight,
                         const PencilLevels &lv, double rate, double length_used)
{
  BoundTerm t;
  t.label = label;
  t.epsilon = eps;
  t.weight = weight;
  t.rate = rate;
  t.arc_length = length_used;
  t.arc_length_raw = lv.arc_raw;
  t.hull_perimeter = lv.hull;
  t.safety = lv.safety;
  t.certified = lv.certified;
  t.exact = lv.exact;
  t.nx = lv.nx;
  t.ny = lv.ny;
  return t;
}

void NoteCertification(BoundCurve &curve, const PencilLevels &lv)
{
  if (!lv.certified)
  {
    curve.certified = false;
    curve.notes.push_back(
        "level-set arc length failed grid-doubling stability; bound reported uncertified");
  }
  if (lv.touched)
  {
    curve.notes.push_back(
        "level set was clipped by the search window; arc length may be underestimated");
  }
  if (lv.heuristic_cover)
  {
    curve.notes.push_back(
        "eigenbasis is near-defective; window coverage used a capped heuristic radius");
  }
}

}  // namespace

Eigen::Index HodeDim(const HODEProblem &h)
{
  Require(!h.coeffs.empty(), ErrKind::INVALID_ARGUMENT,
          "problem needs at least one coefficient");
  return h.coeffs[0].rows();
}

void ValidateHode(const HODEProblem &h)
{
  Require(!h.coeffs.empty(), ErrKind::INVALID_ARGUMENT,
          "problem needs at least one coefficient");
  Eigen::Index d = h.coeffs[0].rows();
  Require(d >= 1, ErrKind::DIMENSION, "coefficients must have positive dimension");
  for (const auto &c : h.coeffs)
  {
    Require(c.rows() == d && c.cols() == d, ErrKind::DIMENSION,
            "all coefficients must be square matrices of equal size");
    CheckFinite(c, "coefficient matrix");
  }
  Require(h.initial.size() == h.coeffs.size(), ErrKind::DIMENSION,
          "initial data must supply one vector per coefficient");
  for (const auto &v : h.initial)
  {
    Require(v.size() == d, ErrKind::DIMENSION,
            "initial vectors must match the coefficient dimension");
    CheckFinite(v, "initial vector");
  }
}

CMatrix CompanionMatrix(const HODEProblem &h)
{
  ValidateHode(h);
  Eigen::Index d = HodeDim(h);
  Eigen::Index blocks = static_cast<Eigen::Index>(h.coeffs.size());
  CMatrix m = CMatrix::Zero(blocks * d, blocks * d);
  if (h.discrete)
  {
    // State (y_k, y_{k-1}, ..., y_{k-N}): coefficients across the first block
    // row, shift identities on the subdiagonal.
    for (Eigen::Index j = 0; j < blocks; j++)
    {
      m.block(0, j * d, d, d) = h.coeffs[static_cast<std::size_t>(j)];
    }
    for (Eigen::Index i = 1; i < blocks; i++)
    {
      m.block(i * d, (i - 1) * d, d, d) = CMatrix::Identity(d, d);
    }
  }
  else
  {
    // State (y, y', ..., y^{(n-1)}): superdiagonal identities, coefficients
    // along the last block row.
    for (Eigen::Index i = 0; i + 1 < blocks; i++)
    {
      m.block(i * d, (i + 1) * d, d, d) = CMatrix::Identity(d, d);
    }
    for (Eigen::Index k = 0; k < blocks; k++)
    {
      m.block((blocks - 1) * d, k * d, d, d) = h.coeffs[static_cast<std::size_t>(k)];
    }
  }
  return m;
}

matfun::MatrixPoly CharacteristicPoly(const HODEProblem &h)
{
  ValidateHode(h);
  Eigen::Index d = HodeDim(h);
  std::size_t n = h.coeffs.size();
  matfun::MatrixPoly p;
  p.coeffs.assign(n + 1, CMatrix::Zero(d, d));
  p.coeffs[n] = CMatrix::Identity(d, d);
  if (h.discrete)
  {
    // P(z) = z^{N+1} I - sum_j A_j z^{N-j}.
    for (std::size_t j = 0; j < n; j++)
    {
      p.coeffs[n - 1 - j] -= h.coeffs[j];
    }
  }
  else
  {
    // P(s) = s^n I - sum_k A_k s^k.
    for (std::size_t k = 0; k < n; k++)
    {
      p.coeffs[k] -= h.coeffs[k];
    }
  }
  return p;
}

matfun::MatFunction TransferFunction(const HODEProblem &h, int j)
{
  ValidateHode(h);
  Require(j >= 0 && static_cast<std::size_t>(j) < h.coeffs.size(), ErrKind::INVALID_ARGUMENT,
          "transfer component index out of range");
  matfun::TransferBlock tb;
  tb.m = CompanionMatrix(h);
  tb.sub = HodeDim(h);
  tb.row = 0;
  tb.col = j;
  return tb;
}

BoundCurve OdeUpperBound(const CMatrix &m, double epsilon, const std::vector<double> &times,
                         const BoundOptions &opts)
{
  ValidateTimes(times);
  PencilLevels lv = AnalyzePencilClusters(m, epsilon, opts.level, PencilGoal::kFull);
  ApplyPencilFloors(lv, m, epsilon);

  double length = UsedLength(lv.arc_raw, lv.hull, lv.safety, lv.touched);
  // The level set contains an eps-disk, so no admissible contour is shorter
  // than the disk boundary.
  length = std::max(length, kTwoPi * epsilon);
  double prefactor = length / (kTwoPi * epsilon);

  BoundCurve curve;
  curve.method = "resolvent-contour";
  curve.times = times;
  curve.values.reserve(times.size());
  for (double t : times)
  {
    curve.values.push_back(std::min(kValueCap, prefactor * CappedExp(lv.alpha * t)));
  }
  curve.terms.push_back(MakePencilTerm("resolvent", epsilon, 1.0, lv, lv.alpha, length));
  curve.certified = lv.certified;
  NoteCertification(curve, lv);
  return curve;
}

double PencilAlphaEps(const CMatrix &m, double epsilon, const BoundOptions &opts)
{
  pseudo::LevelOptions lo = opts.level;
  lo.certify = false;
  PencilLevels lv = AnalyzePencilClusters(m, epsilon, lo, PencilGoal::kAlphaOnly);
  ApplyPencilFloors(lv, m, epsilon);
  return lv.alpha;
}

double OdeLowerBound(const CMatrix &m, double epsilon, double omega, const BoundOptions &opts)
{
  Require(epsilon > 0.0 && std::isfinite(epsilon), ErrKind::INVALID_ARGUMENT,
          "eps must be positive");
  Require(std::isfinite(omega), ErrKind::INVALID_ARGUMENT, "omega must be finite");
  double alpha = PencilAlphaEps(m, epsilon, opts);
  return std::max(0.0, (alpha - omega) / epsilon);
}

namespace
{

// Shared driver for the transfer-component sums: continuous uses exp(rate*t),
// discrete uses rate^n.
BoundCurve TransferSum(const HODEProblem &h, double epsilon,
                       const std::vector<double> &axis_times,
                       const std::vector<int> &axis_steps, const BoundOptions &opts)
{
  Eigen::Index d = HodeDim(h);
  bool discrete = h.discrete;
  std::size_t terms_n = h.coeffs.size();

  BoundCurve curve;
  curve.discrete = discrete;
  curve.method = "transfer-sum";
  if (discrete)
  {
    curve.times.reserve(axis_steps.size());
    for (int n : axis_steps)
    {
      curve.times.push_back(n);
    }
  }
  else
  {
    curve.times = axis_times;
  }
  curve.values.assign(curve.times.size(), 0.0);

  CMatrix companion = CompanionMatrix(h);
  bool any = false;
  for (std::size_t j = 0; j < terms_n; j++)
  {
    double w = h.initial[j].norm();
    if (w == 0.0)
    {
      continue;  // the term vanishes exactly with its data
    }
    any = true;
    matfun::TransferBlock tb;
    tb.m = companion;
    tb.sub = d;
    tb.row = 0;
    tb.col = static_cast<Eigen::Index>(j);
    matfun::MatFunction fn = tb;
    pseudo::LevelOptions lo = opts.level;
    lo.exact_scalar = false;
    pseudo::LevelSummary s = pseudo::AnalyzeLevel(fn, epsilon, lo);

    double safety = 2.0 * std::abs(s.arc_length - s.arc_length_coarse);
    double length = s.arc_length + safety;
    if (!s.touched && s.hull_perimeter > 0.0)
    {
      length = std::min(length, s.hull_perimeter + safety);
    }
    double rate = discrete ? s.rho : s.alpha;
    double pref = length / (kTwoPi * epsilon) * w;
    for (std::size_t k = 0; k < curve.times.size(); k++)
    {
      double factor = discrete ? CappedPow(rate, axis_steps[k]) : CappedExp(rate * axis_times[k]);
      curve.values[k] = std::min(kValueCap, curve.values[k] + pref * factor);
    }

    BoundTerm term;
    term.label = "transfer-" + std::to_string(j);
    term.epsilon = epsilon;
    term.weight = w;
    term.rate = rate;
    term.arc_length = length;
    term.arc_length_raw = s.arc_length;
    term.hull_perimeter = s.hull_perimeter;
    term.safety = safety;
    term.certified = s.certified;
    term.exact = s.exact;
    term.nx = s.nx;
    term.ny = s.ny;
    curve.terms.push_back(term);
    if (!s.certified)
    {
      curve.certified = false;
    }
    if (s.touched)
    {
      curve.notes.push_back("component " + std::to_string(j) +
                            ": level set clipped by the search window");
    }
  }
  Require(any, ErrKind::INVALID_ARGUMENT,
          "all initial data are zero; the bound degenerates to the zero solution");
  if (!curve.certified)
  {
    curve.notes.push_back(
        "level-set arc length failed grid-doubling stability; bound reported uncertified");
  }
  return curve;
}

}  // namespace

BoundCurve HodeUpperBound(const HODEProblem &h, double epsilon, const std::vector<double> &times,
                          const BoundOptions &opts)
{
  ValidateHode(h);
  Require(!h.discrete, ErrKind::INVALID_ARGUMENT,
          "continuous-time bound requested for a discrete problem");
  ValidateTimes(times);
  Require(epsilon > 0.0 && std::isfinite(epsilon), ErrKind::INVALID_ARGUMENT,
          "eps must be positive");

  if (h.coeffs.size() == 1)
  {
    // First-order case: the single transfer component is the plain resolvent.
    double w = h.initial[0].norm();
    Require(w > 0.0, ErrKind::INVALID_ARGUMENT,
            "all initial data are zero; the bound degenerates to the zero solution");
    BoundCurve curve = OdeUpperBound(h.coeffs[0], epsilon, times, opts);
    for (double &v : curve.values)
    {
      v = std::min(kValueCap, v * w);
    }
    curve.method = "transfer-sum";
    curve.terms[0].label = "transfer-0";
    curve.terms[0].weight = w;
    return curve;
  }
  return TransferSum(h, epsilon, times, {}, opts);
}

BoundCurve DiffeqUpperBound(const HODEProblem &h, double epsilon, const std::vector<int> &steps,
                            const BoundOptions &opts)
{
  ValidateHode(h);
  Require(h.discrete, ErrKind::INVALID_ARGUMENT,
          "difference-equation bound requested for a continuous problem");
  ValidateSteps(steps);
  Require(epsilon > 0.0 && std::isfinite(epsilon), ErrKind::INVALID_ARGUMENT,
          "eps must be positive");

  std::size_t lags = h.coeffs.size();  // N + 1
  std::size_t deepest = lags - 1;

  if (deepest == 0)
  {
    // One-term recurrence y_{k+1} = A_0 y_k: the bound is the matrix-power
    // analogue of the resolvent-contour bound.
    double w = h.initial[0].norm();
    Require(w > 0.0, ErrKind::INVALID_ARGUMENT,
            "all initial data are zero; the bound degenerates to the zero solution");
    PencilLevels lv = AnalyzePencilClusters(h.coeffs[0], epsilon, opts.level, PencilGoal::kFull);
    ApplyPencilFloors(lv, h.coeffs[0], epsilon);
    double length = UsedLength(lv.arc_raw, lv.hull, lv.safety, lv.touched);
    length = std::max(length, kTwoPi * epsilon);
    double pref = length / (kTwoPi * epsilon) * w;

    BoundCurve curve;
    curve.discrete = true;
    curve.method = "power-contour";
    curve.times.reserve(steps.size());
    curve.values.reserve(steps.size());
    for (int n : steps)
    {
      curve.times.push_back(n);
      curve.values.push_back(std::min(kValueCap, pref * CappedPow(lv.rho, n)));
    }
    curve.terms.push_back(MakePencilTerm("power", epsilon, w, lv, lv.rho, length));
    curve.certified = lv.certified;
    NoteCertification(curve, lv);
    return curve;
  }

  if (!opts.majorant)
  {
    return TransferSum(h, epsilon, {}, steps, opts);
  }

  // Scaled-power majorant contours: admissible exactly when the recurrence
  // couples only the current value and the deepest lag.
  for (std::size_t j = 1; j < deepest; j++)
  {
    Require(h.coeffs[j].cwiseAbs().maxCoeff() == 0.0, ErrKind::UNSUPPORTED,
            "scaled-power majorant contours require a two-coefficient recurrence "
            "(only the lag-0 and deepest-lag coefficients may be nonzero)");
  }
  double deep_norm = linalg::Norm2(h.coeffs[deepest]);
  Require(deep_norm > 0.0, ErrKind::INVALID_ARGUMENT,
          "deepest-lag coefficient is zero; drop the empty lags instead");

  matfun::MatrixPoly p = CharacteristicPoly(h);
  std::vector<std::pair<double, int>> forms;
  std::vector<std::size_t> form_to_j;
  std::vector<double> weights(lags);
  for (std::size_t j = 0; j < lags; j++)
  {
    weights[j] = h.initial[j].norm();
    if (weights[j] == 0.0)
    {
      continue;
    }
    if (j == 0)
    {
      forms.emplace_back(1.0, static_cast<int>(deepest));
    }
    else
    {
      forms.emplace_back(deep_norm, static_cast<int>(j) - 1);
    }
    form_to_j.push_back(j);
  }
  Require(!forms.empty(), ErrKind::INVALID_ARGUMENT,
          "all initial data are zero; the bound degenerates to the zero solution");

  std::vector<pseudo::LevelSummary> fam = pseudo::AnalyzePowerFamily(p, forms, epsilon,
                                                                     opts.level);

  // Every root of the characteristic polynomial lies inside each majorant
  // level set, which gives a rigorous floor on the geometric ratio.
  double root_radius = 0.0;
  for (Cplx z : matfun::PolyEigenvalues(p))
  {
    root_radius = std::max(root_radius, std::abs(z));
  }

  BoundCurve curve;
  curve.discrete = true;
  curve.method = "power-majorant";
  curve.times.reserve(steps.size());
  for (int n : steps)
  {
    curve.times.push_back(n);
  }
  curve.values.assign(steps.size(), 0.0);

  for (std::size_t k = 0; k < fam.size(); k++)
  {
    const pseudo::LevelSummary &s = fam[k];
    std::size_t j = form_to_j[k];
    double w = weights[j];
    if (s.curves.empty() || s.arc_length <= 0.0)
    {
      curve.certified = false;
      curve.notes.push_back("component " + std::to_string(j) +
                            ": majorant level set unresolved at this grid; term omitted");
      continue;
    }
    double safety = 2.0 * std::abs(s.arc_length - s.arc_length_coarse);
    double length = s.arc_length + safety;
    if (!s.touched && s.hull_perimeter > 0.0)
    {
      length = std::min(length, s.hull_perimeter + safety);
    }
    double rho = std::max(s.rho, root_radius * (1.0 + 1e-12));
    double pref = length / (kTwoPi * epsilon) * w;
    for (std::size_t i = 0; i < steps.size(); i++)
    {
      curve.values[i] = std::min(kValueCap, curve.values[i] + pref * CappedPow(rho, steps[i]));
    }

    BoundTerm term;
    term.label = "majorant-" + std::to_string(j);
    term.epsilon = epsilon;
    term.weight = w;
    term.rate = rho;
    term.arc_length = length;
    term.arc_length_raw = s.arc_length;
    term.hull_perimeter = s.hull_perimeter;
    term.safety = safety;
    term.certified = s.certified;
    term.exact = false;
    term.nx = s.nx;
    term.ny = s.ny;
    curve.terms.push_back(term);
    if (!s.certified)
    {
      curve.certified = false;
    }
  }
  Require(!curve.terms.empty(), ErrKind::NUMERIC,
          "no majorant level set could be resolved; refine the grid");
  if (!curve.certified)
  {
    curve.notes.push_back(
        "some majorant contours failed grid-doubling stability; bound reported uncertified");
  }
  return curve;
}

BoundCurve EnvelopeMin(const std::vector<BoundCurve> &curves)
{
  Require(!curves.empty(), ErrKind::INVALID_ARGUMENT, "envelope needs at least one curve");
  BoundCurve out = curves.front();
  for (std::size_t c = 1; c < curves.size(); c++)
  {
    const BoundCurve &cur = curves[c];
    Require(cur.times == out.times && cur.discrete == out.discrete, ErrKind::INVALID_ARGUMENT,
            "envelope curves must share one time axis");
    for (std::size_t k = 0; k < out.values.size(); k++)
    {
      out.values[k] = std::min(out.values[k], cur.values[k]);
    }
    out.certified = out.certified && cur.certified;
    out.terms.insert(out.terms.end(), cur.terms.begin(), cur.terms.end());
    out.notes.insert(out.notes.end(), cur.notes.begin(), cur.notes.end());
  }
  out.method = "envelope-min";
  out.notes.push_back("pointwise minimum over " + std::to_string(curves.size()) + " curves");
  return out;
}

}  // namespace tgb::odebounds
