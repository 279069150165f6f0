// SPDX-License-Identifier: Apache-2.0

#include "simulate.hpp"

#include <algorithm>
#include <cmath>

#include "linalg.hpp"

namespace tgb::simulate
{

namespace
{

void ValidateSystem(const DelaySystem &sys)
{
  Require(sys.a.rows() > 0 && sys.a.rows() == sys.a.cols(), ErrKind::DIMENSION,
          "delay system matrix A must be square and nonempty");
  Require(sys.b.rows() == sys.a.rows() && sys.b.cols() == sys.a.cols(), ErrKind::DIMENSION,
          "delay system matrices A and B must have equal dimensions");
  Require(sys.tau > 0.0 && std::isfinite(sys.tau), ErrKind::INVALID_ARGUMENT,
          "delay tau must be positive and finite");
  CheckFinite(sys.a, "delay system matrix A");
  CheckFinite(sys.b, "delay system matrix B");
}

template <typename Mat>
Mat CastCol(const CMatrix &src, Eigen::Index c, Eigen::Index rows)
{
  Mat v(rows, 1);
  for (Eigen::Index r = 0; r < rows; r++)
  {
    if constexpr (std::is_same_v<typename Mat::Scalar, double>)
    {
      v(r, 0) = src(r, c).real();
    }
    else
    {
      v(r, 0) = src(r, c);
    }
  }
  return v;
}

// Evaluate the history interpolant at s in [-tau, 0]. Uniform samples are
// interpolated with a Catmull-Rom cubic (one-sided slopes at the ends).
template <typename Mat>
Mat HistoryAt(const History &hist, Eigen::Index rows, Eigen::Index cols, double tau, double s)
{
  if (hist.type == History::Type::CONSTANT)
  {
    if (hist.data.size() == 0)
    {
      return Mat::Zero(rows, cols);
    }
    Mat col = CastCol<Mat>(hist.data, 0, rows);
    Mat v(rows, cols);
    for (Eigen::Index c = 0; c < cols; c++)
    {
      v.col(c) = col;
    }
    return v;
  }
  Eigen::Index k = hist.data.cols();
  Require(k >= 2, ErrKind::INVALID_ARGUMENT, "sampled history needs at least 2 columns");
  Require(cols == 1, ErrKind::UNSUPPORTED, "sampled history only supports vector states");
  double dt = tau / static_cast<double>(k - 1);
  double pos = (s + tau) / dt;
  Eigen::Index j = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), 0, k - 2);
  double t = std::clamp(pos - static_cast<double>(j), 0.0, 1.0);

  auto col = [&](Eigen::Index c)
  { return CastCol<Mat>(hist.data, std::clamp<Eigen::Index>(c, 0, k - 1), rows); };
  Mat p0 = col(j), p1 = col(j + 1);
  Mat m0 = 0.5 * (col(j + 1) - col(j - 1));
  Mat m1 = 0.5 * (col(j + 2) - col(j));
  double t2 = t * t, t3 = t2 * t;
  Mat v = (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 +
          (t3 - t2) * m1;
  return v;
}

// Core method-of-steps RK4. State columns propagate together (a matrix state
// gives the fundamental solution). A jump at t = 0 is allowed: history
// supplies values on [-tau, 0] (including the left limit at 0), the initial
// state u0 supplies u(0+). The node callback receives every completed node.
template <typename Mat, typename NodeFn>
void RunDde(const Mat &a, const Mat &b, const History &hist, double tau, const Mat &u0, int m,
            long n_steps, NodeFn &&node)
{
  const double h = tau / m;
  const Eigen::Index rows = u0.rows(), cols = u0.cols();

  // Ring buffer of (value, derivative) at the last m+1 nodes, indexed by step.
  std::vector<Mat> vals(m + 1), ders(m + 1);
  auto slot = [&](long k) -> std::size_t { return static_cast<std::size_t>(k % (m + 1)); };

  auto history_at = [&](double s) { return HistoryAt<Mat>(hist, rows, cols, tau, s); };

  // Delayed value at node k as seen from the step that ENDS there (left
  // limit: node m reads history at 0, not the post-jump u0).
  auto delayed_left = [&](long k) -> Mat
  {
    long kd = k - m;
    if (kd <= 0)
    {
      return history_at(kd * h);
    }
    return vals[slot(kd)];
  };
  // Delayed value at node k as seen from the step that STARTS there.
  auto delayed_right = [&](long k) -> Mat
  {
    long kd = k - m;
    if (kd < 0)
    {
      return history_at(kd * h);
    }
    return vals[slot(kd)];
  };
  // Delayed value at the midpoint of step k: cubic Hermite from the stored
  // (value, derivative) pairs, matching the stepper's fourth order.
  auto delayed_mid = [&](long k) -> Mat
  {
    long kd = k - m;
    if (kd < 0)
    {
      return history_at((kd + 0.5) * h);
    }
    const Mat &v0 = vals[slot(kd)];
    const Mat &v1 = vals[slot(kd + 1)];
    const Mat &d0 = ders[slot(kd)];
    const Mat &d1 = ders[slot(kd + 1)];
    return 0.5 * (v0 + v1) + (h / 8.0) * (d0 - d1);
  };

  Mat u = u0;
  vals[slot(0)] = u;
  ders[slot(0)] = a * u + b * delayed_right(0);
  node(0L, 0.0, u);

  for (long k = 0; k < n_steps; k++)
  {
    const Mat k1 = ders[slot(k)];  // = f(t_k+, u_k)
    Mat gmid = b * delayed_mid(k);
    Mat gend_left = b * delayed_left(k + 1);
    Mat k2 = a * (u + (0.5 * h) * k1) + gmid;
    Mat k3 = a * (u + (0.5 * h) * k2) + gmid;
    Mat k4 = a * (u + h * k3) + gend_left;
    u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    vals[slot(k + 1)] = u;
    // Stored derivative is the right-hand one (used by later intervals).
    if (k + 1 == m)
    {
      ders[slot(k + 1)] = a * u + b * vals[slot(0)];
    }
    else
    {
      ders[slot(k + 1)] = a * u + gend_left;
    }
    node(k + 1, (k + 1) * h, u);
  }
}

// Like RunDde, but stops exactly at time t: full steps up to floor(t/h), then
// one partial RK4 step whose delayed reads use cubic Hermite interpolation on
// the stored ring nodes.
template <typename Mat>
Mat RunDdeAt(const Mat &a, const Mat &b, const History &hist, double tau, const Mat &u0, int m,
             double t)
{
  const double h = tau / m;
  const Eigen::Index rows = u0.rows(), cols = u0.cols();
  long n_full = static_cast<long>(std::floor(t / h + 1e-9));
  double r = t - n_full * h;
  if (r < 0.0)
  {
    r = 0.0;
  }

  std::vector<Mat> vals(m + 1), ders(m + 1);
  auto slot = [&](long k) -> std::size_t { return static_cast<std::size_t>(k % (m + 1)); };
  auto history_at = [&](double s) { return HistoryAt<Mat>(hist, rows, cols, tau, s); };
  auto delayed_left = [&](long k) -> Mat
  {
    long kd = k - m;
    if (kd <= 0)
    {
      return history_at(kd * h);
    }
    return vals[slot(kd)];
  };
  auto delayed_right = [&](long k) -> Mat
  {
    long kd = k - m;
    if (kd < 0)
    {
      return history_at(kd * h);
    }
    return vals[slot(kd)];
  };
  auto delayed_mid = [&](long k) -> Mat
  {
    long kd = k - m;
    if (kd < 0)
    {
      return history_at((kd + 0.5) * h);
    }
    const Mat &v0 = vals[slot(kd)];
    const Mat &v1 = vals[slot(kd + 1)];
    const Mat &d0 = ders[slot(kd)];
    const Mat &d1 = ders[slot(kd + 1)];
    return 0.5 * (v0 + v1) + (h / 8.0) * (d0 - d1);
  };

  Mat u = u0;
  vals[slot(0)] = u;
  ders[slot(0)] = a * u + b * delayed_right(0);
  for (long k = 0; k < n_full; k++)
  {
    const Mat k1 = ders[slot(k)];
    Mat gmid = b * delayed_mid(k);
    Mat gend_left = b * delayed_left(k + 1);
    Mat k2 = a * (u + (0.5 * h) * k1) + gmid;
    Mat k3 = a * (u + (0.5 * h) * k2) + gmid;
    Mat k4 = a * (u + h * k3) + gend_left;
    u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    vals[slot(k + 1)] = u;
    if (k + 1 == m)
    {
      ders[slot(k + 1)] = a * u + b * vals[slot(0)];
    }
    else
    {
      ders[slot(k + 1)] = a * u + gend_left;
    }
  }
  if (r <= 1e-9 * h)
  {
    return u;
  }

  // Delayed value at arbitrary time s <= n_full*h, from history or the ring.
  auto value_at = [&](double s) -> Mat
  {
    if (s <= 0.0)
    {
      return history_at(std::max(s, -tau));
    }
    double pos = s / h;
    long k = static_cast<long>(std::floor(pos));
    long lo = std::max<long>(0, n_full - m);
    k = std::clamp(k, lo, n_full - 1);
    double th = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
    const Mat &v0 = vals[slot(k)];
    const Mat &v1 = vals[slot(k + 1)];
    const Mat &d0 = ders[slot(k)];
    const Mat &d1 = ders[slot(k + 1)];
    double t2 = th * th, t3 = t2 * th;
    return (2 * t3 - 3 * t2 + 1) * v0 + (h * (t3 - 2 * t2 + th)) * d0 +
           (-2 * t3 + 3 * t2) * v1 + (h * (t3 - t2)) * d1;
  };

  double tn = n_full * h;
  const Mat k1 = ders[slot(n_full)];
  Mat gmid = b * value_at(tn + 0.5 * r - tau);
  Mat gend = b * value_at(tn + r - tau);
  Mat k2 = a * (u + (0.5 * r) * k1) + gmid;
  Mat k3 = a * (u + (0.5 * r) * k2) + gmid;
  Mat k4 = a * (u + r * k3) + gend;
  return u + (r / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool RealProblem(const DelaySystem &sys, const History &hist, const CMatrix &u0)
{
  return linalg::IsRealMatrix(sys.a) && linalg::IsRealMatrix(sys.b) &&
         (hist.data.size() == 0 || linalg::IsRealMatrix(hist.data)) && linalg::IsRealMatrix(u0);
}

std::vector<long> SampleNodes(long n_steps, int samples)
{
  std::vector<long> idx;
  if (samples <= 0 || samples >= n_steps + 1)
  {
    idx.resize(n_steps + 1);
    for (long k = 0; k <= n_steps; k++)
    {
      idx[k] = k;
    }
    return idx;
  }
  idx.reserve(samples + 1);
  long last = -1;
  for (int s = 0; s <= samples; s++)
  {
    long k = std::lround(static_cast<double>(s) * n_steps / samples);
    if (k != last)
    {
      idx.push_back(k);
      last = k;
    }
  }
  return idx;
}

}  // namespace

int StepsPerDelay(const DelaySystem &sys, double h_req)
{
  ValidateSystem(sys);
  // Explicit RK4 stability: |h z| must stay within ~2.78 on the negative real
  // axis; ||A|| + ||B|| bounds the relevant spectrum and 2.5 leaves margin.
  double scale = linalg::Norm2(sys.a) + linalg::Norm2(sys.b);
  int m_stab = static_cast<int>(std::ceil(sys.tau * scale / 2.5));
  int m_req = (h_req > 0.0) ? static_cast<int>(std::lround(sys.tau / h_req)) : 64;
  return std::max({m_stab, m_req, 1});
}

Trajectory SimulateDde(const DelaySystem &sys, const History &history, const CVector &u0,
                       double t_end, const DdeOptions &opts)
{
  ValidateSystem(sys);
  Require(u0.size() == sys.a.rows(), ErrKind::DIMENSION, "u0 dimension mismatch");
  Require(t_end > 0.0 && std::isfinite(t_end), ErrKind::INVALID_ARGUMENT,
          "t_end must be positive and finite");
  CheckFinite(u0, "initial value u0");
  if (history.data.size() != 0)
  {
    Require(history.data.rows() == sys.a.rows(), ErrKind::DIMENSION,
            "history row dimension mismatch");
    CheckFinite(history.data, "history data");
  }

  int m = StepsPerDelay(sys, opts.h_req);
  double h = sys.tau / m;
  long n_steps = static_cast<long>(std::ceil(t_end / h - 1e-9));
  std::vector<long> keep = SampleNodes(n_steps, opts.samples);

  Trajectory out;
  out.h = h;
  out.times.reserve(keep.size());
  out.norms.resize(static_cast<Eigen::Index>(keep.size()));
  if (opts.keep_states)
  {
    out.states.resize(u0.size(), static_cast<Eigen::Index>(keep.size()));
  }

  std::size_t pos = 0;
  auto record = [&](long k, double t, const auto &state)
  {
    if (pos < keep.size() && keep[pos] == k)
    {
      out.times.push_back(t);
      out.norms(static_cast<Eigen::Index>(pos)) = state.norm();
      if (opts.keep_states)
      {
        using St = std::decay_t<decltype(state)>;
        if constexpr (std::is_same_v<typename St::Scalar, double>)
        {
          out.states.col(static_cast<Eigen::Index>(pos)) = state.col(0).template cast<Cplx>();
        }
        else
        {
          out.states.col(static_cast<Eigen::Index>(pos)) = state.col(0);
        }
      }
      pos++;
    }
  };

  if (RealProblem(sys, history, u0))
  {
    RMatrix a = sys.a.real(), b = sys.b.real(), u = u0.real();
    RunDde<RMatrix>(a, b, history, sys.tau, u, m, n_steps, record);
  }
  else
  {
    CMatrix u = u0;
    RunDde<CMatrix>(sys.a, sys.b, history, sys.tau, u, m, n_steps, record);
  }
  return out;
}

NormCurve FundamentalNorms(const DelaySystem &sys, double t_end, int samples, double h_req)
{
  ValidateSystem(sys);
  Require(t_end > 0.0 && std::isfinite(t_end), ErrKind::INVALID_ARGUMENT,
          "t_end must be positive and finite");
  int m = StepsPerDelay(sys, h_req);
  double h = sys.tau / m;
  long n_steps = static_cast<long>(std::ceil(t_end / h - 1e-9));
  std::vector<long> keep = SampleNodes(n_steps, samples);

  NormCurve out;
  out.times.reserve(keep.size());
  out.values.resize(static_cast<Eigen::Index>(keep.size()));

  History zero_hist;  // fundamental solution: zero history, identity at 0+
  zero_hist.type = History::Type::CONSTANT;

  std::size_t pos = 0;
  auto record = [&](long k, double t, const auto &state)
  {
    if (pos < keep.size() && keep[pos] == k)
    {
      out.times.push_back(t);
      out.values(static_cast<Eigen::Index>(pos)) = linalg::Norm2(state);
      pos++;
    }
  };

  Eigen::Index n = sys.a.rows();
  if (linalg::IsRealMatrix(sys.a) && linalg::IsRealMatrix(sys.b))
  {
    RMatrix a = sys.a.real(), b = sys.b.real();
    RMatrix id = RMatrix::Identity(n, n);
    RunDde<RMatrix>(a, b, zero_hist, sys.tau, id, m, n_steps, record);
  }
  else
  {
    CMatrix id = CMatrix::Identity(n, n);
    RunDde<CMatrix>(sys.a, sys.b, zero_hist, sys.tau, id, m, n_steps, record);
  }
  return out;
}

CMatrix FundamentalAt(const DelaySystem &sys, double t, double h_req)
{
  ValidateSystem(sys);
  Require(t >= 0.0 && std::isfinite(t), ErrKind::INVALID_ARGUMENT,
          "sample time must be nonnegative and finite");
  Eigen::Index n = sys.a.rows();
  if (t == 0.0)
  {
    return CMatrix::Identity(n, n);
  }
  int m = StepsPerDelay(sys, h_req);
  History zero_hist;
  zero_hist.type = History::Type::CONSTANT;
  if (linalg::IsRealMatrix(sys.a) && linalg::IsRealMatrix(sys.b))
  {
    RMatrix a = sys.a.real(), b = sys.b.real();
    RMatrix id = RMatrix::Identity(n, n);
    return RunDdeAt<RMatrix>(a, b, zero_hist, sys.tau, id, m, t).cast<Cplx>();
  }
  CMatrix id = CMatrix::Identity(n, n);
  return RunDdeAt<CMatrix>(sys.a, sys.b, zero_hist, sys.tau, id, m, t);
}

NormCurve ExpmNormCurve(const CMatrix &m, double t_end, int samples)
{
  Require(m.rows() > 0 && m.rows() == m.cols(), ErrKind::DIMENSION,
          "matrix must be square and nonempty");
  Require(t_end > 0.0 && std::isfinite(t_end), ErrKind::INVALID_ARGUMENT,
          "t_end must be positive and finite");
  Require(samples >= 2, ErrKind::INVALID_ARGUMENT, "need at least 2 samples");
  CheckFinite(m, "matrix");

  NormCurve out;
  out.times.resize(samples);
  out.values.resize(samples);
  double dt = t_end / (samples - 1);

  // Repeated propagation accumulates rounding; direct recomputation every 64
  // steps keeps the drift negligible at trivial cost.
  if (linalg::IsRealMatrix(m))
  {
    RMatrix step = linalg::Expm(m, dt).real();
    RMatrix w = RMatrix::Identity(m.rows(), m.cols());
    for (int k = 0; k < samples; k++)
    {
      out.times[k] = k * dt;
      if (k > 0)
      {
        w = (k % 64 == 0) ? RMatrix(linalg::Expm(m, k * dt).real()) : RMatrix(step * w);
      }
      out.values(k) = linalg::Norm2(w);
    }
    return out;
  }
  CMatrix step = linalg::Expm(m, dt);
  CMatrix w = CMatrix::Identity(m.rows(), m.cols());
  for (int k = 0; k < samples; k++)
  {
    out.times[k] = k * dt;
    if (k > 0)
    {
      w = (k % 64 == 0) ? CMatrix(linalg::Expm(m, k * dt)) : CMatrix(step * w);
    }
    out.values(k) = linalg::Norm2(w);
  }
  return out;
}

Trajectory SimulateOde(const CMatrix &m, const CVector &u0, double t_end, int samples)
{
  Require(m.rows() > 0 && m.rows() == m.cols(), ErrKind::DIMENSION,
          "matrix must be square and nonempty");
  Require(u0.size() == m.rows(), ErrKind::DIMENSION, "u0 dimension mismatch");
  Require(t_end > 0.0 && std::isfinite(t_end), ErrKind::INVALID_ARGUMENT,
          "t_end must be positive and finite");
  Require(samples >= 2, ErrKind::INVALID_ARGUMENT, "need at least 2 samples");
  CheckFinite(m, "matrix");
  CheckFinite(u0, "initial value u0");

  Trajectory out;
  out.times.resize(samples);
  out.norms.resize(samples);
  out.states.resize(m.rows(), samples);
  double dt = t_end / (samples - 1);
  out.h = dt;

  CMatrix step = linalg::Expm(m, dt);
  CVector u = u0;
  for (int k = 0; k < samples; k++)
  {
    out.times[k] = k * dt;
    if (k > 0)
    {
      u = (k % 64 == 0) ? CVector(linalg::Expm(m, k * dt) * u0) : CVector(step * u);
    }
    out.states.col(k) = u;
    out.norms(k) = u.norm();
  }
  return out;
}

DiffeqTrajectory SimulateDiffeq(const std::vector<CMatrix> &coeffs,
                                const std::vector<CVector> &initial, int n_steps)
{
  Require(!coeffs.empty(), ErrKind::INVALID_ARGUMENT, "difference equation needs coefficients");
  Require(initial.size() == coeffs.size(), ErrKind::DIMENSION,
          "need as many initial states as coefficients (y_0 .. y_{-N})");
  Require(n_steps >= 0, ErrKind::INVALID_ARGUMENT, "n_steps must be nonnegative");
  Eigen::Index n = coeffs.front().rows();
  for (const auto &c : coeffs)
  {
    Require(c.rows() == n && c.cols() == n, ErrKind::DIMENSION,
            "difference equation coefficients must be square with equal dimensions");
    CheckFinite(c, "difference equation coefficient");
  }
  for (const auto &v : initial)
  {
    Require(v.size() == n, ErrKind::DIMENSION, "initial state dimension mismatch");
    CheckFinite(v, "initial state");
  }

  std::size_t np1 = coeffs.size();  // N + 1 taps
  DiffeqTrajectory out;
  out.norms.resize(n_steps + 1);
  out.states.resize(n, n_steps + 1);

  std::vector<CVector> window(initial.begin(), initial.end());  // window[j] = y_{k-j}
  out.states.col(0) = window[0];
  out.norms(0) = window[0].norm();
  for (int k = 1; k <= n_steps; k++)
  {
    CVector next = CVector::Zero(n);
    for (std::size_t j = 0; j < np1; j++)
    {
      next += coeffs[j] * window[j];
    }
    for (std::size_t j = np1 - 1; j > 0; j--)
    {
      window[j] = window[j - 1];
    }
    window[0] = next;
    out.states.col(k) = next;
    out.norms(k) = next.norm();
  }
  return out;
}

}  // namespace tgb::simulate
