// SPDX-License-Identifier: Apache-2.0

#include "lowerbounds.hpp"

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include <Eigen/LU>

namespace tgb::lowerbounds
{

namespace
{

bool IsRealForm(const matfun::MatFunction &t)
{
  return std::visit(
      [](const auto &f) -> bool
      {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, matfun::Pencil>)
        {
          return linalg::IsRealMatrix(f.m);
        }
        else if constexpr (std::is_same_v<T, matfun::DelayChar>)
        {
          return linalg::IsRealMatrix(f.a) && linalg::IsRealMatrix(f.b);
        }
        else if constexpr (std::is_same_v<T, matfun::MatrixPoly>)
        {
          for (const auto &c : f.coeffs)
          {
            if (!linalg::IsRealMatrix(c))
            {
              return false;
            }
          }
          return true;
        }
        else if constexpr (std::is_same_v<T, matfun::TransferBlock>)
        {
          return linalg::IsRealMatrix(f.m);
        }
        else
        {
          for (const auto &c : f.poly.coeffs)
          {
            if (!linalg::IsRealMatrix(c))
            {
              return false;
            }
          }
          return true;
        }
      },
      t);
}

// Resolvent-norm estimates that converge from below, so any truncation of the
// iteration still yields a valid lower bound. The large delay form gets a
// warm-started inverse iteration (one LU per point, smooth singular vectors
// along a y-sweep make a handful of steps enough); everything else uses the
// exact dense evaluator.
class LowerResolventEval
{
public:
  explicit LowerResolventEval(const matfun::MatFunction &t) : exact_(t)
  {
    const auto *dc = std::get_if<matfun::DelayChar>(&t);
    if (dc != nullptr && dc->a.rows() >= 16)
    {
      delay_ = dc;
      Eigen::Index n = dc->a.rows();
      id_ = CMatrix::Identity(n, n);
      v_ = CVector::Ones(n) / std::sqrt(static_cast<double>(n));
    }
  }

  double Norm(Cplx z)
  {
    if (delay_ == nullptr)
    {
      return exact_.ResolventNorm(z);
    }
    CMatrix t = z * id_ - delay_->a - std::exp(-delay_->tau * z) * delay_->b;
    Eigen::PartialPivLU<CMatrix> lu(t);
    double est = 0.0;
    for (int it = 0; it < 24; it++)
    {
      CVector w = lu.solve(v_);
      double nw = w.norm();
      if (!std::isfinite(nw) || nw == 0.0)
      {
        break;
      }
      CVector u = lu.adjoint().solve(CVector(w / nw));
      double nu = u.norm();
      if (!std::isfinite(nu) || nu == 0.0)
      {
        est = std::max(est, nw);
        break;
      }
      v_ = u / nu;
      double grown = std::sqrt(nw * nu);
      if (grown <= est * (1.0 + 1e-11) && it >= 3)
      {
        est = std::max(est, grown);
        break;
      }
      est = std::max(est, grown);
    }
    return est;
  }

private:
  matfun::Evaluator exact_;
  const matfun::DelayChar *delay_ = nullptr;
  CMatrix id_;
  CVector v_;
};

double GoldenMax(LowerResolventEval &eval, double x, double y_lo, double y_hi)
{
  const double invphi = 0.6180339887498949;
  double a = y_lo, b = y_hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = eval.Norm(Cplx(x, c));
  double fd = eval.Norm(Cplx(x, d));
  double best = std::max(fc, fd);
  for (int it = 0; it < 80 && (b - a) > 1e-13 * std::max(1.0, std::abs(y_hi)); it++)
  {
    if (fc >= fd)
    {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval.Norm(Cplx(x, c));
    }
    else
    {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval.Norm(Cplx(x, d));
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

double PracticalOnMesh(LowerResolventEval &eval, const matfun::MatFunction &t, double x,
                       double y_max, int n_mesh)
{
  bool real_data = IsRealForm(t);
  double lo = real_data ? 0.0 : -y_max;
  double hi = y_max;
  double best = 0.0;
  int arg = 0;
  for (int i = 0; i < n_mesh; i++)
  {
    double y = lo + (hi - lo) * static_cast<double>(i) / (n_mesh - 1);
    double v = eval.Norm(Cplx(x, y));
    if (v > best)
    {
      best = v;
      arg = i;
    }
  }
  double step = (hi - lo) / (n_mesh - 1);
  double ry_lo = lo + step * std::max(0, arg - 1);
  double ry_hi = lo + step * std::min(n_mesh - 1, arg + 1);
  if (ry_hi > ry_lo)
  {
    best = std::max(best, GoldenMax(eval, x, ry_lo, ry_hi));
  }
  return x * best;
}

}  // namespace

double LbGeneral(const matfun::MatFunction &t, double epsilon, double omega, double alpha_eps)
{
  Require(matfun::Dim(t) >= 1, ErrKind::DIMENSION, "empty matrix function");
  Require(epsilon > 0.0 && std::isfinite(epsilon), ErrKind::INVALID_ARGUMENT,
          "eps must be positive and finite");
  Require(std::isfinite(omega) && std::isfinite(alpha_eps), ErrKind::INVALID_ARGUMENT,
          "omega and alpha_eps must be finite");
  return std::max(0.0, (alpha_eps - omega) / epsilon);
}

double LbPractical(const matfun::MatFunction &t, double x, double y_max, int n_mesh)
{
  Require(x > 0.0 && std::isfinite(x), ErrKind::INVALID_ARGUMENT, "x must be positive");
  Require(y_max > 0.0 && std::isfinite(y_max), ErrKind::INVALID_ARGUMENT,
          "y_max must be positive");
  Require(n_mesh >= 2, ErrKind::INVALID_ARGUMENT, "need at least 2 mesh points");
  LowerResolventEval eval(t);
  return PracticalOnMesh(eval, t, x, y_max, n_mesh);
}

double LbTruncationHeight(const matfun::MatFunction &t, double x)
{
  Require(x > 0.0 && std::isfinite(x), ErrKind::INVALID_ARGUMENT, "x must be positive");
  if (const auto *dc = std::get_if<matfun::DelayChar>(&t))
  {
    CMatrix tx = matfun::Eval(t, Cplx(x, 0.0));
    double smin = linalg::SigmaMin(tx);
    double bterm = linalg::Norm2(dc->b) * std::exp(-dc->tau * x);
    double scale = std::max(1.0, dc->a.norm());
    bool hermitian = (dc->a - dc->a.adjoint()).norm() <= 1e-12 * scale;
    if (hermitian)
    {
      return std::abs(x) + bterm + smin;
    }
    CMatrix shifted = Cplx(x, 0.0) * CMatrix::Identity(dc->a.rows(), dc->a.cols()) - dc->a;
    return linalg::Norm2(shifted) + bterm + smin;
  }
  if (const auto *pc = std::get_if<matfun::Pencil>(&t))
  {
    CMatrix shifted = Cplx(x, 0.0) * CMatrix::Identity(pc->m.rows(), pc->m.cols()) - pc->m;
    return std::abs(x) + linalg::Norm2(pc->m) + linalg::SigmaMin(shifted);
  }
  Fail(ErrKind::UNSUPPORTED,
       "truncation heights are implemented for the delay characteristic function and the "
       "pencil only");
}

ScanResult LbScan(const matfun::MatFunction &t, double x_lo, double x_hi, int n_x)
{
  Require(0.0 < x_lo && x_lo < x_hi && std::isfinite(x_hi), ErrKind::INVALID_ARGUMENT,
          "need 0 < x_lo < x_hi");
  Require(n_x >= 2, ErrKind::INVALID_ARGUMENT, "need at least 2 x samples");

  LowerResolventEval eval(t);
  std::vector<double> xs(static_cast<std::size_t>(n_x));
  std::vector<double> heights(static_cast<std::size_t>(n_x));
  for (int i = 0; i < n_x; i++)
  {
    xs[static_cast<std::size_t>(i)] =
        x_lo + (x_hi - x_lo) * static_cast<double>(i) / (n_x - 1);
    heights[static_cast<std::size_t>(i)] = LbTruncationHeight(t, xs[static_cast<std::size_t>(i)]);
  }

  ScanResult out;
  out.xs = xs;
  out.values.assign(static_cast<std::size_t>(n_x), 0.0);
  bool big = matfun::Dim(t) >= 16;
  if (!big)
  {
    for (int i = 0; i < n_x; i++)
    {
      double v = PracticalOnMesh(eval, t, xs[static_cast<std::size_t>(i)],
                                 heights[static_cast<std::size_t>(i)], 2048);
      out.values[static_cast<std::size_t>(i)] = v;
      if (v > out.value)
      {
        out.value = v;
        out.x = xs[static_cast<std::size_t>(i)];
      }
    }
    return out;
  }

  // Large problems: coarse pass over every x, full mesh only on the leaders.
  // Coarse values are themselves valid lower bounds, so pruning can only make
  // the final answer (a maximum) smaller, never invalid.
  std::vector<double> coarse(static_cast<std::size_t>(n_x));
  double coarse_best = 0.0;
  for (int i = 0; i < n_x; i++)
  {
    coarse[static_cast<std::size_t>(i)] = PracticalOnMesh(
        eval, t, xs[static_cast<std::size_t>(i)], heights[static_cast<std::size_t>(i)], 129);
    out.values[static_cast<std::size_t>(i)] = coarse[static_cast<std::size_t>(i)];
    if (coarse[static_cast<std::size_t>(i)] > coarse_best)
    {
      coarse_best = coarse[static_cast<std::size_t>(i)];
      out.value = coarse[static_cast<std::size_t>(i)];
      out.x = xs[static_cast<std::size_t>(i)];
    }
  }
  std::vector<int> order(static_cast<std::size_t>(n_x));
  for (int i = 0; i < n_x; i++)
  {
    order[static_cast<std::size_t>(i)] = i;
  }
  std::sort(order.begin(), order.end(),
            [&](int a, int b)
            { return coarse[static_cast<std::size_t>(a)] > coarse[static_cast<std::size_t>(b)]; });
  int full = 0;
  for (int rank = 0; rank < n_x && full < 8; rank++)
  {
    int i = order[static_cast<std::size_t>(rank)];
    if (coarse[static_cast<std::size_t>(i)] < 0.7 * coarse_best && full > 0)
    {
      break;
    }
    double v = PracticalOnMesh(eval, t, xs[static_cast<std::size_t>(i)],
                               heights[static_cast<std::size_t>(i)], 2048);
    full++;
    out.values[static_cast<std::size_t>(i)] = std::max(out.values[static_cast<std::size_t>(i)], v);
    if (v > out.value)
    {
      out.value = v;
      out.x = xs[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

}  // namespace tgb::lowerbounds
