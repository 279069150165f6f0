// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracle
{

double ScalarDdeExact(double t)
{
  // On [0,1] the delayed term is the constant history 1:
  //   u' = -u - 1/2, u(0) = 1  =>  u = 1.5 e^{-t} - 1/2.
  // On [1,2] the delayed term is the segment above:
  //   u' + u = -0.5 (1.5 e^{-(t-1)} - 1/2)  =>  u = 1.5 e^{-t} - 0.75 t e^{1-t} + 1/4.
  if (t < 0.0 || t > 2.0)
  {
    throw std::out_of_range("ScalarDdeExact covers [0, 2] only");
  }
  if (t <= 1.0)
  {
    return 1.5 * std::exp(-t) - 0.5;
  }
  return 1.5 * std::exp(-t) - 0.75 * t * std::exp(1.0 - t) + 0.25;
}

double ScalarDdeValueAtOne()
{
  return 1.5 / std::exp(1.0) - 0.5;
}

Cplx ScalarFundamental(Cplx a, Cplx b, double tau, double t)
{
  if (t < 0.0)
  {
    return 0.0;
  }
  int kmax = static_cast<int>(std::floor(t / tau + 1e-12));
  Cplx sum = 0.0;
  for (int k = 0; k <= kmax; k++)
  {
    double s = t - k * tau;
    // b^k s^k / k! computed incrementally to avoid overflow staging.
    Cplx term = 1.0;
    for (int j = 1; j <= k; j++)
    {
      term *= b * s / static_cast<double>(j);
    }
    sum += term * std::exp(a * s);
  }
  return sum;
}

Cplx ScalarCharRightmostRoot(double a, double b, double tau)
{
  auto f = [&](Cplx z) { return z - a - b * std::exp(-tau * z); };
  auto fp = [&](Cplx z) { return 1.0 + b * tau * std::exp(-tau * z); };

  std::vector<Cplx> roots;
  for (double re = -6.0; re <= 3.0; re += 0.5)
  {
    for (double im = 0.0; im <= 15.0; im += 0.5)
    {
      Cplx z(re, im);
      bool ok = false;
      for (int it = 0; it < 80; it++)
      {
        Cplx fz = f(z);
        if (std::abs(fz) < 1e-13)
        {
          ok = true;
          break;
        }
        Cplx d = fp(z);
        if (std::abs(d) < 1e-14)
        {
          break;
        }
        Cplx step = fz / d;
        if (std::abs(step) > 10.0)
        {
          break;
        }
        z -= step;
      }
      if (!ok)
      {
        continue;
      }
      bool dup = false;
      for (const Cplx &r : roots)
      {
        if (std::abs(r - z) < 1e-6)
        {
          dup = true;
          break;
        }
      }
      if (!dup)
      {
        roots.push_back(Cplx(z.real(), std::abs(z.imag())));
      }
    }
  }
  if (roots.empty())
  {
    throw std::runtime_error("no characteristic root converged");
  }
  Cplx best = roots.front();
  for (const Cplx &r : roots)
  {
    if (r.real() > best.real())
    {
      best = r;
    }
  }
  return best;
}

std::vector<std::vector<double>> Rk4(
    const std::function<void(double, const double *, double *)> &deriv,
    const std::vector<double> &y0, double t_end, int n_steps, int n_out)
{
  const std::size_t d = y0.size();
  std::vector<double> y = y0;
  std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
  const double h = t_end / n_steps;

  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(n_out) + 1);
  out.push_back(y);
  int next_keep = 1;
  for (int s = 0; s < n_steps; s++)
  {
    double t = s * h;
    deriv(t, y.data(), k1.data());
    for (std::size_t i = 0; i < d; i++)
    {
      tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    deriv(t + 0.5 * h, tmp.data(), k2.data());
    for (std::size_t i = 0; i < d; i++)
    {
      tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    deriv(t + 0.5 * h, tmp.data(), k3.data());
    for (std::size_t i = 0; i < d; i++)
    {
      tmp[i] = y[i] + h * k3[i];
    }
    deriv(t + h, tmp.data(), k4.data());
    for (std::size_t i = 0; i < d; i++)
    {
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    // Keep ~n_out+1 uniformly indexed samples, always including the last step.
    if ((s + 1) * static_cast<long>(n_out) >= static_cast<long>(next_keep) * n_steps)
    {
      out.push_back(y);
      next_keep++;
    }
  }
  return out;
}

CMatrix EigExpm(const CMatrix &m, double t)
{
  Eigen::ComplexEigenSolver<CMatrix> es(m);
  if (es.info() != Eigen::Success)
  {
    throw std::runtime_error("eigendecomposition failed");
  }
  CVector lam = es.eigenvalues();
  const CMatrix &v = es.eigenvectors();
  CVector el(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); i++)
  {
    el(i) = std::exp(t * lam(i));
  }
  CMatrix vinv = v.partialPivLu().solve(CMatrix::Identity(m.rows(), m.cols()));
  return v * el.asDiagonal() * vinv;
}

double SvdNorm2(const CMatrix &m)
{
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

double SvdSigmaMin(const CMatrix &m)
{
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

double Trapezoid(const std::function<double(double)> &f, double lo, double hi, int n)
{
  const double h = (hi - lo) / n;
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; i++)
  {
    acc += f(lo + i * h);
  }
  return acc * h;
}

}  // namespace oracle
