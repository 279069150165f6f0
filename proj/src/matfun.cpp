// SPDX-License-Identifier: Apache-2.0

#include "matfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tgb::matfun
{

namespace
{

constexpr double kSigmaClamp = 1e300;

void Validate(const Pencil &p)
{
  Require(p.m.rows() > 0 && p.m.rows() == p.m.cols(), ErrKind::DIMENSION,
          "pencil matrix must be square and nonempty");
  CheckFinite(p.m, "pencil matrix");
}

void Validate(const DelayChar &d)
{
  Require(d.a.rows() > 0 && d.a.rows() == d.a.cols(), ErrKind::DIMENSION,
          "delay matrix A must be square and nonempty");
  Require(d.b.rows() == d.a.rows() && d.b.cols() == d.a.cols(), ErrKind::DIMENSION,
          "delay matrices A and B must have equal dimensions");
  Require(d.tau > 0.0 && std::isfinite(d.tau), ErrKind::INVALID_ARGUMENT,
          "delay tau must be positive and finite");
  CheckFinite(d.a, "delay matrix A");
  CheckFinite(d.b, "delay matrix B");
}

void Validate(const MatrixPoly &p)
{
  Require(!p.coeffs.empty(), ErrKind::INVALID_ARGUMENT,
          "matrix polynomial needs at least one coefficient");
  Eigen::Index n = p.coeffs.front().rows();
  Require(n > 0, ErrKind::DIMENSION, "matrix polynomial coefficients must be nonempty");
  for (const auto &c : p.coeffs)
  {
    Require(c.rows() == n && c.cols() == n, ErrKind::DIMENSION,
            "matrix polynomial coefficients must be square with equal dimensions");
    CheckFinite(c, "matrix polynomial coefficient");
  }
}

void Validate(const TransferBlock &t)
{
  Require(t.m.rows() > 0 && t.m.rows() == t.m.cols(), ErrKind::DIMENSION,
          "transfer base matrix must be square and nonempty");
  Require(t.sub > 0 && t.m.rows() % t.sub == 0, ErrKind::DIMENSION,
          "transfer block size must divide the base matrix dimension");
  Eigen::Index blocks = t.m.rows() / t.sub;
  Require(t.row >= 0 && t.row < blocks && t.col >= 0 && t.col < blocks, ErrKind::DIMENSION,
          "transfer block indices out of range");
  CheckFinite(t.m, "transfer base matrix");
}

void Validate(const ScaledPower &s)
{
  Validate(s.poly);
  Require(s.scale > 0.0 && std::isfinite(s.scale), ErrKind::INVALID_ARGUMENT,
          "scaled-power scale must be positive and finite");
  Require(s.power >= 0, ErrKind::INVALID_ARGUMENT, "scaled-power exponent must be nonnegative");
}

CMatrix HornerEval(const MatrixPoly &p, Cplx z)
{
  CMatrix acc = p.coeffs.back();
  for (std::size_t k = p.coeffs.size() - 1; k-- > 0;)
  {
    acc = z * acc + p.coeffs[k];
  }
  return acc;
}

}  // namespace

Eigen::Index Dim(const MatFunction &t)
{
  return std::visit(
      [](const auto &f) -> Eigen::Index
      {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Pencil>)
        {
          return f.m.rows();
        }
        else if constexpr (std::is_same_v<F, DelayChar>)
        {
          return f.a.rows();
        }
        else if constexpr (std::is_same_v<F, MatrixPoly>)
        {
          return f.coeffs.front().rows();
        }
        else if constexpr (std::is_same_v<F, TransferBlock>)
        {
          return f.sub;
        }
        else
        {
          return f.poly.coeffs.front().rows();
        }
      },
      t);
}

CMatrix Eval(const MatFunction &t, Cplx z)
{
  return std::visit(
      [z](const auto &f) -> CMatrix
      {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Pencil>)
        {
          Validate(f);
          CMatrix r = -f.m;
          r.diagonal().array() += z;
          return r;
        }
        else if constexpr (std::is_same_v<F, DelayChar>)
        {
          Validate(f);
          CMatrix r = -f.a - std::exp(-f.tau * z) * f.b;
          r.diagonal().array() += z;
          return r;
        }
        else if constexpr (std::is_same_v<F, MatrixPoly>)
        {
          Validate(f);
          return HornerEval(f, z);
        }
        else
        {
          Fail(ErrKind::UNSUPPORTED,
               "this form only defines ||T(z)^{-1}||, not T(z) itself");
        }
      },
      t);
}

Evaluator::Evaluator(const MatFunction &t) : fn_(t), dim_(matfun::Dim(t))
{
  std::visit(
      [this](const auto &f)
      {
        using F = std::decay_t<decltype(f)>;
        Validate(f);
        if constexpr (std::is_same_v<F, Pencil>)
        {
          pencil_sigma_ = std::make_unique<linalg::ShiftedSigmaMin>(f.m);
        }
        else if constexpr (std::is_same_v<F, TransferBlock>)
        {
          CMatrix e = CMatrix::Zero(f.m.rows(), f.sub);
          e.block(f.col * f.sub, 0, f.sub, f.sub) = CMatrix::Identity(f.sub, f.sub);
          transfer_solver_ = std::make_unique<linalg::ShiftedSolver>(f.m, e);
        }
      },
      t);
}

double Evaluator::Sigma(Cplx z) const
{
  return std::visit(
      [this, z](const auto &f) -> double
      {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Pencil>)
        {
          return (*pencil_sigma_)(z);
        }
        else if constexpr (std::is_same_v<F, DelayChar>)
        {
          CMatrix r = -f.a - std::exp(-f.tau * z) * f.b;
          r.diagonal().array() += z;
          return linalg::SigmaMin(r);
        }
        else if constexpr (std::is_same_v<F, MatrixPoly>)
        {
          return linalg::SigmaMin(HornerEval(f, z));
        }
        else if constexpr (std::is_same_v<F, TransferBlock>)
        {
          CMatrix x;
          try
          {
            x = transfer_solver_->Apply(z);
          }
          catch (const Error &e)
          {
            if (e.kind() == ErrKind::SINGULAR)
            {
              return 0.0;  // z is a pole of the transfer function
            }
            throw;
          }
          double nrm = linalg::Norm2(CMatrix(x.block(f.row * f.sub, 0, f.sub, f.sub)));
          return (nrm > 0.0) ? std::min(1.0 / nrm, kSigmaClamp) : kSigmaClamp;
        }
        else
        {
          double base = linalg::SigmaMin(HornerEval(f.poly, z));
          double w = f.scale * std::pow(std::abs(z), f.power);
          return (w > 0.0) ? std::min(base / w, kSigmaClamp) : kSigmaClamp;
        }
      },
      fn_);
}

double Evaluator::ResolventNorm(Cplx z) const
{
  double s = Sigma(z);
  if (s == 0.0)
  {
    return std::numeric_limits<double>::infinity();
  }
  return 1.0 / s;
}

double ResolventNorm(const MatFunction &t, Cplx z)
{
  return Evaluator(t).ResolventNorm(z);
}

std::vector<Cplx> PolyEigenvalues(const MatrixPoly &p)
{
  Validate(p);
  std::size_t d = p.coeffs.size() - 1;
  Eigen::Index n = p.coeffs.front().rows();
  if (d == 0)
  {
    return {};
  }
  // Companion linearization with the leading coefficient folded into the
  // bottom block row; requires an invertible leading coefficient.
  CMatrix lead = p.coeffs.back();
  Require(linalg::SigmaMin(lead) > 0.0, ErrKind::UNSUPPORTED,
          "polynomial eigenvalues need an invertible leading coefficient");
  Eigen::Index big = static_cast<Eigen::Index>(d) * n;
  CMatrix c = CMatrix::Zero(big, big);
  for (std::size_t i = 0; i + 1 < d; i++)
  {
    c.block((i)*n, (i + 1) * n, n, n) = CMatrix::Identity(n, n);
  }
  for (std::size_t k = 0; k < d; k++)
  {
    c.block((static_cast<Eigen::Index>(d) - 1) * n, k * n, n, n) =
        -linalg::Solve(lead, p.coeffs[k]);
  }
  CVector w = linalg::Eigenvalues(c);
  return std::vector<Cplx>(w.data(), w.data() + w.size());
}

std::vector<Cplx> SeedPoints(const MatFunction &t)
{
  return std::visit(
      [](const auto &f) -> std::vector<Cplx>
      {
        using F = std::decay_t<decltype(f)>;
        Validate(f);
        if constexpr (std::is_same_v<F, Pencil>)
        {
          CVector w = linalg::Eigenvalues(f.m);
          return std::vector<Cplx>(w.data(), w.data() + w.size());
        }
        else if constexpr (std::is_same_v<F, DelayChar>)
        {
          // The characteristic roots form chains marching left; bracket the
          // rightmost region with the delay-free and fully-coupled spectra.
          CVector w1 = linalg::Eigenvalues(f.a);
          CVector w2 = linalg::Eigenvalues(f.a + f.b);
          std::vector<Cplx> seeds(w1.data(), w1.data() + w1.size());
          seeds.insert(seeds.end(), w2.data(), w2.data() + w2.size());
          return seeds;
        }
        else if constexpr (std::is_same_v<F, MatrixPoly>)
        {
          return PolyEigenvalues(f);
        }
        else if constexpr (std::is_same_v<F, TransferBlock>)
        {
          CVector w = linalg::Eigenvalues(f.m);
          return std::vector<Cplx>(w.data(), w.data() + w.size());
        }
        else
        {
          std::vector<Cplx> seeds = PolyEigenvalues(f.poly);
          if (f.power > 0)
          {
            seeds.push_back(Cplx(0.0, 0.0));
          }
          return seeds;
        }
      },
      t);
}

}  // namespace tgb::matfun
