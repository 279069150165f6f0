// SPDX-License-Identifier: Apache-2.0

#include "pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <unordered_map>

namespace tgb::pseudo
{

double Window::Diag() const
{
  return std::hypot(Width(), Height());
}

bool Window::Contains(Cplx z) const
{
  return z.real() >= x_lo && z.real() <= x_hi && z.imag() >= y_lo && z.imag() <= y_hi;
}

double Polyline::Length() const
{
  double len = 0.0;
  for (std::size_t k = 1; k < pts.size(); k++)
  {
    len += std::abs(pts[k] - pts[k - 1]);
  }
  if (closed && pts.size() > 2)
  {
    len += std::abs(pts.front() - pts.back());
  }
  return len;
}

namespace
{

bool HasRealData(const matfun::MatFunction &t)
{
  return std::visit(
      [](const auto &f) -> bool
      {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, matfun::Pencil>)
        {
          return linalg::IsRealMatrix(f.m);
        }
        else if constexpr (std::is_same_v<F, matfun::DelayChar>)
        {
          return linalg::IsRealMatrix(f.a) && linalg::IsRealMatrix(f.b);
        }
        else if constexpr (std::is_same_v<F, matfun::MatrixPoly>)
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
        else if constexpr (std::is_same_v<F, matfun::TransferBlock>)
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

std::vector<double> Linspace(double lo, double hi, int n)
{
  std::vector<double> v(n);
  if (n == 1)
  {
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; i++)
  {
    v[i] = lo + step * i;
  }
  v[n - 1] = hi;
  return v;
}

}  // namespace

PseudoField ComputeField(const matfun::MatFunction &t, const Window &win, int nx, int ny)
{
  Require(nx >= 2 && ny >= 2, ErrKind::INVALID_ARGUMENT, "field grid needs at least 2x2 points");
  Require(win.x_hi > win.x_lo && win.y_hi > win.y_lo, ErrKind::INVALID_ARGUMENT,
          "field window must have positive extent");

  PseudoField f;
  f.win = win;
  f.xs = Linspace(win.x_lo, win.x_hi, nx);
  f.ys = Linspace(win.y_lo, win.y_hi, ny);
  f.sigma.resize(nx, ny);

  matfun::Evaluator ev(t);

  // For real problem data sigma(conj z) = sigma(z); when the window is
  // symmetric about the real axis only the upper half needs evaluation.
  bool mirror = HasRealData(t) &&
                std::abs(win.y_lo + win.y_hi) <= 1e-12 * (std::abs(win.y_lo) + std::abs(win.y_hi));
  for (int j = 0; j < ny; j++)
  {
    int jm = ny - 1 - j;
    if (mirror && jm < j)
    {
      f.sigma.col(j) = f.sigma.col(jm);
      continue;
    }
    for (int i = 0; i < nx; i++)
    {
      f.sigma(i, j) = ev.Sigma(Cplx(f.xs[i], f.ys[j]));
    }
  }
  return f;
}

double HullPerimeter(const std::vector<Cplx> &pts)
{
  if (pts.size() < 3)
  {
    return 0.0;
  }
  std::vector<Cplx> p = pts;
  std::sort(p.begin(), p.end(),
            [](Cplx a, Cplx b)
            { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3)
  {
    return 0.0;
  }
  auto cross = [](Cplx o, Cplx a, Cplx b)
  {
    return (a.real() - o.real()) * (b.imag() - o.imag()) -
           (a.imag() - o.imag()) * (b.real() - o.real());
  };
  // Andrew monotone chain.
  std::size_t n = p.size();
  std::vector<Cplx> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; i++)
  {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0.0)
    {
      k--;
    }
    hull[k++] = p[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i-- > 0;)
  {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p[i]) <= 0.0)
    {
      k--;
    }
    hull[k++] = p[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3)
  {
    return 0.0;
  }
  double per = 0.0;
  for (std::size_t i = 0; i < hull.size(); i++)
  {
    per += std::abs(hull[(i + 1) % hull.size()] - hull[i]);
  }
  return per;
}

namespace
{

// Grid edges are numbered so each crossing point has a unique id shared by
// the two cells adjacent to the edge; segments then chain by edge id.
long EdgeId(int i, int j, bool vertical, int nx)
{
  return 2L * (static_cast<long>(j) * nx + i) + (vertical ? 1 : 0);
}

struct Segment
{
  long e0, e1;
};

}  // namespace

LevelSet ExtractBoundary(const PseudoField &field, double eps)
{
  Require(eps > 0.0 && std::isfinite(eps), ErrKind::INVALID_ARGUMENT, "eps must be positive");
  int nx = static_cast<int>(field.xs.size());
  int ny = static_cast<int>(field.ys.size());
  Require(nx >= 2 && ny >= 2, ErrKind::INVALID_ARGUMENT, "field grid needs at least 2x2 points");

  LevelSet out;
  out.eps = eps;

  auto inside = [&](int i, int j) { return field.sigma(i, j) < eps; };

  // Window border contact: any border node inside the set means the window
  // clipped the level set even if no open curve is produced.
  for (int i = 0; i < nx; i++)
  {
    if (inside(i, 0) || inside(i, ny - 1))
    {
      out.touches_boundary = true;
    }
  }
  for (int j = 0; j < ny; j++)
  {
    if (inside(0, j) || inside(nx - 1, j))
    {
      out.touches_boundary = true;
    }
  }

  std::unordered_map<long, Cplx> pt;  // edge id -> interpolated crossing
  auto crossing = [&](int i0, int j0, int i1, int j1, long id)
  {
    if (!pt.count(id))
    {
      double v0 = field.sigma(i0, j0), v1 = field.sigma(i1, j1);
      double t = (std::abs(v1 - v0) > 0.0) ? (eps - v0) / (v1 - v0) : 0.5;
      t = std::clamp(t, 0.0, 1.0);
      double x = field.xs[i0] + t * (field.xs[i1] - field.xs[i0]);
      double y = field.ys[j0] + t * (field.ys[j1] - field.ys[j0]);
      pt.emplace(id, Cplx(x, y));
    }
    return id;
  };

  std::vector<Segment> segs;
  for (int j = 0; j + 1 < ny; j++)
  {
    for (int i = 0; i + 1 < nx; i++)
    {
      int code = (inside(i, j) ? 1 : 0) | (inside(i + 1, j) ? 2 : 0) |
                 (inside(i + 1, j + 1) ? 4 : 0) | (inside(i, j + 1) ? 8 : 0);
      if (code == 0 || code == 15)
      {
        continue;
      }
      auto bottom = [&] { return crossing(i, j, i + 1, j, EdgeId(i, j, false, nx)); };
      auto top = [&] { return crossing(i, j + 1, i + 1, j + 1, EdgeId(i, j + 1, false, nx)); };
      auto left = [&] { return crossing(i, j, i, j + 1, EdgeId(i, j, true, nx)); };
      auto right = [&] { return crossing(i + 1, j, i + 1, j + 1, EdgeId(i + 1, j, true, nx)); };
      auto add = [&](long a, long b) { segs.push_back({a, b}); };

      switch (code)
      {
        case 1:
        case 14:
          add(left(), bottom());
          break;
        case 2:
        case 13:
          add(bottom(), right());
          break;
        case 3:
        case 12:
          add(left(), right());
          break;
        case 4:
        case 11:
          add(right(), top());
          break;
        case 6:
        case 9:
          add(bottom(), top());
          break;
        case 7:
        case 8:
          add(left(), top());
          break;
        case 5:
        {
          // Saddle (inside at BL and TR): the cell-center average decides
          // whether the two inside regions join across this cell.
          double c = 0.25 * (field.sigma(i, j) + field.sigma(i + 1, j) +
                             field.sigma(i + 1, j + 1) + field.sigma(i, j + 1));
          if (c < eps)
          {
            add(bottom(), right());
            add(left(), top());
          }
          else
          {
            add(left(), bottom());
            add(right(), top());
          }
          break;
        }
        case 10:
        {
          double c = 0.25 * (field.sigma(i, j) + field.sigma(i + 1, j) +
                             field.sigma(i + 1, j + 1) + field.sigma(i, j + 1));
          if (c < eps)
          {
            add(left(), bottom());
            add(right(), top());
          }
          else
          {
            add(bottom(), right());
            add(left(), top());
          }
          break;
        }
        default:
          break;
      }
    }
  }

  // Chain segments into curves: every edge id touches at most two segments,
  // so the adjacency structure is a disjoint union of paths and cycles.
  std::unordered_map<long, std::vector<std::size_t>> at_edge;
  for (std::size_t s = 0; s < segs.size(); s++)
  {
    at_edge[segs[s].e0].push_back(s);
    at_edge[segs[s].e1].push_back(s);
  }
  std::vector<bool> used(segs.size(), false);

  auto walk = [&](std::size_t s0, long start_edge)
  {
    std::vector<long> chain{start_edge};
    std::size_t s = s0;
    long cur = start_edge;
    while (true)
    {
      used[s] = true;
      long nxt = (segs[s].e0 == cur) ? segs[s].e1 : segs[s].e0;
      chain.push_back(nxt);
      cur = nxt;
      const auto &inc = at_edge[cur];
      std::size_t cont = SIZE_MAX;
      for (std::size_t cand : inc)
      {
        if (!used[cand])
        {
          cont = cand;
          break;
        }
      }
      if (cont == SIZE_MAX)
      {
        break;
      }
      s = cont;
    }
    return chain;
  };

  // Open paths first (started from edges of degree 1), then remaining cycles.
  for (int pass = 0; pass < 2; pass++)
  {
    for (std::size_t s = 0; s < segs.size(); s++)
    {
      if (used[s])
      {
        continue;
      }
      long start = segs[s].e0;
      if (pass == 0)
      {
        long a = segs[s].e0, b = segs[s].e1;
        bool a_open = at_edge[a].size() == 1, b_open = at_edge[b].size() == 1;
        if (!a_open && !b_open)
        {
          continue;
        }
        start = a_open ? a : b;
      }
      std::vector<long> chain = walk(s, start);
      Polyline line;
      line.closed = chain.size() > 2 && chain.front() == chain.back();
      if (line.closed)
      {
        chain.pop_back();
      }
      else
      {
        out.touches_boundary = true;
      }
      line.pts.reserve(chain.size());
      for (long e : chain)
      {
        line.pts.push_back(pt.at(e));
      }
      out.curves.push_back(std::move(line));
    }
  }

  std::vector<Cplx> all_pts;
  for (const auto &c : out.curves)
  {
    out.arc_length += c.Length();
    all_pts.insert(all_pts.end(), c.pts.begin(), c.pts.end());
  }
  out.hull_perimeter = HullPerimeter(all_pts);
  return out;
}

namespace
{

CMatrix DdeCollocationGenerator(const CMatrix &a, const CMatrix &b, double tau, int n_cheb);

// Window seeds for a delay characteristic function: collocation eigenvalues
// whose resolvent residual puts them inside the level set of interest.  The
// instantaneous/fully-coupled spectra used for other forms can sit far from
// the root chains (which carry imaginary offsets of order pi/tau), so they
// make poor window anchors here.
std::vector<Cplx> DelayWindowSeeds(const matfun::DelayChar &f, double eps_max)
{
  const Eigen::Index n = f.a.rows();
  const int nodes = (n * 33 <= 2400) ? 16 : 12;
  CVector eigs = linalg::Eigenvalues(DdeCollocationGenerator(f.a, f.b, f.tau, nodes));
  std::vector<Cplx> cand(eigs.data(), eigs.data() + eigs.size());
  std::sort(cand.begin(), cand.end(),
            [](Cplx l, Cplx r) { return l.real() > r.real(); });
  // Far-left eigenvalues are discretization artifacts; only the rightmost
  // portion of the collocation spectrum approximates characteristic roots.
  std::size_t keep = std::min(cand.size(), static_cast<std::size_t>(4 * n + 16));
  cand.resize(keep);

  matfun::MatFunction fn = f;  // Evaluator keeps a reference; give it a live object
  matfun::Evaluator ev(fn);
  std::vector<Cplx> inside;
  Cplx best = cand.front();
  double best_resid = std::numeric_limits<double>::infinity();
  for (Cplx z : cand)
  {
    double resid = ev.Sigma(z);
    if (resid < best_resid)
    {
      best_resid = resid;
      best = z;
    }
    if (resid <= eps_max)
    {
      inside.push_back(z);
    }
  }
  if (inside.empty())
  {
    // Nothing sits inside the requested level; anchor on the most rootlike
    // candidate so the window at least brackets the rightmost chain.
    return {best};
  }
  // Root chains march far into the left half-plane; windowing all of them
  // would leave the rightmost components (the ones that drive transient
  // growth) unresolvable on any fixed grid.  Keep the cluster that extends
  // the rightmost root.
  double re_best = inside.front().real();
  for (Cplx z : inside)
  {
    re_best = std::max(re_best, z.real());
  }
  double gap_limit = std::max(4.0 * eps_max, 0.25 * (1.0 + std::abs(re_best)));
  std::vector<Cplx> seeds;
  for (Cplx z : inside)
  {
    if (z.real() >= re_best - gap_limit)
    {
      seeds.push_back(z);
    }
  }
  return seeds;
}

}  // namespace

Window AutoWindow(const matfun::MatFunction &t, double eps_max)
{
  std::vector<Cplx> seeds;
  if (const auto *dc = std::get_if<matfun::DelayChar>(&t))
  {
    seeds = DelayWindowSeeds(*dc, eps_max);
  }
  else
  {
    seeds = matfun::SeedPoints(t);
  }
  Require(!seeds.empty(), ErrKind::INVALID_ARGUMENT,
          "cannot size a window automatically without seed points");
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (Cplx s : seeds)
  {
    x_lo = std::min(x_lo, s.real());
    x_hi = std::max(x_hi, s.real());
    y_lo = std::min(y_lo, s.imag());
    y_hi = std::max(y_hi, s.imag());
  }
  double diag = std::hypot(x_hi - x_lo, y_hi - y_lo);
  double pad = std::max({2.0 * eps_max, 0.1 * diag, 1e-2});
  Window w{x_lo - pad, x_hi + pad, y_lo - pad, y_hi + pad};
  // Keep conjugate symmetry when the seed set is (numerically) symmetric, so
  // the half-plane mirror optimization applies.
  if (std::abs(w.y_lo + w.y_hi) <= 1e-9 * (std::abs(w.y_lo) + std::abs(w.y_hi)))
  {
    double y = std::max(std::abs(w.y_lo), std::abs(w.y_hi));
    w.y_lo = -y;
    w.y_hi = y;
  }
  return w;
}

namespace
{

Window ExpandAbout(const Window &w, double factor)
{
  double cx = 0.5 * (w.x_lo + w.x_hi), cy = 0.5 * (w.y_lo + w.y_hi);
  double hx = 0.5 * w.Width() * factor, hy = 0.5 * w.Height() * factor;
  return Window{cx - hx, cx + hx, cy - hy, cy + hy};
}

// Bisection for sigma(path(s)) = eps with the level set on the low-s side.
// `s_in` must satisfy sigma < eps; the bracket grows in +s until sigma >= eps.
template <typename PathF>
double RefineCrossing(const matfun::Evaluator &ev, PathF &&path, double eps, double s_in,
                      double step, double tol)
{
  double lo = s_in;
  double hi = s_in + step;
  int grow = 0;
  while (ev.Sigma(path(hi)) < eps && grow++ < 60)
  {
    lo = hi;
    hi += step;
  }
  if (grow > 60)
  {
    return hi;
  }
  for (int it = 0; it < 200 && (hi - lo) > tol; it++)
  {
    double mid = 0.5 * (lo + hi);
    if (ev.Sigma(path(mid)) < eps)
    {
      lo = mid;
    }
    else
    {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool ScalarPencilSummary(const matfun::MatFunction &t, double eps, LevelSummary &out)
{
  const auto *p = std::get_if<matfun::Pencil>(&t);
  if (!p || p->m.rows() != 1)
  {
    return false;
  }
  // For T(z) = z - m the eps level set is exactly the circle |z - m| = eps.
  Cplx m = p->m(0, 0);
  out.eps = eps;
  out.alpha = m.real() + eps;
  out.rho = std::abs(m) + eps;
  out.arc_length = 2.0 * M_PI * eps;
  out.arc_length_coarse = out.arc_length;
  out.hull_perimeter = out.arc_length;
  out.certified = true;
  out.exact = true;
  Polyline circle;
  circle.closed = true;
  for (int k = 0; k < 256; k++)
  {
    double th = 2.0 * M_PI * k / 256;
    circle.pts.push_back(m + eps * Cplx(std::cos(th), std::sin(th)));
  }
  out.curves.push_back(std::move(circle));
  out.window = Window{m.real() - 2 * eps, m.real() + 2 * eps, m.imag() - 2 * eps,
                      m.imag() + 2 * eps};
  out.nx = out.ny = 0;
  return true;
}

struct GridPass
{
  LevelSet level;
  double alpha_grid = -std::numeric_limits<double>::infinity();
  double rho_grid = 0.0;
  Cplx arg_alpha{0.0, 0.0};
  Cplx arg_rho{0.0, 0.0};
  double sigma_min_grid = std::numeric_limits<double>::infinity();
  std::vector<Cplx> low_pts;  // grid points within 2x of the grid minimum
};

GridPass RunGrid(const matfun::MatFunction &t, double eps, const Window &w, int nx, int ny)
{
  GridPass g;
  PseudoField f = ComputeField(t, w, nx, ny);
  g.level = ExtractBoundary(f, eps);
  g.sigma_min_grid = f.MinSigma();
  // Track where the field comes closest to the level, so a miss can zoom
  // toward the basins instead of giving up.
  double low_cut = 2.0 * g.sigma_min_grid;
  for (std::size_t i = 0; i < f.xs.size(); i++)
  {
    for (std::size_t j = 0; j < f.ys.size(); j++)
    {
      if (f.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= low_cut)
      {
        g.low_pts.emplace_back(f.xs[i], f.ys[j]);
      }
    }
  }
  for (const auto &c : g.level.curves)
  {
    for (Cplx z : c.pts)
    {
      if (z.real() > g.alpha_grid)
      {
        g.alpha_grid = z.real();
        g.arg_alpha = z;
      }
      if (std::abs(z) > g.rho_grid)
      {
        g.rho_grid = std::abs(z);
        g.arg_rho = z;
      }
    }
  }
  return g;
}

// Bounding boxes of the low-point clusters, split along gaps wider than a few
// grid cells (first in y, then in x within each band).  Disconnected level-set
// components, e.g. a conjugate pair, land in separate boxes that can each be
// resolved at full grid resolution.
std::vector<Window> SplitLowClusters(std::vector<Cplx> pts, double dx, double dy)
{
  std::vector<Window> out;
  if (pts.empty())
  {
    return out;
  }
  std::sort(pts.begin(), pts.end(), [](Cplx l, Cplx r) { return l.imag() < r.imag(); });
  std::vector<std::vector<Cplx>> bands(1);
  for (std::size_t i = 0; i < pts.size(); i++)
  {
    if (i > 0 && pts[i].imag() - pts[i - 1].imag() > 4.0 * dy)
    {
      bands.emplace_back();
    }
    bands.back().push_back(pts[i]);
  }
  for (auto &band : bands)
  {
    std::sort(band.begin(), band.end(), [](Cplx l, Cplx r) { return l.real() < r.real(); });
    Window box{band.front().real(), band.front().real(), band.front().imag(),
               band.front().imag()};
    auto flush = [&out](const Window &b) { out.push_back(b); };
    for (std::size_t i = 0; i < band.size(); i++)
    {
      if (i > 0 && band[i].real() - band[i - 1].real() > 4.0 * dx)
      {
        flush(box);
        box = Window{band[i].real(), band[i].real(), band[i].imag(), band[i].imag()};
        continue;
      }
      box.x_lo = std::min(box.x_lo, band[i].real());
      box.x_hi = std::max(box.x_hi, band[i].real());
      box.y_lo = std::min(box.y_lo, band[i].imag());
      box.y_hi = std::max(box.y_hi, band[i].imag());
    }
    flush(box);
  }
  return out;
}

LevelSummary AnalyzeLevelImpl(const matfun::MatFunction &t, double eps,
                              const LevelOptions &opts, int depth)
{
  Require(eps > 0.0 && std::isfinite(eps), ErrKind::INVALID_ARGUMENT, "eps must be positive");
  LevelSummary out;
  if (opts.exact_scalar && ScalarPencilSummary(t, eps, out))
  {
    return out;
  }

  Window w = opts.window ? *opts.window : AutoWindow(t, eps);

  GridPass base;
  int expansions = 0;
  int zooms = 0;
  const int kMaxZooms = 8;
  while (true)
  {
    base = RunGrid(t, eps, w, opts.nx, opts.ny);
    if (base.level.curves.empty() && !base.level.touches_boundary &&
        base.sigma_min_grid > eps && zooms < kMaxZooms && !base.low_pts.empty())
    {
      // No cell dips below the level: components finer than the grid would be
      // lost.  Zoom toward the near-minimal basins and try again.
      double dx = w.Width() / std::max(1, opts.nx - 1);
      double dy = w.Height() / std::max(1, opts.ny - 1);
      std::vector<Window> boxes = SplitLowClusters(base.low_pts, dx, dy);
      if (boxes.size() >= 2 && depth < 2)
      {
        // Disconnected basins: resolve each at full grid resolution and merge.
        LevelSummary merged;
        merged.eps = eps;
        merged.window = w;
        merged.nx = opts.nx;
        merged.ny = opts.ny;
        merged.alpha = -std::numeric_limits<double>::infinity();
        merged.certified = true;
        bool any = false;
        std::vector<Cplx> all_pts;
        for (const Window &b : boxes)
        {
          LevelOptions sub = opts;
          sub.window =
              Window{b.x_lo - 3.0 * dx, b.x_hi + 3.0 * dx, b.y_lo - 3.0 * dy, b.y_hi + 3.0 * dy};
          try
          {
            LevelSummary s = AnalyzeLevelImpl(t, eps, sub, depth + 1);
            merged.alpha = std::max(merged.alpha, s.alpha);
            merged.rho = std::max(merged.rho, s.rho);
            merged.arc_length += s.arc_length;
            merged.arc_length_coarse += s.arc_length_coarse;
            merged.touched = merged.touched || s.touched;
            merged.certified = merged.certified && s.certified;
            merged.nx = std::max(merged.nx, s.nx);
            merged.ny = std::max(merged.ny, s.ny);
            for (const auto &c : s.curves)
            {
              all_pts.insert(all_pts.end(), c.pts.begin(), c.pts.end());
              merged.curves.push_back(c);
            }
            any = true;
          }
          catch (const Error &e)
          {
            if (e.kind() != ErrKind::NOT_FOUND)
            {
              throw;
            }
            // A basin can hover above the level without crossing it; skip it.
          }
        }
        Require(any, ErrKind::NOT_FOUND,
                "level set not found in the search window (grid too coarse or eps too small)");
        merged.hull_perimeter = HullPerimeter(all_pts);
        return merged;
      }
      Window bb = boxes.front();
      for (const Window &b : boxes)
      {
        bb.x_lo = std::min(bb.x_lo, b.x_lo);
        bb.x_hi = std::max(bb.x_hi, b.x_hi);
        bb.y_lo = std::min(bb.y_lo, b.y_lo);
        bb.y_hi = std::max(bb.y_hi, b.y_hi);
      }
      Window zw{bb.x_lo - 2.0 * dx, bb.x_hi + 2.0 * dx, bb.y_lo - 2.0 * dy, bb.y_hi + 2.0 * dy};
      if (zw.Width() > 0.5 * w.Width() && zw.Height() > 0.5 * w.Height())
      {
        // The basin fills the window; finer grids will not change the verdict.
        break;
      }
      w = zw;
      zooms++;
      continue;
    }
    if (!base.level.touches_boundary || expansions >= opts.max_expansions)
    {
      break;
    }
    w = ExpandAbout(w, 2.0);
    expansions++;
  }
  if (!base.level.curves.empty() && !base.level.touches_boundary)
  {
    // A curve much smaller than its window sits on only a handful of cells;
    // refit the window around it so refinement and certification act on a
    // well-resolved picture.  Also recovers from zooms that land off-center.
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto &c : base.level.curves)
    {
      for (Cplx z : c.pts)
      {
        x_lo = std::min(x_lo, z.real());
        x_hi = std::max(x_hi, z.real());
        y_lo = std::min(y_lo, z.imag());
        y_hi = std::max(y_hi, z.imag());
      }
    }
    bool small = (x_hi - x_lo) < 0.4 * w.Width() || (y_hi - y_lo) < 0.4 * w.Height();
    if (small || zooms > 0)
    {
      double px = std::max(0.25 * (x_hi - x_lo), 4.0 * w.Width() / std::max(1, opts.nx - 1));
      double py = std::max(0.25 * (y_hi - y_lo), 4.0 * w.Height() / std::max(1, opts.ny - 1));
      Window fit{x_lo - px, x_hi + px, y_lo - py, y_hi + py};
      GridPass refit = RunGrid(t, eps, fit, opts.nx, opts.ny);
      if (!refit.level.curves.empty())
      {
        base = std::move(refit);
        w = fit;
      }
    }
  }
  Require(!base.level.curves.empty() || !base.level.touches_boundary, ErrKind::WINDOW,
          "level set extends past the search window with no extractable curve");
  Require(!base.level.curves.empty(), ErrKind::NOT_FOUND,
          "level set not found in the search window (grid too coarse or eps too small)");

  out.eps = eps;
  out.window = w;
  out.nx = opts.nx;
  out.ny = opts.ny;
  out.curves = base.level.curves;
  out.arc_length = base.level.arc_length;
  out.arc_length_coarse = base.level.arc_length;
  out.hull_perimeter = base.level.hull_perimeter;
  out.touched = base.level.touches_boundary;

  // Polish the extremal vertices with 1-D bisection on sigma along fixed-y /
  // fixed-angle rays; the grid supplies the bracket seed.
  matfun::Evaluator ev(t);
  double dx = (w.Width()) / (opts.nx - 1);
  double alpha = base.alpha_grid;
  {
    double y = base.arg_alpha.imag();
    double x0 = base.arg_alpha.real();
    // Ensure the seed is inside the level set before bisecting outward.
    int back = 0;
    while (ev.Sigma(Cplx(x0, y)) >= eps && back++ < 4)
    {
      x0 -= 0.25 * dx;
    }
    if (back <= 4)
    {
      alpha = std::max(alpha,
                       RefineCrossing(
                           ev, [y](double x) { return Cplx(x, y); }, eps, x0, dx,
                           opts.refine_tol));
    }
  }
  double rho = base.rho_grid;
  if (std::abs(base.arg_rho) > 0.0)
  {
    Cplx dir = base.arg_rho / std::abs(base.arg_rho);
    double r0 = std::abs(base.arg_rho);
    int back = 0;
    while (ev.Sigma(dir * r0) >= eps && back++ < 4)
    {
      r0 -= 0.25 * dx;
    }
    if (back <= 4 && r0 > 0.0)
    {
      rho = std::max(rho, RefineCrossing(
                              ev, [dir](double r) { return dir * r; }, eps, r0, dx,
                              opts.refine_tol));
    }
  }
  out.alpha = alpha;
  out.rho = rho;

  if (opts.certify)
  {
    GridPass fine = RunGrid(t, eps, w, 2 * opts.nx - 1, 2 * opts.ny - 1);
    bool stable = !fine.level.touches_boundary && !base.level.touches_boundary &&
                  fine.level.arc_length > 0.0 &&
                  std::abs(fine.level.arc_length - base.level.arc_length) <=
                      0.01 * fine.level.arc_length;
    out.certified = stable;
    // The doubled grid is the better estimate; report it.
    out.curves = fine.level.curves;
    out.arc_length = fine.level.arc_length;
    out.hull_perimeter = fine.level.hull_perimeter;
    out.touched = out.touched || fine.level.touches_boundary;
    out.nx = 2 * opts.nx - 1;
    out.ny = 2 * opts.ny - 1;
    out.alpha = std::max(out.alpha, fine.alpha_grid);
    out.rho = std::max(out.rho, fine.rho_grid);
  }
  else
  {
    out.certified = false;
  }
  if (std::getenv("TGB_DEBUG_LEVEL") != nullptr)
  {
    std::fprintf(stderr,
                 "[lvl] depth=%d eps=%g zooms=%d win=[%g,%g]x[%g,%g] curves=%zu L=%g cert=%d "
                 "touched=%d\n",
                 depth, eps, zooms, w.x_lo, w.x_hi, w.y_lo, w.y_hi, out.curves.size(),
                 out.arc_length, (int)out.certified, (int)out.touched);
  }
  return out;
}

}  // namespace

LevelSummary AnalyzeLevel(const matfun::MatFunction &t, double eps, const LevelOptions &opts)
{
  return AnalyzeLevelImpl(t, eps, opts, 0);
}

LevelSummary PseudoAbscissa(const matfun::MatFunction &t, double eps, const LevelOptions &opts)
{
  LevelSummary s = AnalyzeLevel(t, eps, opts);
  if (s.exact)
  {
    return s;
  }
  // Clipping on the left only loses arc length; clipping on the right hides
  // the quantity being computed.
  double dx = s.window.Width() / std::max(1, s.nx - 1);
  for (const auto &c : s.curves)
  {
    for (Cplx z : c.pts)
    {
      Require(z.real() < s.window.x_hi - 0.75 * dx, ErrKind::WINDOW,
              "level set exits the search window on the right; enlarge the window");
    }
  }
  return s;
}

LevelSummary PseudoRadius(const matfun::MatFunction &t, double eps, const LevelOptions &opts)
{
  LevelSummary s = AnalyzeLevel(t, eps, opts);
  Require(s.exact || !s.touched, ErrKind::WINDOW,
          "level set reaches the search window border; enlarge the window");
  return s;
}

namespace
{

PseudoField DerivedPowerField(const PseudoField &base, double scale, int power)
{
  PseudoField out;
  out.win = base.win;
  out.xs = base.xs;
  out.ys = base.ys;
  out.sigma.resize(base.sigma.rows(), base.sigma.cols());
  for (Eigen::Index j = 0; j < out.sigma.cols(); j++)
  {
    for (Eigen::Index i = 0; i < out.sigma.rows(); i++)
    {
      double mod = std::hypot(base.xs[static_cast<std::size_t>(i)],
                              base.ys[static_cast<std::size_t>(j)]);
      double denom = scale * std::pow(mod, power);
      double s = (denom > 0.0) ? base.sigma(i, j) / denom : 1e300;
      out.sigma(i, j) = std::min(s, 1e300);
    }
  }
  return out;
}

}  // namespace

std::vector<LevelSummary> AnalyzePowerFamily(const matfun::MatrixPoly &p,
                                             const std::vector<std::pair<double, int>> &forms,
                                             double eps, const LevelOptions &opts)
{
  Require(eps > 0.0 && std::isfinite(eps), ErrKind::INVALID_ARGUMENT, "eps must be positive");
  std::vector<LevelSummary> out;
  if (forms.empty())
  {
    return out;
  }
  for (const auto &[scale, power] : forms)
  {
    Require(scale > 0.0 && std::isfinite(scale), ErrKind::INVALID_ARGUMENT,
            "scaled-power form needs a positive scale");
    Require(power >= 0, ErrKind::INVALID_ARGUMENT, "scaled-power form needs power >= 0");
  }

  Window w;
  if (opts.window)
  {
    w = *opts.window;
  }
  else
  {
    // Pad the root box in proportion to the largest effective level value
    // any family member reaches near the roots.
    matfun::MatFunction probe = matfun::ScaledPower{p, forms.front().first, forms.front().second};
    std::vector<Cplx> seeds = matfun::SeedPoints(probe);
    double r = 0.0;
    for (Cplx s : seeds)
    {
      r = std::max(r, std::abs(s));
    }
    double eff = 0.0;
    for (const auto &[scale, power] : forms)
    {
      eff = std::max(eff, eps * scale * std::pow(1.3 * r + 0.5, power));
    }
    eff = std::min(eff, 5.0 * (r + 1.0));
    // Reuse the generic seed-box sizing through a pencil-style pad.
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (Cplx s : seeds)
    {
      x_lo = std::min(x_lo, s.real());
      x_hi = std::max(x_hi, s.real());
      y_lo = std::min(y_lo, s.imag());
      y_hi = std::max(y_hi, s.imag());
    }
    double diag = std::hypot(x_hi - x_lo, y_hi - y_lo);
    double pad = std::max({2.0 * eff, 0.1 * diag, 1e-2});
    w = Window{x_lo - pad, x_hi + pad, y_lo - pad, y_hi + pad};
    double ysym = std::max(std::abs(w.y_lo), std::abs(w.y_hi));
    w.y_lo = -ysym;
    w.y_hi = ysym;
  }

  matfun::MatFunction base_fn = p;  // sigma field of the bare polynomial
  PseudoField base_raw;
  std::vector<LevelSet> base_levels(forms.size());
  int expansions = 0;
  while (true)
  {
    base_raw = ComputeField(base_fn, w, opts.nx, opts.ny);
    bool touched = false;
    for (std::size_t k = 0; k < forms.size(); k++)
    {
      PseudoField df = DerivedPowerField(base_raw, forms[k].first, forms[k].second);
      base_levels[k] = ExtractBoundary(df, eps);
      touched = touched || base_levels[k].touches_boundary;
    }
    if (!touched || expansions >= opts.max_expansions)
    {
      break;
    }
    w = ExpandAbout(w, 2.0);
    expansions++;
  }

  int fx = opts.certify ? 2 * opts.nx - 1 : opts.nx;
  int fy = opts.certify ? 2 * opts.ny - 1 : opts.ny;
  PseudoField fine_raw =
      opts.certify ? ComputeField(base_fn, w, fx, fy) : std::move(base_raw);

  double dx = w.Width() / (opts.nx - 1);
  for (std::size_t k = 0; k < forms.size(); k++)
  {
    matfun::MatFunction fn = matfun::ScaledPower{p, forms[k].first, forms[k].second};
    matfun::Evaluator ev(fn);

    PseudoField df = DerivedPowerField(fine_raw, forms[k].first, forms[k].second);
    LevelSet fine = ExtractBoundary(df, eps);

    LevelSummary s;
    s.eps = eps;
    s.window = w;
    s.nx = fx;
    s.ny = fy;
    s.curves = fine.curves;
    s.arc_length = fine.arc_length;
    s.arc_length_coarse = opts.certify ? base_levels[k].arc_length : fine.arc_length;
    s.hull_perimeter = fine.hull_perimeter;
    s.touched = fine.touches_boundary || base_levels[k].touches_boundary;
    s.certified = opts.certify && !s.touched && fine.arc_length > 0.0 &&
                  std::abs(fine.arc_length - base_levels[k].arc_length) <=
                      0.01 * fine.arc_length;

    double alpha = -std::numeric_limits<double>::infinity();
    double rho = 0.0;
    Cplx arg_alpha{0.0, 0.0}, arg_rho{0.0, 0.0};
    for (const auto &c : fine.curves)
    {
      for (Cplx z : c.pts)
      {
        if (z.real() > alpha)
        {
          alpha = z.real();
          arg_alpha = z;
        }
        if (std::abs(z) > rho)
        {
          rho = std::abs(z);
          arg_rho = z;
        }
      }
    }
    if (!fine.curves.empty())
    {
      {
        double y = arg_alpha.imag();
        double x0 = arg_alpha.real();
        int back = 0;
        while (ev.Sigma(Cplx(x0, y)) >= eps && back++ < 4)
        {
          x0 -= 0.25 * dx;
        }
        if (back <= 4)
        {
          alpha = std::max(alpha, RefineCrossing(
                                      ev, [y](double x) { return Cplx(x, y); }, eps, x0, dx,
                                      opts.refine_tol));
        }
      }
      if (std::abs(arg_rho) > 0.0)
      {
        Cplx dir = arg_rho / std::abs(arg_rho);
        double r0 = std::abs(arg_rho);
        int back = 0;
        while (ev.Sigma(dir * r0) >= eps && back++ < 4)
        {
          r0 -= 0.25 * dx;
        }
        if (back <= 4 && r0 > 0.0)
        {
          rho = std::max(rho, RefineCrossing(
                                  ev, [dir](double r) { return dir * r; }, eps, r0, dx,
                                  opts.refine_tol));
        }
      }
    }
    s.alpha = alpha;
    s.rho = rho;
    out.push_back(std::move(s));
  }
  return out;
}

double DdeSpectralAbscissa(const CMatrix &a, const CMatrix &b, double tau, int n_nodes)
{
  Require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows(),
          ErrKind::DIMENSION, "delay system matrices must be square and of equal size");
  Require(a.rows() >= 1, ErrKind::DIMENSION, "delay system must have positive dimension");
  Require(tau > 0.0 && std::isfinite(tau), ErrKind::INVALID_ARGUMENT,
          "delay must be positive");
  Require(n_nodes >= 8, ErrKind::INVALID_ARGUMENT, "collocation needs at least 8 nodes");
  CheckFinite(a, "delay system matrix");
  CheckFinite(b, "delay system matrix");

  if (b.cwiseAbs().maxCoeff() == 0.0)
  {
    // The generator's delay coupling vanishes; the spectrum is that of the
    // instantaneous part.
    return linalg::SpectralAbscissa(a);
  }

  return linalg::SpectralAbscissa(DdeCollocationGenerator(a, b, tau, n_nodes));
}

namespace
{

// Chebyshev collocation discretization of the solution-segment generator.
// Extreme points x_i = cos(i pi / N) mapped to [-tau, 0] by t = (tau/2)(x - 1);
// node 0 is t = 0, node N is t = -tau.
CMatrix DdeCollocationGenerator(const CMatrix &a, const CMatrix &b, double tau, int n_cheb)
{
  const Eigen::Index n = a.rows();
  std::vector<double> x(n_cheb + 1), c(n_cheb + 1, 1.0);
  for (int i = 0; i <= n_cheb; i++)
  {
    x[i] = std::cos(M_PI * i / n_cheb);
  }
  c[0] = c[n_cheb] = 2.0;
  RMatrix d(n_cheb + 1, n_cheb + 1);
  for (int i = 0; i <= n_cheb; i++)
  {
    double row_sum = 0.0;
    for (int j = 0; j <= n_cheb; j++)
    {
      if (i == j)
      {
        continue;
      }
      double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      d(i, j) = (c[i] / c[j]) * sgn / (x[i] - x[j]);
      row_sum += d(i, j);
    }
    d(i, i) = -row_sum;
  }

  const Eigen::Index m = n * (n_cheb + 1);
  CMatrix g = CMatrix::Zero(m, m);
  // Node 0 carries the differential equation itself: v'(0) = A v(0) + B v(-tau).
  g.block(0, 0, n, n) = a;
  g.block(0, n * n_cheb, n, n) += b;
  // Interior and left-end nodes carry spectral differentiation of the state
  // segment, d/dt = (2/tau) D.
  CMatrix eye = CMatrix::Identity(n, n);
  for (int i = 1; i <= n_cheb; i++)
  {
    for (int j = 0; j <= n_cheb; j++)
    {
      if (d(i, j) != 0.0)
      {
        g.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n) =
            (2.0 / tau) * d(i, j) * eye;
      }
    }
  }
  return g;
}

}  // namespace

DdeAbscissa DdeSpectralAbscissaChecked(const CMatrix &a, const CMatrix &b, double tau,
                                       int base_nodes)
{
  int base = base_nodes;
  if (base <= 0)
  {
    // Keep the doubled eigenproblem tractable for large state dimensions.
    base = (a.rows() * 33 <= 2400) ? 16 : 12;
  }
  double v1 = DdeSpectralAbscissa(a, b, tau, base);
  double v2 = DdeSpectralAbscissa(a, b, tau, 2 * base);
  DdeAbscissa res;
  res.value = v2;
  res.doubled_delta = std::abs(v1 - v2);
  res.converged = res.doubled_delta <= 1e-4;
  res.n_nodes = base;
  return res;
}

}  // namespace tgb::pseudo
