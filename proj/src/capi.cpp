// SPDX-License-Identifier: Apache-2.0

#include "tgbounds.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "ddebounds.hpp"
#include "linalg.hpp"
#include "lowerbounds.hpp"
#include "matfun.hpp"
#include "odebounds.hpp"
#include "problems.hpp"
#include "pseudo.hpp"
#include "simulate.hpp"

using tgb::Cplx;
using tgb::CMatrix;
using tgb::CVector;
using tgb::ErrKind;

extern "C"
{
struct tgb_problem
{
  tgb::problems::ProblemDef def;
  // Cached delay-system spectral abscissa (collocation is the costly step
  // shared by every bound variant on the same problem).
  mutable std::mutex lock;
  mutable std::optional<tgb::pseudo::DdeAbscissa> alpha_t;
};

struct tgb_table
{
  std::vector<std::pair<std::string, std::vector<double>>> cols;
  std::vector<std::pair<std::string, std::string>> meta;
};
}  // extern "C"

namespace
{

thread_local std::string g_last_error;

void SetError(const std::string &msg)
{
  g_last_error = msg;
}

tgb_status MapKind(ErrKind k)
{
  switch (k)
  {
    case ErrKind::INVALID_ARGUMENT:
      return TGB_ERR_INVALID_ARGUMENT;
    case ErrKind::DIMENSION:
      return TGB_ERR_DIMENSION;
    case ErrKind::SINGULAR:
      return TGB_ERR_SINGULAR;
    case ErrKind::INFEASIBLE:
      return TGB_ERR_INFEASIBLE;
    case ErrKind::UNSUPPORTED:
      return TGB_ERR_UNSUPPORTED;
    case ErrKind::NOT_FOUND:
      return TGB_ERR_NOT_FOUND;
    case ErrKind::WINDOW:
      return TGB_ERR_WINDOW;
    case ErrKind::NUMERIC:
      return TGB_ERR_NUMERIC;
    case ErrKind::PRECONDITION:
      return TGB_ERR_PRECONDITION;
    case ErrKind::IO:
      return TGB_ERR_IO;
    case ErrKind::PARSE:
      return TGB_ERR_PARSE;
  }
  return TGB_ERR_INTERNAL;
}

template <typename F>
tgb_status Wrap(F &&f) noexcept
{
  try
  {
    f();
    return TGB_OK;
  }
  catch (const tgb::Error &e)
  {
    SetError(e.what());
    return MapKind(e.kind());
  }
  catch (const std::exception &e)
  {
    SetError(std::string("internal error: ") + e.what());
    return TGB_ERR_INTERNAL;
  }
  catch (...)
  {
    SetError("internal error: unknown exception");
    return TGB_ERR_INTERNAL;
  }
}

tgb_status NullArg(const char *what)
{
  SetError(std::string("null argument: ") + what);
  return TGB_ERR_INVALID_ARGUMENT;
}

std::string Fmt(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void Meta(tgb_table *t, const std::string &key, const std::string &value)
{
  t->meta.emplace_back(key, value);
}

void MetaNum(tgb_table *t, const std::string &key, double value)
{
  Meta(t, key, Fmt(value));
}

std::vector<double> CopyDoubles(const double *p, int n)
{
  tgb::Require(p != nullptr && n >= 1, ErrKind::INVALID_ARGUMENT,
               "need at least one input value");
  std::vector<double> out(p, p + n);
  for (double v : out)
  {
    tgb::Require(std::isfinite(v), ErrKind::INVALID_ARGUMENT, "input values must be finite");
  }
  return out;
}

// Spectral abscissa of the problem's delay system, conservatively inflated by
// the doubled-resolution disagreement and cached on the handle.
tgb::pseudo::DdeAbscissa CachedAlphaT(const tgb_problem *p)
{
  std::lock_guard<std::mutex> g(p->lock);
  if (!p->alpha_t)
  {
    const auto &d = p->def.dde;
    p->alpha_t = tgb::pseudo::DdeSpectralAbscissaChecked(d.a, d.b, d.tau);
  }
  return *p->alpha_t;
}

bool HermitianData(const CMatrix &a)
{
  return (a - a.adjoint()).norm() <= 1e-12 * std::max(1.0, a.norm());
}

void RequireKind(const tgb_problem *p, tgb::problems::Kind k, const char *op)
{
  tgb::Require(p->def.kind == k, ErrKind::INVALID_ARGUMENT,
               std::string(op) + " needs a " + tgb::problems::KindName(k) + " problem; \"" +
                   p->def.name + "\" is a " + tgb::problems::KindName(p->def.kind) + " problem");
}

void AppendBoundCurveMeta(tgb_table *t, const std::string &prefix,
                          const tgb::odebounds::BoundCurve &c)
{
  Meta(t, prefix + "method", c.method);
  Meta(t, prefix + "certified", c.certified ? "1" : "0");
  for (std::size_t i = 0; i < c.terms.size(); i++)
  {
    const auto &term = c.terms[i];
    std::string v = "eps=" + Fmt(term.epsilon) + " weight=" + Fmt(term.weight) +
                    " rate=" + Fmt(term.rate) + " arc_length=" + Fmt(term.arc_length) +
                    " hull=" + Fmt(term.hull_perimeter) + " safety=" + Fmt(term.safety) +
                    " certified=" + (term.certified ? "1" : "0") +
                    " exact=" + (term.exact ? "1" : "0") + " grid=" + std::to_string(term.nx) +
                    "x" + std::to_string(term.ny);
    Meta(t, prefix + "term." + term.label, v);
  }
  for (std::size_t i = 0; i < c.notes.size(); i++)
  {
    Meta(t, prefix + "note" + std::to_string(i), c.notes[i]);
  }
}

}  // namespace

extern "C"
{

const char *tgb_status_name(tgb_status s)
{
  switch (s)
  {
    case TGB_OK:
      return "ok";
    case TGB_ERR_INVALID_ARGUMENT:
      return "invalid-argument";
    case TGB_ERR_DIMENSION:
      return "dimension-mismatch";
    case TGB_ERR_SINGULAR:
      return "singular";
    case TGB_ERR_INFEASIBLE:
      return "infeasible";
    case TGB_ERR_UNSUPPORTED:
      return "unsupported";
    case TGB_ERR_NOT_FOUND:
      return "not-found";
    case TGB_ERR_WINDOW:
      return "window";
    case TGB_ERR_NUMERIC:
      return "numeric";
    case TGB_ERR_PRECONDITION:
      return "precondition";
    case TGB_ERR_IO:
      return "io";
    case TGB_ERR_PARSE:
      return "parse";
    case TGB_ERR_INTERNAL:
      return "internal";
  }
  return "?";
}

const char *tgb_last_error(void)
{
  return g_last_error.c_str();
}

const char *tgb_version(void)
{
  return "0.1.0";
}

/* ---- Problems ---------------------------------------------------------- */

tgb_status tgb_problem_builtin(const char *spec, tgb_problem **out)
{
  if (spec == nullptr || out == nullptr)
  {
    return NullArg("spec/out");
  }
  return Wrap(
      [&]
      {
        auto *p = new tgb_problem();
        try
        {
          p->def = tgb::problems::BuiltinProblem(spec);
        }
        catch (...)
        {
          delete p;
          throw;
        }
        *out = p;
      });
}

tgb_status tgb_problem_load(const char *path, tgb_problem **out)
{
  if (path == nullptr || out == nullptr)
  {
    return NullArg("path/out");
  }
  return Wrap(
      [&]
      {
        auto *p = new tgb_problem();
        try
        {
          p->def = tgb::problems::LoadProblem(path);
        }
        catch (...)
        {
          delete p;
          throw;
        }
        *out = p;
      });
}

tgb_status tgb_problem_parse_json(const char *text, tgb_problem **out)
{
  if (text == nullptr || out == nullptr)
  {
    return NullArg("text/out");
  }
  return Wrap(
      [&]
      {
        auto *p = new tgb_problem();
        try
        {
          p->def = tgb::problems::ParseProblemJson(text);
        }
        catch (...)
        {
          delete p;
          throw;
        }
        *out = p;
      });
}

tgb_status tgb_problem_save(const tgb_problem *p, const char *path)
{
  if (p == nullptr || path == nullptr)
  {
    return NullArg("problem/path");
  }
  return Wrap([&] { tgb::problems::SaveProblem(p->def, path); });
}

tgb_status tgb_problem_to_json(const tgb_problem *p, char **out_text)
{
  if (p == nullptr || out_text == nullptr)
  {
    return NullArg("problem/out_text");
  }
  return Wrap(
      [&]
      {
        std::string s = tgb::problems::ProblemToJson(p->def);
        char *buf = new char[s.size() + 1];
        std::memcpy(buf, s.c_str(), s.size() + 1);
        *out_text = buf;
      });
}

void tgb_problem_free(tgb_problem *p)
{
  delete p;
}

void tgb_string_free(char *s)
{
  delete[] s;
}

const char *tgb_problem_kind(const tgb_problem *p)
{
  return p == nullptr ? nullptr : tgb::problems::KindName(p->def.kind);
}

const char *tgb_problem_name(const tgb_problem *p)
{
  return p == nullptr ? nullptr : p->def.name.c_str();
}

int tgb_problem_dim(const tgb_problem *p)
{
  if (p == nullptr)
  {
    return 0;
  }
  switch (p->def.kind)
  {
    case tgb::problems::Kind::kOde:
      return static_cast<int>(p->def.m.rows());
    case tgb::problems::Kind::kHode:
    case tgb::problems::Kind::kDiffeq:
      return static_cast<int>(tgb::odebounds::HodeDim(p->def.hode));
    case tgb::problems::Kind::kDde:
      return static_cast<int>(p->def.dde.a.rows());
  }
  return 0;
}

double tgb_problem_delay(const tgb_problem *p)
{
  if (p == nullptr || p->def.kind != tgb::problems::Kind::kDde)
  {
    return 0.0;
  }
  return p->def.dde.tau;
}

/* ---- Result tables ----------------------------------------------------- */

int tgb_table_nrows(const tgb_table *t)
{
  if (t == nullptr || t->cols.empty())
  {
    return 0;
  }
  return static_cast<int>(t->cols.front().second.size());
}

int tgb_table_ncols(const tgb_table *t)
{
  return t == nullptr ? 0 : static_cast<int>(t->cols.size());
}

const char *tgb_table_col_name(const tgb_table *t, int col)
{
  if (t == nullptr || col < 0 || col >= static_cast<int>(t->cols.size()))
  {
    return nullptr;
  }
  return t->cols[static_cast<std::size_t>(col)].first.c_str();
}

const double *tgb_table_col(const tgb_table *t, int col)
{
  if (t == nullptr || col < 0 || col >= static_cast<int>(t->cols.size()))
  {
    return nullptr;
  }
  return t->cols[static_cast<std::size_t>(col)].second.data();
}

int tgb_table_meta_count(const tgb_table *t)
{
  return t == nullptr ? 0 : static_cast<int>(t->meta.size());
}

const char *tgb_table_meta_key(const tgb_table *t, int i)
{
  if (t == nullptr || i < 0 || i >= static_cast<int>(t->meta.size()))
  {
    return nullptr;
  }
  return t->meta[static_cast<std::size_t>(i)].first.c_str();
}

const char *tgb_table_meta_value(const tgb_table *t, int i)
{
  if (t == nullptr || i < 0 || i >= static_cast<int>(t->meta.size()))
  {
    return nullptr;
  }
  return t->meta[static_cast<std::size_t>(i)].second.c_str();
}

const char *tgb_table_meta_get(const tgb_table *t, const char *key)
{
  if (t == nullptr || key == nullptr)
  {
    return nullptr;
  }
  for (const auto &kv : t->meta)
  {
    if (kv.first == key)
    {
      return kv.second.c_str();
    }
  }
  return nullptr;
}

void tgb_table_free(tgb_table *t)
{
  delete t;
}

/* ---- Pseudospectra ----------------------------------------------------- */

tgb_status tgb_pseudospectrum(const tgb_problem *p, const double *epsilons, int n_eps,
                              const double *window, int nx, int ny, int certify,
                              tgb_table **field, tgb_table **levels, tgb_table **summary)
{
  if (p == nullptr)
  {
    return NullArg("problem");
  }
  return Wrap(
      [&]
      {
        std::vector<double> eps = CopyDoubles(epsilons, n_eps);
        for (double e : eps)
        {
          tgb::Require(e > 0.0, ErrKind::INVALID_ARGUMENT, "epsilons must be positive");
        }
        tgb::matfun::MatFunction t = tgb::problems::CharacteristicFunction(p->def);

        tgb::pseudo::LevelOptions opts;
        if (nx > 0)
        {
          opts.nx = nx;
        }
        if (ny > 0)
        {
          opts.ny = ny;
        }
        opts.certify = certify != 0;
        tgb::pseudo::Window win;
        if (window != nullptr)
        {
          win.x_lo = window[0];
          win.x_hi = window[1];
          win.y_lo = window[2];
          win.y_hi = window[3];
          tgb::Require(win.Width() > 0.0 && win.Height() > 0.0, ErrKind::INVALID_ARGUMENT,
                       "window must have positive width and height");
          opts.window = win;
        }
        else
        {
          win = tgb::pseudo::AutoWindow(t, *std::max_element(eps.begin(), eps.end()));
        }

        tgb_table *field_t = nullptr;
        tgb_table *levels_t = nullptr;
        tgb_table *summary_t = nullptr;
        try
        {
          if (field != nullptr)
          {
            tgb::pseudo::PseudoField f =
                tgb::pseudo::ComputeField(t, win, opts.nx, opts.ny);
            field_t = new tgb_table();
            field_t->cols.emplace_back("re", std::vector<double>{});
            field_t->cols.emplace_back("im", std::vector<double>{});
            field_t->cols.emplace_back("sigma_min", std::vector<double>{});
            auto &re = field_t->cols[0].second;
            auto &im = field_t->cols[1].second;
            auto &sg = field_t->cols[2].second;
            re.reserve(f.xs.size() * f.ys.size());
            im.reserve(f.xs.size() * f.ys.size());
            sg.reserve(f.xs.size() * f.ys.size());
            for (std::size_t i = 0; i < f.xs.size(); i++)
            {
              for (std::size_t j = 0; j < f.ys.size(); j++)
              {
                re.push_back(f.xs[i]);
                im.push_back(f.ys[j]);
                sg.push_back(f.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
              }
            }
            Meta(field_t, "window", Fmt(win.x_lo) + "," + Fmt(win.x_hi) + "," + Fmt(win.y_lo) +
                                        "," + Fmt(win.y_hi));
            Meta(field_t, "nx", std::to_string(opts.nx));
            Meta(field_t, "ny", std::to_string(opts.ny));
          }

          if (levels != nullptr || summary != nullptr)
          {
            if (levels != nullptr)
            {
              levels_t = new tgb_table();
              levels_t->cols.emplace_back("eps", std::vector<double>{});
              levels_t->cols.emplace_back("curve", std::vector<double>{});
              levels_t->cols.emplace_back("re", std::vector<double>{});
              levels_t->cols.emplace_back("im", std::vector<double>{});
            }
            if (summary != nullptr)
            {
              summary_t = new tgb_table();
              for (const char *name : {"eps", "alpha", "rho", "arc_length", "hull_perimeter",
                                       "certified", "exact", "touched", "nx", "ny"})
              {
                summary_t->cols.emplace_back(name, std::vector<double>{});
              }
            }
            int curve_id = 0;
            for (double e : eps)
            {
              tgb::pseudo::LevelSummary s = tgb::pseudo::AnalyzeLevel(t, e, opts);
              if (levels_t != nullptr)
              {
                for (const auto &poly : s.curves)
                {
                  for (const Cplx &z : poly.pts)
                  {
                    levels_t->cols[0].second.push_back(e);
                    levels_t->cols[1].second.push_back(curve_id);
                    levels_t->cols[2].second.push_back(z.real());
                    levels_t->cols[3].second.push_back(z.imag());
                  }
                  if (poly.closed && !poly.pts.empty())
                  {
                    levels_t->cols[0].second.push_back(e);
                    levels_t->cols[1].second.push_back(curve_id);
                    levels_t->cols[2].second.push_back(poly.pts.front().real());
                    levels_t->cols[3].second.push_back(poly.pts.front().imag());
                  }
                  curve_id++;
                }
              }
              if (summary_t != nullptr)
              {
                double row[] = {e,
                                s.alpha,
                                s.rho,
                                s.arc_length,
                                s.hull_perimeter,
                                s.certified ? 1.0 : 0.0,
                                s.exact ? 1.0 : 0.0,
                                s.touched ? 1.0 : 0.0,
                                static_cast<double>(s.nx),
                                static_cast<double>(s.ny)};
                for (std::size_t c = 0; c < summary_t->cols.size(); c++)
                {
                  summary_t->cols[c].second.push_back(row[c]);
                }
              }
            }
            if (summary_t != nullptr)
            {
              Meta(summary_t, "certify", opts.certify ? "1" : "0");
            }
          }
        }
        catch (...)
        {
          delete field_t;
          delete levels_t;
          delete summary_t;
          throw;
        }
        if (field != nullptr)
        {
          *field = field_t;
        }
        if (levels != nullptr)
        {
          *levels = levels_t;
        }
        if (summary != nullptr)
        {
          *summary = summary_t;
        }
      });
}

/* ---- Upper bounds (ode / hode / diffeq kinds) --------------------------- */

tgb_status tgb_bound(const tgb_problem *p, const double *epsilons, int n_eps,
                     const double *times, int n_times, int majorant, tgb_table **out)
{
  if (p == nullptr || out == nullptr)
  {
    return NullArg("problem/out");
  }
  return Wrap(
      [&]
      {
        using tgb::problems::Kind;
        tgb::Require(p->def.kind != Kind::kDde, ErrKind::INVALID_ARGUMENT,
                     "dde problems use tgb_bound_dde");
        std::vector<double> eps = CopyDoubles(epsilons, n_eps);
        std::vector<double> ts = CopyDoubles(times, n_times);
        tgb::Require(majorant == 0 || p->def.kind == Kind::kDiffeq, ErrKind::INVALID_ARGUMENT,
                     "the majorant route applies to diffeq problems only");

        tgb::odebounds::BoundOptions opts;
        opts.majorant = majorant != 0;
        std::vector<int> steps;
        if (p->def.kind == Kind::kDiffeq)
        {
          steps.reserve(ts.size());
          for (double v : ts)
          {
            auto n = static_cast<int>(std::llround(v));
            tgb::Require(n >= 0 && std::abs(v - n) < 1e-9, ErrKind::INVALID_ARGUMENT,
                         "diffeq bound times must be nonnegative integer step indices");
            steps.push_back(n);
          }
        }

        std::vector<tgb::odebounds::BoundCurve> curves;
        curves.reserve(eps.size());
        for (double e : eps)
        {
          switch (p->def.kind)
          {
            case Kind::kOde:
              curves.push_back(tgb::odebounds::OdeUpperBound(p->def.m, e, ts, opts));
              break;
            case Kind::kHode:
              curves.push_back(tgb::odebounds::HodeUpperBound(p->def.hode, e, ts, opts));
              break;
            case Kind::kDiffeq:
              curves.push_back(tgb::odebounds::DiffeqUpperBound(p->def.hode, e, steps, opts));
              break;
            case Kind::kDde:
              break;
          }
        }
        tgb::odebounds::BoundCurve env =
            curves.size() == 1 ? curves.front() : tgb::odebounds::EnvelopeMin(curves);

        auto *t = new tgb_table();
        try
        {
          t->cols.emplace_back(p->def.kind == Kind::kDiffeq ? "n" : "t", ts);
          t->cols.emplace_back("bound", env.values);
          std::vector<double> eps_used(ts.size(), eps.front());
          for (std::size_t i = 0; i < ts.size(); i++)
          {
            double best = curves.front().values[i];
            for (std::size_t k = 1; k < curves.size(); k++)
            {
              if (curves[k].values[i] < best)
              {
                best = curves[k].values[i];
                eps_used[i] = eps[k];
              }
            }
          }
          t->cols.emplace_back("eps_used", std::move(eps_used));
          for (std::size_t k = 0; k < curves.size(); k++)
          {
            char name[48];
            std::snprintf(name, sizeof(name), "bound_eps%zu", k + 1);
            t->cols.emplace_back(name, curves[k].values);
          }
          Meta(t, "kind", tgb::problems::KindName(p->def.kind));
          Meta(t, "problem", p->def.name);
          Meta(t, "majorant", opts.majorant ? "1" : "0");
          Meta(t, "certified", env.certified ? "1" : "0");
          for (std::size_t k = 0; k < curves.size(); k++)
          {
            std::string prefix = "eps" + std::to_string(k + 1) + ".";
            Meta(t, prefix + "value", Fmt(eps[k]));
            AppendBoundCurveMeta(t, prefix, curves[k]);
          }
        }
        catch (...)
        {
          delete t;
          throw;
        }
        *out = t;
      });
}

/* ---- Upper bounds (dde kind) -------------------------------------------- */

tgb_status tgb_bound_dde(const tgb_problem *p, const char *variant, double y0,
                         const double *times, int n_times, int statement_tail,
                         int with_history, tgb_table **out)
{
  if (p == nullptr || variant == nullptr || out == nullptr)
  {
    return NullArg("problem/variant/out");
  }
  return Wrap(
      [&]
      {
        RequireKind(p, tgb::problems::Kind::kDde, "tgb_bound_dde");
        std::vector<double> ts = CopyDoubles(times, n_times);

        std::string vname = variant;
        tgb::ddebounds::BoundVariant var;
        bool drop_alpha_a = false;
        if (vname == "split")
        {
          var = tgb::ddebounds::BoundVariant::kSplit;
        }
        else if (vname == "vertical")
        {
          var = tgb::ddebounds::BoundVariant::kVertical;
        }
        else if (vname == "nonsplit")
        {
          var = tgb::ddebounds::BoundVariant::kNonsplit;
        }
        else if (vname == "nonsplit-shifted")
        {
          var = tgb::ddebounds::BoundVariant::kNonsplit;
          drop_alpha_a = true;
        }
        else
        {
          tgb::Fail(ErrKind::INVALID_ARGUMENT,
                    "unknown variant \"" + vname +
                        "\" (known: split, vertical, nonsplit, nonsplit-shifted)");
        }

        const auto &sys = p->def.dde;
        tgb::ddebounds::ContourMode mode = HermitianData(sys.a)
                                               ? tgb::ddebounds::ContourMode::kHermitian
                                               : tgb::ddebounds::ContourMode::kDiagonalizable;

        tgb::pseudo::DdeAbscissa at = CachedAlphaT(p);
        double alpha_used = at.value + at.doubled_delta;

        tgb::ddebounds::ContourParams params;
        if (y0 > 0.0)
        {
          params = tgb::ddebounds::ChooseContour(sys.a, sys.b, sys.tau, y0, alpha_used, mode,
                                                 var, drop_alpha_a);
        }
        else
        {
          double t_ref = ts.empty() ? 0.0 : 0.5 * (ts.front() + ts.back());
          params = tgb::ddebounds::ChooseContourAuto(sys.a, sys.b, sys.tau, alpha_used, mode,
                                                     var, drop_alpha_a, t_ref);
        }

        tgb::ddebounds::DdeBoundOptions opts;
        opts.statement_tail = statement_tail != 0;

        tgb::ddebounds::DdeBoundResult res;
        if (with_history != 0)
        {
          double u0_norm = p->def.dde_u0.norm();
          double phi_weight =
              tgb::ddebounds::HistoryWeight(sys.b, p->def.history, sys.tau);
          res = tgb::ddebounds::HistoryBound(sys.a, sys.b, sys.tau, params, u0_norm, phi_weight,
                                             ts, opts);
        }
        else
        {
          res = tgb::ddebounds::FundamentalBound(sys.a, sys.b, sys.tau, params, ts, opts);
        }

        auto *t = new tgb_table();
        try
        {
          t->cols.emplace_back("t", res.curve.times);
          t->cols.emplace_back("bound", res.curve.values);
          Meta(t, "problem", p->def.name);
          Meta(t, "variant", drop_alpha_a ? "nonsplit-shifted"
                                          : tgb::ddebounds::VariantName(res.params.variant));
          Meta(t, "mode", tgb::ddebounds::ModeName(res.params.mode));
          Meta(t, "method", res.curve.method);
          MetaNum(t, "y0", res.params.y0);
          MetaNum(t, "eta", res.params.eta);
          MetaNum(t, "x0", res.params.x0);
          MetaNum(t, "beta", res.params.beta);
          MetaNum(t, "tau", res.params.tau);
          MetaNum(t, "cond_v", res.params.cond_v);
          MetaNum(t, "I0", res.terms.i0);
          MetaNum(t, "I0_error", res.terms.i0_error);
          Meta(t, "I0_converged", res.terms.i0_converged ? "1" : "0");
          MetaNum(t, "C", res.terms.c);
          MetaNum(t, "alpha_T", at.value);
          MetaNum(t, "alpha_T_delta", at.doubled_delta);
          Meta(t, "alpha_T_converged", at.converged ? "1" : "0");
          Meta(t, "statement_tail", opts.statement_tail ? "1" : "0");
          Meta(t, "with_history", with_history != 0 ? "1" : "0");
          if (with_history != 0)
          {
            MetaNum(t, "u0_norm", p->def.dde_u0.norm());
            MetaNum(t, "history_weight",
                    tgb::ddebounds::HistoryWeight(sys.b, p->def.history, sys.tau));
          }
          Meta(t, "certified", res.curve.certified ? "1" : "0");
          if (with_history == 0)
          {
            // Support values for bracketing sup_t ||Psi(t)|| over all t >= 0:
            // a log-norm cap on the delay-free segment [0, tau], and a
            // decreasing-majorant cap on everything past the last requested
            // time.  Only meaningful for the fundamental-solution bound.
            double omega =
                tgb::linalg::SpectralAbscissa(CMatrix(0.5 * (sys.a + sys.a.adjoint())));
            MetaNum(t, "initial_sup", std::max(1.0, std::exp(omega * sys.tau)));
            double alpha_a = tgb::linalg::SpectralAbscissa(sys.a);
            double t_end = *std::max_element(ts.begin(), ts.end());
            double decay_cap = std::numeric_limits<double>::infinity();
            if (alpha_a < 0.0 && res.params.x0 < 0.0)
            {
              double mode_factor = (res.params.mode == tgb::ddebounds::ContourMode::kHermitian)
                                       ? 1.0
                                       : res.params.cond_v;
              double tail = opts.statement_tail
                                ? res.terms.c * std::exp(res.params.x0 * t_end) / (t_end / sys.tau)
                                : res.terms.c * std::exp(res.params.x0 * (t_end - sys.tau)) /
                                      (t_end / sys.tau);
              decay_cap = mode_factor * std::exp(alpha_a * t_end) +
                          std::exp(res.params.x0 * t_end) * res.terms.i0 + tail;
            }
            MetaNum(t, "decay_cap", decay_cap);
          }
          for (std::size_t i = 0; i < res.curve.notes.size(); i++)
          {
            Meta(t, "note" + std::to_string(i), res.curve.notes[i]);
          }
        }
        catch (...)
        {
          delete t;
          throw;
        }
        *out = t;
      });
}

/* ---- Lower bounds ------------------------------------------------------- */

tgb_status tgb_lower_bound(const tgb_problem *p, double x_lo, double x_hi, int n_x,
                           tgb_table **out)
{
  if (p == nullptr || out == nullptr)
  {
    return NullArg("problem/out");
  }
  return Wrap(
      [&]
      {
        using tgb::problems::Kind;
        tgb::Require(p->def.kind == Kind::kOde || p->def.kind == Kind::kDde,
                     ErrKind::UNSUPPORTED,
                     "lower bounds are implemented for ode and dde problems");
        tgb::matfun::MatFunction t = tgb::problems::CharacteristicFunction(p->def);
        tgb::lowerbounds::ScanResult r = tgb::lowerbounds::LbScan(t, x_lo, x_hi, n_x);
        auto *tab = new tgb_table();
        try
        {
          tab->cols.emplace_back("x", r.xs);
          tab->cols.emplace_back("lower_bound", r.values);
          Meta(tab, "problem", p->def.name);
          MetaNum(tab, "best", r.value);
          MetaNum(tab, "best_x", r.x);
          MetaNum(tab, "x_lo", x_lo);
          MetaNum(tab, "x_hi", x_hi);
          Meta(tab, "n_x", std::to_string(n_x));
        }
        catch (...)
        {
          delete tab;
          throw;
        }
        *out = tab;
      });
}

/* ---- Simulation --------------------------------------------------------- */

namespace
{

void AppendStates(tgb_table *t, const CMatrix &states)
{
  for (Eigen::Index c = 0; c < states.rows(); c++)
  {
    std::string base = "u" + std::to_string(c);
    std::vector<double> re(static_cast<std::size_t>(states.cols()));
    std::vector<double> im(static_cast<std::size_t>(states.cols()));
    for (Eigen::Index k = 0; k < states.cols(); k++)
    {
      re[static_cast<std::size_t>(k)] = states(c, k).real();
      im[static_cast<std::size_t>(k)] = states(c, k).imag();
    }
    t->cols.emplace_back(base + "_re", std::move(re));
    t->cols.emplace_back(base + "_im", std::move(im));
  }
}

}  // namespace

tgb_status tgb_simulate(const tgb_problem *p, double h, double t_end, int samples,
                        int keep_states, tgb_table **out)
{
  if (p == nullptr || out == nullptr)
  {
    return NullArg("problem/out");
  }
  return Wrap(
      [&]
      {
        using tgb::problems::Kind;
        tgb::Require(t_end > 0.0 && std::isfinite(t_end), ErrKind::INVALID_ARGUMENT,
                     "t_end must be positive");
        auto *t = new tgb_table();
        try
        {
          Meta(t, "problem", p->def.name);
          switch (p->def.kind)
          {
            case Kind::kDde:
            {
              tgb::simulate::DdeOptions opts;
              opts.h_req = h > 0.0 ? h : 0.0;
              opts.samples = samples > 0 ? samples : 0;
              opts.keep_states = keep_states != 0;
              tgb::simulate::Trajectory tr = tgb::simulate::SimulateDde(
                  p->def.dde, p->def.history, p->def.dde_u0, t_end, opts);
              t->cols.emplace_back("t", tr.times);
              t->cols.emplace_back(
                  "norm", std::vector<double>(tr.norms.data(), tr.norms.data() + tr.norms.size()));
              if (keep_states != 0 && tr.states.cols() > 0)
              {
                AppendStates(t, tr.states);
              }
              MetaNum(t, "h", tr.h);
              Meta(t, "method", "method-of-steps rk4");
              break;
            }
            case Kind::kOde:
            {
              tgb::Require(p->def.u0.size() > 0, ErrKind::INVALID_ARGUMENT,
                           "problem has no initial vector u0");
              int ns = samples > 0 ? samples : 400;
              tgb::simulate::Trajectory tr =
                  tgb::simulate::SimulateOde(p->def.m, p->def.u0, t_end, ns);
              t->cols.emplace_back("t", tr.times);
              t->cols.emplace_back(
                  "norm", std::vector<double>(tr.norms.data(), tr.norms.data() + tr.norms.size()));
              if (keep_states != 0 && tr.states.cols() > 0)
              {
                AppendStates(t, tr.states);
              }
              MetaNum(t, "h", tr.h);
              Meta(t, "method", "matrix exponential");
              break;
            }
            case Kind::kHode:
            {
              int ns = samples > 0 ? samples : 400;
              CMatrix m = tgb::odebounds::CompanionMatrix(p->def.hode);
              Eigen::Index d = tgb::odebounds::HodeDim(p->def.hode);
              CVector stacked(m.rows());
              for (std::size_t j = 0; j < p->def.hode.initial.size(); j++)
              {
                stacked.segment(static_cast<Eigen::Index>(j) * d, d) = p->def.hode.initial[j];
              }
              tgb::simulate::Trajectory tr =
                  tgb::simulate::SimulateOde(m, stacked, t_end, ns);
              // Report the solution component y(t) (first companion block),
              // which is what the higher-order bound controls.
              std::vector<double> norms(tr.times.size());
              for (std::size_t k = 0; k < tr.times.size(); k++)
              {
                norms[k] = tr.states.col(static_cast<Eigen::Index>(k)).head(d).norm();
              }
              t->cols.emplace_back("t", tr.times);
              t->cols.emplace_back("norm", std::move(norms));
              if (keep_states != 0)
              {
                AppendStates(t, tr.states.topRows(d));
              }
              MetaNum(t, "h", tr.h);
              Meta(t, "method", "companion matrix exponential");
              Meta(t, "norm_is", "solution component y(t)");
              break;
            }
            case Kind::kDiffeq:
            {
              auto n_steps = static_cast<int>(std::llround(t_end));
              tgb::Require(n_steps >= 0 && std::abs(t_end - n_steps) < 1e-9,
                           ErrKind::INVALID_ARGUMENT,
                           "diffeq simulation takes an integer step count for t_end");
              tgb::simulate::DiffeqTrajectory tr = tgb::simulate::SimulateDiffeq(
                  p->def.hode.coeffs, p->def.hode.initial, n_steps);
              std::vector<double> ns(static_cast<std::size_t>(tr.norms.size()));
              std::vector<double> idx(static_cast<std::size_t>(tr.norms.size()));
              for (Eigen::Index k = 0; k < tr.norms.size(); k++)
              {
                idx[static_cast<std::size_t>(k)] = static_cast<double>(k);
                ns[static_cast<std::size_t>(k)] = tr.norms(k);
              }
              t->cols.emplace_back("n", std::move(idx));
              t->cols.emplace_back("norm", std::move(ns));
              if (keep_states != 0)
              {
                AppendStates(t, tr.states);
              }
              Meta(t, "method", "direct recurrence");
              break;
            }
          }
        }
        catch (...)
        {
          delete t;
          throw;
        }
        *out = t;
      });
}

tgb_status tgb_fundamental_norms(const tgb_problem *p, double t_end, int samples, double h,
                                 tgb_table **out)
{
  if (p == nullptr || out == nullptr)
  {
    return NullArg("problem/out");
  }
  return Wrap(
      [&]
      {
        RequireKind(p, tgb::problems::Kind::kDde, "tgb_fundamental_norms");
        tgb::simulate::NormCurve c = tgb::simulate::FundamentalNorms(
            p->def.dde, t_end, samples > 0 ? samples : 400, h > 0.0 ? h : 0.0);
        auto *t = new tgb_table();
        try
        {
          t->cols.emplace_back("t", c.times);
          t->cols.emplace_back(
              "norm", std::vector<double>(c.values.data(), c.values.data() + c.values.size()));
          Meta(t, "problem", p->def.name);
          Meta(t, "method", "fundamental solution, method-of-steps rk4");
        }
        catch (...)
        {
          delete t;
          throw;
        }
        *out = t;
      });
}

}  // extern "C"
