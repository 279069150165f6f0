// SPDX-License-Identifier: Apache-2.0

// tgb: transient-growth bounds from pseudospectra — command-line front end.
//
// Every subcommand writes CSV tables (17 significant digits) plus a
// _manifest.json capturing all parameters and result metadata, so any run can
// be reproduced bit-identically from its manifest.
//
// Exit codes: 0 success; 1 infeasible contour or other precondition failure;
// 2 I/O or schema errors; 3 soundness violation detected by `compare`.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <tgbounds.h>

namespace
{

using nlohmann::json;

struct Fatal
{
  int code;
  std::string msg;
};

int ExitCodeFor(tgb_status s)
{
  switch (s)
  {
    case TGB_ERR_IO:
    case TGB_ERR_PARSE:
    case TGB_ERR_NOT_FOUND:
      return 2;
    default:
      return 1;
  }
}

void Check(tgb_status s)
{
  if (s != TGB_OK)
  {
    throw Fatal{ExitCodeFor(s), std::string(tgb_status_name(s)) + ": " + tgb_last_error()};
  }
}

struct ProblemHandle
{
  tgb_problem *p = nullptr;
  ProblemHandle() = default;
  ProblemHandle(const ProblemHandle &) = delete;
  ProblemHandle &operator=(const ProblemHandle &) = delete;
  ~ProblemHandle() { tgb_problem_free(p); }
};

struct TableHandle
{
  tgb_table *t = nullptr;
  TableHandle() = default;
  TableHandle(const TableHandle &) = delete;
  TableHandle &operator=(const TableHandle &) = delete;
  TableHandle(TableHandle &&o) noexcept : t(o.t) { o.t = nullptr; }
  TableHandle &operator=(TableHandle &&o) noexcept
  {
    std::swap(t, o.t);
    return *this;
  }
  ~TableHandle() { tgb_table_free(t); }
};

std::string Fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Problem spec -> handle. Specs containing a '.' or '/' are file paths;
// anything else is a builtin id.
void OpenProblem(const std::string &spec, ProblemHandle &out)
{
  if (spec.find('/') != std::string::npos || spec.find(".json") != std::string::npos)
  {
    Check(tgb_problem_load(spec.c_str(), &out.p));
  }
  else
  {
    Check(tgb_problem_builtin(spec.c_str(), &out.p));
  }
}

std::string SanitizeName(std::string s)
{
  for (char &c : s)
  {
    if (c == ':' || c == '/' || c == '\\' || c == ' ')
    {
      c = '-';
    }
  }
  return s;
}

json MetaJson(const tgb_table *t)
{
  json out = json::object();
  for (int i = 0; i < tgb_table_meta_count(t); i++)
  {
    out[tgb_table_meta_key(t, i)] = tgb_table_meta_value(t, i);
  }
  return out;
}

// A run's output bundle: CSV files plus one manifest.
class Outputs
{
public:
  Outputs(const std::string &dir, const std::string &command, const std::string &problem_spec,
          const ProblemHandle &p, int argc, char **argv)
      : dir_(dir)
  {
    prefix_ = command;
    std::replace(prefix_.begin(), prefix_.end(), '-', '_');
    prefix_ += "_" + SanitizeName(tgb_problem_name(p.p));
    manifest_["tool"] = "tgb";
    manifest_["version"] = tgb_version();
    manifest_["command"] = command;
    json args = json::array();
    for (int i = 0; i < argc; i++)
    {
      args.push_back(argv[i]);
    }
    manifest_["argv"] = args;
    manifest_["problem"] = {{"spec", problem_spec},
                            {"name", tgb_problem_name(p.p)},
                            {"kind", tgb_problem_kind(p.p)},
                            {"dim", tgb_problem_dim(p.p)}};
    double tau = tgb_problem_delay(p.p);
    if (tau > 0.0)
    {
      manifest_["problem"]["tau"] = Fmt17(tau);
    }
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
    {
      throw Fatal{2, "cannot create output directory " + dir_ + ": " + ec.message()};
    }
  }

  json &Manifest() { return manifest_; }

  std::string Path(const std::string &suffix) const
  {
    return dir_ + "/" + prefix_ + suffix;
  }

  void WriteCsv(const std::string &suffix, const tgb_table *t)
  {
    std::string path = Path(suffix);
    std::ofstream out(path);
    if (!out.good())
    {
      throw Fatal{2, "cannot open " + path};
    }
    int nc = tgb_table_ncols(t);
    int nr = tgb_table_nrows(t);
    for (int c = 0; c < nc; c++)
    {
      out << (c > 0 ? "," : "") << tgb_table_col_name(t, c);
    }
    out << "\n";
    std::vector<const double *> cols(static_cast<std::size_t>(nc));
    for (int c = 0; c < nc; c++)
    {
      cols[static_cast<std::size_t>(c)] = tgb_table_col(t, c);
    }
    for (int r = 0; r < nr; r++)
    {
      for (int c = 0; c < nc; c++)
      {
        out << (c > 0 ? "," : "") << Fmt17(cols[static_cast<std::size_t>(c)][r]);
      }
      out << "\n";
    }
    if (!out.good())
    {
      throw Fatal{2, "write failed: " + path};
    }
    manifest_["outputs"].push_back(prefix_ + suffix);
    std::string key = suffix;
    if (!key.empty() && key.front() == '_')
    {
      key.erase(0, 1);
    }
    auto dot = key.find('.');
    if (dot != std::string::npos)
    {
      key.erase(dot);
    }
    if (key.empty())
    {
      key = "table";
    }
    manifest_["tables"][key] = MetaJson(t);
  }

  // Raw-columns variant for tables assembled inside the CLI (compare joins).
  void WriteCsvColumns(const std::string &suffix,
                       const std::vector<std::pair<std::string, std::vector<double>>> &cols,
                       const json &meta)
  {
    std::string path = Path(suffix);
    std::ofstream out(path);
    if (!out.good())
    {
      throw Fatal{2, "cannot open " + path};
    }
    for (std::size_t c = 0; c < cols.size(); c++)
    {
      out << (c > 0 ? "," : "") << cols[c].first;
    }
    out << "\n";
    std::size_t nr = cols.empty() ? 0 : cols.front().second.size();
    for (std::size_t r = 0; r < nr; r++)
    {
      for (std::size_t c = 0; c < cols.size(); c++)
      {
        out << (c > 0 ? "," : "") << Fmt17(cols[c].second[r]);
      }
      out << "\n";
    }
    if (!out.good())
    {
      throw Fatal{2, "write failed: " + path};
    }
    manifest_["outputs"].push_back(prefix_ + suffix);
    std::string key = suffix;
    if (!key.empty() && key.front() == '_')
    {
      key.erase(0, 1);
    }
    auto dot = key.find('.');
    if (dot != std::string::npos)
    {
      key.erase(dot);
    }
    manifest_["tables"][key.empty() ? "table" : key] = meta;
  }

  void WriteManifest()
  {
    std::string path = Path("_manifest.json");
    std::ofstream out(path);
    if (!out.good())
    {
      throw Fatal{2, "cannot open " + path};
    }
    out << manifest_.dump(2) << "\n";
    if (!out.good())
    {
      throw Fatal{2, "write failed: " + path};
    }
    std::printf("wrote %s\n", path.c_str());
  }

private:
  std::string dir_;
  std::string prefix_;
  json manifest_;
};

std::vector<double> Linspace(double a, double b, int n)
{
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1)
  {
    out[0] = b;
    return out;
  }
  for (int i = 0; i < n; i++)
  {
    out[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
  }
  return out;
}

std::vector<double> DefaultEpsMesh()
{
  // 10^(-k/2) for k = 1..6.
  std::vector<double> eps;
  for (int k = 1; k <= 6; k++)
  {
    eps.push_back(std::pow(10.0, -0.5 * k));
  }
  return eps;
}

const double *ColByName(const tgb_table *t, const char *name)
{
  for (int c = 0; c < tgb_table_ncols(t); c++)
  {
    if (std::string(tgb_table_col_name(t, c)) == name)
    {
      return tgb_table_col(t, c);
    }
  }
  return nullptr;
}

// Numeric metadata value; NaN when missing or non-numeric ("inf" parses).
double MetaNumber(const tgb_table *t, const char *key)
{
  const char *v = tgb_table_meta_get(t, key);
  if (v == nullptr)
  {
    return std::numeric_limits<double>::quiet_NaN();
  }
  try
  {
    return std::stod(v);
  }
  catch (const std::exception &)
  {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// ---- subcommand option blocks ----------------------------------------------

struct CommonOpts
{
  std::string problem;
  std::string out_dir = ".";
};

struct PseudoOpts : CommonOpts
{
  std::vector<double> eps;
  std::vector<double> window;  // empty or 4 entries
  std::vector<int> grid;       // empty or 2 entries
  bool no_certify = false;
  bool no_field = false;
};

struct BoundOpts : CommonOpts
{
  std::string kind;
  std::vector<double> eps;
  double t_end = 0.0;
  int nt = 200;
  bool majorant = false;
};

struct BoundDdeOpts : CommonOpts
{
  std::string variant = "split";
  std::string y0 = "auto";
  double t_end = 0.0;
  int nt = 200;
  bool statement_tail = false;
  bool with_history = false;
};

struct LowerOpts : CommonOpts
{
  std::vector<double> x_range;
  int nx = 100;
  bool no_bracket = false;
};

struct SimOpts : CommonOpts
{
  double h = 0.0;
  double t_end = 0.0;
  int samples = 0;
  bool components = false;
  bool fundamental = false;
};

struct CompareOpts : CommonOpts
{
  std::string variant = "all";
  std::string y0 = "auto";
  std::vector<double> eps;
  double t_end = 0.0;
  int samples = 400;
  bool statement_tail = false;
  bool history = false;
  bool majorant = false;
};

double ParseY0(const std::string &s)
{
  if (s == "auto")
  {
    return -1.0;
  }
  try
  {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size() || !(v > 0.0))
    {
      throw std::invalid_argument("y0");
    }
    return v;
  }
  catch (const std::exception &)
  {
    throw Fatal{2, "--y0 expects a positive number or \"auto\", got \"" + s + "\""};
  }
}

std::vector<std::string> VariantList(const std::string &v)
{
  if (v == "all")
  {
    return {"split", "vertical", "nonsplit", "nonsplit-shifted"};
  }
  return {v};
}

// ---- subcommands -------------------------------------------------------------

int RunPseudospectrum(const PseudoOpts &o, int argc, char **argv)
{
  ProblemHandle p;
  OpenProblem(o.problem, p);
  Outputs outs(o.out_dir, "pseudospectrum", o.problem, p, argc, argv);

  std::vector<double> eps = o.eps.empty() ? std::vector<double>{1e-1, 1e-2, 1e-3} : o.eps;
  const double *win = nullptr;
  if (!o.window.empty())
  {
    if (o.window.size() != 4)
    {
      throw Fatal{2, "--window expects re_lo,re_hi,im_lo,im_hi"};
    }
    win = o.window.data();
  }
  int nx = 0, ny = 0;
  if (!o.grid.empty())
  {
    if (o.grid.size() != 2)
    {
      throw Fatal{2, "--grid expects nx,ny"};
    }
    nx = o.grid[0];
    ny = o.grid[1];
  }

  TableHandle field, levels, summary;
  Check(tgb_pseudospectrum(p.p, eps.data(), static_cast<int>(eps.size()), win, nx, ny,
                           o.no_certify ? 0 : 1, o.no_field ? nullptr : &field.t, &levels.t,
                           &summary.t));

  json eps_json = json::array();
  for (double e : eps)
  {
    eps_json.push_back(Fmt17(e));
  }
  outs.Manifest()["params"] = {{"eps", eps_json},
                               {"grid", o.grid.empty() ? json(nullptr) : json(o.grid)},
                               {"window", o.window.empty() ? json(nullptr) : json(o.window)},
                               {"certify", !o.no_certify}};
  if (field.t != nullptr)
  {
    outs.WriteCsv("_field.csv", field.t);
  }
  outs.WriteCsv("_levels.csv", levels.t);
  outs.WriteCsv("_summary.csv", summary.t);

  // Console recap: one line per epsilon.
  const double *se = ColByName(summary.t, "eps");
  const double *sa = ColByName(summary.t, "alpha");
  const double *sl = ColByName(summary.t, "arc_length");
  const double *sc = ColByName(summary.t, "certified");
  for (int r = 0; r < tgb_table_nrows(summary.t); r++)
  {
    std::printf("eps=%-12.6g alpha_eps=%- 18.12g L_eps=%-18.12g certified=%s\n", se[r], sa[r],
                sl[r], sc[r] != 0.0 ? "yes" : "no");
  }
  outs.WriteManifest();
  return 0;
}

int RunBound(const BoundOpts &o, int argc, char **argv)
{
  ProblemHandle p;
  OpenProblem(o.problem, p);
  std::string kind = tgb_problem_kind(p.p);
  if (kind != o.kind)
  {
    throw Fatal{2, "bound " + o.kind + " got a " + kind + " problem (\"" + o.problem + "\")"};
  }
  Outputs outs(o.out_dir, "bound", o.problem, p, argc, argv);

  std::vector<double> eps = o.eps.empty() ? DefaultEpsMesh() : o.eps;
  std::vector<double> times;
  if (kind == "diffeq")
  {
    auto n_end = static_cast<int>(std::llround(o.t_end));
    if (n_end < 0 || std::abs(o.t_end - n_end) > 1e-9)
    {
      throw Fatal{2, "--t-end for diffeq problems is an integer step count"};
    }
    int stride = std::max(1, (n_end + o.nt - 1) / o.nt);
    for (int n = 0; n <= n_end; n += stride)
    {
      times.push_back(n);
    }
    if (times.back() != n_end)
    {
      times.push_back(n_end);
    }
  }
  else
  {
    if (!(o.t_end > 0.0))
    {
      throw Fatal{2, "--t-end must be positive"};
    }
    times = Linspace(0.0, o.t_end, o.nt);
  }

  TableHandle t;
  Check(tgb_bound(p.p, eps.data(), static_cast<int>(eps.size()), times.data(),
                  static_cast<int>(times.size()), o.majorant ? 1 : 0, &t.t));

  json eps_json = json::array();
  for (double e : eps)
  {
    eps_json.push_back(Fmt17(e));
  }
  outs.Manifest()["params"] = {{"eps_mesh", eps_json},
                               {"t_end", Fmt17(o.t_end)},
                               {"nt", o.nt},
                               {"majorant", o.majorant}};
  outs.WriteCsv(".csv", t.t);
  const char *cert = tgb_table_meta_get(t.t, "certified");
  std::printf("bound curve over %d %s values, %zu epsilon levels; certified=%s\n",
              tgb_table_nrows(t.t), kind == "diffeq" ? "step" : "time", eps.size(),
              cert != nullptr && std::string(cert) == "1" ? "yes" : "no");
  outs.WriteManifest();
  return 0;
}

int RunBoundDde(const BoundDdeOpts &o, int argc, char **argv)
{
  ProblemHandle p;
  OpenProblem(o.problem, p);
  if (std::string(tgb_problem_kind(p.p)) != "dde")
  {
    throw Fatal{2, "bound dde got a " + std::string(tgb_problem_kind(p.p)) + " problem"};
  }
  Outputs outs(o.out_dir, "bound", o.problem, p, argc, argv);

  double tau = tgb_problem_delay(p.p);
  if (!(o.t_end > tau))
  {
    throw Fatal{2, "--t-end must exceed the delay tau = " + Fmt17(tau)};
  }
  std::vector<double> times = Linspace(tau, o.t_end, o.nt);
  double y0 = ParseY0(o.y0);

  std::vector<std::string> variants = VariantList(o.variant);
  std::vector<std::pair<std::string, std::vector<double>>> cols;
  cols.emplace_back("t", times);
  std::vector<double> envelope(times.size(),
                               std::numeric_limits<double>::infinity());
  json meta = json::object();
  int produced = 0;
  std::string first_error;
  for (const auto &v : variants)
  {
    TableHandle t;
    tgb_status s = tgb_bound_dde(p.p, v.c_str(), y0, times.data(),
                                 static_cast<int>(times.size()), o.statement_tail ? 1 : 0,
                                 o.with_history ? 1 : 0, &t.t);
    if (s != TGB_OK)
    {
      std::string msg = std::string(tgb_status_name(s)) + ": " + tgb_last_error();
      if (variants.size() == 1)
      {
        throw Fatal{ExitCodeFor(s), msg};
      }
      std::fprintf(stderr, "variant %s skipped (%s)\n", v.c_str(), msg.c_str());
      meta["skipped_" + v] = msg;
      if (first_error.empty())
      {
        first_error = msg;
      }
      continue;
    }
    produced++;
    const double *b = ColByName(t.t, "bound");
    std::string cname = "bound_" + v;
    std::replace(cname.begin(), cname.end(), '-', '_');
    cols.emplace_back(cname, std::vector<double>(b, b + times.size()));
    for (std::size_t i = 0; i < times.size(); i++)
    {
      envelope[i] = std::min(envelope[i], b[i]);
    }
    meta[v] = MetaJson(t.t);
    std::printf("%-18s y0=%-12.6g eta=%-12.6g x0=%-12.6g I0=%-12.6g C=%-12.6g\n", v.c_str(),
                std::stod(tgb_table_meta_get(t.t, "y0")), std::stod(tgb_table_meta_get(t.t, "eta")),
                std::stod(tgb_table_meta_get(t.t, "x0")), std::stod(tgb_table_meta_get(t.t, "I0")),
                std::stod(tgb_table_meta_get(t.t, "C")));
  }
  if (produced == 0)
  {
    throw Fatal{1, "every variant was infeasible; first error: " + first_error};
  }
  if (produced > 1)
  {
    cols.insert(cols.begin() + 1, {"bound", envelope});
  }

  outs.Manifest()["params"] = {{"variant", o.variant},
                               {"y0", o.y0},
                               {"t_end", Fmt17(o.t_end)},
                               {"nt", o.nt},
                               {"statement_tail", o.statement_tail},
                               {"history", o.with_history}};
  outs.WriteCsvColumns(".csv", cols, meta);
  outs.WriteManifest();
  return 0;
}

int RunLowerBound(const LowerOpts &o, int argc, char **argv)
{
  ProblemHandle p;
  OpenProblem(o.problem, p);
  Outputs outs(o.out_dir, "lower-bound", o.problem, p, argc, argv);
  if (o.x_range.size() != 2)
  {
    throw Fatal{2, "--x-range expects lo,hi"};
  }

  TableHandle t;
  Check(tgb_lower_bound(p.p, o.x_range[0], o.x_range[1], o.nx, &t.t));
  double best = std::stod(tgb_table_meta_get(t.t, "best"));
  double best_x = std::stod(tgb_table_meta_get(t.t, "best_x"));
  std::printf("lower bound on sup_t ||Psi(t)||: %.12g (at x = %.12g)\n", best, best_x);

  outs.Manifest()["params"] = {{"x_range", o.x_range}, {"nx", o.nx}};
  outs.Manifest()["lower_bound"] = Fmt17(best);
  outs.Manifest()["best_x"] = Fmt17(best_x);
  outs.WriteCsv(".csv", t.t);

  // Bracket the worst case from above with the delay bound when possible.
  std::string kind = tgb_problem_kind(p.p);
  if (kind == "dde" && !o.no_bracket)
  {
    double tau = tgb_problem_delay(p.p);
    std::vector<double> times = Linspace(tau, 20.0 * tau, 200);
    double ub = 0.0;
    bool have_ub = false;
    std::string used_variant;
    for (const char *v : {"split", "nonsplit-shifted", "nonsplit"})
    {
      TableHandle bt;
      if (tgb_bound_dde(p.p, v, -1.0, times.data(), static_cast<int>(times.size()), 0, 0,
                        &bt.t) != TGB_OK)
      {
        continue;
      }
      const double *b = ColByName(bt.t, "bound");
      double curve_max = *std::max_element(b, b + times.size());
      // sup over all t >= 0 needs the [0, tau] segment and the range past
      // the curve as well; both caps come with the bound table.
      double initial_sup = MetaNumber(bt.t, "initial_sup");
      double decay_cap = MetaNumber(bt.t, "decay_cap");
      if (!std::isfinite(initial_sup) || !std::isfinite(decay_cap))
      {
        continue;
      }
      ub = std::max({curve_max, initial_sup, decay_cap});
      have_ub = true;
      used_variant = v;
      outs.Manifest()["bracket"] = {
          {"upper", Fmt17(ub)},
          {"variant", v},
          {"curve_max", Fmt17(curve_max)},
          {"initial_sup", Fmt17(initial_sup)},
          {"decay_cap", Fmt17(decay_cap)},
          {"curve_window", json::array({Fmt17(tau), Fmt17(20.0 * tau)})},
          {"note", "upper value covers all t >= 0: max of the bound curve on the "
                   "stated window, a log-norm cap on [0, tau], and a decreasing-"
                   "majorant cap past the window"}};
      break;
    }
    if (have_ub)
    {
      std::printf("bracket: sup_t growth over t >= 0 lies in [%.6g, %.6g] (variant %s)\n",
                  best, ub, used_variant.c_str());
    }
    else
    {
      std::printf("bracket: no feasible upper-bound contour found; lower bound only\n");
      outs.Manifest()["bracket"] = "infeasible";
    }
  }
  outs.WriteManifest();
  return 0;
}

int RunSimulate(const SimOpts &o, int argc, char **argv)
{
  ProblemHandle p;
  OpenProblem(o.problem, p);
  Outputs outs(o.out_dir, "simulate", o.problem, p, argc, argv);

  TableHandle t;
  if (o.fundamental)
  {
    if (std::string(tgb_problem_kind(p.p)) != "dde")
    {
      throw Fatal{2, "--fundamental applies to dde problems"};
    }
    Check(tgb_fundamental_norms(p.p, o.t_end, o.samples > 0 ? o.samples : 400, o.h, &t.t));
  }
  else
  {
    Check(tgb_simulate(p.p, o.h, o.t_end, o.samples, o.components ? 1 : 0, &t.t));
  }
  outs.Manifest()["params"] = {{"h", Fmt17(o.h)},
                               {"t_end", Fmt17(o.t_end)},
                               {"samples", o.samples},
                               {"components", o.components},
                               {"fundamental", o.fundamental}};
  outs.WriteCsv(".csv", t.t);

  const double *norm = ColByName(t.t, "norm");
  int nr = tgb_table_nrows(t.t);
  double peak = 0.0;
  int arg = 0;
  for (int r = 0; r < nr; r++)
  {
    if (norm[r] > peak)
    {
      peak = norm[r];
      arg = r;
    }
  }
  const double *tcol = tgb_table_col(t.t, 0);
  std::printf("%d samples; peak norm %.12g at %s = %.12g; final norm %.12g\n", nr, peak,
              tgb_table_col_name(t.t, 0), tcol[arg], norm[nr - 1]);
  outs.WriteManifest();
  return 0;
}

int RunCompare(const CompareOpts &o, int argc, char **argv)
{
  ProblemHandle p;
  OpenProblem(o.problem, p);
  Outputs outs(o.out_dir, "compare", o.problem, p, argc, argv);
  std::string kind = tgb_problem_kind(p.p);

  std::vector<std::pair<std::string, std::vector<double>>> cols;
  json meta = json::object();
  std::vector<double> sim_norm;
  std::vector<double> axis;
  std::vector<std::vector<double>> bound_cols;
  std::vector<std::string> bound_names;

  if (kind == "dde")
  {
    double tau = tgb_problem_delay(p.p);
    if (!(o.t_end > tau))
    {
      throw Fatal{2, "--t-end must exceed the delay tau = " + Fmt17(tau)};
    }
    // Reference trajectory: fundamental-solution norm, or the problem's own
    // initial data with --history.
    TableHandle sim;
    if (o.history)
    {
      Check(tgb_simulate(p.p, 0.0, o.t_end, o.samples, 0, &sim.t));
    }
    else
    {
      Check(tgb_fundamental_norms(p.p, o.t_end, o.samples, 0.0, &sim.t));
    }
    meta["simulation"] = MetaJson(sim.t);
    const double *st = ColByName(sim.t, "t");
    const double *sn = ColByName(sim.t, "norm");
    int nr = tgb_table_nrows(sim.t);
    // The delay bounds start at tau; join on the sample times from tau on.
    for (int r = 0; r < nr; r++)
    {
      if (st[r] >= tau * (1.0 - 1e-12))
      {
        axis.push_back(std::max(st[r], tau));
        sim_norm.push_back(sn[r]);
      }
    }
    if (axis.size() < 2)
    {
      throw Fatal{2, "too few samples past the delay; raise --t-end or --samples"};
    }

    double y0 = ParseY0(o.y0);
    std::string first_error;
    for (const auto &v : VariantList(o.variant))
    {
      TableHandle bt;
      tgb_status s =
          tgb_bound_dde(p.p, v.c_str(), y0, axis.data(), static_cast<int>(axis.size()),
                        o.statement_tail ? 1 : 0, o.history ? 1 : 0, &bt.t);
      if (s != TGB_OK)
      {
        std::string msg = std::string(tgb_status_name(s)) + ": " + tgb_last_error();
        std::fprintf(stderr, "variant %s skipped (%s)\n", v.c_str(), msg.c_str());
        meta["skipped_" + v] = msg;
        if (first_error.empty())
        {
          first_error = msg;
        }
        continue;
      }
      const double *b = ColByName(bt.t, "bound");
      std::string cname = "bound_" + v;
      std::replace(cname.begin(), cname.end(), '-', '_');
      bound_names.push_back(cname);
      bound_cols.emplace_back(b, b + axis.size());
      meta[v] = MetaJson(bt.t);
    }
    if (bound_cols.empty())
    {
      throw Fatal{1, "every variant was infeasible; first error: " + first_error};
    }
    cols.emplace_back("t", axis);
  }
  else
  {
    // ode / hode / diffeq: simulate, then the envelope bound on the same axis.
    TableHandle sim;
    Check(tgb_simulate(p.p, 0.0, o.t_end, o.samples, 0, &sim.t));
    meta["simulation"] = MetaJson(sim.t);
    const double *st = tgb_table_col(sim.t, 0);
    const double *sn = ColByName(sim.t, "norm");
    int nr = tgb_table_nrows(sim.t);
    axis.assign(st, st + nr);
    sim_norm.assign(sn, sn + nr);

    std::vector<double> eps = o.eps.empty() ? DefaultEpsMesh() : o.eps;
    TableHandle bt;
    Check(tgb_bound(p.p, eps.data(), static_cast<int>(eps.size()), axis.data(),
                    static_cast<int>(axis.size()), o.majorant ? 1 : 0, &bt.t));
    const double *b = ColByName(bt.t, "bound");
    bound_names.emplace_back("bound");
    bound_cols.emplace_back(b, b + axis.size());
    meta["bound"] = MetaJson(bt.t);
    cols.emplace_back(kind == "diffeq" ? "n" : "t", axis);
  }

  cols.emplace_back("norm", sim_norm);
  for (std::size_t k = 0; k < bound_cols.size(); k++)
  {
    cols.emplace_back(bound_names[k], bound_cols[k]);
  }

  // Soundness verdict: every bound column dominates the simulated norm.
  std::vector<double> sound(axis.size(), 1.0);
  bool all_sound = true;
  double worst_gap = 0.0;
  std::size_t worst_row = 0;
  for (std::size_t r = 0; r < axis.size(); r++)
  {
    for (const auto &bc : bound_cols)
    {
      if (bc[r] < sim_norm[r] * (1.0 - 1e-8))
      {
        sound[r] = 0.0;
        all_sound = false;
        double gap = sim_norm[r] - bc[r];
        if (gap > worst_gap)
        {
          worst_gap = gap;
          worst_row = r;
        }
      }
    }
  }
  cols.emplace_back("sound", sound);

  meta["sound"] = all_sound ? "1" : "0";
  outs.Manifest()["params"] = {{"variant", o.variant},      {"y0", o.y0},
                               {"t_end", Fmt17(o.t_end)},   {"samples", o.samples},
                               {"history", o.history},      {"majorant", o.majorant},
                               {"statement_tail", o.statement_tail}};
  outs.WriteCsvColumns(".csv", cols, meta);
  outs.WriteManifest();

  if (!all_sound)
  {
    std::fprintf(stderr,
                 "SOUNDNESS VIOLATION: bound < simulated norm at %s = %.12g "
                 "(norm %.17g, deficit %.3g) — this indicates a bug\n",
                 cols.front().first.c_str(), axis[worst_row], sim_norm[worst_row], worst_gap);
    return 3;
  }
  std::printf("soundness: every bound column dominates the simulated norm (%zu rows)\n",
              axis.size());
  return 0;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"transient-growth bounds from pseudospectra"};
  app.require_subcommand(1);

  PseudoOpts po;
  auto *ps = app.add_subcommand("pseudospectrum",
                                "sigma_min field, level-set curves, and per-eps summaries");
  ps->add_option("problem", po.problem, "builtin id or JSON file")->required();
  ps->add_option("--eps", po.eps, "level values")->delimiter(',');
  ps->add_option("--window", po.window, "re_lo,re_hi,im_lo,im_hi")->delimiter(',');
  ps->add_option("--grid", po.grid, "nx,ny")->delimiter(',');
  ps->add_flag("--no-certify", po.no_certify, "skip grid-doubling certification");
  ps->add_flag("--no-field", po.no_field, "skip the (large) field CSV");
  ps->add_option("-o,--out", po.out_dir, "output directory");

  BoundOpts bo;
  auto *bs = app.add_subcommand("bound", "certified transient upper-bound curves");
  bs->add_option("kind", bo.kind, "ode|hode|diffeq|dde")
      ->required()
      ->check(CLI::IsMember({"ode", "hode", "diffeq", "dde"}));
  bs->add_option("problem", bo.problem, "builtin id or JSON file")->required();
  bs->add_option("--eps-mesh", bo.eps, "epsilon mesh (continuous/discrete kinds)")
      ->delimiter(',');
  bs->add_option("--t-end", bo.t_end, "final time (diffeq: final step)")->required();
  bs->add_option("--nt", bo.nt, "number of output times");
  bs->add_flag("--majorant", bo.majorant, "diffeq: scaled-power majorant contours");
  bs->add_option("-o,--out", bo.out_dir, "output directory");

  BoundDdeOpts ddo;
  bs->add_option("--variant", ddo.variant, "dde: split|vertical|nonsplit|nonsplit-shifted|all")
      ->check(CLI::IsMember({"split", "vertical", "nonsplit", "nonsplit-shifted", "all"}));
  bs->add_option("--y0", ddo.y0, "dde: contour half-height (positive number or \"auto\")");
  bs->add_flag("--statement-tail", ddo.statement_tail,
               "dde: use the simplified tail form e^{x0 t} C/(t/tau)");
  bs->add_flag("--history", ddo.with_history,
               "dde: bound ||u(t)|| for the problem's initial data instead of ||Psi(t)||");

  LowerOpts lo;
  auto *ls = app.add_subcommand("lower-bound", "resolvent lower bound on sup_t ||Psi(t)||");
  ls->add_option("problem", lo.problem, "builtin id or JSON file")->required();
  ls->add_option("--x-range", lo.x_range, "lo,hi")->required()->delimiter(',');
  ls->add_option("--nx", lo.nx, "x-mesh size");
  ls->add_flag("--no-bracket", lo.no_bracket, "skip the upper-bound bracket");
  ls->add_option("-o,--out", lo.out_dir, "output directory");

  SimOpts so;
  auto *ss = app.add_subcommand("simulate", "reference trajectory");
  ss->set_help_flag("--help", "print help and exit");  // frees "h" for the step-size option
  ss->add_option("problem", so.problem, "builtin id or JSON file")->required();
  ss->add_option("--h", so.h, "step size (dde kinds; 0 = auto)");
  ss->add_option("--t-end", so.t_end, "final time (diffeq: final step)")->required();
  ss->add_option("--samples", so.samples, "output rows (0 = every step)");
  ss->add_flag("--components", so.components, "emit state components");
  ss->add_flag("--fundamental", so.fundamental, "dde: fundamental-solution norm curve");
  ss->add_option("-o,--out", so.out_dir, "output directory");

  CompareOpts co;
  auto *cs = app.add_subcommand("compare", "simulation vs bounds with a soundness verdict");
  cs->add_option("problem", co.problem, "builtin id or JSON file")->required();
  cs->add_option("--variant", co.variant, "dde: variant or \"all\"")
      ->check(CLI::IsMember({"split", "vertical", "nonsplit", "nonsplit-shifted", "all"}));
  cs->add_option("--y0", co.y0, "dde: contour half-height or \"auto\"");
  cs->add_option("--eps-mesh", co.eps, "epsilon mesh (non-dde kinds)")->delimiter(',');
  cs->add_option("--t-end", co.t_end, "final time (diffeq: final step)")->required();
  cs->add_option("--samples", co.samples, "comparison rows");
  cs->add_flag("--statement-tail", co.statement_tail, "dde: simplified tail form");
  cs->add_flag("--history", co.history, "dde: compare ||u(t)|| for the problem's initial data");
  cs->add_flag("--majorant", co.majorant, "diffeq: majorant contours");
  cs->add_option("-o,--out", co.out_dir, "output directory");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try
  {
    if (ps->parsed())
    {
      return RunPseudospectrum(po, argc, argv);
    }
    if (bs->parsed())
    {
      if (bo.kind == "dde")
      {
        ddo.problem = bo.problem;
        ddo.out_dir = bo.out_dir;
        ddo.t_end = bo.t_end;
        ddo.nt = bo.nt;
        return RunBoundDde(ddo, argc, argv);
      }
      return RunBound(bo, argc, argv);
    }
    if (ls->parsed())
    {
      return RunLowerBound(lo, argc, argv);
    }
    if (ss->parsed())
    {
      return RunSimulate(so, argc, argv);
    }
    if (cs->parsed())
    {
      return RunCompare(co, argc, argv);
    }
  }
  catch (const Fatal &f)
  {
    std::fprintf(stderr, "error: %s\n", f.msg.c_str());
    return f.code;
  }
  catch (const std::exception &e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
