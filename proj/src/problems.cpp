// SPDX-License-Identifier: Apache-2.0

#include "problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace tgb::problems
{

using nlohmann::json;

namespace
{

[[noreturn]] void FailAt(const std::string &path, const std::string &msg)
{
  Fail(ErrKind::PARSE, path + ": " + msg);
}

const json &Need(const json &obj, const char *key, const std::string &path)
{
  if (!obj.is_object())
  {
    FailAt(path, "expected an object");
  }
  auto it = obj.find(key);
  if (it == obj.end())
  {
    FailAt(path, std::string("missing required field \"") + key + "\"");
  }
  return *it;
}

double ParseReal(const json &j, const std::string &path)
{
  if (!j.is_number())
  {
    FailAt(path, "expected a number");
  }
  return j.get<double>();
}

Cplx ParseScalar(const json &j, const std::string &path)
{
  if (j.is_number())
  {
    return Cplx(j.get<double>(), 0.0);
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
  {
    return Cplx(j[0].get<double>(), j[1].get<double>());
  }
  FailAt(path, "expected a number or an [re, im] pair");
}

CVector ParseVector(const json &j, const std::string &path)
{
  if (!j.is_array() || j.empty())
  {
    FailAt(path, "expected a nonempty array of scalars");
  }
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); i++)
  {
    v(static_cast<Eigen::Index>(i)) = ParseScalar(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

CMatrix BuiltMatrix(const std::string &builder, const std::string &field, int n,
                    const std::string &path);

CMatrix ParseMatrix(const json &j, const std::string &path, const std::string &field, int n)
{
  if (j.is_string())
  {
    return BuiltMatrix(j.get<std::string>(), field, n, path);
  }
  if (!j.is_array() || j.empty())
  {
    FailAt(path, "expected an array of rows or a builder name");
  }
  if (!j[0].is_array())
  {
    // A 1x1 matrix may be written as a single-entry row.
    FailAt(path, "expected an array of rows (each row an array)");
  }
  std::size_t cols = j[0].size();
  if (cols == 0)
  {
    FailAt(path + "[0]", "empty row");
  }
  CMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); r++)
  {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols)
    {
      FailAt(rp, "ragged matrix: every row needs " + std::to_string(cols) + " entries");
    }
    for (std::size_t c = 0; c < cols; c++)
    {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          ParseScalar(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

json ScalarJson(Cplx v)
{
  if (v.imag() == 0.0)
  {
    return json(v.real());
  }
  return json::array({v.real(), v.imag()});
}

json VectorJson(const CVector &v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); i++)
  {
    out.push_back(ScalarJson(v(i)));
  }
  return out;
}

json MatrixJson(const CMatrix &m)
{
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); r++)
  {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); c++)
    {
      row.push_back(ScalarJson(m(r, c)));
    }
    out.push_back(row);
  }
  return out;
}

CMatrix BuiltMatrix(const std::string &builder, const std::string &field, int n,
                    const std::string &path)
{
  if (builder == "laser")
  {
    ProblemDef p = LaserProblem();
    if (field == "A")
    {
      return p.dde.a;
    }
    if (field == "B")
    {
      return p.dde.b;
    }
    FailAt(path, "builder \"laser\" provides matrices A and B only");
  }
  if (builder == "pdde")
  {
    if (n < 2)
    {
      FailAt(path, "builder \"pdde\" needs a top-level field n >= 2");
    }
    ProblemDef p = PddeProblem(n);
    if (field == "A")
    {
      return p.dde.a;
    }
    if (field == "B")
    {
      return p.dde.b;
    }
    FailAt(path, "builder \"pdde\" provides matrices A and B only");
  }
  FailAt(path, "unknown matrix builder \"" + builder + "\" (known: laser, pdde)");
}

simulate::History ParseHistory(const json &j, const std::string &path)
{
  simulate::History h;
  std::string type = Need(j, "type", path).is_string()
                         ? Need(j, "type", path).get<std::string>()
                         : std::string();
  const json &data = Need(j, "data", path);
  const std::string dp = path + ".data";
  if (type == "constant")
  {
    h.type = simulate::History::Type::CONSTANT;
    if (data.is_array() && !data.empty() && data[0].is_array())
    {
      if (data.size() != 1)
      {
        FailAt(dp, "constant history takes exactly one vector");
      }
      h.data = ParseVector(data[0], dp + "[0]");
    }
    else
    {
      h.data = ParseVector(data, dp);
    }
  }
  else if (type == "samples")
  {
    h.type = simulate::History::Type::SAMPLES;
    if (!data.is_array() || data.size() < 2 || !data[0].is_array())
    {
      FailAt(dp, "sampled history needs a list of at least two sample vectors");
    }
    CVector first = ParseVector(data[0], dp + "[0]");
    CMatrix m(first.size(), static_cast<Eigen::Index>(data.size()));
    m.col(0) = first;
    for (std::size_t c = 1; c < data.size(); c++)
    {
      CVector v = ParseVector(data[c], dp + "[" + std::to_string(c) + "]");
      if (v.size() != first.size())
      {
        FailAt(dp + "[" + std::to_string(c) + "]", "sample dimension mismatch");
      }
      m.col(static_cast<Eigen::Index>(c)) = v;
    }
    h.data = m;
  }
  else
  {
    FailAt(path + ".type", "expected \"constant\" or \"samples\"");
  }
  return h;
}

json HistoryJson(const simulate::History &h)
{
  json out;
  if (h.type == simulate::History::Type::CONSTANT)
  {
    out["type"] = "constant";
    out["data"] = VectorJson(h.data.col(0));
  }
  else
  {
    out["type"] = "samples";
    json cols = json::array();
    for (Eigen::Index c = 0; c < h.data.cols(); c++)
    {
      cols.push_back(VectorJson(h.data.col(c)));
    }
    out["data"] = cols;
  }
  return out;
}

void CheckSquareFinite(const CMatrix &m, const std::string &what)
{
  Require(m.rows() >= 1 && m.rows() == m.cols(), ErrKind::DIMENSION,
          what + " must be square and nonempty");
  CheckFinite(m, what.c_str());
}

}  // namespace

const char *KindName(Kind k)
{
  switch (k)
  {
    case Kind::kOde:
      return "ode";
    case Kind::kHode:
      return "hode";
    case Kind::kDiffeq:
      return "diffeq";
    case Kind::kDde:
      return "dde";
  }
  return "?";
}

Kind KindFromName(const std::string &name)
{
  if (name == "ode")
  {
    return Kind::kOde;
  }
  if (name == "hode")
  {
    return Kind::kHode;
  }
  if (name == "diffeq")
  {
    return Kind::kDiffeq;
  }
  if (name == "dde")
  {
    return Kind::kDde;
  }
  Fail(ErrKind::PARSE, "kind: expected one of ode, hode, diffeq, dde; got \"" + name + "\"");
}

void Validate(const ProblemDef &p)
{
  switch (p.kind)
  {
    case Kind::kOde:
    {
      CheckSquareFinite(p.m, "M");
      if (p.u0.size() > 0)
      {
        Require(p.u0.size() == p.m.rows(), ErrKind::DIMENSION, "u0 length must match M");
        CheckFinite(p.u0, "u0");
      }
      return;
    }
    case Kind::kHode:
    case Kind::kDiffeq:
    {
      Require(p.hode.discrete == (p.kind == Kind::kDiffeq), ErrKind::INVALID_ARGUMENT,
              "problem kind and coefficient form disagree");
      odebounds::ValidateHode(p.hode);
      return;
    }
    case Kind::kDde:
    {
      CheckSquareFinite(p.dde.a, "A");
      CheckSquareFinite(p.dde.b, "B");
      Require(p.dde.b.rows() == p.dde.a.rows(), ErrKind::DIMENSION, "A and B sizes must match");
      Require(p.dde.tau > 0.0 && std::isfinite(p.dde.tau), ErrKind::INVALID_ARGUMENT,
              "tau must be positive");
      Require(p.history.data.rows() == p.dde.a.rows(), ErrKind::DIMENSION,
              "history dimension must match A");
      Require(p.history.data.cols() >= 1, ErrKind::DIMENSION, "history needs data");
      if (p.history.type == simulate::History::Type::SAMPLES)
      {
        Require(p.history.data.cols() >= 2, ErrKind::DIMENSION,
                "sampled history needs at least two samples");
      }
      CheckFinite(p.history.data, "history");
      Require(p.dde_u0.size() == p.dde.a.rows(), ErrKind::DIMENSION,
              "u0 length must match A");
      CheckFinite(p.dde_u0, "u0");
      return;
    }
  }
  Fail(ErrKind::INVALID_ARGUMENT, "unknown problem kind");
}

matfun::MatFunction CharacteristicFunction(const ProblemDef &p)
{
  switch (p.kind)
  {
    case Kind::kOde:
      return matfun::Pencil{p.m};
    case Kind::kDde:
      return matfun::DelayChar{p.dde.a, p.dde.b, p.dde.tau};
    case Kind::kHode:
    case Kind::kDiffeq:
      return odebounds::CharacteristicPoly(p.hode);
  }
  Fail(ErrKind::INVALID_ARGUMENT, "unknown problem kind");
}

ProblemDef LaserProblem()
{
  ProblemDef p;
  p.kind = Kind::kDde;
  p.name = "laser";
  p.notes = {"three-variable laser feedback model linearized at an equilibrium",
             "history is constant and equal to the initial displacement"};
  RMatrix a(3, 3);
  a << -8.4983e-1, 1.4786e-1, 4.4381e1,   //
      3.7540e-3, -2.8049e-1, -2.2922e2,   //
      -1.7537e-1, 2.2951e-2, -3.6079e-1;  //
  RMatrix b = RMatrix::Zero(3, 3);
  b(0, 0) = 2.8e-1;
  b(1, 1) = -2.8e-1;
  RVector eq(3);
  eq << 1.8458171368652383, -0.2415616277234652, 7.6430064479131916;
  p.dde.a = a.cast<Cplx>();
  p.dde.b = b.cast<Cplx>();
  p.dde.tau = 1.0;
  p.dde_u0 = (0.0015 * eq).cast<Cplx>();
  p.history.type = simulate::History::Type::CONSTANT;
  p.history.data = p.dde_u0;
  return p;
}

ProblemDef PddeProblem(int n)
{
  Require(n >= 2, ErrKind::INVALID_ARGUMENT, "pdde needs n >= 2 interior points");
  ProblemDef p;
  p.kind = Kind::kDde;
  p.name = n == 100 ? "pdde" : ("pdde:" + std::to_string(n));
  p.notes = {"finite-difference discretization of a 1-D reaction-diffusion equation with one "
             "constant feedback delay"};
  const double pi = 3.14159265358979323846;
  double h = pi / (n + 1);
  RMatrix a = RMatrix::Zero(n, n);
  for (int i = 0; i < n; i++)
  {
    a(i, i) = -2.0 / (h * h) + 0.5;
    if (i + 1 < n)
    {
      a(i, i + 1) = 1.0 / (h * h);
      a(i + 1, i) = 1.0 / (h * h);
    }
  }
  RMatrix b = RMatrix::Zero(n, n);
  for (int j = 1; j <= n; j++)
  {
    double x = j * h;
    b(j - 1, j - 1) = -4.1 + x * (1.0 - std::exp(x - pi));
  }
  p.dde.a = a.cast<Cplx>();
  p.dde.b = b.cast<Cplx>();
  p.dde.tau = 0.2;
  p.dde_u0 = CVector::Zero(n);
  p.dde_u0(0) = 1.0;
  p.history.type = simulate::History::Type::CONSTANT;
  p.history.data = CMatrix::Zero(n, 1);
  return p;
}

ProblemDef ScalarDdeProblem()
{
  ProblemDef p;
  p.kind = Kind::kDde;
  p.name = "scalar";
  p.notes = {"scalar test equation u' = -u - 0.5 u(t-1), history identically 1"};
  p.dde.a = CMatrix::Constant(1, 1, Cplx(-1.0, 0.0));
  p.dde.b = CMatrix::Constant(1, 1, Cplx(-0.5, 0.0));
  p.dde.tau = 1.0;
  p.dde_u0 = CVector::Constant(1, Cplx(1.0, 0.0));
  p.history.type = simulate::History::Type::CONSTANT;
  p.history.data = CMatrix::Constant(1, 1, Cplx(1.0, 0.0));
  return p;
}

ProblemDef LaserDiffeqProblem(int n_per_delay)
{
  Require(n_per_delay >= 1, ErrKind::INVALID_ARGUMENT, "need at least one step per delay");
  ProblemDef laser = LaserProblem();
  ProblemDef p;
  p.kind = Kind::kDiffeq;
  p.name = n_per_delay == 10 ? "laser-diffeq" : ("laser-diffeq:" + std::to_string(n_per_delay));
  p.notes = {"forward-Euler discretization of the laser model; only the lag-0 and deepest-lag "
             "coefficients are nonzero"};
  double h = laser.dde.tau / n_per_delay;
  p.hode.discrete = true;
  p.hode.coeffs.assign(static_cast<std::size_t>(n_per_delay) + 1, CMatrix::Zero(3, 3));
  p.hode.coeffs[0] = CMatrix::Identity(3, 3) + h * laser.dde.a;
  p.hode.coeffs[static_cast<std::size_t>(n_per_delay)] = h * laser.dde.b;
  p.hode.initial.assign(static_cast<std::size_t>(n_per_delay) + 1, laser.dde_u0);
  return p;
}

std::vector<std::string> BuiltinNames()
{
  return {"laser", "pdde", "scalar", "laser-diffeq"};
}

ProblemDef BuiltinProblem(const std::string &spec)
{
  std::string base = spec;
  int param = -1;
  auto colon = spec.find(':');
  if (colon != std::string::npos)
  {
    base = spec.substr(0, colon);
    std::string tail = spec.substr(colon + 1);
    try
    {
      std::size_t used = 0;
      param = std::stoi(tail, &used);
      Require(used == tail.size() && param > 0, ErrKind::PARSE, "bad parameter");
    }
    catch (const Error &)
    {
      throw;
    }
    catch (const std::exception &)
    {
      Fail(ErrKind::PARSE, "problem parameter after ':' must be a positive integer: " + spec);
    }
  }
  if (base == "laser")
  {
    Require(param < 0, ErrKind::PARSE, "laser takes no parameter");
    return LaserProblem();
  }
  if (base == "pdde")
  {
    return PddeProblem(param < 0 ? 100 : param);
  }
  if (base == "scalar")
  {
    Require(param < 0, ErrKind::PARSE, "scalar takes no parameter");
    return ScalarDdeProblem();
  }
  if (base == "laser-diffeq")
  {
    return LaserDiffeqProblem(param < 0 ? 10 : param);
  }
  Fail(ErrKind::NOT_FOUND,
       "unknown builtin problem \"" + spec + "\" (known: laser, pdde[:n], scalar, laser-diffeq[:n])");
}

ProblemDef ParseProblemJson(const std::string &text)
{
  json root;
  try
  {
    root = json::parse(text);
  }
  catch (const json::exception &e)
  {
    Fail(ErrKind::PARSE, std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object())
  {
    FailAt("$", "top level must be an object");
  }

  ProblemDef p;
  const json &kind = Need(root, "kind", "$");
  if (!kind.is_string())
  {
    FailAt("kind", "expected a string");
  }
  p.kind = KindFromName(kind.get<std::string>());
  if (root.contains("name"))
  {
    if (!root["name"].is_string())
    {
      FailAt("name", "expected a string");
    }
    p.name = root["name"].get<std::string>();
  }
  if (root.contains("notes"))
  {
    if (!root["notes"].is_array())
    {
      FailAt("notes", "expected an array of strings");
    }
    for (std::size_t i = 0; i < root["notes"].size(); i++)
    {
      if (!root["notes"][i].is_string())
      {
        FailAt("notes[" + std::to_string(i) + "]", "expected a string");
      }
      p.notes.push_back(root["notes"][i].get<std::string>());
    }
  }
  int n_hint = 0;
  if (root.contains("n"))
  {
    if (!root["n"].is_number_integer())
    {
      FailAt("n", "expected an integer");
    }
    n_hint = root["n"].get<int>();
  }

  switch (p.kind)
  {
    case Kind::kOde:
    {
      p.m = ParseMatrix(Need(root, "M", "$"), "M", "M", n_hint);
      p.u0 = ParseVector(Need(root, "u0", "$"), "u0");
      break;
    }
    case Kind::kDde:
    {
      p.dde.a = ParseMatrix(Need(root, "A", "$"), "A", "A", n_hint);
      p.dde.b = ParseMatrix(Need(root, "B", "$"), "B", "B", n_hint);
      p.dde.tau = ParseReal(Need(root, "tau", "$"), "tau");
      p.history = ParseHistory(Need(root, "history", "$"), "history");
      if (root.contains("u0"))
      {
        p.dde_u0 = ParseVector(root["u0"], "u0");
      }
      else
      {
        // Default initial value: the history evaluated at 0 (its last sample).
        p.dde_u0 = p.history.data.col(p.history.data.cols() - 1);
      }
      break;
    }
    case Kind::kHode:
    case Kind::kDiffeq:
    {
      p.hode.discrete = (p.kind == Kind::kDiffeq);
      const json &coeffs = Need(root, "coeffs", "$");
      if (!coeffs.is_array() || coeffs.empty())
      {
        FailAt("coeffs", "expected a nonempty list of matrices");
      }
      for (std::size_t i = 0; i < coeffs.size(); i++)
      {
        p.hode.coeffs.push_back(
            ParseMatrix(coeffs[i], "coeffs[" + std::to_string(i) + "]", "coeffs", n_hint));
      }
      const json &init = Need(root, "initial", "$");
      if (!init.is_array() || init.size() != coeffs.size())
      {
        FailAt("initial", "expected one initial vector per coefficient (" +
                              std::to_string(coeffs.size()) + ")");
      }
      for (std::size_t i = 0; i < init.size(); i++)
      {
        p.hode.initial.push_back(ParseVector(init[i], "initial[" + std::to_string(i) + "]"));
      }
      break;
    }
  }

  try
  {
    Validate(p);
  }
  catch (const Error &e)
  {
    if (e.kind() == ErrKind::PARSE)
    {
      throw;
    }
    Fail(ErrKind::PARSE, std::string("problem fails validation: ") + e.what());
  }
  return p;
}

std::string ProblemToJson(const ProblemDef &p)
{
  json out;
  out["kind"] = KindName(p.kind);
  if (!p.name.empty())
  {
    out["name"] = p.name;
  }
  if (!p.notes.empty())
  {
    out["notes"] = p.notes;
  }
  switch (p.kind)
  {
    case Kind::kOde:
    {
      out["M"] = MatrixJson(p.m);
      out["u0"] = VectorJson(p.u0);
      break;
    }
    case Kind::kDde:
    {
      out["A"] = MatrixJson(p.dde.a);
      out["B"] = MatrixJson(p.dde.b);
      out["tau"] = p.dde.tau;
      out["history"] = HistoryJson(p.history);
      out["u0"] = VectorJson(p.dde_u0);
      break;
    }
    case Kind::kHode:
    case Kind::kDiffeq:
    {
      json coeffs = json::array();
      for (const auto &c : p.hode.coeffs)
      {
        coeffs.push_back(MatrixJson(c));
      }
      out["coeffs"] = coeffs;
      json init = json::array();
      for (const auto &v : p.hode.initial)
      {
        init.push_back(VectorJson(v));
      }
      out["initial"] = init;
      break;
    }
  }
  return out.dump(2) + "\n";
}

ProblemDef LoadProblem(const std::string &path)
{
  std::ifstream in(path);
  Require(in.good(), ErrKind::IO, "cannot open problem file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  ProblemDef p = ParseProblemJson(buf.str());
  if (p.name.empty())
  {
    auto slash = path.find_last_of("/\\");
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = stem.find_last_of('.');
    p.name = dot == std::string::npos ? stem : stem.substr(0, dot);
  }
  return p;
}

void SaveProblem(const ProblemDef &p, const std::string &path)
{
  std::ofstream out(path);
  Require(out.good(), ErrKind::IO, "cannot open output file: " + path);
  out << ProblemToJson(p);
  Require(out.good(), ErrKind::IO, "write failed: " + path);
}

}  // namespace tgb::problems
