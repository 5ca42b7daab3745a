#include "coarse/group_model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <sstream>

#include "coarse/errors.hpp"

namespace coarse {

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw ConfigError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  return Rational{num / (g == 0 ? 1 : g), den / (g == 0 ? 1 : g)};
}

std::optional<Rational> Rational::from_double(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  std::int64_t den = 1;
  double scaled = v;
  for (int k = 0; k <= 30; ++k) {
    if (std::abs(scaled) < 9.0e15 && scaled == std::floor(scaled))
      return make(static_cast<std::int64_t>(scaled), den);
    scaled *= 2.0;
    den *= 2;
  }
  return std::nullopt;
}

std::optional<Rational> Rational::parse(const std::string& text) {
  std::istringstream in(text);
  long long num = 0;
  long long den = 1;
  if (!(in >> num)) return std::nullopt;
  char slash = 0;
  if (in >> slash) {
    if (slash != '/' || !(in >> den) || den == 0) return std::nullopt;
  }
  std::string rest;
  if (in >> rest) return std::nullopt;
  return make(num, den);
}

namespace {

using i128 = __int128;

struct WideRational {
  i128 num = 0;
  i128 den = 1;
};

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  while (b != 0) {
    const i128 r = a % b;
    a = b;
    b = r < 0 ? -r : r;
  }
  return a;
}

void add_to(WideRational& acc, const Rational& r, int weight) {
  const i128 num = acc.num * r.den + static_cast<i128>(r.num) * weight * acc.den;
  const i128 den = acc.den * r.den;
  const i128 g = gcd128(num, den);
  acc.num = g == 0 ? 0 : num / g;
  acc.den = g == 0 ? 1 : den / g;
  constexpr i128 limit = static_cast<i128>(1) << 100;
  if (acc.den > limit || acc.num > limit || acc.num < -limit)
    throw ConfigError("rational overflow while checking the root sum");
}

}  // namespace

double RootSystem::eval(std::size_t i, std::span<const double> t) const {
  const Vec& a = roots_.at(i).alpha;
  double v = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) v += a[j] * t[j];
  return v;
}

RootSystem RootSystem::with_convention(DistanceConvention c) const {
  RootSystem copy = *this;
  copy.convention_ = c;
  return copy;
}

ValidationResult validate_root_system(const RootSystemSpec& spec, DistanceConvention convention) {
  ValidationResult result;
  auto report = [&](std::string condition, std::optional<std::size_t> idx, std::string message) {
    result.diagnostics.push_back(Diagnostic{std::move(condition), idx, std::move(message)});
  };
  if (spec.dim_a < 1) report("malformed", std::nullopt, "dim_a must be a positive integer");
  if (spec.roots.empty()) report("malformed", std::nullopt, "at least one root is required");
  if (!result.diagnostics.empty()) return result;

  const auto dim = static_cast<std::size_t>(spec.dim_a);
  std::vector<Root> roots = spec.roots;
  bool shape_ok = true;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    Root& r = roots[i];
    if (r.alpha.size() != dim) {
      report("malformed", i, "alpha has " + std::to_string(r.alpha.size()) + " entries, expected " +
                                 std::to_string(dim));
      shape_ok = false;
      continue;
    }
    if (r.dim_v < 1) {
      report("malformed", i, "dim_v must be positive");
      shape_ok = false;
    }
    bool finite = true;
    for (double c : r.alpha) finite = finite && std::isfinite(c);
    if (!finite) {
      report("malformed", i, "alpha has a non-finite entry");
      shape_ok = false;
      continue;
    }
    bool zero = true;
    for (double c : r.alpha) zero = zero && c == 0.0;
    if (zero) report("zero root", i, "alpha is the zero functional");
    for (const auto& p : r.q_poly) {
      bool ok = true;
      for (double c : p) ok = ok && std::isfinite(c);
      if (!ok || (!p.empty() && p.front() != 0.0)) {
        report("bad polynomial", i, "metric polynomial must have finite coefficients and zero constant term");
        break;
      }
    }
    if (!r.exact_alpha) {
      std::vector<Rational> exact;
      for (double c : r.alpha) {
        auto q = Rational::from_double(c);
        if (!q) break;
        exact.push_back(*q);
      }
      if (exact.size() == dim) r.exact_alpha = std::move(exact);
    }
  }
  if (!shape_ok) return result;

  Eigen::MatrixXd m(static_cast<Eigen::Index>(roots.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = roots[i].alpha[j];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(1e-10);
  if (static_cast<std::size_t>(lu.rank()) < dim)
    report("degenerate", std::nullopt,
           "roots span a space of dimension " + std::to_string(lu.rank()) + " < dim_a = " + std::to_string(dim));

  bool all_exact = true;
  for (const auto& r : roots) all_exact = all_exact && r.exact_alpha.has_value();
  for (std::size_t j = 0; j < dim; ++j) {
    bool zero_sum = false;
    std::string value;
    if (all_exact) {
      WideRational acc;
      for (const auto& r : roots) add_to(acc, (*r.exact_alpha)[j], r.dim_v);
      zero_sum = acc.num == 0;
      value = std::to_string(static_cast<double>(acc.num) / static_cast<double>(acc.den));
    } else {
      double s = 0.0;
      double scale = 1.0;
      for (const auto& r : roots) {
        s += r.dim_v * r.alpha[j];
        scale += std::abs(r.dim_v * r.alpha[j]);
      }
      zero_sum = std::abs(s) <= 1e-12 * scale;
      value = std::to_string(s);
    }
    if (!zero_sum)
      report("non-unimodular", std::nullopt,
             "coordinate " + std::to_string(j) + " of the weighted root sum is " + value);
  }
  if (!result.diagnostics.empty()) return result;

  RootSystem rs;
  rs.spec_ = spec;
  rs.dim_a_ = dim;
  rs.convention_ = convention;
  rs.roots_ = std::move(roots);
  for (const auto& r : rs.roots_) {
    rs.metrics_.emplace_back(r.q_poly);
    if (!rs.metrics_.back().is_constant()) rs.diagonal_ = false;
  }
  result.system = std::move(rs);
  return result;
}

RootSystem make_root_system(const RootSystemSpec& spec, DistanceConvention convention) {
  auto res = validate_root_system(spec, convention);
  if (res.ok()) return *res.system;
  std::string msg = "invalid root system:";
  for (const auto& d : res.diagnostics) {
    msg += " [" + d.condition;
    if (d.root_index) msg += " @root " + std::to_string(*d.root_index);
    msg += "] " + d.message + ";";
  }
  throw ConfigError(msg);
}

RootSystem sol_group() {
  RootSystemSpec spec;
  spec.dim_a = 1;
  spec.roots = {Root{{1.0}, 1, {}, std::nullopt}, Root{{-1.0}, 1, {}, std::nullopt}};
  return make_root_system(spec);
}

RootSystem rank2_group() {
  RootSystemSpec spec;
  spec.dim_a = 2;
  spec.roots = {Root{{1.0, 0.0}, 1, {}, std::nullopt}, Root{{0.0, 1.0}, 1, {}, std::nullopt},
                Root{{-1.0, -1.0}, 1, {}, std::nullopt}};
  return make_root_system(spec);
}

GroupPoint identity_point(const RootSystem& rs) {
  GroupPoint p;
  p.t.assign(rs.dim_a(), 0.0);
  for (const auto& r : rs.roots()) p.x.emplace_back(static_cast<std::size_t>(r.dim_v), 0.0);
  return p;
}

void check_point(const RootSystem& rs, const GroupPoint& p) {
  if (p.t.size() != rs.dim_a()) throw ConfigError("point has wrong A dimension");
  if (p.x.size() != rs.size()) throw ConfigError("point has wrong number of fiber blocks");
  for (double c : p.t)
    if (!std::isfinite(c)) throw ConfigError("point has a non-finite A coordinate");
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (p.x[i].size() != static_cast<std::size_t>(rs.root(i).dim_v))
      throw ConfigError("fiber block " + std::to_string(i) + " has wrong length");
    for (double c : p.x[i])
      if (!std::isfinite(c)) throw ConfigError("point has a non-finite fiber coordinate");
  }
}

std::vector<RootClass> root_classes(const RootSystem& rs, double rel_tol) {
  std::vector<RootClass> classes;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const Vec& a = rs.root(i).alpha;
    bool placed = false;
    for (auto& c : classes) {
      const Vec& b = rs.root(c.representative).alpha;
      double dot = 0.0;
      double bb = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        dot += a[j] * b[j];
        bb += b[j] * b[j];
      }
      const double scale = dot / bb;
      if (!(scale > 0.0)) continue;
      double resid = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) resid += (a[j] - scale * b[j]) * (a[j] - scale * b[j]);
      if (std::sqrt(resid) <= rel_tol * norm(a)) {
        c.members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) classes.push_back(RootClass{i, {i}});
  }
  return classes;
}

std::vector<Vec> act(const RootSystem& rs, std::span<const double> t, const std::vector<Vec>& x) {
  if (!rs.diagonal()) throw UnsupportedOperation("the group action is implemented only for diagonal systems");
  if (t.size() != rs.dim_a() || x.size() != rs.size()) throw ConfigError("dimension mismatch in act");
  std::vector<Vec> out = x;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (x[i].size() != static_cast<std::size_t>(rs.root(i).dim_v)) throw ConfigError("dimension mismatch in act");
    const double s = std::exp(rs.eval(i, t));
    for (double& c : out[i]) c *= s;
  }
  return out;
}

GroupPoint multiply(const RootSystem& rs, const GroupPoint& g, const GroupPoint& h) {
  const auto moved = act(rs, g.t, h.x);
  GroupPoint out = g;
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t k = 0; k < out.x[i].size(); ++k) out.x[i][k] += moved[i][k];
  for (std::size_t j = 0; j < rs.dim_a(); ++j) out.t[j] += h.t[j];
  return out;
}

GroupPoint inverse(const RootSystem& rs, const GroupPoint& g) {
  Vec neg(g.t.size());
  for (std::size_t j = 0; j < g.t.size(); ++j) neg[j] = -g.t[j];
  GroupPoint out;
  out.x = act(rs, neg, g.x);
  for (auto& block : out.x)
    for (double& c : block) c = -c;
  out.t = std::move(neg);
  return out;
}

void check_path(const RootSystem& rs, const Path& path) {
  if (path.samples.size() < 2) throw ConfigError("a path needs at least two samples");
  if (path.params.size() != path.samples.size()) throw ConfigError("path params and samples differ in length");
  for (std::size_t i = 1; i < path.params.size(); ++i)
    if (!(path.params[i] > path.params[i - 1])) throw ConfigError("path params must be strictly increasing");
  if (!(path.kappa >= 1.0) || !(path.c_add >= 0.0)) throw ConfigError("quasi-geodesic constants out of range");
  for (const auto& p : path.samples) check_point(rs, p);
}

}  // namespace coarse
