#include "coarse/quadrilaterals.hpp"

#include <algorithm>
#include <cmath>

#include "coarse/errors.hpp"
#include "coarse/metric_embed.hpp"

namespace coarse {

namespace {

constexpr double kEigenTol = 1e-12;
constexpr double kDivergenceSlack = 1e-9;
constexpr double kTrivialTol = 1e-9;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

Vec delta_t(const GroupPoint& b, const GroupPoint& e) {
  Vec d(b.t.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = e.t[j] - b.t[j];
  return d;
}

GroupPoint along(const RootSystem& rs, const Vec& v, double s) {
  GroupPoint a = identity_point(rs);
  for (std::size_t j = 0; j < a.t.size(); ++j) a.t[j] = s * v[j];
  return a;
}

GroupPoint fiber_element(const RootSystem& rs, const std::vector<Vec>& u) {
  GroupPoint g = identity_point(rs);
  g.x = u;
  check_point(rs, g);
  return g;
}

std::vector<Vec> negated(std::vector<Vec> u) {
  for (auto& block : u)
    for (double& c : block) c = -c;
  return u;
}

void check_direction(const RootSystem& rs, const Vec& v) {
  if (v.size() != rs.dim_a()) throw ConfigError("direction has the wrong dimension");
  for (int s : eigen_signs(rs, v))
    if (s == 0) throw PreconditionError("alpha(v) != 0 for every root", "W_v^0 is nontrivial");
}

bool nonzero(const std::vector<Vec>& u) {
  for (const auto& block : u)
    if (norm(block) > 0.0) return true;
  return false;
}

GroupPoint project_to_line(const GroupPoint& p, const Vec& v) {
  GroupPoint out = p;
  const double c = dot(p.t, v) / dot(v, v);
  for (std::size_t j = 0; j < v.size(); ++j) out.t[j] = c * v[j];
  return out;
}

// Nearest point to p on the coset c W_v^{sign}: the blocks of class `sign` are free.
GroupPoint nearest_on_coset(const GroupPoint& c, const GroupPoint& p, const std::vector<int>& signs, int sign) {
  GroupPoint out = c;
  for (std::size_t i = 0; i < signs.size(); ++i)
    if (signs[i] == sign) out.x[i] = p.x[i];
  return out;
}

}  // namespace

double quad_distance(const RootSystem& rs, const GroupPoint& p, const GroupPoint& q) {
  const Vec d = delta_t(p, q);
  double heights = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i) heights += std::abs(rs.eval(i, d));
  double l1 = 0.0;
  for (double c : d) l1 += std::abs(c);
  return std::max(l1, embedded_distance(rs, p, q) - heights + l1);
}

double edge_length(const GroupPoint& begin, const GroupPoint& end) {
  double l1 = 0.0;
  for (std::size_t j = 0; j < begin.t.size(); ++j) l1 += std::abs(end.t[j] - begin.t[j]);
  return l1;
}

std::vector<int> eigen_signs(const RootSystem& rs, const Vec& v) {
  std::vector<int> out(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const double a = rs.eval(i, v);
    out[i] = a > kEigenTol ? 1 : (a < -kEigenTol ? -1 : 0);
  }
  return out;
}

bool in_eigenspace(const RootSystem& rs, const Vec& v, const std::vector<Vec>& u, int sign) {
  if (u.size() != rs.size()) return false;
  const auto signs = eigen_signs(rs, v);
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (signs[i] != sign && norm(u[i]) != 0.0) return false;
  return true;
}

QuadVerdict check_quadrilateral(const RootSystem& rs, const Quadrilateral& q, double eta) {
  QuadVerdict out;
  for (std::size_t i = 0; i < 4; ++i) {
    check_point(rs, q.begin[i]);
    check_point(rs, q.end[i]);
  }
  out.direction_ok = q.direction.size() == rs.dim_a() && norm(q.direction) > 0.0;
  if (!out.direction_ok) {
    out.failures.push_back("common direction: v is zero or has the wrong dimension");
  } else {
    for (int s : eigen_signs(rs, q.direction))
      if (s == 0) out.direction_ok = false;
    if (!out.direction_ok) out.failures.push_back("common direction: W_v^0 is nontrivial");
    const double vv = dot(q.direction, q.direction);
    for (std::size_t i = 0; i < 4; ++i) {
      const Vec d = delta_t(q.begin[i], q.end[i]);
      const double c = dot(d, q.direction) / vv;
      Vec perp = d;
      for (std::size_t j = 0; j < d.size(); ++j) perp[j] -= c * q.direction[j];
      bool vertical = norm(perp) <= 1e-9 * std::max(1.0, norm(d));
      for (std::size_t k = 0; k < rs.size(); ++k)
        if (distance(q.begin[i].x[k], q.end[i].x[k]) > 1e-9 * std::max(1.0, norm(q.begin[i].x[k]))) vertical = false;
      if (!vertical) {
        out.direction_ok = false;
        out.failures.push_back("common direction: T_" + std::to_string(i) + " is not a segment along v");
      }
    }
  }
  for (std::size_t i = 0; i < 4; ++i) out.lengths[i] = edge_length(q.begin[i], q.end[i]);
  for (double l : out.lengths) out.perimeter += l;
  out.floor_ok = true;
  out.closeness_ok = true;
  out.divergence_ok = true;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t n = (i + 1) % 4;
    const std::string tag = std::to_string(i);
    if (!(out.lengths[i] > 2.0 * eta * out.perimeter)) {
      out.floor_ok = false;
      out.failures.push_back("|T_" + tag + "| > 2 eta sum |T_j|");
    }
    const double pair = out.lengths[i] + out.lengths[n];
    out.joints[i] = quad_distance(rs, q.end[i], q.begin[n]);
    if (!(out.joints[i] <= eta * pair)) {
      out.closeness_ok = false;
      out.failures.push_back("d(e_" + tag + ", b_" + std::to_string(n) + ") <= eta (|T_i| + |T_i+1|)");
    }
    out.divergences[i] = quad_distance(rs, q.begin[i], q.end[n]);
    if (!(out.divergences[i] >= pair * (1.0 - kDivergenceSlack))) {
      out.divergence_ok = false;
      out.failures.push_back("d(b_" + tag + ", e_" + std::to_string(n) + ") >= |T_i| + |T_i+1|");
    }
  }
  return out;
}

Quadrilateral build_commutator_quadrilateral(const RootSystem& rs, const Vec& v, const std::vector<Vec>& x_plus,
                                             const std::vector<Vec>& y_minus, double t) {
  if (!rs.diagonal()) throw UnsupportedOperation("commutator quadrilaterals need a diagonal action");
  check_direction(rs, v);
  fiber_element(rs, x_plus);
  fiber_element(rs, y_minus);
  if (!nonzero(x_plus) || !nonzero(y_minus)) throw PreconditionError("x, y != 0", "degenerate commutator");
  if (!in_eigenspace(rs, v, x_plus, 1)) throw PreconditionError("x in W_v^+", "x has a component in W_v^-");
  if (!in_eigenspace(rs, v, y_minus, -1)) throw PreconditionError("y in W_v^-", "y has a component in W_v^+");
  if (!(std::abs(t) > 0.0) || !std::isfinite(t))
    throw PreconditionError("|T_i| > 2 eta sum |T_j|", "t = 0 gives empty edges");
  RankOneWord w;
  w.r = {2.0 * t, 2.0 * t, 2.0 * t, 2.0 * t};
  w.u = {x_plus, y_minus, negated(x_plus), negated(y_minus)};
  Quadrilateral q = quadrilateral_from_word(rs, v, w);
  const GroupPoint start = along(rs, v, -t);
  for (std::size_t i = 0; i < 4; ++i) {
    q.begin[i] = multiply(rs, start, q.begin[i]);
    q.end[i] = multiply(rs, start, q.end[i]);
  }
  return q;
}

OrientationPattern orientation_pattern(const Quadrilateral& q) {
  OrientationPattern out;
  for (std::size_t i = 0; i < 4; ++i) {
    const double s = dot(delta_t(q.begin[i], q.end[i]), q.direction);
    out.signs[i] = s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
    out.text += out.signs[i] > 0 ? '+' : (out.signs[i] < 0 ? '-' : '0');
  }
  out.conformant = true;
  for (std::size_t i = 0; i < 4; ++i)
    if (out.signs[i] == 0 || out.signs[i] != -out.signs[(i + 1) % 4]) out.conformant = false;
  return out;
}

RankOneWord close_word(const RootSystem& rs, const Vec& v, double r0, double r1, double r2,
                       const std::vector<Vec>& u0, const std::vector<Vec>& u1) {
  check_direction(rs, v);
  fiber_element(rs, u0);
  fiber_element(rs, u1);
  RankOneWord w;
  w.r = {r0, r1, r2, r0 + r2 - r1};
  w.u[0] = u0;
  w.u[1] = u1;
  Vec s12(v.size()), s01(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    s12[j] = (r1 - r2) * v[j];
    s01[j] = (r0 - r1) * v[j];
  }
  w.u[2] = negated(act(rs, s12, u0));
  w.u[3] = negated(act(rs, s01, u1));
  return w;
}

RankOneWord random_trivial_word(const RootSystem& rs, const Vec& v, double eta, std::mt19937_64& rng, double base_lo,
                                double base_hi, double jitter) {
  check_direction(rs, v);
  if (!(base_hi >= base_lo) || !(base_lo > jitter) || !(jitter >= 0.0))
    throw ConfigError("word sampling needs base_hi >= base_lo > jitter >= 0");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto dyadic = [&](double lo, double hi) { return std::round((lo + (hi - lo) * unit(rng)) * 64.0) / 64.0; };
  const auto signs = eigen_signs(rs, v);
  for (std::size_t attempt = 0; attempt < 100000; ++attempt) {
    const double r0 = dyadic(base_lo, base_hi);
    const double r1 = r0 + dyadic(-jitter, jitter), r2 = r0 + dyadic(-jitter, jitter);
    std::vector<Vec> u0(rs.size()), u1(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto dim = static_cast<std::size_t>(rs.root(i).dim_v);
      u0[i].assign(dim, 0.0);
      u1[i].assign(dim, 0.0);
      // |u2_i| = e^{a (r1 - r2)} |u0_i| and |u3_i| = e^{a (r0 - r1)} |u1_i| must stay >= 1.
      const double a = rs.eval(i, v);
      const double gap = signs[i] > 0 ? r1 - r2 : r0 - r1;
      const double log_size = std::max(0.0, -a * gap) + 0.5 * unit(rng);
      Vec& block = signs[i] > 0 ? u0[i] : u1[i];
      block[0] = (unit(rng) < 0.5 ? -1.0 : 1.0) * std::exp(log_size);
    }
    RankOneWord w = close_word(rs, v, r0, r1, r2, u0, u1);
    try {
      word_residual(rs, v, w, eta);
    } catch (const PreconditionError&) {
      continue;
    }
    return w;
  }
  throw PreconditionError("d(u_j, e) <= eta (r_j + r_j+1)", "no admissible trivial word found in 100000 draws");
}

WordReport word_residual(const RootSystem& rs, const Vec& v, const RankOneWord& w, double eta) {
  check_direction(rs, v);
  for (std::size_t j = 0; j < 4; ++j) {
    fiber_element(rs, w.u[j]);
    const int sign = j % 2 == 0 ? 1 : -1;
    if (!in_eigenspace(rs, v, w.u[j], sign))
      throw PreconditionError(sign > 0 ? "u_0, u_2 in W_v^+" : "u_1, u_3 in W_v^-",
                              "u_" + std::to_string(j) + " has a component in the wrong eigenspace sum");
  }
  double total = 0.0;
  for (double r : w.r) total += r;
  WordReport out;
  const GroupPoint e = identity_point(rs);
  for (std::size_t j = 0; j < 4; ++j) out.sizes[j] = quad_distance(rs, e, fiber_element(rs, w.u[j]));
  for (std::size_t j = 0; j < 4; ++j) {
    const double bound = eta * (w.r[j] + w.r[(j + 1) % 4]);
    if (!(out.sizes[j] <= bound))
      throw PreconditionError("d(u_j, e) <= eta (r_j + r_j+1)",
                              "u_" + std::to_string(j) + " has size " + std::to_string(out.sizes[j]));
    if (!(w.r[j] > 2.0 * eta * total))
      throw PreconditionError("r_j > 2 eta sum r", "r_" + std::to_string(j) + " = " + std::to_string(w.r[j]));
  }

  GroupPoint p = e;
  Vec scale(rs.size(), 0.0);
  for (std::size_t j = 0; j < 4; ++j) {
    p = multiply(rs, p, along(rs, v, j % 2 == 0 ? w.r[j] : -w.r[j]));
    const auto moved = act(rs, p.t, w.u[j]);
    for (std::size_t i = 0; i < rs.size(); ++i) scale[i] = std::max(scale[i], norm(moved[i]));
    p = multiply(rs, p, fiber_element(rs, w.u[j]));
  }
  out.value = p;
  double worst = 0.0;
  for (double c : p.t) worst = std::max(worst, std::abs(c));
  double fiber = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i) fiber = std::max(fiber, norm(p.x[i]) / (1.0 + scale[i]));
  out.residual = worst + fiber;
  out.distance = embedded_distance(rs, p, e);
  out.height_gap = (w.r[0] + w.r[2]) - (w.r[1] + w.r[3]);
  out.trivial = out.residual <= kTrivialTol;

  out.nondegenerate = true;
  for (const auto& u : w.u) {
    if (!nonzero(u)) out.nondegenerate = false;
    for (const auto& block : u)
      if (norm(block) > 0.0 && norm(block) < 1.0) out.nondegenerate = false;
  }
  out.spread_holds = true;
  for (std::size_t i = 0; i < 4; ++i) {
    out.spread[i] = std::abs(w.r[i] - w.r[(i + 1) % 4]);
    out.spread_bound[i] = out.sizes[(i + 1) % 4] + out.sizes[(i + 3) % 4];
    if (!(out.spread[i] <= out.spread_bound[i] + 1e-9)) out.spread_holds = false;
  }
  return out;
}

Quadrilateral quadrilateral_from_word(const RootSystem& rs, const Vec& v, const RankOneWord& w) {
  check_direction(rs, v);
  Quadrilateral q;
  q.direction = v;
  GroupPoint p = identity_point(rs);
  for (std::size_t i = 0; i < 4; ++i) {
    q.begin[i] = p;
    p = multiply(rs, p, along(rs, v, i % 2 == 0 ? w.r[i] : -w.r[i]));
    q.end[i] = p;
    p = multiply(rs, p, fiber_element(rs, w.u[i]));
  }
  return q;
}

StructureReport structure_report(const RootSystem& rs, const Quadrilateral& q, double eta) {
  StructureReport out;
  std::array<double, 4> lengths{};
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    lengths[i] = edge_length(q.begin[i], q.end[i]);
    total += lengths[i];
  }
  out.spread = *std::max_element(lengths.begin(), lengths.end()) - *std::min_element(lengths.begin(), lengths.end());
  out.bound = eta * total;
  out.spread_ok = out.spread <= out.bound + 1e-9;

  const auto signs = eigen_signs(rs, q.direction);
  std::array<std::array<double, 2>, 4> prox{};  // [i][0]: W_v^+, [i][1]: W_v^-
  for (std::size_t i = 0; i < 4; ++i) {
    const std::array<GroupPoint, 4> quad = {project_to_line(q.begin[i], q.direction),
                                            project_to_line(q.end[(i + 1) % 4], q.direction),
                                            project_to_line(q.begin[(i + 2) % 4], q.direction),
                                            project_to_line(q.end[(i + 3) % 4], q.direction)};
    for (int k = 0; k < 2; ++k) {
      const int sign = k == 0 ? 1 : -1;
      double worst = 0.0;
      for (std::size_t m = 1; m < 4; ++m)
        worst = std::max(worst, quad_distance(rs, quad[m], nearest_on_coset(quad[0], quad[m], signs, sign)));
      prox[i][k] = worst;
    }
  }
  // Parity: even quadruples near W_v^+ cosets and odd ones near W_v^-, or the reverse.
  double best = 0.0;
  int best_even = 1;
  for (int even : {1, -1}) {
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const int sign = i % 2 == 0 ? even : -even;
      worst = std::max(worst, prox[i][sign > 0 ? 0 : 1]);
    }
    if (even == 1 || worst < best) {
      best = worst;
      best_even = even;
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    out.coset[i] = i % 2 == 0 ? best_even : -best_even;
    out.proximity[i] = prox[i][out.coset[i] > 0 ? 0 : 1];
  }
  out.cosets_ok = best <= out.bound + 1e-9;
  return out;
}

SnapResult snap_quadrilateral(const RootSystem& rs, const std::array<GroupPoint, 4>& begin,
                              const std::array<GroupPoint, 4>& end) {
  const Vec first = delta_t(begin[0], end[0]);
  if (!(norm(first) > 0.0)) throw PreconditionError("|T_0| > 0", "first segment has no A-displacement");
  Vec v(rs.dim_a(), 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec d = delta_t(begin[i], end[i]);
    const double n = norm(d);
    if (!(n > 0.0)) throw PreconditionError("|T_i| > 0", "segment " + std::to_string(i) + " has no A-displacement");
    const double s = dot(d, first) >= 0.0 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += s * d[j] / n;
  }
  const double nv = norm(v);
  for (double& c : v) c /= nv;
  check_direction(rs, v);

  SnapResult out;
  out.quad.direction = v;
  for (std::size_t i = 0; i < 4; ++i) {
    const double c = dot(delta_t(begin[i], end[i]), v);
    out.quad.begin[i] = begin[i];
    GroupPoint e = begin[i];
    for (std::size_t j = 0; j < v.size(); ++j) e.t[j] += c * v[j];
    out.quad.end[i] = e;
    out.displacement = std::max(out.displacement, quad_distance(rs, end[i], e));
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t n = (i + 1) % 4;
    const double pair = edge_length(out.quad.begin[i], out.quad.end[i]) + edge_length(out.quad.begin[n], out.quad.end[n]);
    out.eta_hat = std::max(out.eta_hat, quad_distance(rs, out.quad.end[i], out.quad.begin[n]) / pair);
  }
  out.verdict = check_quadrilateral(rs, out.quad, out.eta_hat);
  return out;
}

}  // namespace coarse
