#include "coarse/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "coarse/errors.hpp"
#include "coarse/metric_embed.hpp"

namespace coarse {

namespace {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

Vec minus(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
  return out;
}

// Projection of each A-sample in [begin, end] onto the chord, measured from the start.
Vec chord_levels(const Path& zeta, std::size_t begin, std::size_t end) {
  const Vec& a = zeta.samples[begin].t;
  const Vec dir = minus(zeta.samples[end].t, a);
  const double gap = norm(dir);
  if (!(gap > 0.0)) throw PreconditionError("d(pi_A(zeta(0)), pi_A(zeta(L))) > 0", "degenerate chord");
  Vec h;
  h.reserve(end - begin + 1);
  for (std::size_t k = begin; k <= end; ++k) h.push_back(dot(minus(zeta.samples[k].t, a), dir) / gap);
  return h;
}

template <class Bound>
MonotoneVerdict level_test(const RootSystem& rs, const Path& zeta, std::size_t begin, std::size_t end, Bound bound) {
  const Vec h = chord_levels(zeta, begin, end);
  double mesh = 0.0;
  for (std::size_t k = 1; k < h.size(); ++k) mesh = std::max(mesh, std::abs(h[k] - h[k - 1]));
  MonotoneVerdict v;
  if (!(mesh > 0.0)) return v;
  // bucket -> (pass id, sample index)
  std::map<long long, std::vector<std::pair<std::size_t, std::size_t>>> buckets;
  long long prev_bucket = std::numeric_limits<long long>::min();
  std::size_t pass = 0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const auto b = static_cast<long long>(std::floor(h[k] / mesh));
    if (b != prev_bucket) ++pass;
    prev_bucket = b;
    buckets[b].emplace_back(pass, begin + k);
  }
  for (const auto& [key, members] : buckets) {
    if (members.front().first == members.back().first) continue;
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        if (members[i].first == members[j].first) continue;
        const std::size_t early = members[i].second;
        const std::size_t late = members[j].second;
        const double d = embedded_distance(rs, zeta.samples[early], zeta.samples[late]);
        const double allowed = bound(early, late);
        const double ratio = allowed > 0.0 ? d / allowed : (d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > v.worst_ratio) {
          v.worst_ratio = ratio;
          v.worst_distance = d;
          v.first_index = early;
          v.second_index = late;
          v.first_param = zeta.params[early];
          v.second_param = zeta.params[late];
        }
      }
  }
  v.is_monotone = v.worst_ratio <= 1.0 + 1e-12;
  return v;
}

}  // namespace

MonotoneVerdict delta_monotone_range(const RootSystem& rs, const Path& zeta, double delta, std::size_t begin,
                                     std::size_t end) {
  const double ends = embedded_distance(rs, zeta.samples[begin], zeta.samples[end]);
  const double allowed = delta * ends;
  return level_test(rs, zeta, begin, end, [&](std::size_t, std::size_t) { return allowed; });
}

MonotoneVerdict is_delta_monotone(const RootSystem& rs, const Path& zeta, double delta, const MonotoneOptions& opts) {
  check_path(rs, zeta);
  if (!(delta > 0.0) || !(delta < 1.0)) throw PreconditionError("0 < delta < 1", "delta = " + std::to_string(delta));
  if (opts.eps) {
    const double hbar = opts.hbar.value_or(default_hbar(rs, zeta.kappa));
    if (delta < 4.0 * hbar * *opts.eps)
      throw PreconditionError("delta >= 4 hbar eps", "delta = " + std::to_string(delta) + ", 4 hbar eps = " +
                                                         std::to_string(4.0 * hbar * *opts.eps));
    const auto base = base_curve(zeta);
    const double gap = distance(base.front(), base.back());
    if (chord_hausdorff(base) > *opts.eps * gap * (1.0 + 1e-12))
      throw PreconditionError("d_H(pi_A(zeta), chord) <= eps |pi_A(zeta)|", "A-projection strays from its chord");
  }
  return delta_monotone_range(rs, zeta, delta, 0, zeta.size() - 1);
}

MonotoneVerdict is_weakly_monotone(const RootSystem& rs, const Path& zeta, double nu, double c1) {
  check_path(rs, zeta);
  if (!(nu >= 0.0) || !(c1 >= 0.0)) throw PreconditionError("nu, C1 >= 0", "negative weak-monotonicity constant");
  return level_test(rs, zeta, 0, zeta.size() - 1, [&](std::size_t, std::size_t late) {
    return nu * embedded_distance(rs, zeta.samples[late], zeta.samples.front()) + c1;
  });
}

MonotoneProfile monotone_scale_profile(const RootSystem& rs, const Path& zeta, const MonotoneScaleParams& p) {
  check_path(rs, zeta);
  if (!(p.delta > 0.0) || !(p.delta < 1.0)) throw PreconditionError("0 < delta < 1", "delta out of range");
  if (!(p.eps > 0.0) || !(p.eps < 1.0)) throw PreconditionError("0 < eps < 1", "eps out of range");
  if (!(p.l_a > 0.0)) throw PreconditionError("L_a > 0", "stopping length must be positive");
  const std::size_t last = zeta.size() - 1;
  const double ends = embedded_distance(rs, zeta.samples.front(), zeta.samples.back());
  if (!(ends > 0.0)) throw PreconditionError("d(zeta(0), zeta(L)) > 0", "path has coincident endpoints");
  const auto base = base_curve(zeta);
  const double root_eps = std::sqrt(p.eps);
  const double fine = 0.5 * std::pow(p.eps, 0.25);
  const double floor_factor = 1.5 * std::pow(p.eps, 0.125);
  auto dist = [&](std::size_t i, std::size_t j) { return embedded_distance(rs, zeta.samples[i], zeta.samples[j]); };

  MonotoneProfile prof;
  std::vector<std::size_t> bps{0, last};
  std::vector<std::size_t> parent_of;
  std::vector<bool> prev_good;  // efficient and monotone
  std::vector<Vec> prev_dirs;
  double length = ends;
  for (std::size_t i = 0;; ++i) {
    if (i > 0) {
      length *= p.delta;
      if (floor_factor * length < p.l_a) break;
      std::vector<std::size_t> next{0};
      parent_of.clear();
      for (std::size_t c = 0; c + 1 < bps.size(); ++c) {
        const auto s = subdivide_by(bps[c], bps[c + 1], length, dist);
        next.insert(next.end(), s.breakpoints.begin() + 1, s.breakpoints.end());
        parent_of.insert(parent_of.end(), s.breakpoints.size() - 1, c);
      }
      bps = std::move(next);
    }
    const std::size_t cells = bps.size() - 1;
    std::size_t efficient = 0;
    std::size_t bad = 0;
    std::size_t reversed = 0;
    std::vector<bool> good(cells, false);
    std::vector<Vec> dirs(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      dirs[c] = minus(base[bps[c + 1]], base[bps[c]]);
      if (!(norm(dirs[c]) > 0.0)) continue;
      if (!is_efficient(base, root_eps, fine, bps[c], bps[c + 1])) continue;
      ++efficient;
      if (!delta_monotone_range(rs, zeta, p.delta, bps[c], bps[c + 1]).is_monotone) {
        ++bad;
        continue;
      }
      good[c] = true;
      if (i > 0 && prev_good[parent_of[c]] && dot(dirs[c], prev_dirs[parent_of[c]]) < 0.0) ++reversed;
    }
    const double denom = efficient > 0 ? static_cast<double>(efficient) : 1.0;
    prof.lengths.push_back(length);
    prof.flats.push_back(static_cast<double>(bad) / denom);
    prof.naturals.push_back(static_cast<double>(reversed) / denom);
    prof.efficient_cells.push_back(efficient);
    prof.cells.push_back(cells);
    prof.breakpoints.push_back(bps);
    prof.parents.push_back(i > 0 ? parent_of : std::vector<std::size_t>{});
    prev_good = std::move(good);
    prev_dirs = std::move(dirs);
  }
  return prof;
}

double monotone_scale_budget(const MonotoneScaleParams& p, double kappa, double length) {
  const double top = (2.0 / (3.0 * std::pow(p.eps, 0.125))) * p.l_a / (2.0 * kappa * length);
  return std::log(top) / std::log(p.delta);
}

double monotone_scale_demand(const MonotoneScaleParams& p, double kappa, double hbar) {
  const double k2 = (2.0 * kappa) * (2.0 * kappa);
  return k2 * hbar * 2.0 * p.n_bound / ((1.0 - std::sqrt(p.eps) * hbar) * p.delta);
}

namespace {

void check_monotone_preconditions(const RootSystem& rs, const Path& zeta, const MonotoneScaleParams& p) {
  check_path(rs, zeta);
  const double hbar = p.hbar.value_or(default_hbar(rs, zeta.kappa));
  if (!(p.n_bound > 0.0)) throw PreconditionError("N > 0", "N must be positive");
  const double cap = std::min({std::pow(p.delta / (2.0 * hbar), 4.0), std::pow(p.delta / (3.01 * hbar), 8.0),
                               std::pow(0.01, 8.0)});
  if (p.eps > cap * (1.0 + 1e-12))
    throw PreconditionError("eps <= min{(delta/2hbar)^4, (delta/3.01hbar)^8, 0.01^8}",
                            "eps = " + std::to_string(p.eps) + " exceeds " + std::to_string(cap));
  if (p.l_a < 2.0 * zeta.kappa * zeta.c_add) throw PreconditionError("L_a >= 2 kappa C", "stopping length too small");
  const auto base = base_curve(zeta);
  if (!is_efficient(base, p.eps, 0.5 * std::pow(p.eps, 0.25)))
    throw PreconditionError("pi_A(zeta) eps-efficient at scale eps^{1/4}/2", "A-projection is not efficient");
  if (!(std::sqrt(p.eps) * hbar < 1.0)) throw PreconditionError("eps^{1/2} hbar < 1", "hbar too large for eps");
  const double budget = monotone_scale_budget(p, zeta.kappa, zeta.length());
  const double demand = monotone_scale_demand(p, zeta.kappa, hbar);
  if (budget < demand)
    throw PreconditionError("ln(2 L_a / (3 eps^{1/8} 2 kappa L)) / ln delta >= (2 kappa)^2 hbar 2N / ((1 - eps^{1/2} hbar) delta)",
                            "scale budget " + std::to_string(budget) + " < " + std::to_string(demand));
}

}  // namespace

MonotoneScaleReport find_monotone_scale(const RootSystem& rs, const Path& zeta, const MonotoneScaleParams& p) {
  check_monotone_preconditions(rs, zeta, p);
  MonotoneScaleReport rep;
  rep.profile = monotone_scale_profile(rs, zeta, p);
  const auto& f = rep.profile.flats;
  const auto& n = rep.profile.naturals;
  const double cut = 1.0 / p.n_bound;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    if (f[i] + n[i] <= cut && f[i + 1] + n[i + 1] <= cut) {
      rep.accepted = true;
      rep.index = i;
      rep.rho = rep.profile.lengths[i];
      rep.rho_next = rep.profile.lengths[i + 1];
      return rep;
    }
  }
  rep.reason = "no consecutive scales with flat + natural <= 1/N";
  return rep;
}

FamilyMonotoneReport find_monotone_scale_family(const RootSystem& rs, const std::vector<Path>& family,
                                                const MonotoneScaleParams& p, double n0) {
  if (family.empty()) throw ConfigError("empty path family");
  if (!(n0 > 0.0) || !(2.0 * n0 <= p.n_bound)) throw PreconditionError("0 < 2 N0 <= N", "N0 = " + std::to_string(n0));
  FamilyMonotoneReport rep;
  std::size_t common = std::numeric_limits<std::size_t>::max();
  std::vector<Vec> lengths;
  for (const auto& zeta : family) {
    check_monotone_preconditions(rs, zeta, p);
    const auto prof = monotone_scale_profile(rs, zeta, p);
    Vec score(prof.flats.size());
    for (std::size_t i = 0; i < score.size(); ++i) score[i] = prof.flats[i] + prof.naturals[i];
    rep.member_scores.push_back(std::move(score));
    lengths.push_back(prof.lengths);
    common = std::min(common, prof.flats.size());
  }
  if (common < 2) throw PreconditionError("at least two scales above L_a", "a member is too short");
  rep.mean_scores.assign(common, 0.0);
  for (const auto& s : rep.member_scores)
    for (std::size_t i = 0; i < common; ++i) rep.mean_scores[i] += s[i] / static_cast<double>(family.size());
  std::size_t chosen = common;
  for (std::size_t i = 0; i + 1 < common; ++i)
    if (rep.mean_scores[i] <= 1.0 / p.n_bound && rep.mean_scores[i + 1] <= 1.0 / p.n_bound) {
      chosen = i;
      break;
    }
  if (chosen == common) throw NumericalFailure("no consecutive common scales with mean score <= 1/N");
  rep.index = chosen;
  rep.rho = lengths.front()[chosen];
  rep.rho_next = lengths.front()[chosen + 1];
  for (std::size_t m = 0; m < family.size(); ++m)
    if (rep.member_scores[m][chosen] <= 1.0 / n0 && rep.member_scores[m][chosen + 1] <= 1.0 / n0)
      rep.selected.push_back(m);
  rep.chebyshev_floor = (1.0 - 2.0 * n0 / p.n_bound) * static_cast<double>(family.size());
  return rep;
}

std::vector<bool> bad_cells_for(const RootSystem& rs, const Path& zeta, const std::vector<std::size_t>& breakpoints,
                               double delta) {
  const Vec whole = minus(zeta.samples.back().t, zeta.samples.front().t);
  std::vector<bool> bad;
  for (std::size_t c = 0; c + 1 < breakpoints.size(); ++c) {
    const Vec dir = minus(zeta.samples[breakpoints[c + 1]].t, zeta.samples[breakpoints[c]].t);
    if (!(norm(dir) > 0.0) || dot(dir, whole) < 0.0) {
      bad.push_back(true);
      continue;
    }
    bad.push_back(!delta_monotone_range(rs, zeta, delta, breakpoints[c], breakpoints[c + 1]).is_monotone);
  }
  return bad;
}

UniformPointReport uniform_points(const std::vector<std::size_t>& breakpoints, const std::vector<bool>& bad,
                                  double m_factor) {
  if (breakpoints.size() != bad.size() + 1) throw ConfigError("one bad flag per cell is required");
  if (!(m_factor > 0.0)) throw PreconditionError("M > 0", "M must be positive");
  UniformPointReport rep;
  rep.breakpoints = breakpoints;
  rep.bad_cells = bad;
  rep.bound = 2.0 / m_factor;
  const std::size_t cells = bad.size();
  const std::size_t count = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), true));
  rep.bad_fraction = cells > 0 ? static_cast<double>(count) / static_cast<double>(cells) : 0.0;
  const double allowed = m_factor * rep.bad_fraction;
  rep.max_ratio.assign(breakpoints.size(), 0.0);
  std::size_t non_uniform = 0;
  for (std::size_t k = 0; k < breakpoints.size(); ++k) {
    std::size_t hits = 0;
    bool ok = true;
    for (std::size_t m = 1; k + m <= cells; ++m) {
      if (bad[k + m - 1]) ++hits;
      const double ratio = static_cast<double>(hits) / static_cast<double>(m);
      rep.max_ratio[k] = std::max(rep.max_ratio[k], ratio);
      if (static_cast<double>(hits) > allowed * static_cast<double>(m) * (1.0 + 1e-12)) ok = false;
    }
    if (ok)
      rep.uniform.push_back(k);
    else
      ++non_uniform;
  }
  rep.non_uniform_fraction = static_cast<double>(non_uniform) / static_cast<double>(breakpoints.size());
  return rep;
}

UniformPointReport uniform_points(const RootSystem& rs, const Path& zeta, double l_s, double m_factor, double delta) {
  check_path(rs, zeta);
  const auto s = subdivide(rs, zeta, l_s);
  return uniform_points(s.breakpoints, bad_cells_for(rs, zeta, s.breakpoints, delta), m_factor);
}

Path path_tail(const Path& zeta, std::size_t start) {
  Path out;
  out.kappa = zeta.kappa;
  out.c_add = zeta.c_add;
  out.geodesic = zeta.geodesic;
  out.samples.assign(zeta.samples.begin() + static_cast<std::ptrdiff_t>(start), zeta.samples.end());
  out.params.assign(zeta.params.begin() + static_cast<std::ptrdiff_t>(start), zeta.params.end());
  return out;
}

UniformStartCheck check_uniform_start(const RootSystem& rs, const Path& zeta, const UniformPointReport& rep,
                                      std::size_t point, double l_s, double nu, std::optional<double> hbar) {
  if (point >= rep.breakpoints.size()) throw ConfigError("uniform point out of range");
  UniformStartCheck out;
  out.nu = nu;
  out.hbar = hbar.value_or(default_hbar(rs, zeta.kappa));
  const std::size_t start = rep.breakpoints[point];
  const Vec h = chord_levels(zeta, 0, zeta.size() - 1);
  out.worst_rate_gap = std::numeric_limits<double>::infinity();
  const double rate = (1.0 - nu - out.hbar * nu) / out.hbar;
  for (std::size_t k = point + 1; k < rep.breakpoints.size(); ++k) {
    const std::size_t idx = rep.breakpoints[k];
    const double t = zeta.params[idx] - zeta.params[start];
    if (!(t > l_s)) continue;
    out.worst_rate_gap = std::min(out.worst_rate_gap, (h[idx] - h[start]) - rate * t);
  }
  out.moving_rate_holds = !(out.worst_rate_gap < 0.0);
  if (start + 1 < zeta.size())
    out.weak = is_weakly_monotone(rs, path_tail(zeta, start), nu * (1.0 + out.hbar), 2.0 * zeta.kappa * l_s);
  return out;
}

bool near_wall(const RootSystem& rs, const Vec& t0, const Vec& y, double slope, double c) {
  const Vec off = minus(y, t0);
  const double r = norm(off);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const Vec& a = rs.root(i).alpha;
    const double dw = std::abs(dot(a, off)) / norm(a);
    if (rs.dim_a() == 1) {
      if (dw <= c) return true;
      continue;
    }
    if (slope >= 1.0) return true;
    const double along = std::sqrt(std::max(0.0, r * r - dw * dw));
    if (dw * std::sqrt(1.0 - slope * slope) - slope * along <= c) return true;
  }
  return false;
}

namespace {

GroupPoint lerp_point(const GroupPoint& a, const GroupPoint& b, double w) {
  GroupPoint out = a;
  for (std::size_t i = 0; i < out.x.size(); ++i)
    for (std::size_t k = 0; k < out.x[i].size(); ++k) out.x[i][k] += w * (b.x[i][k] - a.x[i][k]);
  for (std::size_t k = 0; k < out.t.size(); ++k) out.t[k] += w * (b.t[k] - a.t[k]);
  return out;
}

}  // namespace

GeodesicApproxReport geodesic_approximation(const RootSystem& rs, const Path& zeta, const GeodesicApproxParams& p) {
  check_path(rs, zeta);
  const bool monotone_mode = std::holds_alternative<MonotoneMode>(p.mode);
  const double delta = monotone_mode ? std::get<MonotoneMode>(p.mode).delta : std::get<WeakMode>(p.mode).delta;
  if (!(delta > 0.0) || !(delta < 1.0)) throw PreconditionError("0 < delta < 1", "level spacing out of range");
  const auto base = base_curve(zeta);
  const Vec& a_pt = base.front();
  const Vec chord = minus(base.back(), a_pt);
  const double ab = norm(chord);
  if (!(ab > 0.0)) throw PreconditionError("|AB| > 0", "degenerate chord");
  if (!is_efficient(base, p.eps, 0.5 * std::pow(p.eps, 0.25)))
    throw PreconditionError("pi_A(zeta) eps-efficient", "A-projection is not efficient");
  const double hbar = p.hbar.value_or(default_hbar(rs, zeta.kappa));
  const double ends = embedded_distance(rs, zeta.samples.front(), zeta.samples.back());

  GeodesicApproxReport rep;
  rep.level_spacing = delta * ab;
  const double s = rep.level_spacing;
  const double slope = p.wall_slope.value_or(3.0 / (delta * ends));
  for (std::size_t k = 1; k < zeta.size(); ++k) {
    if (distance(base[k], a_pt) <= std::max(zeta.c_add, s)) continue;
    if (near_wall(rs, a_pt, base[k], slope, zeta.c_add))
      throw PreconditionError("zeta outside the 3/(delta d)-linear + C neighborhood of walls at zeta(0)",
                              "sample " + std::to_string(k) + " is near a wall");
  }

  if (monotone_mode) {
    rep.verdict = delta_monotone_range(rs, zeta, delta, 0, zeta.size() - 1);
  } else {
    const auto& w = std::get<WeakMode>(p.mode);
    rep.verdict = is_weakly_monotone(rs, zeta, w.nu, w.c1);
  }
  if (!rep.verdict.is_monotone) throw PreconditionError("zeta monotone", "monotonicity verdict is negative");

  const Vec h = chord_levels(zeta, 0, zeta.size() - 1);
  const auto levels = static_cast<std::size_t>(std::floor(ab / s + 1e-12));
  std::vector<GroupPoint> level_points;
  double max_offset = 0.0;
  for (std::size_t j = 0; j <= levels; ++j) {
    const double target = std::min(static_cast<double>(j) * s, h.back());
    std::size_t k = zeta.size() - 1;
    double w = 0.0;
    bool found = h.back() == target;
    for (std::size_t m = zeta.size() - 1; !found && m > 0; --m) {
      const double lo = std::min(h[m - 1], h[m]);
      const double hi = std::max(h[m - 1], h[m]);
      if (lo <= target && target <= hi) {
        k = m - 1;
        w = hi > lo ? (target - h[m - 1]) / (h[m] - h[m - 1]) : 1.0;
        found = true;
      }
    }
    const GroupPoint z = k + 1 < zeta.size() ? lerp_point(zeta.samples[k], zeta.samples[k + 1], w) : zeta.samples[k];
    rep.level_params.push_back(k + 1 < zeta.size() ? zeta.params[k] + w * (zeta.params[k + 1] - zeta.params[k])
                                                   : zeta.params[k]);
    Vec on_chord = a_pt;
    for (std::size_t c = 0; c < on_chord.size(); ++c) on_chord[c] += target / ab * chord[c];
    max_offset = std::max(max_offset, distance(z.t, on_chord));
    level_points.push_back(z);
  }

  std::vector<Vec> fibers(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const Vec& alpha = rs.root(i).alpha;
    const double rate = dot(alpha, chord) / ab;
    std::vector<WeightPoint> pts;
    for (const auto& z : level_points) pts.push_back(project_to_weight(rs, z, i));
    std::size_t origin = 0;
    if (rate < 0.0) {
      std::reverse(pts.begin(), pts.end());
      origin = pts.size() - 1;
    }
    const double h0 = std::abs(rate) * s;
    if (!(h0 > 2.0))
      throw PreconditionError("h0 > 2", "root " + std::to_string(i) + " has level step " + std::to_string(h0) +
                                            "; the path runs too close to its wall");
    const double tol = 2.0 * norm(alpha) * max_offset + 1e-9;
    if (monotone_mode) {
      rep.per_root.push_back(approximate_by_vertical(pts, BoundedMode{h0 / 4.0}, rs.metric(i), origin, tol));
    } else {
      const auto& w = std::get<WeakMode>(p.mode);
      rep.per_root.push_back(
          approximate_by_vertical(pts, LinearMode{w.nu * s, std::min(w.c1, h0 / 2.0)}, rs.metric(i), origin, tol));
    }
    fibers[i] = rep.per_root.back().geodesic.x0;
  }

  Vec heights;
  for (double v : h) heights.push_back(std::clamp(v, 0.0, ab));
  heights.push_back(0.0);
  heights.push_back(ab);
  std::sort(heights.begin(), heights.end());
  heights.erase(std::unique(heights.begin(), heights.end()), heights.end());
  rep.segment.kappa = 1.0;
  rep.segment.geodesic = true;
  for (double v : heights) {
    GroupPoint g;
    g.x = fibers;
    g.t = a_pt;
    for (std::size_t c = 0; c < g.t.size(); ++c) g.t[c] += v / ab * chord[c];
    rep.segment.samples.push_back(std::move(g));
    rep.segment.params.push_back(v);
  }

  rep.deviation = sampled_hausdorff(rs, zeta.samples, rep.segment.samples);
  const double roots = static_cast<double>(rs.size());
  rep.bound = 2.0 * roots * (hbar * std::sqrt(delta * delta + 4.0 * p.eps * p.eps) * ab + delta * ends);
  if (monotone_mode) {
    rep.certified = rep.deviation <= rep.bound;
  } else {
    const auto& w = std::get<WeakMode>(p.mode);
    LinearNeighborhoodSpec spec{2.0 * roots * w.nu, 2.0 * roots * (w.c1 + s), rep.segment.samples.front()};
    rep.linear_contained = true;
    for (const auto& y : zeta.samples)
      if (!linear_neighborhood_contains(rs, spec, rep.segment.samples, y)) {
        rep.linear_contained = false;
        break;
      }
    rep.certified = rep.linear_contained;
  }
  return rep;
}

}  // namespace coarse
