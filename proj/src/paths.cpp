#include "coarse/paths.hpp"

#include <algorithm>
#include <cmath>

#include "coarse/errors.hpp"
#include "coarse/metric_embed.hpp"

namespace coarse {

Subdivision subdivide_by(std::size_t begin, std::size_t end, double r, const IndexMetric& dist) {
  if (!(r > 0.0)) throw PreconditionError("r > 0", "subdivision gap must be positive");
  if (end < begin) throw ConfigError("subdivision range is reversed");
  Subdivision out;
  out.gap = r;
  out.breakpoints.push_back(begin);
  std::size_t q = begin;
  for (std::size_t k = begin + 1; k <= end; ++k) {
    const double d = dist(q, k);
    if (d >= r) {
      out.max_overshoot = std::max(out.max_overshoot, d - r);
      out.breakpoints.push_back(k);
      q = k;
    }
  }
  if (out.breakpoints.back() != end) out.breakpoints.push_back(end);
  return out;
}

Subdivision subdivide(const RootSystem& rs, const Path& zeta, double r) {
  return subdivide_by(0, zeta.size() - 1, r, [&](std::size_t i, std::size_t j) {
    return embedded_distance(rs, zeta.samples[i], zeta.samples[j]);
  });
}

Subdivision subdivide_base(std::span<const Vec> pts, double r, std::size_t begin, std::size_t end) {
  if (end == kPathEnd) end = pts.size() - 1;
  return subdivide_by(begin, end, r, [&](std::size_t i, std::size_t j) { return distance(pts[i], pts[j]); });
}

std::vector<Vec> base_curve(const Path& zeta) {
  std::vector<Vec> out;
  out.reserve(zeta.size());
  for (const auto& p : zeta.samples) out.push_back(p.t);
  return out;
}

double chord_sum(std::span<const Vec> pts, const Subdivision& s) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < s.breakpoints.size(); ++i)
    total += distance(pts[s.breakpoints[i]], pts[s.breakpoints[i + 1]]);
  return total;
}

bool is_efficient(std::span<const Vec> pts, double eps, double rtilde, std::size_t begin, std::size_t end) {
  if (!(rtilde > 0.0) || rtilde > 1.0) throw PreconditionError("0 < rtilde <= 1", "scale out of range");
  if (end == kPathEnd) end = pts.size() - 1;
  const double gap = distance(pts[begin], pts[end]);
  if (gap == 0.0) {
    for (std::size_t k = begin; k <= end; ++k)
      if (distance(pts[k], pts[begin]) != 0.0) return false;
    return true;
  }
  const auto s = subdivide_base(pts, rtilde * gap, begin, end);
  return chord_sum(pts, s) <= (1.0 + eps) * gap * (1.0 + 1e-12);
}

bool is_efficient(const RootSystem& rs, const Path& zeta, double eps, double rtilde) {
  if (!(rtilde > 0.0) || rtilde > 1.0) throw PreconditionError("0 < rtilde <= 1", "scale out of range");
  const double gap = embedded_distance(rs, zeta.samples.front(), zeta.samples.back());
  if (gap == 0.0) return false;
  const auto s = subdivide(rs, zeta, rtilde * gap);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < s.breakpoints.size(); ++i)
    total += embedded_distance(rs, zeta.samples[s.breakpoints[i]], zeta.samples[s.breakpoints[i + 1]]);
  return total <= (1.0 + eps) * gap * (1.0 + 1e-12);
}

namespace {

double point_segment_distance(std::span<const double> p, std::span<const double> a, std::span<const double> b) {
  double ab2 = 0.0;
  double ap_ab = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    ab2 += (b[k] - a[k]) * (b[k] - a[k]);
    ap_ab += (p[k] - a[k]) * (b[k] - a[k]);
  }
  const double w = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
  double d2 = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double c = a[k] + w * (b[k] - a[k]) - p[k];
    d2 += c * c;
  }
  return std::sqrt(d2);
}

}  // namespace

double chord_hausdorff(std::span<const Vec> pts) {
  const Vec& a = pts.front();
  const Vec& b = pts.back();
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, point_segment_distance(p, a, b));
  if (pts.size() < 2) return worst;

  // The chord-to-curve distance is the lower envelope of convex per-edge distances, so its
  // maximum sits at a chord end or where the nearest edge changes; locate those by bisection.
  const std::size_t n = pts.size();
  auto chord_point = [&](double s) {
    Vec c(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) c[k] = a[k] + s * (b[k] - a[k]);
    return c;
  };
  auto nearest = [&](double s, std::size_t& edge) {
    const Vec c = chord_point(s);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e + 1 < n; ++e) {
      const double d = point_segment_distance(c, pts[e], pts[e + 1]);
      if (d < best) {
        best = d;
        edge = e;
      }
    }
    return best;
  };
  auto edge_dist = [&](double s, std::size_t e) { return point_segment_distance(chord_point(s), pts[e], pts[e + 1]); };
  const std::size_t grid = std::max<std::size_t>(1024, 4 * n);
  std::size_t prev_edge = 0;
  double prev_s = 0.0;
  worst = std::max(worst, nearest(0.0, prev_edge));
  for (std::size_t k = 1; k <= grid; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(grid);
    std::size_t edge = 0;
    worst = std::max(worst, nearest(s, edge));
    if (edge != prev_edge) {
      double lo = prev_s;
      double hi = s;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (edge_dist(mid, prev_edge) <= edge_dist(mid, edge))
          lo = mid;
        else
          hi = mid;
      }
      std::size_t ignored = 0;
      worst = std::max(worst, nearest(0.5 * (lo + hi), ignored));
    }
    prev_edge = edge;
    prev_s = s;
  }
  return worst;
}

double default_hbar(const RootSystem& rs, double kappa) {
  return std::ldexp(80.0 * kappa, 2 * (static_cast<int>(rs.size()) - 1));
}

double desk_hbar(double kappa) { return 1.0 / ((2.0 * kappa) * (2.0 * kappa)); }

ScaleProfile efficiency_profile(std::span<const Vec> base, double eps, double l_stop) {
  if (!(eps > 0.0) || eps >= 1.0) throw PreconditionError("0 < eps < 1", "eps = " + std::to_string(eps));
  if (!(l_stop > 0.0)) throw PreconditionError("L_stop > 0", "stopping scale must be positive");
  const double c = 0.5 * std::pow(eps, 0.25);
  const std::size_t last = base.size() - 1;
  const double gap = distance(base.front(), base.back());
  if (!(gap > 0.0)) throw PreconditionError("|lambda| > 0", "A-projection has coincident endpoints");

  ScaleProfile prof;
  std::vector<std::size_t> bps{0, last};
  double rho = 1.0;
  for (std::size_t j = 0;; ++j) {
    if (j > 0) {
      rho *= c;
      std::vector<std::size_t> next{0};
      for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
        const auto s = subdivide_base(base, rho * gap, bps[i], bps[i + 1]);
        next.insert(next.end(), s.breakpoints.begin() + 1, s.breakpoints.end());
      }
      bps = std::move(next);
    }
    if (c * rho * gap < l_stop) break;
    double total = 0.0;
    double bad = 0.0;
    for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
      const double g = distance(base[bps[i]], base[bps[i + 1]]);
      total += g;
      if (!is_efficient(base, eps, c, bps[i], bps[i + 1])) bad += g;
    }
    prof.rho.push_back(rho);
    prof.delta.push_back(total > 0.0 ? bad / total : 0.0);
    prof.cells.push_back(bps.size() - 1);
    prof.breakpoints.push_back(bps);
  }
  return prof;
}

double efficiency_required_length(const EfficiencyParams& p, double hbar, double kappa) {
  const double c = 0.5 * std::pow(p.eps, 0.25);
  const double scales = 1.0 + hbar * (2.0 * kappa) * (2.0 * kappa) * p.n_bound / p.eps;
  return p.l_stop * std::exp(-std::log(c) * scales) / (2.0 * kappa);
}

ScaleReport find_efficiency_scale(const RootSystem& rs, const Path& zeta, const EfficiencyParams& params) {
  check_path(rs, zeta);
  if (!(params.n_bound > 2.0)) throw PreconditionError("N > 2", "N = " + std::to_string(params.n_bound));
  if (params.l_stop < 2.0 * zeta.kappa * zeta.c_add)
    throw PreconditionError("L_stop >= 2 kappa C", "L_stop = " + std::to_string(params.l_stop));
  const auto base = base_curve(zeta);
  ScaleReport rep;
  rep.length = zeta.length();
  const double hbar = params.hbar.value_or(default_hbar(rs, zeta.kappa));
  rep.required_length = efficiency_required_length(params, hbar, zeta.kappa);
  const auto prof = efficiency_profile(base, params.eps, params.l_stop);
  rep.rhos = prof.rho;
  rep.deltas = prof.delta;
  const bool top_efficient = !prof.delta.empty() && prof.delta[0] == 0.0;
  if (!top_efficient && rep.length < rep.required_length)
    throw PreconditionError("L >= L_required",
                            "parameter length " + std::to_string(rep.length) + " is below the required " +
                                std::to_string(rep.required_length));
  for (std::size_t j = 0; j < prof.delta.size(); ++j) {
    if (prof.delta[j] <= 1.0 / params.n_bound) {
      rep.accepted = true;
      rep.index = j;
      rep.rho = prof.rho[j];
      return rep;
    }
  }
  rep.reason = "no scale with delta <= 1/N above L_stop";
  return rep;
}

FamilyScaleReport find_efficiency_scale_family(const RootSystem& rs, const std::vector<Path>& family,
                                               const EfficiencyParams& params, double n0) {
  if (family.empty()) throw ConfigError("empty path family");
  if (!(n0 > 0.0) || !(n0 < params.n_bound)) throw PreconditionError("0 < N0 < N", "N0 = " + std::to_string(n0));
  FamilyScaleReport rep;
  std::size_t common = std::numeric_limits<std::size_t>::max();
  std::vector<Vec> rhos;
  for (const auto& zeta : family) {
    check_path(rs, zeta);
    const auto base = base_curve(zeta);
    const auto prof = efficiency_profile(base, params.eps, params.l_stop);
    const double hbar = params.hbar.value_or(default_hbar(rs, zeta.kappa));
    const bool top_efficient = !prof.delta.empty() && prof.delta[0] == 0.0;
    if (!top_efficient && zeta.length() < efficiency_required_length(params, hbar, zeta.kappa))
      throw PreconditionError("L >= L_required", "a family member fails the length condition");
    rep.member_deltas.push_back(prof.delta);
    rhos.push_back(prof.rho);
    common = std::min(common, prof.delta.size());
  }
  if (common == 0) throw PreconditionError("eps^{1/4}/2 |lambda| >= L_stop", "a member is shorter than the stop scale");
  rep.mean_deltas.assign(common, 0.0);
  for (const auto& d : rep.member_deltas)
    for (std::size_t j = 0; j < common; ++j) rep.mean_deltas[j] += d[j] / static_cast<double>(family.size());
  std::size_t chosen = common;
  for (std::size_t j = 0; j < common; ++j)
    if (rep.mean_deltas[j] <= 1.0 / params.n_bound) {
      chosen = j;
      break;
    }
  if (chosen == common) throw NumericalFailure("no common scale with mean delta <= 1/N");
  rep.index = chosen;
  rep.rho = rhos.front()[chosen];
  for (std::size_t m = 0; m < family.size(); ++m)
    if (rep.member_deltas[m][chosen] <= 1.0 / n0) rep.selected.push_back(m);
  return rep;
}

SubsegmentReport efficient_subsegment_fraction(std::span<const Vec> base, double eps,
                                               const std::vector<std::size_t>& breakpoints, double r_s, double r_b) {
  if (breakpoints.size() < 2) throw ConfigError("need at least one coarse cell");
  const double gap = distance(base[breakpoints.front()], base[breakpoints.back()]);
  const double q = std::pow(eps, 0.25);
  const double c = 0.5 * q;
  const double slack = 1e-9 * gap;
  if (!(r_s <= r_b) || r_s < q * gap - slack || r_b > gap + slack)
    throw PreconditionError("eps^{1/4} L <= r_s <= r_b <= L", "cell size bounds out of range");
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double d = distance(base[breakpoints[i]], base[breakpoints[i + 1]]);
    if (d < r_s - slack || d > r_b + slack)
      throw PreconditionError("r_s <= d(q_i, q_{i+1}) <= r_b", "cell " + std::to_string(i) + " has gap " + std::to_string(d));
  }
  if (!is_efficient(base, eps, c, breakpoints.front(), breakpoints.back()))
    throw PreconditionError("lambda eps-efficient at scale eps^{1/4}/2", "the curve is not efficient");
  SubsegmentReport rep;
  const double root_eps = std::sqrt(eps);
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    if (!is_efficient(base, root_eps, c, breakpoints[i], breakpoints[i + 1])) rep.bad_cells.push_back(i);
  rep.bad_fraction = static_cast<double>(rep.bad_cells.size()) / static_cast<double>(breakpoints.size() - 1);
  rep.bound = root_eps * r_b / r_s;
  return rep;
}

double max_detour_ratio(const RootSystem& rs, const Path& zeta, std::size_t chains, std::mt19937_64& rng) {
  const std::size_t n = zeta.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<std::size_t> len(2, std::min<std::size_t>(n, 12));
  double worst = 0.0;
  for (std::size_t c = 0; c < chains; ++c) {
    std::vector<std::size_t> idx(len(rng));
    for (auto& i : idx) i = pick(rng);
    std::sort(idx.begin(), idx.end());
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < idx.size(); ++k)
      sum += embedded_distance(rs, zeta.samples[idx[k]], zeta.samples[idx[k + 1]]);
    const double ends = embedded_distance(rs, zeta.samples[idx.front()], zeta.samples[idx.back()]);
    if (sum == 0.0) continue;
    worst = std::max(worst, ends > 0.0 ? sum / ends : std::numeric_limits<double>::infinity());
  }
  return worst;
}

ConfinementReport confinement_check(const RootSystem& rs, const Path& zeta, double s, std::optional<double> hbar,
                                    std::size_t chains, std::uint64_t seed) {
  check_path(rs, zeta);
  if (!(s > 0.0)) throw PreconditionError("s > 0", "ball diameter must be positive");
  ConfinementReport rep;
  for (std::size_t i = 0; i < zeta.size(); ++i)
    for (std::size_t j = i + 1; j < zeta.size(); ++j) {
      rep.base_diameter = std::max(rep.base_diameter, distance(zeta.samples[i].t, zeta.samples[j].t));
      rep.max_distance = std::max(rep.max_distance, embedded_distance(rs, zeta.samples[i], zeta.samples[j]));
    }
  if (rep.base_diameter > s * (1.0 + 1e-12))
    throw PreconditionError("diam pi_A(zeta) <= s", "A-diameter is " + std::to_string(rep.base_diameter));
  std::mt19937_64 rng(seed);
  rep.max_detour = chains > 0 ? max_detour_ratio(rs, zeta, chains, rng) : 0.0;
  rep.hbar = hbar.value_or(default_hbar(rs, zeta.kappa));
  rep.ratio = rep.max_distance / s;
  rep.holds = rep.ratio <= rep.hbar;
  return rep;
}

}  // namespace coarse
