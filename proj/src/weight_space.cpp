#include "coarse/weight_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "coarse/errors.hpp"

namespace coarse {

// Scaled by the largest entry so that offsets like e^{-400} do not underflow when squared.
double norm(std::span<const double> v) {
  double m = 0.0;
  for (double c : v) m = std::max(m, std::abs(c));
  if (m == 0.0 || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double c : v) s += (c / m) * (c / m);
  return m * std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
  Vec d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm(d);
}

namespace {

double horner(const Vec& c, double h) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * h + *it;
  return v;
}

// Every real root lies in [-bound, bound].
double cauchy_bound(const Vec& c) {
  if (c.size() < 2) return 0.0;
  const double lead = std::abs(c.back());
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) m = std::max(m, std::abs(c[i]) / lead);
  return 1.0 + m;
}

Vec trimmed(Vec c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  return c;
}

}  // namespace

MetricPolynomial::MetricPolynomial(std::vector<Vec> parts) {
  for (auto& p : parts) {
    if (!p.empty() && p.front() != 0.0) throw ConfigError("metric polynomial has a nonzero constant term");
    for (double c : p)
      if (!std::isfinite(c)) throw ConfigError("metric polynomial has a non-finite coefficient");
    Vec t = trimmed(std::move(p));
    if (!t.empty()) parts_.push_back(std::move(t));
  }
  if (parts_.empty()) return;

  // Past the largest root of every part each |p_i| is a fixed-sign polynomial,
  // so Q coincides with q = 1 + sum sign_i p_i; past the roots of q - q' the
  // function e^{-h} q(h) is strictly decreasing.
  double r0 = 0.0;
  std::size_t degree = 0;
  for (const auto& p : parts_) {
    r0 = std::max(r0, cauchy_bound(p));
    degree = std::max(degree, p.size());
  }
  Vec q(degree, 0.0);
  q[0] = 1.0;
  for (const auto& p : parts_) {
    const double sign = p.back() > 0.0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < p.size(); ++i) q[i] += sign * p[i];
  }
  Vec r = q;
  for (std::size_t i = 1; i < q.size(); ++i) r[i - 1] -= static_cast<double>(i) * q[i];
  r = trimmed(std::move(r));
  monotone_from_ = std::max({0.0, r0, cauchy_bound(r)});
}

double MetricPolynomial::operator()(double h) const {
  double v = 1.0;
  for (const auto& p : parts_) v += std::abs(horner(p, h));
  return v;
}

namespace {

// log of e^{-h} Q(h) d; the crossing of interest is where this equals zero.
double log_excess(const MetricPolynomial& q, double log_d, double h) {
  return log_d - h + std::log(q(h));
}

double bisect(const MetricPolynomial& q, double log_d, double lo, double hi) {
  // Invariant: excess(lo) > 0 >= excess(hi).
  for (int it = 0; it < 400 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (log_excess(q, log_d, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  if (!(hi - lo <= 1e-10)) throw NumericalFailure("bisection for the join height did not converge");
  return 0.5 * (lo + hi);
}

}  // namespace

double last_crossing(const MetricPolynomial& q, double d) {
  if (!(d > 0.0) || !std::isfinite(d)) throw NumericalFailure("join height requested for non-finite or zero offset");
  const double log_d = std::log(d);
  if (q.is_constant()) return log_d;

  const double r = q.monotone_from();
  if (log_excess(q, log_d, r) > 0.0) {
    double lo = r;
    double step = 1.0;
    double hi = r + step;
    int guard = 0;
    while (log_excess(q, log_d, hi) > 0.0) {
      lo = hi;
      step *= 2.0;
      hi = r + step;
      if (++guard > 200) throw NumericalFailure("no bracket found for the join height");
    }
    return bisect(q, log_d, lo, hi);
  }
  // The crossing lies below r; scan down to the first height with positive excess.
  const double floor_h = std::min(0.0, log_d) - 1.0;
  const double h = std::max(std::min(0.05, (r - floor_h) / 64.0), (r - floor_h) / 20000.0);
  double hi = r;
  for (double lo = r - h;; lo -= h) {
    if (lo < floor_h) lo = floor_h;
    if (log_excess(q, log_d, lo) > 0.0) return bisect(q, log_d, lo, hi);
    if (lo == floor_h) break;
    hi = lo;
  }
  throw NumericalFailure("scan for the join height found no sign change");
}

double u_inverse(const MetricPolynomial& q, double d) {
  if (!(d > 1.0)) throw DomainError("d > 1", "u_inverse requires d > 1, got " + std::to_string(d));
  return last_crossing(q, d);
}

namespace {

// True when e^{-h} Q(h) delta <= 1.
bool unit_close(const MetricPolynomial& q, double h, double delta) {
  if (delta == 0.0) return true;
  return std::log(delta) - h + std::log(q(h)) <= 0.0;
}

}  // namespace

double weight_distance(const WeightPoint& p, const WeightPoint& q, const MetricPolynomial& poly,
                       DistanceConvention convention) {
  const double delta = distance(p.x, q.x);
  const double dt = std::abs(p.t - q.t);
  if (unit_close(poly, p.t, delta) || unit_close(poly, q.t, delta)) return dt;
  const double u = last_crossing(poly, delta);
  if (convention == DistanceConvention::kJoin) return (u - p.t) + (u - q.t);
  return std::max(dt, u - (p.t + q.t));
}

double dist_to_vertical(const WeightPoint& p, const VerticalGeodesic& g, const MetricPolynomial& poly) {
  const double delta = distance(p.x, g.x0);
  if (unit_close(poly, p.t, delta)) return 0.0;
  return std::max(0.0, last_crossing(poly, delta) - p.t);
}

double estimate_u_constant(const MetricPolynomial& q, double lo, double hi, std::size_t intervals) {
  if (!(lo > 1.0) || !(hi > lo)) throw DomainError("1 < lo < hi", "invalid scan range for the U constant");
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  Vec logs(intervals + 1);
  Vec us(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k) {
    logs[k] = llo + (lhi - llo) * static_cast<double>(k) / static_cast<double>(intervals);
    us[k] = u_inverse(q, std::exp(logs[k]));
  }
  double c = 0.0;
  for (std::size_t k = 0; k < intervals; ++k) {
    c = std::max(c, logs[k + 1] - us[k]);
    c = std::max(c, us[k + 1] - 2.0 * logs[k]);
  }
  return c;
}

namespace {

template <class BoundFn, class HypothesisFn>
VerticalApproximation approximate(std::span<const WeightPoint> points, const MetricPolynomial& poly,
                                  std::size_t origin, double step_tolerance, BoundFn bound_at,
                                  HypothesisFn hypothesis_at, auto check_mode) {
  const std::size_t n = points.size();
  if (n == 0) throw PreconditionError("nonempty point list", "no points given");
  if (origin >= n) throw PreconditionError("origin < number of points", "origin index out of range");
  VerticalApproximation out;
  if (n >= 2) {
    out.step = (points[n - 1].t - points[0].t) / static_cast<double>(n - 1);
    for (std::size_t j = 1; j < n; ++j) {
      const double s = points[j].t - points[j - 1].t;
      if (std::abs(s - out.step) > step_tolerance)
        throw PreconditionError("h(p_j) = h(p_{j-1}) + h0",
                                "height step " + std::to_string(s) + " differs from " + std::to_string(out.step));
    }
    if (!(out.step > 2.0)) throw PreconditionError("h0 > 2", "height step is " + std::to_string(out.step));
    check_mode(out.step);
  }

  out.step_distances.assign(n, 0.0);
  out.hypothesis_holds = true;
  for (std::size_t j = 0; j < n; ++j) {
    if (j > origin)
      out.step_distances[j] = dist_to_vertical(points[j], VerticalGeodesic{points[j - 1].x}, poly);
    else if (j < origin)
      out.step_distances[j] = dist_to_vertical(points[j], VerticalGeodesic{points[j + 1].x}, poly);
    const auto offset = static_cast<double>(j > origin ? j - origin : origin - j);
    if (!hypothesis_at(out.step_distances[j], offset)) out.hypothesis_holds = false;
  }

  out.upper = VerticalGeodesic{points[origin].x};
  out.lower = VerticalGeodesic{points[0].x};
  out.geodesic = out.lower;
  const double gap = distance(out.upper.x0, out.lower.x0);
  out.join_height = gap > 0.0 ? last_crossing(poly, gap) : points[0].t;

  out.deviations.resize(n);
  out.bounds.resize(n);
  out.within_bound = true;
  for (std::size_t j = 0; j < n; ++j) {
    out.deviations[j] = dist_to_vertical(points[j], out.geodesic, poly);
    const auto offset = static_cast<double>(j > origin ? j - origin : origin - j);
    out.bounds[j] = bound_at(offset);
    if (out.deviations[j] > out.bounds[j] + 1e-9) out.within_bound = false;
  }
  return out;
}

}  // namespace

VerticalApproximation approximate_by_vertical(std::span<const WeightPoint> points, const BoundedMode& mode,
                                              const MetricPolynomial& poly, std::size_t origin,
                                              double step_tolerance) {
  if (!(mode.r >= 0.0)) throw PreconditionError("r >= 0", "negative radius");
  return approximate(
      points, poly, origin, step_tolerance, [&](double) { return 2.0 * mode.r; },
      [&](double d, double) { return d <= mode.r + 1e-12; },
      [&](double h0) {
        if (!(2.0 * mode.r <= h0 / 2.0))
          throw PreconditionError("2r <= h0/2", "r = " + std::to_string(mode.r) + ", h0 = " + std::to_string(h0));
      });
}

VerticalApproximation approximate_by_vertical(std::span<const WeightPoint> points, const LinearMode& mode,
                                              const MetricPolynomial& poly, std::size_t origin,
                                              double step_tolerance) {
  if (!(mode.eta >= 0.0) || !(mode.c1 >= 0.0)) throw PreconditionError("eta, C1 >= 0", "negative parameter");
  return approximate(
      points, poly, origin, step_tolerance, [&](double j) { return 2.0 * mode.eta * j + 2.0 * mode.c1; },
      [&](double d, double j) { return d <= mode.eta * j + mode.c1 + 1e-12; },
      [&](double h0) {
        if (!(2.0 * mode.c1 <= h0))
          throw PreconditionError("2 C1 <= h0", "C1 = " + std::to_string(mode.c1) + ", h0 = " + std::to_string(h0));
      });
}

}  // namespace coarse
