#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace coarse {

using Vec = std::vector<double>;

double norm(std::span<const double> v);
double distance(std::span<const double> a, std::span<const double> b);

// Q(h) = 1 + sum_i |p_i(h)|. Each p_i is stored by ascending coefficients with
// a zero constant slot, so Q(0) = 1.
class MetricPolynomial {
 public:
  MetricPolynomial() = default;
  explicit MetricPolynomial(std::vector<Vec> parts);

  double operator()(double h) const;
  bool is_constant() const noexcept { return parts_.empty(); }
  const std::vector<Vec>& parts() const noexcept { return parts_; }
  // Beyond this height every e^{-h} Q(h) is strictly decreasing.
  double monotone_from() const noexcept { return monotone_from_; }

 private:
  std::vector<Vec> parts_;
  double monotone_from_ = 0.0;
};

// How two points whose fibers are far apart at both heights are separated.
// kJoin: climb from each point to the join height, (U - t1) + (U - t2).
// kLiteral: the single-sided expression U - (t1 + t2), floored at |t1 - t2|.
enum class DistanceConvention { kJoin, kLiteral };

struct WeightPoint {
  Vec x;
  double t = 0.0;
};

struct VerticalGeodesic {
  Vec x0;
};

// Smallest t0 with e^{-t} Q(t) d <= 1 for all t >= t0. Requires d > 1.
double u_inverse(const MetricPolynomial& q, double d);

// Same crossing for any d > 0; may be negative when d <= 1.
double last_crossing(const MetricPolynomial& q, double d);

double weight_distance(const WeightPoint& p, const WeightPoint& q, const MetricPolynomial& poly,
                       DistanceConvention convention = DistanceConvention::kJoin);

double dist_to_vertical(const WeightPoint& p, const VerticalGeodesic& g, const MetricPolynomial& poly);

// Finite constant with ln d - C <= U(d) <= 2 ln d + C on [lo, hi], found by a
// log-spaced scan whose interval endpoints bound U through its monotonicity.
double estimate_u_constant(const MetricPolynomial& q, double lo, double hi, std::size_t intervals = 256);

struct BoundedMode {
  double r = 0.0;
};
struct LinearMode {
  double eta = 0.0;
  double c1 = 0.0;
};

struct VerticalApproximation {
  VerticalGeodesic geodesic;   // merged geodesic through the earliest fiber coordinate
  VerticalGeodesic upper;      // through the origin point
  VerticalGeodesic lower;      // through the earliest point
  double join_height = 0.0;    // height where upper and lower come within unit distance
  double step = 0.0;           // common height step h0
  Vec step_distances;          // d_j of each point to the vertical through its neighbour
  Vec deviations;              // distance of each point to the merged geodesic
  Vec bounds;                  // per-point certified bound (2r, or 2 eta |j| + 2 C1)
  bool hypothesis_holds = false;
  bool within_bound = false;
};

// Points must be ordered by strictly increasing height with a common step h0 > 2
// (within step_tolerance). origin is the index playing the role of p_0.
VerticalApproximation approximate_by_vertical(std::span<const WeightPoint> points, const BoundedMode& mode,
                                              const MetricPolynomial& poly, std::size_t origin = 0,
                                              double step_tolerance = 1e-9);
VerticalApproximation approximate_by_vertical(std::span<const WeightPoint> points, const LinearMode& mode,
                                              const MetricPolynomial& poly, std::size_t origin = 0,
                                              double step_tolerance = 1e-9);

}  // namespace coarse
