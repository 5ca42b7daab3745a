#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "coarse/errors.hpp"
#include "coarse/weight_space.hpp"

using namespace coarse;

namespace {

const MetricPolynomial kFlat;
const MetricPolynomial kLinear({{0.0, 1.0}});

WeightPoint wp(double x, double t) { return WeightPoint{{x}, t}; }

}  // namespace

TEST_CASE("u_inverse closed forms") {
  CHECK(u_inverse(kFlat, std::exp(2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(u_inverse(kFlat, 1.0 + 1e-9)) < 1e-8);
  CHECK(u_inverse(kLinear, std::exp(3.0) / 4.0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK_THROWS_AS(u_inverse(kFlat, 1.0), DomainError);
  CHECK_THROWS_AS(u_inverse(kFlat, 0.5), DomainError);
}

TEST_CASE("u_inverse solves the crossing equation for a mixed polynomial") {
  const MetricPolynomial q({{0.0, -3.0, 0.0, 1.0}, {0.0, 0.0, 2.0}});
  for (double d : {1.5, 10.0, 1e3, 1e7}) {
    const double t0 = u_inverse(q, d);
    CHECK(std::exp(-t0) * q(t0) * d == doctest::Approx(1.0).epsilon(1e-8));
    for (double h = t0 + 0.01; h < t0 + 40.0; h += 0.37) CHECK(std::exp(-h) * q(h) * d <= 1.0 + 1e-12);
  }
}

TEST_CASE("metric polynomial rejects a constant term") {
  CHECK_THROWS_AS(MetricPolynomial({{1.0, 2.0}}), ConfigError);
  CHECK(kLinear(0.0) == 1.0);
  CHECK(kLinear(-2.0) == 3.0);
}

TEST_CASE("weight distance examples") {
  CHECK(weight_distance(wp(0, 2), wp(0, 7), kFlat) == doctest::Approx(5.0));
  const double e4 = std::exp(4.0);
  SUBCASE("literal convention") {
    CHECK(weight_distance(wp(e4, 0), wp(0, 0), kFlat, DistanceConvention::kLiteral) == doctest::Approx(4.0));
    CHECK(weight_distance(wp(e4, 1), wp(0, 1), kFlat, DistanceConvention::kLiteral) == doctest::Approx(2.0));
  }
  SUBCASE("join convention") {
    CHECK(weight_distance(wp(e4, 0), wp(0, 0), kFlat) == doctest::Approx(8.0));
    CHECK(weight_distance(wp(e4, 1), wp(0, 1), kFlat) == doctest::Approx(6.0));
  }
}

TEST_CASE("distance to a vertical geodesic") {
  CHECK(dist_to_vertical(wp(3, 1), VerticalGeodesic{{3}}, kFlat) == 0.0);
  CHECK(dist_to_vertical(wp(std::exp(4.0), 0), VerticalGeodesic{{0}}, kFlat) == doctest::Approx(4.0));
  CHECK(dist_to_vertical(wp(std::exp(4.0), 5), VerticalGeodesic{{0}}, kFlat) == 0.0);
}

TEST_CASE("U bounds hold with a frozen constant") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    const MetricPolynomial q({{0.0, coef(rng), coef(rng)}, {0.0, 0.0, 0.0, coef(rng)}});
    const double c = estimate_u_constant(q, std::exp(1.0), 1e8);
    CHECK(std::isfinite(c));
    for (int k = 0; k <= 100; ++k) {
      const double ld = 1.0 + (std::log(1e8) - 1.0) * k / 100.0;
      const double u = u_inverse(q, std::exp(ld));
      CHECK(u >= ld - c - 1e-9);
      CHECK(u <= 2.0 * ld + c + 1e-9);
    }
  }
}

TEST_CASE("u_inverse is nondecreasing") {
  const MetricPolynomial q({{0.0, 1.0, -0.5, 0.1}});
  double prev = -1e300;
  for (double ld = 1e-6; ld < 20.0; ld += 0.05) {
    const double u = u_inverse(q, std::exp(ld));
    CHECK(u >= prev - 1e-9);
    prev = u;
  }
}

TEST_CASE("weight distance is a symmetric nonnegative function vanishing on the diagonal") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 3.0);
  const MetricPolynomial q({{0.0, 0.5, 0.25}});
  for (int i = 0; i < 2000; ++i) {
    WeightPoint a{{std::exp(g(rng)), g(rng)}, g(rng)};
    WeightPoint b{{std::exp(g(rng)), -std::exp(g(rng))}, g(rng)};
    for (auto conv : {DistanceConvention::kJoin, DistanceConvention::kLiteral}) {
      const double dab = weight_distance(a, b, q, conv);
      CHECK(dab == weight_distance(b, a, q, conv));
      CHECK(dab >= 0.0);
      CHECK(weight_distance(a, a, q, conv) == 0.0);
    }
  }
}

TEST_CASE("short paths in the rank one space stay confined") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double kappa = 2.0;
  int accepted = 0;
  for (int trial = 0; trial < 400 && accepted < 100; ++trial) {
    const double s = 1.0 + 9.0 * unit(rng);
    const double t1 = s * unit(rng);
    const double t2 = s * unit(rng);
    const double top = std::max(t1, t2) + (s - std::max(t1, t2)) * unit(rng);
    const double shift = std::exp(top) * (0.5 + unit(rng));
    std::vector<WeightPoint> pts;
    auto noisy = [&](double t) { return std::clamp(t + 0.05 * (unit(rng) - 0.5), 0.0, s); };
    for (double t = t1; t < top; t += 0.2) pts.push_back(wp(0.0, noisy(t)));
    for (int k = 0; k <= 4; ++k) pts.push_back(wp(shift * k / 4.0, noisy(top)));
    for (double t = top; t > t2; t -= 0.2) pts.push_back(wp(shift, noisy(t)));
    std::vector<double> cum(pts.size(), 0.0);
    for (std::size_t k = 1; k < pts.size(); ++k) cum[k] = cum[k - 1] + weight_distance(pts[k - 1], pts[k], kFlat);
    bool ok = true;
    for (std::size_t i = 0; i < pts.size() && ok; ++i)
      for (std::size_t j = i + 1; j < pts.size() && ok; ++j)
        if (cum[j] - cum[i] > 2.0 * kappa * weight_distance(pts[i], pts[j], kFlat) + 1.0) ok = false;
    if (!ok) continue;
    ++accepted;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) CHECK(weight_distance(pts[i], pts[j], kFlat) <= 80.0 * kappa * s);
  }
  CHECK(accepted >= 20);
}

TEST_CASE("vertical approximation of a vertical line") {
  std::vector<WeightPoint> pts;
  for (int j = 0; j < 6; ++j) pts.push_back(WeightPoint{{1.5, -2.0}, 4.0 * j});
  const auto res = approximate_by_vertical(pts, BoundedMode{0.5}, kFlat);
  CHECK(res.geodesic.x0 == Vec{1.5, -2.0});
  for (double d : res.deviations) CHECK(d == 0.0);
  CHECK(res.hypothesis_holds);
  CHECK(res.within_bound);
}

namespace {

// Heights j*h0 for j in [-k, k]; consecutive fiber offsets e^{j h0 + slack_j}.
std::vector<WeightPoint> drifting_points(int k, double h0, const std::function<double(int)>& slack,
                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<WeightPoint> pts(2 * k + 1);
  pts[k] = WeightPoint{{0.0, 0.0}, 0.0};
  auto offset = [&](int j) {
    Vec dir{g(rng), g(rng)};
    const double n = norm(dir);
    const double len = std::exp(j * h0 + slack(j) * unit(rng));
    return Vec{dir[0] / n * len, dir[1] / n * len};
  };
  for (int j = 1; j <= k; ++j) {
    const Vec o = offset(j);
    const Vec& prev = pts[k + j - 1].x;
    pts[k + j] = WeightPoint{{prev[0] + o[0], prev[1] + o[1]}, j * h0};
  }
  for (int j = -1; j >= -k; --j) {
    const Vec o = offset(j);
    const Vec& next = pts[k + j + 1].x;
    pts[k + j] = WeightPoint{{next[0] + o[0], next[1] + o[1]}, j * h0};
  }
  return pts;
}

}  // namespace

TEST_CASE("vertical approximation in bounded mode") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const double h0 = 4.0 + trial % 7;
    const double r = h0 / 8.0;
    const int k = 4;
    auto pts = drifting_points(k, h0, [&](int) { return r; }, rng);
    const auto res = approximate_by_vertical(pts, BoundedMode{r}, kFlat, k);
    CHECK(res.hypothesis_holds);
    CHECK(res.within_bound);
    for (double d : res.deviations) CHECK(d <= 2.0 * r + 1e-9);
  }
}

TEST_CASE("vertical approximation in linear mode") {
  std::mt19937_64 rng(29);
  const double eta = 0.05;
  for (int trial = 0; trial < 50; ++trial) {
    const double h0 = 3.0 + trial % 5;
    const double c1 = h0 / 4.0;
    const int k = 6;
    auto pts = drifting_points(k, h0, [&](int j) { return eta * std::abs(j) + c1; }, rng);
    const auto res = approximate_by_vertical(pts, LinearMode{eta, c1}, kFlat, k);
    CHECK(res.hypothesis_holds);
    CHECK(res.within_bound);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double idx = std::abs(static_cast<double>(j) - k);
      CHECK(res.deviations[j] <= 2.0 * eta * idx + 2.0 * c1 + 1e-9);
    }
  }
}

TEST_CASE("vertical approximation preconditions") {
  std::vector<WeightPoint> pts{wp(0, 0), wp(0, 1.5), wp(0, 3.0)};
  CHECK_THROWS_AS(approximate_by_vertical(pts, BoundedMode{0.1}, kFlat), PreconditionError);
  std::vector<WeightPoint> uneven{wp(0, 0), wp(0, 3), wp(0, 7)};
  CHECK_THROWS_AS(approximate_by_vertical(uneven, BoundedMode{0.1}, kFlat), PreconditionError);
  std::vector<WeightPoint> even{wp(0, 0), wp(0, 4), wp(0, 8)};
  CHECK_THROWS_AS(approximate_by_vertical(even, BoundedMode{1.5}, kFlat), PreconditionError);
  CHECK_THROWS_AS(approximate_by_vertical(even, LinearMode{0.1, 2.5}, kFlat), PreconditionError);
  CHECK_NOTHROW(approximate_by_vertical(even, LinearMode{0.1, 2.0}, kFlat));
}
