#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "coarse/errors.hpp"
#include "coarse/metric_embed.hpp"

using namespace coarse;

namespace {

GroupPoint sol_point(double xp, double xm, double t) { return GroupPoint{{{xp}, {xm}}, {t}}; }

Path vertical_path(double xp, double xm, double t0, double t1, std::size_t n) {
  Path p;
  p.geodesic = true;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = static_cast<double>(k) / static_cast<double>(n - 1);
    p.samples.push_back(sol_point(xp, xm, t0 + w * (t1 - t0)));
    p.params.push_back(w * 2.0 * std::abs(t1 - t0));
  }
  return p;
}

}  // namespace

TEST_CASE("projections") {
  const auto sol = sol_group();
  const auto rk2 = rank2_group();
  CHECK(project_to_base(identity_point(rk2)) == Vec{0.0, 0.0});
  GroupPoint p = identity_point(rk2);
  p.t = {1.0, 2.0};
  CHECK(project_to_base(p) == Vec{1.0, 2.0});
  GroupPoint g = identity_point(rk2);
  g.t = {0.5, -1.0};
  CHECK(project_to_base(multiply(rk2, g, p)) == Vec{1.5, 1.0});
  const auto w0 = project_to_weight(sol, identity_point(sol), 0);
  CHECK(w0.x == Vec{0.0});
  CHECK(w0.t == 0.0);
  const auto q = sol_point(3, 5, 2);
  const auto plus = project_to_weight(sol, q, 0);
  const auto minus = project_to_weight(sol, q, 1);
  CHECK(plus.x == Vec{3.0});
  CHECK(plus.t == 2.0);
  CHECK(minus.x == Vec{5.0});
  CHECK(minus.t == -2.0);
}

TEST_CASE("embedded distance examples") {
  const auto sol = sol_group();
  const auto p = sol_point(0.7, -2.0, 0.3);
  CHECK(embedded_distance(sol, p, p) == 0.0);
  CHECK(embedded_distance(sol, sol_point(0, 0, 0), sol_point(0, 0, 3)) == doctest::Approx(6.0));
  const auto a = sol_point(std::exp(4.0), 0, 0);
  const auto b = sol_point(0, 0, 0);
  CHECK(embedded_distance(sol.with_convention(DistanceConvention::kLiteral), a, b) == doctest::Approx(4.0));
  CHECK(embedded_distance(sol, a, b) == doctest::Approx(8.0));
}

TEST_CASE("embedded distance is symmetric and separates grid points") {
  const auto sol = sol_group();
  std::vector<GroupPoint> grid;
  for (int xp = -1; xp <= 1; ++xp)
    for (int xm = -1; xm <= 1; ++xm)
      for (int t = -2; t <= 2; ++t) grid.push_back(sol_point(25.0 * xp, 25.0 * xm, t));
  for (const auto& p : grid)
    for (const auto& q : grid) {
      const double d = embedded_distance(sol, p, q);
      CHECK(d == embedded_distance(sol, q, p));
      const bool same = p.x == q.x && p.t == q.t;
      CHECK((d == 0.0) == same);
    }
}

TEST_CASE("flat overlap examples") {
  const auto sol = sol_group();
  const std::vector<Vec> zero{{0.0}, {0.0}};
  const auto whole = flat_overlap_region(sol, zero, zero);
  CHECK(whole.constraints.empty());
  CHECK(whole.feasible);
  const double e4 = std::exp(4.0);
  const auto half = flat_overlap_region(sol, {{e4}, {0.0}}, zero);
  REQUIRE(half.constraints.size() == 1);
  CHECK(half.constraints[0].normal == Vec{1.0});
  CHECK(half.constraints[0].offset == doctest::Approx(4.0));
  CHECK(half.feasible);
  const auto empty = flat_overlap_region(sol, {{e4}, {e4}}, zero);
  CHECK(empty.constraints.size() == 2);
  CHECK_FALSE(empty.feasible);
  const auto below = flat_overlap_region(sol, {{2.0}, {0.0}}, zero);
  CHECK(below.constraints.empty());
}

TEST_CASE("flat overlap feasibility matches a grid oracle in rank two") {
  const auto rk2 = rank2_group();
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> lg(0.0, 8.0);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Vec> x{{std::exp(lg(rng))}, {std::exp(lg(rng))}, {std::exp(lg(rng))}};
    const std::vector<Vec> y{{0.0}, {0.0}, {0.0}};
    const auto region = flat_overlap_region(rk2, x, y);
    double best_margin = -std::numeric_limits<double>::infinity();
    for (double t1 = -20.0; t1 <= 20.0; t1 += 0.05)
      for (double t2 = -20.0; t2 <= 20.0; t2 += 0.05) {
        double margin = std::numeric_limits<double>::infinity();
        for (const auto& h : region.constraints)
          margin = std::min(margin, h.normal[0] * t1 + h.normal[1] * t2 - h.offset);
        best_margin = std::max(best_margin, margin);
      }
    if (best_margin > 1e-6) {
      CHECK(region.feasible);
      ++compared;
    } else if (best_margin < -0.1) {
      CHECK_FALSE(region.feasible);
      ++compared;
    }
  }
  CHECK(compared > 250);
}

TEST_CASE("Fourier-Motzkin handles higher dimensions and refuses dim > 4") {
  std::vector<Halfspace> cube;
  for (std::size_t j = 0; j < 4; ++j) {
    Vec n(4, 0.0);
    n[j] = 1.0;
    cube.push_back(Halfspace{n, 0.0, 0});
    n[j] = -1.0;
    cube.push_back(Halfspace{n, -1.0, 0});
  }
  CHECK(halfspaces_feasible(cube, 4));
  cube.push_back(Halfspace{{1.0, 1.0, 1.0, 1.0}, 4.5, 0});
  CHECK_FALSE(halfspaces_feasible(cube, 4));
  CHECK_THROWS_AS(halfspaces_feasible({}, 5), UnsupportedOperation);
}

TEST_CASE("common flat fraction") {
  const auto sol = sol_group();
  const Path g = vertical_path(0, 0, 0, 10, 11);
  CHECK(common_flat_fraction(sol, g, g, 1e-9) == doctest::Approx(1.0));

  Path split = g;
  split.samples.clear();
  split.params.clear();
  for (int k = 0; k <= 5; ++k) {
    split.samples.push_back(sol_point(0, 0, k));
    split.params.push_back(2.0 * k);
  }
  split.samples.push_back(sol_point(1e6, 0, 5.0 + 1e-9));
  split.params.push_back(10.0 + 2e-9);
  for (int k = 6; k <= 10; ++k) {
    split.samples.push_back(sol_point(1e6, 0, k));
    split.params.push_back(2.0 * k);
  }
  CHECK(common_flat_fraction(sol, g, split, 1e-3) == doctest::Approx(0.5).epsilon(1e-6));

  Path curve = g;
  curve.geodesic = false;
  CHECK_THROWS_AS(common_flat_fraction(sol, g, curve, 1.0), PreconditionError);
}

TEST_CASE("common flat fraction in the nearby-segments regime") {
  const auto sol = sol_group();
  const double eta_tilde = 0.1;
  for (double length : {200.0, 400.0, 800.0}) {
    const Path gamma = vertical_path(0, 0, 0, length, 401);
    const double offset = std::exp(0.01 * 4.0 * length / 2.0);
    const Path zeta = vertical_path(offset, 0, 0, length, 401);
    const double hausdorff = sampled_hausdorff(sol, gamma.samples, zeta.samples);
    const double eta = hausdorff / (gamma.length() + zeta.length());
    CHECK(eta <= 0.011);
    const double off = 1.0 - common_flat_fraction(sol, gamma, zeta, 1.0);
    CHECK(off <= eta / eta_tilde);
  }
}

TEST_CASE("linear neighborhoods") {
  const auto sol = sol_group();
  const auto x0 = sol_point(0, 0, 0);
  const std::vector<GroupPoint> xs{sol_point(0, 0, 10), sol_point(0, 0, -10)};
  CHECK(linear_neighborhood_contains(sol, {0.0, 0.0, x0}, xs, xs[1]));
  CHECK_FALSE(linear_neighborhood_contains(sol, {0.0, 0.0, x0}, xs, sol_point(0, 0, 9)));
  // d(x, x0) = 20, so the radius is 0.1 * 20 + 1 = 3; a point at distance 2.5 lies inside.
  const LinearNeighborhoodSpec spec{0.1, 1.0, x0};
  CHECK(linear_neighborhood_contains(sol, spec, xs, sol_point(0, 0, 11.25)));
  CHECK_FALSE(linear_neighborhood_contains(sol, spec, xs, sol_point(0, 0, 11.75)));
}

TEST_CASE("Finsler length sandwich of the embedding") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& rs : {sol_group(), rank2_group()}) {
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<GroupPoint> vertices;
      GroupPoint p = identity_point(rs);
      for (int k = 0; k < 5; ++k) {
        vertices.push_back(p);
        for (auto& b : p.x)
          for (double& c : b) c += g(rng) * 2.0;
        for (double& c : p.t) c += g(rng);
      }
      const double mixed = mixed_finsler_length(rs, vertices);
      double sum = 0.0;
      for (std::size_t i = 0; i < rs.size(); ++i) sum += weight_finsler_length(rs, vertices, i);
      CHECK(sum / static_cast<double>(rs.size()) <= mixed * 1.02);
      CHECK(mixed <= sum * 1.02);
    }
  }
}
