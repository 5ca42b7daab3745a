#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "coarse/errors.hpp"
#include "coarse/metric_embed.hpp"
#include "coarse/quadrilaterals.hpp"

using namespace coarse;

namespace {

GroupPoint sol_point(double x0, double x1, double t) { return GroupPoint{{{x0}, {x1}}, {t}}; }

GroupPoint a_elem(const RootSystem& rs, const Vec& v, double s) {
  GroupPoint a = identity_point(rs);
  for (std::size_t j = 0; j < v.size(); ++j) a.t[j] = s * v[j];
  return a;
}

GroupPoint h_elem(const RootSystem& rs, const std::vector<Vec>& u) {
  GroupPoint g = identity_point(rs);
  g.x = u;
  return g;
}

double coord_gap(const GroupPoint& p, const GroupPoint& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.x.size(); ++i)
    for (std::size_t k = 0; k < p.x[i].size(); ++k) d = std::max(d, std::abs(p.x[i][k] - q.x[i][k]));
  for (std::size_t j = 0; j < p.t.size(); ++j) d = std::max(d, std::abs(p.t[j] - q.t[j]));
  return d;
}

Quadrilateral rotated(const Quadrilateral& q, std::size_t k) {
  Quadrilateral out = q;
  for (std::size_t i = 0; i < 4; ++i) {
    out.begin[i] = q.begin[(i + k) % 4];
    out.end[i] = q.end[(i + k) % 4];
  }
  return out;
}

const Vec kUp{1.0};

}  // namespace

TEST_CASE("commutator quadrilateral in Sol matches the hand-evaluated vertices") {
  const auto sol = sol_group();
  const double t = 3.0;
  const double e3 = std::exp(t);
  const auto q = build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {1.0}}, t);
  const std::array<GroupPoint, 4> b = {sol_point(0, 0, -t), sol_point(e3, 0, t), sol_point(e3, e3, -t),
                                       sol_point(0, e3, t)};
  const std::array<GroupPoint, 4> e = {sol_point(0, 0, t), sol_point(e3, 0, -t), sol_point(e3, e3, t),
                                       sol_point(0, e3, -t)};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(coord_gap(q.begin[i], b[i]) <= 1e-12 * e3);
    CHECK(coord_gap(q.end[i], e[i]) <= 1e-12 * e3);
    CHECK(edge_length(q.begin[i], q.end[i]) == doctest::Approx(2.0 * t));
  }

  // x y x^{-1} y^{-1} with x = t x~ t^{-1}, y = t^{-1} y~ t evaluates to the identity.
  const GroupPoint xt = h_elem(sol, {{1.0}, {0.0}});
  const GroupPoint yt = h_elem(sol, {{0.0}, {1.0}});
  const GroupPoint x = multiply(sol, multiply(sol, a_elem(sol, kUp, t), xt), a_elem(sol, kUp, -t));
  const GroupPoint y = multiply(sol, multiply(sol, a_elem(sol, kUp, -t), yt), a_elem(sol, kUp, t));
  const GroupPoint word = multiply(sol, multiply(sol, multiply(sol, x, y), inverse(sol, x)), inverse(sol, y));
  CHECK(coord_gap(word, identity_point(sol)) == 0.0);
  // The last joint closes the loop: e_3 y~^{-1} = b_0.
  CHECK(coord_gap(multiply(sol, q.end[3], h_elem(sol, {{0.0}, {-1.0}})), q.begin[0]) == 0.0);
}

TEST_CASE("commutator quadrilateral passes every check with exact joints") {
  const auto sol = sol_group();
  for (double t : {1.0, 3.0, 7.5}) {
    const auto q = build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {1.0}}, t);
    const auto v = check_quadrilateral(sol, q, 0.0);
    CHECK(v.ok());
    CHECK(v.failures.empty());
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(v.joints[i] == 0.0);
      // Horizontal join at height t + ln|x|: (t + t) + (t + t) = 4t.
      CHECK(v.divergences[i] == doctest::Approx(4.0 * t).epsilon(1e-9));
    }
    const auto o = orientation_pattern(q);
    CHECK(o.conformant);
    CHECK(o.text == "+-+-");
    const auto s = structure_report(sol, q, 0.0);
    CHECK(s.spread == 0.0);
    CHECK(s.spread_ok);
    CHECK(s.cosets_ok);
    for (std::size_t i = 0; i < 4; ++i) CHECK(s.proximity[i] == 0.0);
    CHECK(s.coset[0] == -s.coset[1]);
  }
}

TEST_CASE("commutator word has zero residual and zero spread") {
  const auto sol = sol_group();
  RankOneWord w;
  w.r = {6.0, 6.0, 6.0, 6.0};
  w.u = {std::vector<Vec>{{1.0}, {0.0}}, std::vector<Vec>{{0.0}, {1.0}}, std::vector<Vec>{{-1.0}, {0.0}},
         std::vector<Vec>{{0.0}, {-1.0}}};
  const auto r = word_residual(sol, kUp, w, 0.1);
  CHECK(r.residual == 0.0);
  CHECK(r.distance == 0.0);
  CHECK(r.trivial);
  CHECK(r.height_gap == 0.0);
  CHECK(r.spread_holds);
  for (double s : r.spread) CHECK(s == 0.0);

  SUBCASE("perturbing one fiber element breaks triviality") {
    RankOneWord p = w;
    p.u[2][0][0] += 1e-3;
    const auto rp = word_residual(sol, kUp, p, 0.1);
    CHECK(rp.residual > 0.0);
    CHECK_FALSE(rp.trivial);
  }
  SUBCASE("degenerate loop") {
    RankOneWord d;
    d.r = {4.0, 4.0, 4.0, 4.0};
    d.u.fill(std::vector<Vec>{{0.0}, {0.0}});
    const auto rd = word_residual(sol, kUp, d, 0.1);
    CHECK(rd.residual == 0.0);
    CHECK(rd.spread_holds);
    for (double s : rd.spread) CHECK(s == 0.0);
  }
}

TEST_CASE("commutator construction rejects degenerate input") {
  const auto sol = sol_group();
  CHECK_THROWS_AS(build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {1.0}}, 0.0), PreconditionError);
  CHECK_THROWS_AS(build_commutator_quadrilateral(sol, kUp, {{0.0}, {0.0}}, {{0.0}, {1.0}}, 2.0), PreconditionError);
  CHECK_THROWS_AS(build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {0.0}}, 2.0), PreconditionError);
  CHECK_THROWS_AS(build_commutator_quadrilateral(sol, kUp, {{1.0}, {1.0}}, {{0.0}, {1.0}}, 2.0), PreconditionError);
  // v with alpha(v) = 0 for the second root of the rank-2 group.
  const auto r2 = rank2_group();
  CHECK_THROWS_AS(build_commutator_quadrilateral(r2, {1.0, 0.0}, {{1.0}, {0.0}, {0.0}}, {{0.0}, {0.0}, {1.0}}, 2.0),
                  PreconditionError);
}

TEST_CASE("scaling the fiber element keeps the heights and scales the offsets") {
  const auto sol = sol_group();
  const auto q1 = build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {1.0}}, 2.0);
  const auto q5 = build_commutator_quadrilateral(sol, kUp, {{5.0}, {0.0}}, {{0.0}, {1.0}}, 2.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(q1.begin[i].t == q5.begin[i].t);
    CHECK(q1.end[i].t == q5.end[i].t);
    CHECK(q5.begin[i].x[0][0] == doctest::Approx(5.0 * q1.begin[i].x[0][0]));
    CHECK(q5.begin[i].x[1][0] == q1.begin[i].x[1][0]);
  }
}

TEST_CASE("restricted rank-2 commutator quadrilateral") {
  const auto r2 = rank2_group();
  const Vec v{0.5, 1.0};  // alpha(v) = 0.5, 1, -1.5
  const auto q = build_commutator_quadrilateral(r2, v, {{1.0}, {1.0}, {0.0}}, {{0.0}, {0.0}, {1.0}}, 2.0);
  const auto verdict = check_quadrilateral(r2, q, 0.0);
  CHECK(verdict.ok());
  CHECK(orientation_pattern(q).conformant);
  const auto s = structure_report(r2, q, 0.0);
  CHECK(s.spread == 0.0);
  CHECK(s.cosets_ok);
}

TEST_CASE("re-signed edges are flagged") {
  const auto sol = sol_group();
  const auto q = build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {1.0}}, 3.0);

  SUBCASE("all edges pointing up") {
    Quadrilateral up = q;
    std::swap(up.begin[1], up.end[1]);
    std::swap(up.begin[3], up.end[3]);
    const auto o = orientation_pattern(up);
    CHECK(o.text == "++++");
    CHECK_FALSE(o.conformant);
    const auto v = check_quadrilateral(sol, up, 0.1);
    CHECK_FALSE(v.divergence_ok);
    CHECK_FALSE(v.ok());
    // Upper end of T_0 to lower end of T_1 backtracks: 2t + 2t - 2t = 2t < 4t.
    CHECK(v.divergences[0] == doctest::Approx(6.0));
  }
  SUBCASE("pattern ++--") {
    Quadrilateral bad = q;
    std::swap(bad.begin[1], bad.end[1]);
    std::swap(bad.begin[2], bad.end[2]);
    const auto o = orientation_pattern(bad);
    CHECK(o.text == "++--");
    CHECK_FALSE(o.conformant);
  }
}

TEST_CASE("orientation pattern is invariant under relabeling") {
  const auto sol = sol_group();
  const auto q = build_commutator_quadrilateral(sol, kUp, {{2.0}, {0.0}}, {{0.0}, {3.0}}, 10.0);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto qr = rotated(q, k);
    const auto o = orientation_pattern(qr);
    CHECK(o.conformant);
    CHECK(o.text == (k % 2 == 0 ? "+-+-" : "-+-+"));
    // Joints of size 2 ln 2 and 2 ln 3 against |T_i| + |T_i+1| = 40.
    CHECK(check_quadrilateral(sol, qr, 0.1).ok());
  }
}

TEST_CASE("edge length floor") {
  const auto sol = sol_group();
  auto q = build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {1.0}}, 3.0);
  // Shorten T_0 to length 1: sum = 19, 2 eta sum = 3.8 at eta = 0.1.
  q.end[0].t[0] = q.begin[0].t[0] + 1.0;
  const auto v = check_quadrilateral(sol, q, 0.1);
  CHECK_FALSE(v.floor_ok);
  CHECK(v.perimeter == doctest::Approx(19.0));
  bool named = false;
  for (const auto& f : v.failures) named = named || f == "|T_0| > 2 eta sum |T_j|";
  CHECK(named);
}

TEST_CASE("non-vertical edges break the common direction") {
  const auto sol = sol_group();
  auto q = build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {1.0}}, 3.0);
  q.end[2].x[0][0] += 5.0;
  CHECK_FALSE(check_quadrilateral(sol, q, 0.0).direction_ok);
}

TEST_CASE("mismatched edge lengths exceed the structure bound") {
  const auto sol = sol_group();
  auto q = build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {1.0}}, 3.0);
  q.end[0].t[0] = q.begin[0].t[0] + 9.0;  // lengths 9, 6, 6, 6
  const auto s = structure_report(sol, q, 0.1);
  CHECK(s.spread == doctest::Approx(3.0));
  CHECK(s.bound == doctest::Approx(2.7));
  CHECK_FALSE(s.spread_ok);
}

TEST_CASE("word membership and hypotheses are enforced") {
  const auto sol = sol_group();
  RankOneWord w = close_word(sol, kUp, 6.0, 6.0, 6.0, {{1.0}, {0.0}}, {{0.0}, {1.0}});
  RankOneWord bad = w;
  bad.u[0][1][0] = 0.5;
  try {
    word_residual(sol, kUp, bad, 0.1);
    FAIL("membership violation accepted");
  } catch (const PreconditionError& e) {
    CHECK(e.inequality() == "u_0, u_2 in W_v^+");
  }
  bad = w;
  bad.u[3] = {{1.0}, {0.0}};
  CHECK_THROWS_AS(word_residual(sol, kUp, bad, 0.1), PreconditionError);
  // r_j > 2 eta sum r fails at eta = 1/8 with equal sides.
  try {
    word_residual(sol, kUp, w, 0.125);
    FAIL("side floor accepted");
  } catch (const PreconditionError& e) {
    CHECK(e.inequality() == "r_j > 2 eta sum r");
  }
  // d(u_j, e) <= eta (r_j + r_{j+1}): a fiber jump of size e^{10} is too large at eta = 0.1.
  bad = close_word(sol, kUp, 6.0, 6.0, 6.0, {{std::exp(10.0)}, {0.0}}, {{0.0}, {1.0}});
  try {
    word_residual(sol, kUp, bad, 0.1);
    FAIL("oversized jump accepted");
  } catch (const PreconditionError& e) {
    CHECK(e.inequality() == "d(u_j, e) <= eta (r_j + r_j+1)");
  }
}

TEST_CASE("closure solves the word exactly") {
  const auto sol = sol_group();
  const auto w = close_word(sol, kUp, 30.0, 30.5, 29.75, {{2.0}, {0.0}}, {{0.0}, {-2.0}});
  CHECK(w.r[3] == 29.25);
  CHECK(w.u[2][0][0] == doctest::Approx(-2.0 * std::exp(0.75)));
  CHECK(w.u[3][1][0] == doctest::Approx(2.0 * std::exp(0.5)));
  const auto r = word_residual(sol, kUp, w, 0.1);
  CHECK(r.trivial);
  CHECK(r.height_gap == 0.0);
  CHECK(r.nondegenerate);
  CHECK(r.spread_holds);
}

TEST_CASE("randomized trivial words satisfy the spread bound") {
  const auto sol = sol_group();
  const auto r2 = rank2_group();
  struct Setting {
    const RootSystem* rs;
    Vec v;
  };
  const std::vector<Setting> settings = {{&sol, {1.0}}, {&sol, {-1.0}}, {&r2, {0.5, 1.0}}, {&r2, {1.0, -2.0}}};
  const double eta = 0.1;
  std::mt19937_64 rng(2024);
  std::size_t words = 0, exceptions = 0;
  for (const auto& s : settings) {
    for (int k = 0; k < 125; ++k) {
      const auto w = random_trivial_word(*s.rs, s.v, eta, rng);
      const auto r = word_residual(*s.rs, s.v, w, eta);
      ++words;
      CHECK(r.trivial);
      CHECK(r.residual <= 1e-9);
      CHECK(r.height_gap == 0.0);
      CHECK(r.nondegenerate);
      if (!r.spread_holds) ++exceptions;
      // Spread <= sum of all sizes <= eta sum r.
      double total = 0.0;
      for (double x : w.r) total += x;
      for (double sp : r.spread) CHECK(sp <= eta * total + 1e-9);

      const auto q = quadrilateral_from_word(*s.rs, s.v, w);
      const auto v = check_quadrilateral(*s.rs, q, eta);
      CHECK(v.direction_ok);
      CHECK(v.closeness_ok);
      CHECK(v.floor_ok);
      CHECK(orientation_pattern(q).conformant);
    }
  }
  CHECK(words == 500);
  CHECK(exceptions == 0);
}

TEST_CASE("word quadrilaterals in Sol satisfy the structure lemma") {
  const auto sol = sol_group();
  const double eta = 0.1;
  std::mt19937_64 rng(99);
  for (int k = 0; k < 200; ++k) {
    const auto w = random_trivial_word(sol, kUp, eta, rng);
    const auto q = quadrilateral_from_word(sol, kUp, w);
    const auto v = check_quadrilateral(sol, q, eta);
    REQUIRE(v.ok());
    const auto s = structure_report(sol, q, eta);
    CHECK(s.spread_ok);
    CHECK(s.cosets_ok);
    CHECK(s.coset[0] == -s.coset[1]);
  }
}

TEST_CASE("degenerate trivial words can violate the spread bound") {
  // u_1 = u_3 = e: the word is trivial and meets the stated size hypotheses, yet
  // |r_0 - r_1| = 1 exceeds d(e, u_1) + d(e, u_3) = 0. Divergence (|u_j| >= 1) rules this out.
  const auto sol = sol_group();
  const auto w = close_word(sol, kUp, 3.0, 2.0, 2.0, {{0.5}, {0.0}}, {{0.0}, {0.0}});
  const auto r = word_residual(sol, kUp, w, 0.05);
  CHECK(r.trivial);
  CHECK_FALSE(r.nondegenerate);
  CHECK_FALSE(r.spread_holds);
}

TEST_CASE("snapping approximate segments to a quadrilateral") {
  const auto sol = sol_group();
  const auto r2 = rank2_group();
  SUBCASE("Sol: one edge lifted by 1/2") {
    auto q = build_commutator_quadrilateral(sol, kUp, {{1.0}, {0.0}}, {{0.0}, {1.0}}, 4.0);
    std::array<GroupPoint, 4> b = q.begin, e = q.end;
    b[1].t[0] += 0.5;
    e[1].t[0] += 0.5;
    const auto s = snap_quadrilateral(sol, b, e);
    CHECK(s.displacement == 0.0);
    // Both joints of T_1 are vertical gaps of 1/2 against |T_i| + |T_i+1| = 16.
    CHECK(s.eta_hat == doctest::Approx(0.5 / 16.0));
    CHECK(s.verdict.closeness_ok);
    CHECK(s.verdict.floor_ok);
  }
  SUBCASE("rank 2: tilted segments snap to the mean direction") {
    const Vec v{0.5, 1.0};
    auto q = build_commutator_quadrilateral(r2, v, {{1.0}, {1.0}, {0.0}}, {{0.0}, {0.0}, {1.0}}, 3.0);
    std::array<GroupPoint, 4> b = q.begin, e = q.end;
    e[0].t[0] += 0.05;
    e[2].t[0] -= 0.05;
    const auto s = snap_quadrilateral(r2, b, e);
    const double nv = std::hypot(0.5, 1.0);
    CHECK(s.quad.direction[0] == doctest::Approx(0.5 / nv).epsilon(1e-3));
    CHECK(s.quad.direction[1] == doctest::Approx(1.0 / nv).epsilon(1e-3));
    CHECK(s.verdict.direction_ok);
    CHECK(s.displacement < 0.2);
    CHECK(s.eta_hat < 0.05);
  }
}
