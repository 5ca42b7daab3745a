#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "coarse/combinatorics.hpp"
#include "coarse/errors.hpp"

using namespace coarse;

namespace {

IncidenceStructure complete(std::size_t na, std::size_t nb, double w) {
  IncidenceStructure inc{Vec(na, w), Vec(nb, w), {}};
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) inc.relation.emplace_back(a, b);
  return inc;
}

// Points spread over the unit sphere in R^3 by the golden-angle spiral.
std::vector<Vec> fibonacci_sphere(std::size_t n) {
  std::vector<Vec> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double r = std::sqrt(1.0 - z * z);
    out.push_back({r * std::cos(golden * static_cast<double>(i)), r * std::sin(golden * static_cast<double>(i)), z});
  }
  return out;
}

double segment_distance(double px, double py, double c) {
  const double x = std::clamp(px, 0.0, c);
  return std::hypot(px - x, py);
}

}  // namespace

TEST_CASE("ping-pong averaging on the two-by-two example") {
  const auto inc = complete(2, 2, 0.5);
  const auto r = pingpong_bound_check(inc, {0}, 0.5, 0.75);
  CHECK(r.members.empty());
  CHECK(r.measured == 0.0);
  CHECK(r.ratio_a == 1.0);
  CHECK(r.ratio_b == 1.0);
  CHECK(r.bound == doctest::Approx(2.0 / 3.0));
  CHECK(r.holds);
  // t = 1/2: every b sees half of A_b inside A_s.
  const auto half = pingpong_bound_check(inc, {0}, 0.5, 0.5);
  CHECK(half.members.size() == 2);
  CHECK(half.measured == 1.0);
  CHECK(half.bound == doctest::Approx(1.0));
  CHECK(half.holds);
}

TEST_CASE("ping-pong with an empty subset") {
  const auto inc = complete(3, 4, 1.0);
  for (double t : {0.1, 0.5, 1.0}) {
    const auto r = pingpong_bound_check(inc, {}, 0.2, t);
    CHECK(r.members.empty());
    CHECK(r.holds);
  }
}

TEST_CASE("ping-pong preconditions are named") {
  IncidenceStructure inc{{1.0, 1.0}, {1.0, 1.0}, {{0, 0}, {0, 1}, {1, 0}}};
  // mu(B_a) in {2, 1}: M_A = 2; mu(A_b) in {2, 1}: M_B = 2.
  auto expect = [&](double s, double t, std::vector<std::size_t> sub, const std::string& name) {
    try {
      pingpong_bound_check(inc, sub, s, t);
      FAIL("accepted");
    } catch (const PreconditionError& e) {
      CHECK(e.inequality() == name);
    }
  };
  expect(0.3, 0.5, {}, "s <= 1/(M_A M_B)");
  expect(0.25, 0.0, {}, "t in (0, 1]");
  expect(0.25, 0.5, {0}, "mu(A_s) <= s mu(A)");
  IncidenceStructure lonely{{1.0, 1.0}, {1.0}, {{0, 0}}};
  CHECK_THROWS_AS(pingpong_bound_check(lonely, {}, 0.1, 0.5), PreconditionError);
  CHECK_THROWS_AS(pingpong_bound_check({{-1.0}, {1.0}, {{0, 0}}}, {}, 0.1, 0.5), ConfigError);
}

TEST_CASE("ping-pong agrees with integer enumeration on random structures") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> size(1, 8), weight(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t nonempty = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int na = size(rng), nb = size(rng);
    std::vector<long long> wa(na), wb(nb);
    for (auto& w : wa) w = weight(rng);
    for (auto& w : wb) w = weight(rng);
    std::vector<std::vector<int>> rel(na, std::vector<int>(nb, 0));
    for (int a = 0; a < na; ++a) {
      for (int b = 0; b < nb; ++b) rel[a][b] = unit(rng) < 0.7;
      rel[a][trial % nb] = 1;
    }
    for (int b = 0; b < nb; ++b) rel[trial % na][b] = 1;
    IncidenceStructure inc;
    for (auto w : wa) inc.a_weights.push_back(static_cast<double>(w));
    for (auto w : wb) inc.b_weights.push_back(static_cast<double>(w));
    for (int a = 0; a < na; ++a)
      for (int b = 0; b < nb; ++b)
        if (rel[a][b]) inc.relation.emplace_back(a, b);

    long long ba_max = 0, ba_min = 1 << 30, ab_max = 0, ab_min = 1 << 30;
    std::vector<long long> mab(nb, 0);
    for (int a = 0; a < na; ++a) {
      long long m = 0;
      for (int b = 0; b < nb; ++b) m += rel[a][b] * wb[b];
      ba_max = std::max(ba_max, m);
      ba_min = std::min(ba_min, m);
    }
    for (int b = 0; b < nb; ++b) {
      for (int a = 0; a < na; ++a) mab[b] += rel[a][b] * wa[a];
      ab_max = std::max(ab_max, mab[b]);
      ab_min = std::min(ab_min, mab[b]);
    }
    // s = 1 / (M_A M_B) exactly as a rational; A_s filled greedily in index order.
    const long long s_num = ba_min * ab_min, s_den = ba_max * ab_max;
    long long mu_a = 0, mu_b = 0;
    for (auto w : wa) mu_a += w;
    for (auto w : wb) mu_b += w;
    std::vector<std::size_t> sub;
    std::vector<int> in(na, 0);
    long long mu_s = 0;
    for (int a = 0; a < na; ++a)
      if ((mu_s + wa[a]) * s_den <= s_num * mu_a) {
        mu_s += wa[a];
        sub.push_back(a);
        in[a] = 1;
      }
    const int t_num = 1 + trial % 4;  // t = t_num / 4
    std::vector<std::size_t> members;
    long long measured = 0;
    for (int b = 0; b < nb; ++b) {
      long long inter = 0;
      for (int a = 0; a < na; ++a) inter += rel[a][b] * in[a] * wa[a];
      if (4 * inter >= t_num * mab[b]) {
        members.push_back(b);
        measured += wb[b];
      }
    }
    // measured <= (s/t) M_A M_B mu(B) = (4 / t_num) mu(B) at s = 1/(M_A M_B).
    const bool oracle_holds = measured * t_num <= 4 * mu_b;
    const auto r = pingpong_bound_check(inc, sub, static_cast<double>(s_num) / static_cast<double>(s_den), t_num / 4.0);
    CHECK(r.members == members);
    CHECK(r.measured == static_cast<double>(measured));
    CHECK(r.holds == oracle_holds);
    CHECK(r.holds);
    nonempty += !members.empty();
  }
  CHECK(nonempty > 20);
}

TEST_CASE("mediant dominance examples") {
  const auto r = mediant_dominance(1, 1, 2, 1);
  CHECK(r.determined);
  CHECK(r.c_alpha == doctest::Approx(2.0 / 3.0));
  CHECK(r.c_beta == doctest::Approx(1.0 / 3.0));
  CHECK(r.dominance);
  const auto e = mediant_dominance_exact(1, 1, 2, 1);
  CHECK(e.determined);
  CHECK(static_cast<long long>(e.c_alpha_num) == 2);
  CHECK(static_cast<long long>(e.c_alpha_den) == 3);

  const auto sym = mediant_dominance(3, 3, 5, 5);
  CHECK_FALSE(sym.determined);
  CHECK(sym.c_alpha == 0.5);
  CHECK(sym.c_beta == 0.5);
  CHECK(sym.dominance);
  CHECK_FALSE(mediant_dominance_exact(3, 3, 5, 5).determined);
  CHECK_THROWS_AS(mediant_dominance(1, 1, 0, 1), DomainError);
  CHECK_THROWS_AS(mediant_dominance(-1, 1, 1, 1), DomainError);
}

TEST_CASE("mediant coefficients equal the weight shares") {
  // (a + b)/(A + B) = A/(A+B) a/A + B/(A+B) b/B, so c_alpha = A/(A+B) whenever determined.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<long long> num(0, 1000), den(1, 1000);
  for (int k = 0; k < 20000; ++k) {
    const long long a = num(rng), b = num(rng), A = den(rng), B = den(rng);
    const auto e = mediant_dominance_exact(a, b, A, B);
    if (!e.determined) continue;
    CHECK(e.c_alpha_num * (A + B) == e.c_alpha_den * A);
    CHECK(e.dominance);
  }
}

TEST_CASE("thin triangle examples") {
  const auto flat = thin_triangle_check(0.4, 0.6, 1.0);
  CHECK(flat.epsilon == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(flat.height == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(flat.holds);
  const auto iso = thin_triangle_check(0.52, 0.52, 1.0);
  CHECK(iso.epsilon == doctest::Approx(0.04));
  CHECK(iso.height == doctest::Approx(std::sqrt(0.52 * 0.52 - 0.25)));
  CHECK(iso.height_bound == doctest::Approx(1.5 * std::pow(0.04, 0.25)));
  CHECK(iso.holds);
  CHECK(iso.angle_holds);
  CHECK_THROWS_AS(thin_triangle_check(0.2, 0.2, 1.0), DomainError);
  CHECK_THROWS_AS(thin_triangle_check(1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("thin triangle heights match coordinates") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-0.3, 1.3), uy(-0.4, 0.4);
  std::size_t checked = 0;
  while (checked < 5000) {
    const double px = ux(rng), py = uy(rng), c = 2.0;
    const double b = std::hypot(px * c, py * c), a = std::hypot(c - px * c, py * c);
    if ((a + b) / c > 1.5) continue;
    const auto r = thin_triangle_check(a, b, c);
    CHECK(r.height == doctest::Approx(segment_distance(px * c, std::abs(py) * c, c)).epsilon(1e-7));
    CHECK(r.holds);
    CHECK(r.angle_holds);
    ++checked;
  }
}

TEST_CASE("lemma suites report no counterexamples") {
  for (const char* name : {"mixing", "triangle", "pingpong"}) {
    const auto r = run_lemma_suite(name, 20000, 7, 2);
    CHECK(r.trials == 20000);
    CHECK(r.counterexamples == 0);
    CHECK(r.oracle_mismatches == 0);
    CHECK(r.angle_violations == 0);
    CHECK(r.vacuous < r.trials / 2);
  }
  CHECK_THROWS_AS(run_lemma_suite("nope", 10, 1), ConfigError);
}

TEST_CASE("lemma suites are independent of the job count") {
  const auto a = run_lemma_suite("pingpong", 5000, 3, 1);
  const auto b = run_lemma_suite("pingpong", 5000, 3, 4);
  CHECK(a.vacuous == b.vacuous);
  CHECK(a.worst_margin == b.worst_margin);
}

TEST_CASE("spread points on a full sphere sample") {
  const auto dirs = fibonacci_sphere(600);
  const auto r = spread_points(dirs, {}, std::vector<bool>(dirs.size(), true), 0.0);
  REQUIRE(r.ok);
  CHECK(r.exhaustive);
  CHECK(r.indices.size() == 3);
  CHECK(r.target == doctest::Approx(std::numbers::pi / 2.0));
  CHECK(r.min_distance >= r.target - 0.1);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < 3; ++k) d += dirs[r.indices[i]][k] * dirs[r.indices[j]][k];
      CHECK(std::abs(d) < 0.1);
    }
}

TEST_CASE("spread points in dimension one are vacuous") {
  const auto r = spread_points({{1.0}, {-2.0}}, {}, {true, true}, 0.0);
  CHECK(r.ok);
  CHECK(r.vacuous);
  CHECK(r.indices.size() == 1);
  CHECK(r.shortfall == 0.0);
}

TEST_CASE("spread shortfall grows as a cap around a line is removed") {
  const auto dirs = fibonacci_sphere(500);
  double previous = 0.0;
  Vec shortfalls;
  for (double ups : {0.05, 0.1, 0.2, 0.3, 0.45, 0.6}) {
    // Lines within angle acos(1 - ups) of the z axis carry a fraction ups of the sphere.
    std::vector<bool> keep(dirs.size());
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      keep[i] = std::abs(dirs[i][2]) < 1.0 - ups;
      dropped += !keep[i];
    }
    const double removed = static_cast<double>(dropped) / static_cast<double>(dirs.size());
    const auto r = spread_points(dirs, {}, keep, removed);
    REQUIRE(r.ok);
    CHECK(r.exhaustive);
    CHECK(r.shortfall >= previous - 1e-12);
    previous = r.shortfall;
    shortfalls.push_back(r.shortfall);
    // Not enough admissible mass for a smaller upsilon.
    CHECK_FALSE(spread_points(dirs, {}, keep, removed / 2.0).ok);
  }
  // A frame at angle acos(1/sqrt 3) to the axis survives caps with |z| < 1/sqrt 3.
  CHECK(shortfalls.front() < 0.1);
  CHECK(shortfalls.back() > shortfalls.front());
}
