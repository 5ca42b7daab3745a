#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "coarse/weight_space.hpp"

namespace coarse {

// Weighted bipartite relation between an A side and a B side.
struct IncidenceStructure {
  Vec a_weights;
  Vec b_weights;
  std::vector<std::pair<std::size_t, std::size_t>> relation;  // (a, b) pairs
};

struct PingPongReport {
  double ratio_a = 0.0;          // M_A = max / min of mu(B_a)
  double ratio_b = 0.0;          // M_B = max / min of mu(A_b)
  double mu_a = 0.0;
  double mu_b = 0.0;
  double mu_subset = 0.0;        // mu(A_s)
  std::vector<std::size_t> members;  // B^{s,t}
  double measured = 0.0;         // mu(B^{s,t})
  double bound = 0.0;            // (s / t) M_A M_B mu(B)
  bool holds = false;
};

// Throws ConfigError for malformed input and PreconditionError for s > 1/(M_A M_B),
// t outside (0, 1], mu(A_s) > s mu(A) or an element with no relations.
PingPongReport pingpong_bound_check(const IncidenceStructure& inc, const std::vector<std::size_t>& a_subset, double s,
                                    double t);

struct MediantReport {
  bool determined = false;  // a/A != b/B
  double c_alpha = 0.0;     // weight of a/A
  double c_beta = 0.0;
  bool dominance = true;    // c_alpha >= c_beta implies A >= B; vacuous when undetermined
};

// c_alpha = ((a+b)/(A+B) - b/B) / (a/A - b/B). Throws DomainError unless a, b >= 0 and A, B > 0.
MediantReport mediant_dominance(double a, double b, double A, double B);

struct ExactMediant {
  bool determined = false;
  __int128 c_alpha_num = 0;
  __int128 c_alpha_den = 1;
  bool dominance = true;
};

// Rational version on integers: c_alpha as a reduced fraction computed from the same formula.
ExactMediant mediant_dominance_exact(std::int64_t a, std::int64_t b, std::int64_t A, std::int64_t B);

struct TriangleReport {
  double epsilon = 0.0;       // (a + b) / c - 1
  double height = 0.0;        // d(C, segment AB)
  double height_bound = 0.0;  // 1.5 eps^{1/4} c
  double min_base_angle = 0.0;
  double angle_bound = 0.0;   // max{pi - acos(-1 + sqrt(e)), asin(sqrt(e) / 2)}, e = eps / (1 + eps)
  bool holds = false;         // height claim
  bool angle_holds = false;
};

// Sides a = |BC|, b = |CA|, c = |AB|. Throws DomainError for an invalid triangle or eps > 0.5.
TriangleReport thin_triangle_check(double a, double b, double c);

struct SpreadReport {
  bool ok = false;
  std::string reason;
  std::vector<std::size_t> indices;
  double min_distance = 0.0;    // smallest pairwise line distance acos|u.v| among the picks
  double target = 0.0;          // M_k = pi / 2
  double shortfall = 0.0;       // W = M_k - min_distance
  double admissible_mass = 0.0; // fraction of the total weight that is admissible
  bool exhaustive = false;      // the search finished within its budget
  bool vacuous = false;         // k = 0
};

// Picks dim points among the admissible directions maximizing the smallest pairwise line
// distance: greedy farthest-point from several starts, then a pruned exhaustive search within
// `budget` nodes. Directions are normalized; weights default to 1.
SpreadReport spread_points(const std::vector<Vec>& directions, const Vec& weights, const std::vector<bool>& admissible,
                           double upsilon, std::size_t budget = 20000000);

double line_distance(const Vec& u, const Vec& v);

struct SuiteReport {
  std::string suite;
  std::size_t trials = 0;
  std::size_t counterexamples = 0;
  std::size_t oracle_mismatches = 0;  // library vs exact oracle (integer enumeration, rational mediant)
  std::size_t angle_violations = 0;   // triangle: the base angle claim
  std::size_t vacuous = 0;            // instances where the claim has no content
  double worst_margin = 0.0;          // smallest (bound - measured) / scale seen
  std::uint64_t seed = 0;
};

// Suites: "mixing", "triangle", "pingpong". Deterministic in (trials, seed) for any job count.
SuiteReport run_lemma_suite(const std::string& suite, std::size_t trials, std::uint64_t seed, unsigned jobs = 1);

}  // namespace coarse
