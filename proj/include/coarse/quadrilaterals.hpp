#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "coarse/group_model.hpp"

namespace coarse {

// Four oriented vertical segments T_i from begin[i] to end[i], all parallel to v.
struct Quadrilateral {
  std::array<GroupPoint, 4> begin;
  std::array<GroupPoint, 4> end;
  Vec direction;
};

// Distance used by the quadrilateral checks: the embedded distance with the per-root height
// differences replaced by one copy of |dt|, so a vertical segment has length |dt|.
double quad_distance(const RootSystem& rs, const GroupPoint& p, const GroupPoint& q);
// |T| = l1 length of the A-displacement of the segment.
double edge_length(const GroupPoint& begin, const GroupPoint& end);

// +1 for roots with alpha(v) > 0, -1 for alpha(v) < 0, 0 when |alpha(v)| <= 1e-12.
std::vector<int> eigen_signs(const RootSystem& rs, const Vec& v);
// Fiber element with every block outside the sign class `sign` equal to zero.
bool in_eigenspace(const RootSystem& rs, const Vec& v, const std::vector<Vec>& u, int sign);

struct QuadVerdict {
  bool direction_ok = false;   // common direction, W_v^0 = {0}, vertical edges
  bool floor_ok = false;       // |T_i| > 2 eta sum |T_j|
  bool closeness_ok = false;   // d(e_i, b_{i+1}) <= eta (|T_i| + |T_{i+1}|)
  bool divergence_ok = false;  // d(b_i, e_{i+1}) >= |T_i| + |T_{i+1}|
  bool ok() const noexcept { return direction_ok && floor_ok && closeness_ok && divergence_ok; }
  std::array<double, 4> lengths{};
  std::array<double, 4> joints{};
  std::array<double, 4> divergences{};
  double perimeter = 0.0;
  std::vector<std::string> failures;
};

// Divergence is compared with a relative slack of 1e-9.
QuadVerdict check_quadrilateral(const RootSystem& rs, const Quadrilateral& q, double eta);

// Loop of x y x^{-1} y^{-1} with x = a(t) x_plus a(-t), y = a(-t) y_minus a(t), a(s) = (0, s v):
// four vertical edges of A-length 2t|v|_1 starting at (0, -t v). Throws PreconditionError for
// zero or misplaced fiber elements and for t = 0.
Quadrilateral build_commutator_quadrilateral(const RootSystem& rs, const Vec& v, const std::vector<Vec>& x_plus,
                                             const std::vector<Vec>& y_minus, double t);

struct OrientationPattern {
  std::array<int, 4> signs{};
  bool conformant = false;  // alternating signs
  std::string text;         // e.g. "+-+-"
};

OrientationPattern orientation_pattern(const Quadrilateral& q);

struct RankOneWord {
  std::array<double, 4> r{};
  std::array<std::vector<Vec>, 4> u;
};

// Fills r[3] and u[2], u[3] so that the word is trivial: r3 = r0 + r2 - r1,
// u2 = -a(r1 - r2) u0 a(r2 - r1), u3 = -a(r0 - r1) u1 a(r1 - r0).
RankOneWord close_word(const RootSystem& rs, const Vec& v, double r0, double r1, double r2,
                       const std::vector<Vec>& u0, const std::vector<Vec>& u1);

// Trivial word along v with r_0 uniform dyadic (1/64) in [base_lo, base_hi], r_1, r_2 within
// `jitter` of it, and every nonzero block of every u_j of unit-scale size >= 1; resampled until
// the hypotheses of word_residual hold at eta.
RankOneWord random_trivial_word(const RootSystem& rs, const Vec& v, double eta, std::mt19937_64& rng,
                                double base_lo = 12.0, double base_hi = 20.0, double jitter = 0.5);

struct WordReport {
  GroupPoint value;                     // (r0 v) u0 (-r1 v) u1 (r2 v) u2 (-r3 v) u3
  double residual = 0.0;                // |t| + max_block |x| / (1 + largest summand in the block)
  double distance = 0.0;                // embedded distance of value to the identity
  double height_gap = 0.0;              // r0 + r2 - r1 - r3
  bool trivial = false;                 // residual <= 1e-9
  bool nondegenerate = false;           // every u_j has unit-scale size >= 1 in each nonzero block
  std::array<double, 4> sizes{};        // d(e, u_j)
  std::array<double, 4> spread{};       // |r_i - r_{i+1}|
  std::array<double, 4> spread_bound{}; // d(e, u_{i+1}) + d(e, u_{i+3})
  bool spread_holds = false;            // meaningful only when trivial
};

// Throws PreconditionError when u0, u2 are not in W_v^+, u1, u3 not in W_v^-, d(u_j, e) >
// eta (r_j + r_{j+1}) or r_j <= 2 eta sum r.
WordReport word_residual(const RootSystem& rs, const Vec& v, const RankOneWord& w, double eta);

// The quadrilateral traced by a word from the identity: T_i has A-displacement (-1)^i r_i v and
// the joint from e_i to b_{i+1} is u_i.
Quadrilateral quadrilateral_from_word(const RootSystem& rs, const Vec& v, const RankOneWord& w);

struct StructureReport {
  double spread = 0.0;                 // max |T_i| - min |T_j|
  double bound = 0.0;                  // eta sum |T_i|
  bool spread_ok = false;
  std::array<double, 4> proximity{};   // distance of vertex quadruple i to its coset
  std::array<int, 4> coset{};          // +1 for a coset of W_v^+, -1 for W_v^-
  bool cosets_ok = false;              // within bound and alternating in i
};

// Quadruple i is {b_i, e_{i+1}, b_{i+2}, e_{i+3}} projected to <v> x H; its proximity is the
// largest distance of a member to the coset through b_i.
StructureReport structure_report(const RootSystem& rs, const Quadrilateral& q, double eta);

struct SnapResult {
  Quadrilateral quad;
  double eta_hat = 0.0;        // smallest eta meeting the closeness condition
  double displacement = 0.0;   // largest quad distance moved by an endpoint
  QuadVerdict verdict;         // at eta_hat
};

// Snaps four approximately vertical segments to the common direction of their sign-aligned
// A-displacements; each end is moved to the vertical through its begin point.
SnapResult snap_quadrilateral(const RootSystem& rs, const std::array<GroupPoint, 4>& begin,
                              const std::array<GroupPoint, 4>& end);

}  // namespace coarse
