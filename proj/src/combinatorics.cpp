#include "coarse/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "coarse/errors.hpp"
#include "coarse/parallel.hpp"

namespace coarse {

namespace {

constexpr double kRelSlack = 1e-12;

void check_weights(const Vec& w, const char* side) {
  for (double x : w)
    if (!std::isfinite(x) || x < 0.0) throw ConfigError(std::string("negative or non-finite weight on side ") + side);
}

__int128 abs128(__int128 x) { return x < 0 ? -x : x; }

__int128 gcd128(__int128 a, __int128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    const __int128 r = a % b;
    a = b;
    b = r;
  }
  return a;
}

}  // namespace

PingPongReport pingpong_bound_check(const IncidenceStructure& inc, const std::vector<std::size_t>& a_subset, double s,
                                    double t) {
  check_weights(inc.a_weights, "A");
  check_weights(inc.b_weights, "B");
  const std::size_t na = inc.a_weights.size(), nb = inc.b_weights.size();
  if (na == 0 || nb == 0) throw ConfigError("both sides of the incidence structure must be nonempty");
  std::set<std::pair<std::size_t, std::size_t>> rel;
  for (const auto& [a, b] : inc.relation) {
    if (a >= na || b >= nb) throw ConfigError("relation index out of range");
    rel.emplace(a, b);
  }
  std::vector<bool> in_subset(na, false);
  for (std::size_t a : a_subset) {
    if (a >= na) throw ConfigError("subset index out of range");
    in_subset[a] = true;
  }
  if (!(t > 0.0 && t <= 1.0)) throw PreconditionError("t in (0, 1]", "t = " + std::to_string(t));

  Vec mu_ba(na, 0.0), mu_ab(nb, 0.0), inter(nb, 0.0);
  for (const auto& [a, b] : rel) {
    mu_ba[a] += inc.b_weights[b];
    mu_ab[b] += inc.a_weights[a];
    if (in_subset[a]) inter[b] += inc.a_weights[a];
  }
  const auto [amin, amax] = std::minmax_element(mu_ba.begin(), mu_ba.end());
  const auto [bmin, bmax] = std::minmax_element(mu_ab.begin(), mu_ab.end());
  if (!(*amin > 0.0) || !(*bmin > 0.0))
    throw PreconditionError("mu(B_a) > 0 and mu(A_b) > 0", "some element has no related mass");

  PingPongReport out;
  out.ratio_a = *amax / *amin;
  out.ratio_b = *bmax / *bmin;
  out.mu_a = std::accumulate(inc.a_weights.begin(), inc.a_weights.end(), 0.0);
  out.mu_b = std::accumulate(inc.b_weights.begin(), inc.b_weights.end(), 0.0);
  for (std::size_t a = 0; a < na; ++a)
    if (in_subset[a]) out.mu_subset += inc.a_weights[a];
  if (!(s * out.ratio_a * out.ratio_b <= 1.0 + kRelSlack))
    throw PreconditionError("s <= 1/(M_A M_B)", "s M_A M_B = " + std::to_string(s * out.ratio_a * out.ratio_b));
  if (!(out.mu_subset <= s * out.mu_a * (1.0 + kRelSlack)))
    throw PreconditionError("mu(A_s) <= s mu(A)", "mu(A_s) = " + std::to_string(out.mu_subset));

  for (std::size_t b = 0; b < nb; ++b)
    if (inter[b] >= t * mu_ab[b]) {
      out.members.push_back(b);
      out.measured += inc.b_weights[b];
    }
  out.bound = s / t * out.ratio_a * out.ratio_b * out.mu_b;
  out.holds = out.measured <= out.bound * (1.0 + kRelSlack);
  return out;
}

MediantReport mediant_dominance(double a, double b, double A, double B) {
  if (!(a >= 0.0) || !(b >= 0.0) || !(A > 0.0) || !(B > 0.0) || !std::isfinite(a + b + A + B))
    throw DomainError("a, b >= 0 and A, B > 0", "invalid mediant input");
  MediantReport out;
  const double x = a / A, y = b / B, m = (a + b) / (A + B);
  if (x == y) {
    out.determined = false;
    out.c_alpha = out.c_beta = 0.5;
    return out;
  }
  out.determined = true;
  out.c_alpha = (m - y) / (x - y);
  out.c_beta = 1.0 - out.c_alpha;
  out.dominance = !(out.c_alpha >= out.c_beta) || A >= B;
  return out;
}

ExactMediant mediant_dominance_exact(std::int64_t a, std::int64_t b, std::int64_t A, std::int64_t B) {
  if (a < 0 || b < 0 || A <= 0 || B <= 0) throw DomainError("a, b >= 0 and A, B > 0", "invalid mediant input");
  constexpr std::int64_t kMax = std::int64_t{1} << 31;
  if (a > kMax || b > kMax || A > kMax || B > kMax) throw DomainError("entries <= 2^31", "mediant input too large");
  ExactMediant out;
  const __int128 cross = static_cast<__int128>(a) * B - static_cast<__int128>(b) * A;  // (a/A - b/B) A B
  if (cross == 0) return out;
  out.determined = true;
  // m - y = cross / ((A + B) B) and x - y = cross / (A B).
  __int128 num = cross * static_cast<__int128>(A) * B;
  __int128 den = static_cast<__int128>(A + B) * B * cross;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const __int128 g = gcd128(num, den);
  out.c_alpha_num = num / g;
  out.c_alpha_den = den / g;
  const bool alpha_ge_beta = 2 * out.c_alpha_num >= out.c_alpha_den;
  out.dominance = !alpha_ge_beta || A >= B;
  return out;
}

TriangleReport thin_triangle_check(double a, double b, double c) {
  if (!(a >= 0.0) || !(b >= 0.0) || !(c > 0.0) || !std::isfinite(a + b + c))
    throw DomainError("a, b >= 0 and c > 0", "invalid side lengths");
  const double tol = kRelSlack * (a + b + c);
  if (a > b + c + tol || b > a + c + tol || c > a + b + tol)
    throw DomainError("triangle inequality", "sides do not form a triangle");
  TriangleReport out;
  out.epsilon = std::max(0.0, (a + b) / c - 1.0);
  if (out.epsilon > 0.5) throw DomainError("(a + b) / c <= 1.5", "epsilon = " + std::to_string(out.epsilon));

  // A = (0, 0), B = (c, 0), C = (x, y) with y from the cancellation-free area formula.
  std::array<double, 3> s = {a, b, c};
  std::sort(s.begin(), s.end(), std::greater<>());
  const double p = s[0], q = s[1], r = s[2];
  const double prod = (p + (q + r)) * (r - (p - q)) * (r + (p - q)) * (p + (q - r));
  const double area = 0.25 * std::sqrt(std::max(0.0, prod));
  const double y = 2.0 * area / c;
  const double x = (b * b + c * c - a * a) / (2.0 * c);
  out.height = x < 0.0 ? b : (x > c ? a : y);
  out.height_bound = 1.5 * std::pow(out.epsilon, 0.25) * c;
  out.holds = out.height <= out.height_bound * (1.0 + kRelSlack) + tol;

  const double angle_a = std::atan2(y, x), angle_b = std::atan2(y, c - x);
  out.min_base_angle = std::min(angle_a, angle_b);
  const double e = out.epsilon / (1.0 + out.epsilon);
  out.angle_bound = std::max(std::numbers::pi - std::acos(-1.0 + std::sqrt(e)), std::asin(std::sqrt(e) / 2.0));
  out.angle_holds = out.min_base_angle <= out.angle_bound + 1e-9;
  return out;
}

double line_distance(const Vec& u, const Vec& v) {
  double d = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) d += u[j] * v[j];
  return std::acos(std::min(1.0, std::abs(d)));
}

SpreadReport spread_points(const std::vector<Vec>& directions, const Vec& weights, const std::vector<bool>& admissible,
                           double upsilon, std::size_t budget) {
  if (directions.empty()) throw ConfigError("no directions");
  const std::size_t dim = directions.front().size();
  if (dim == 0) throw ConfigError("directions must have positive dimension");
  if (admissible.size() != directions.size()) throw ConfigError("admissible mask has the wrong length");
  if (!weights.empty() && weights.size() != directions.size()) throw ConfigError("weights have the wrong length");
  if (!(upsilon >= 0.0 && upsilon < 1.0)) throw DomainError("0 <= upsilon < 1", "upsilon out of range");

  std::vector<Vec> unit;
  std::vector<std::size_t> index;
  double total = 0.0, kept = 0.0;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (directions[i].size() != dim) throw ConfigError("directions have mixed dimensions");
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("negative or non-finite weight");
    const double n = norm(directions[i]);
    if (!(n > 0.0)) throw ConfigError("zero direction");
    total += w;
    if (!admissible[i]) continue;
    kept += w;
    Vec u = directions[i];
    for (double& c : u) c /= n;
    unit.push_back(std::move(u));
    index.push_back(i);
  }
  SpreadReport out;
  out.admissible_mass = total > 0.0 ? kept / total : 0.0;
  out.target = dim > 1 ? std::numbers::pi / 2.0 : 0.0;
  if (out.admissible_mass < 1.0 - upsilon) {
    out.reason = "admissible mass below 1 - upsilon";
    return out;
  }
  if (unit.size() < dim) {
    out.reason = "fewer admissible directions than the dimension";
    return out;
  }
  if (dim == 1) {
    out.ok = true;
    out.vacuous = true;
    out.exhaustive = true;
    out.indices = {index.front()};
    return out;
  }
  const std::size_t n = unit.size();
  if (n > 6000) throw UnsupportedOperation("spread_points is limited to 6000 admissible directions");
  std::vector<float> dist(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = static_cast<float>(line_distance(unit[i], unit[j]));
  auto exact = [&](std::size_t i, std::size_t j) { return line_distance(unit[i], unit[j]); };
  auto min_pair = [&](const std::vector<std::size_t>& pick) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < pick.size(); ++x)
      for (std::size_t y = x + 1; y < pick.size(); ++y) m = std::min(m, exact(pick[x], pick[y]));
    return m;
  };

  std::vector<std::size_t> best;
  double best_value = -1.0;
  const std::size_t starts = std::min<std::size_t>(n, 16);
  for (std::size_t k = 0; k < starts; ++k) {
    std::vector<std::size_t> pick{k * n / starts};
    std::vector<double> near(n, std::numeric_limits<double>::infinity());
    while (pick.size() < dim) {
      std::size_t arg = 0;
      double far = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        near[i] = std::min(near[i], static_cast<double>(dist[i * n + pick.back()]));
        if (near[i] > far) {
          far = near[i];
          arg = i;
        }
      }
      pick.push_back(arg);
    }
    const double v = min_pair(pick);
    if (v > best_value) {
      best_value = v;
      best = pick;
    }
  }

  // Depth-first search over increasing index tuples whose pairwise distances beat the incumbent.
  std::size_t nodes = 0;
  bool exhausted = false;
  std::vector<std::size_t> stack;
  auto dfs = [&](auto&& self, std::size_t from) -> void {
    if (exhausted) return;
    if (stack.size() == dim) {
      const double v = min_pair(stack);
      if (v > best_value) {
        best_value = v;
        best = stack;
      }
      return;
    }
    for (std::size_t i = from; i < n && !exhausted; ++i) {
      if (++nodes > budget) {
        exhausted = true;
        return;
      }
      bool fits = true;
      for (std::size_t j : stack)
        if (!(dist[i * n + j] > best_value - 1e-6)) {
          fits = false;
          break;
        }
      if (!fits) continue;
      stack.push_back(i);
      self(self, i + 1);
      stack.pop_back();
    }
  };
  dfs(dfs, 0);

  out.ok = true;
  out.exhaustive = !exhausted;
  out.min_distance = best_value;
  out.shortfall = std::max(0.0, out.target - best_value);
  for (std::size_t i : best) out.indices.push_back(index[i]);
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

namespace {

struct Trial {
  bool counterexample = false;
  bool mismatch = false;
  bool angle = false;
  bool vacuous = false;
  double margin = std::numeric_limits<double>::infinity();
};

Trial mixing_trial(std::mt19937_64& rng, std::size_t i) {
  Trial out;
  if (i % 2 == 0) {
    std::uniform_int_distribution<std::int64_t> num(0, 1000000), den(1, 1000000);
    const std::int64_t a = num(rng), b = num(rng), A = den(rng), B = den(rng);
    const auto e = mediant_dominance_exact(a, b, A, B);
    out.vacuous = !e.determined;
    out.counterexample = !e.dominance;
    const auto d = mediant_dominance(static_cast<double>(a), static_cast<double>(b), static_cast<double>(A),
                                     static_cast<double>(B));
    // The double formula cancels catastrophically when a/A and b/B nearly agree.
    const double x = static_cast<double>(a) / static_cast<double>(A), y = static_cast<double>(b) / static_cast<double>(B);
    const bool conditioned = std::abs(x - y) > 1e-6 * std::max(x, y);
    out.mismatch = d.determined != e.determined ||
                   (conditioned && std::abs(d.c_alpha - static_cast<double>(e.c_alpha_num) /
                                                            static_cast<double>(e.c_alpha_den)) > 1e-6);
    if (e.determined) out.margin = std::abs(static_cast<double>(A - B)) / static_cast<double>(A + B);
  } else {
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    const double a = u(rng), b = u(rng), A = u(rng) + 1e-3, B = u(rng) + 1e-3;
    const auto d = mediant_dominance(a, b, A, B);
    out.vacuous = !d.determined;
    out.counterexample = !d.dominance;
    if (d.determined) out.margin = std::abs(A - B) / (A + B);
  }
  return out;
}

Trial triangle_trial(std::mt19937_64& rng, std::size_t i) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double a = 0.0, b = 0.0, c = 0.0;
  if (i % 2 == 0) {
    c = std::exp(6.0 * unit(rng) - 3.0);
    const double eps = 0.5 * std::pow(unit(rng), 3);
    const double sum = (1.0 + eps) * c;
    a = (sum - c) / 2.0 + unit(rng) * c;
    b = sum - a;
  } else {
    // Apex near the base segment, resampled until (a + b) / c <= 1.5.
    for (;;) {
      const double x = -0.25 + 1.5 * unit(rng), y = (unit(rng) - 0.5) * 0.9;
      c = 1.0;
      b = std::hypot(x, y);
      a = std::hypot(1.0 - x, y);
      if (a + b <= 1.5 * c) break;
    }
  }
  Trial out;
  const auto r = thin_triangle_check(a, b, c);
  out.counterexample = !r.holds;
  out.angle = !r.angle_holds;
  out.vacuous = r.epsilon == 0.0;
  out.margin = (r.height_bound - r.height) / c;
  return out;
}

struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

Trial pingpong_trial(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> size(1, 10);
  std::uniform_int_distribution<std::int64_t> weight(1, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t na = size(rng), nb = size(rng);
  IncidenceStructure inc;
  std::vector<std::int64_t> wa(na), wb(nb);
  for (auto& w : wa) w = weight(rng);
  for (auto& w : wb) w = weight(rng);
  for (auto w : wa) inc.a_weights.push_back(static_cast<double>(w));
  for (auto w : wb) inc.b_weights.push_back(static_cast<double>(w));
  const double density = 0.5 + 0.5 * unit(rng);
  std::vector<std::vector<bool>> rel(na, std::vector<bool>(nb, false));
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) rel[a][b] = unit(rng) < density;
  for (std::size_t a = 0; a < na; ++a)
    if (std::none_of(rel[a].begin(), rel[a].end(), [](bool x) { return x; })) rel[a][rng() % nb] = true;
  for (std::size_t b = 0; b < nb; ++b) {
    bool any = false;
    for (std::size_t a = 0; a < na; ++a) any = any || rel[a][b];
    if (!any) rel[rng() % na][b] = true;
  }
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      if (rel[a][b]) inc.relation.emplace_back(a, b);

  // Integer oracle: M_A = max/min of mu(B_a), M_B likewise, s = (j/4) / (M_A M_B), t = k/8.
  std::vector<std::int64_t> mba(na, 0), mab(nb, 0);
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      if (rel[a][b]) {
        mba[a] += wb[b];
        mab[b] += wa[a];
      }
  const Ratio ma{*std::max_element(mba.begin(), mba.end()), *std::min_element(mba.begin(), mba.end())};
  const Ratio mb{*std::max_element(mab.begin(), mab.end()), *std::min_element(mab.begin(), mab.end())};
  const std::int64_t j = 1 + static_cast<std::int64_t>(rng() % 4);
  const Ratio s{j * ma.den * mb.den, 4 * ma.num * mb.num};
  const std::int64_t k = 1 + static_cast<std::int64_t>(rng() % 8);
  const std::int64_t mu_a = std::accumulate(wa.begin(), wa.end(), std::int64_t{0});
  const std::int64_t mu_b = std::accumulate(wb.begin(), wb.end(), std::int64_t{0});

  std::vector<std::size_t> order(na);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> subset;
  std::vector<bool> in(na, false);
  std::int64_t mu_s = 0;
  for (std::size_t a : order)
    if (static_cast<__int128>(mu_s + wa[a]) * s.den <= static_cast<__int128>(s.num) * mu_a) {
      mu_s += wa[a];
      subset.push_back(a);
      in[a] = true;
    }

  std::vector<std::size_t> members;
  std::int64_t measured = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    std::int64_t inter = 0;
    for (std::size_t a = 0; a < na; ++a)
      if (rel[a][b] && in[a]) inter += wa[a];
    if (8 * inter >= k * mab[b]) {
      members.push_back(b);
      measured += wb[b];
    }
  }
  // measured <= (s / t) M_A M_B mu(B)  <=>  measured k s.den M_A.den M_B.den <= 8 s.num M_A.num M_B.num mu(B).
  const __int128 lhs = static_cast<__int128>(measured) * k * s.den * ma.den * mb.den;
  const __int128 rhs = static_cast<__int128>(8) * s.num * ma.num * mb.num * mu_b;
  const bool exact_holds = lhs <= rhs;

  Trial out;
  const auto r = pingpong_bound_check(inc, subset, static_cast<double>(s.num) / static_cast<double>(s.den),
                                      static_cast<double>(k) / 8.0);
  out.counterexample = !exact_holds || !r.holds;
  out.mismatch = r.members != members || r.measured != static_cast<double>(measured) || r.holds != exact_holds;
  out.vacuous = subset.empty();
  out.margin = (r.bound - r.measured) / r.mu_b;
  return out;
}

}  // namespace

SuiteReport run_lemma_suite(const std::string& suite, std::size_t trials, std::uint64_t seed, unsigned jobs) {
  if (suite != "mixing" && suite != "triangle" && suite != "pingpong")
    throw ConfigError("unknown lemma suite '" + suite + "' (mixing, triangle, pingpong)");
  const std::size_t chunk = 1024;
  const std::size_t chunks = (trials + chunk - 1) / chunk;
  const auto parts = parallel_map(chunks, jobs, [&](std::size_t c) {
    SuiteReport part;
    part.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = c * chunk; i < std::min(trials, (c + 1) * chunk); ++i) {
      auto rng = substream(seed, i);
      const Trial t = suite == "mixing" ? mixing_trial(rng, i)
                      : suite == "triangle" ? triangle_trial(rng, i)
                                            : pingpong_trial(rng);
      part.counterexamples += t.counterexample;
      part.oracle_mismatches += t.mismatch;
      part.angle_violations += t.angle;
      part.vacuous += t.vacuous;
      part.worst_margin = std::min(part.worst_margin, t.margin);
    }
    return part;
  });
  SuiteReport out;
  out.suite = suite;
  out.trials = trials;
  out.seed = seed;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& p : parts) {
    out.counterexamples += p.counterexamples;
    out.oracle_mismatches += p.oracle_mismatches;
    out.angle_violations += p.angle_violations;
    out.vacuous += p.vacuous;
    out.worst_margin = std::min(out.worst_margin, p.worst_margin);
  }
  if (trials == 0) out.worst_margin = 0.0;
  return out;
}

}  // namespace coarse
