#include "coarse/boxes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "coarse/errors.hpp"
#include "coarse/metric_embed.hpp"
#include "coarse/parallel.hpp"

namespace coarse {

namespace {

// floor with a relative slack so that exact quotients like 1 / (1/3) are not lost to rounding.
double safe_floor(double v) { return std::floor(v * (1.0 + 1e-12) + 1e-12); }

double l1(const Vec& v) {
  double s = 0.0;
  for (double c : v) s += std::abs(c);
  return s;
}

double l2(const Vec& v) { return norm(v); }

// Integral of e^{c s} over [lo, hi] divided by e^{c m}, m the maximizer of c s.
double scaled_exp_integral(double c, double lo, double hi) {
  const double len = hi - lo;
  if (c == 0.0) return len;
  return -std::expm1(-std::abs(c) * len) / std::abs(c);
}

double boundary_measure(const Omega& omega) {
  double s = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    double face = 2.0;
    for (std::size_t l = 0; l < omega.size(); ++l)
      if (l != k) face *= omega[l].length();
    s += face;
  }
  return s;
}

// Measure of the orthogonal projection of the box Omega onto the hyperplane normal to alpha.
double kernel_projection(const Vec& alpha, const Omega& omega) {
  const double a = l2(alpha);
  double s = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    double face = std::abs(alpha[k]) / a;
    for (std::size_t l = 0; l < omega.size(); ++l)
      if (l != k) face *= omega[l].length();
    s += face;
  }
  return s;
}

void check_omega(const RootSystem& rs, const Omega& omega) {
  if (omega.size() != rs.dim_a()) throw ConfigError("Omega has " + std::to_string(omega.size()) + " intervals for dim A " +
                                                    std::to_string(rs.dim_a()));
  for (const auto& iv : omega)
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.hi > iv.lo))
      throw PreconditionError("Omega has nonempty interior", "interval [" + std::to_string(iv.lo) + ", " +
                                                                  std::to_string(iv.hi) + "] is degenerate");
}

Box box_with(const RootSystem& rs, const Omega& omega, const Vec& side, const std::vector<Vec>& origin) {
  Box b;
  b.omega = omega;
  for (std::size_t j = 0; j < rs.size(); ++j) {
    b.max_alpha.push_back(alpha_max(rs.root(j).alpha, omega));
    b.min_alpha.push_back(alpha_min(rs.root(j).alpha, omega));
  }
  b.fiber_side = side;
  b.fiber_origin = origin;
  return b;
}

std::vector<Vec> zero_origin(const RootSystem& rs) {
  std::vector<Vec> o;
  for (const auto& r : rs.roots()) o.emplace_back(static_cast<std::size_t>(r.dim_v), 0.0);
  return o;
}

void check_same_shape(const RootSystem& a, const RootSystem& b) {
  bool same = a.dim_a() == b.dim_a() && a.size() == b.size();
  for (std::size_t j = 0; same && j < a.size(); ++j) same = a.root(j).dim_v == b.root(j).dim_v;
  if (!same) throw ConfigError("the synthetic maps send G to a group of the same shape");
}

}  // namespace

double omega_volume(const Omega& omega) {
  double v = 1.0;
  for (const auto& iv : omega) v *= iv.length();
  return v;
}

double alpha_max(const Vec& alpha, const Omega& omega) {
  double s = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) s += alpha[k] * (alpha[k] > 0.0 ? omega[k].hi : omega[k].lo);
  return s;
}

double alpha_min(const Vec& alpha, const Omega& omega) {
  double s = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) s += alpha[k] * (alpha[k] > 0.0 ? omega[k].lo : omega[k].hi);
  return s;
}

Omega scale_omega(const Omega& omega, double r) {
  Omega out = omega;
  for (auto& iv : out) {
    iv.lo *= r;
    iv.hi *= r;
  }
  return out;
}

Box build_box(const RootSystem& rs, const Omega& omega) {
  check_omega(rs, omega);
  Vec side;
  for (const auto& r : rs.roots()) side.push_back(std::exp(alpha_max(r.alpha, omega)));
  return box_with(rs, omega, side, zero_origin(rs));
}

double box_volume(const RootSystem& rs, const Box& box) {
  double v = omega_volume(box.omega);
  for (std::size_t j = 0; j < rs.size(); ++j) v *= std::pow(box.fiber_side[j], rs.root(j).dim_v);
  return v;
}

bool box_contains(const RootSystem& rs, const Box& box, const GroupPoint& p) {
  for (std::size_t k = 0; k < rs.dim_a(); ++k)
    if (p.t[k] < box.omega[k].lo || p.t[k] > box.omega[k].hi) return false;
  for (std::size_t j = 0; j < rs.size(); ++j)
    for (std::size_t c = 0; c < p.x[j].size(); ++c) {
      const double u = p.x[j][c] - box.fiber_origin[j][c];
      if (u < 0.0 || u > box.fiber_side[j]) return false;
    }
  return true;
}

std::vector<GroupPoint> box_corners(const RootSystem& rs, const Box& box) {
  std::size_t coords = rs.dim_a();
  for (const auto& r : rs.roots()) coords += static_cast<std::size_t>(r.dim_v);
  std::vector<GroupPoint> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << coords); ++mask) {
    GroupPoint g = identity_point(rs);
    std::size_t bit = 0;
    for (std::size_t k = 0; k < rs.dim_a(); ++k, ++bit)
      g.t[k] = (mask >> bit & 1) ? box.omega[k].hi : box.omega[k].lo;
    for (std::size_t j = 0; j < rs.size(); ++j)
      for (std::size_t c = 0; c < g.x[j].size(); ++c, ++bit)
        g.x[j][c] = box.fiber_origin[j][c] + ((mask >> bit & 1) ? box.fiber_side[j] : 0.0);
    out.push_back(std::move(g));
  }
  return out;
}

double box_diameter(const RootSystem& rs, const Box& box) {
  const auto corners = box_corners(rs, box);
  double d = 0.0;
  for (std::size_t a = 0; a < corners.size(); ++a)
    for (std::size_t b = a + 1; b < corners.size(); ++b) d = std::max(d, embedded_distance(rs, corners[a], corners[b]));
  return d;
}

FolnerStats folner_stats(const RootSystem& rs, const Omega& omega, double r, double eps_shell) {
  check_omega(rs, omega);
  if (!(r > 0.0)) throw PreconditionError("r > 0", "scale factor must be positive");
  const std::size_t n = rs.dim_a();
  // Every term carries the fiber factor prod_j e^{r a_j dim_j}; ratios are formed without it.
  double log_fiber = 0.0;
  for (const auto& root : rs.roots()) log_fiber += r * alpha_max(root.alpha, omega) * root.dim_v;
  const double fiber = std::exp(log_fiber);
  const double rn1 = std::pow(r, static_cast<double>(n) - 1.0);
  const double vol = rn1 * r * omega_volume(omega);
  double t1 = 0.0, t1_bound = 0.0;
  for (const auto& root : rs.roots()) {
    double integral = 1.0;
    for (std::size_t k = 0; k < n; ++k) integral *= scaled_exp_integral(root.alpha[k], r * omega[k].lo, r * omega[k].hi);
    t1 += 2.0 * root.dim_v * integral;
    const double spread = r * (alpha_max(root.alpha, omega) - alpha_min(root.alpha, omega));
    t1_bound += 2.0 * root.dim_v * rn1 * kernel_projection(root.alpha, omega) * -std::expm1(-spread) / l2(root.alpha);
  }
  const double t2 = rn1 * boundary_measure(omega);
  FolnerStats s;
  s.volume = fiber * vol;
  s.fiber_boundary = fiber * t1;
  s.fiber_boundary_bound = fiber * t1_bound;
  s.base_boundary = fiber * t2;
  s.shell_fraction = eps_shell * (t1 + t2) / vol;
  return s;
}

MonteCarloVolume monte_carlo_volume(const RootSystem& rs, const Box& box, std::size_t samples, std::uint64_t seed,
                                    const std::optional<GroupPoint>& shift) {
  const GroupPoint g = shift.value_or(identity_point(rs));
  const GroupPoint g_inv = inverse(rs, g);
  // Bounding region of g B, each side widened by a quarter on both ends.
  std::vector<Interval> t_range, x_range;
  for (std::size_t k = 0; k < rs.dim_a(); ++k) t_range.push_back({box.omega[k].lo + g.t[k], box.omega[k].hi + g.t[k]});
  for (std::size_t j = 0; j < rs.size(); ++j) {
    const double s = std::exp(rs.eval(j, g.t));
    for (std::size_t c = 0; c < box.fiber_origin[j].size(); ++c) {
      const double lo = g.x[j][c] + s * box.fiber_origin[j][c];
      x_range.push_back({lo, lo + s * box.fiber_side[j]});
    }
  }
  double region = 1.0;
  for (auto* ranges : {&t_range, &x_range})
    for (auto& iv : *ranges) {
      const double w = iv.length();
      iv.lo -= 0.25 * w;
      iv.hi += 0.25 * w;
      region *= iv.length();
    }
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GroupPoint q = identity_point(rs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t k = 0; k < rs.dim_a(); ++k) q.t[k] = t_range[k].lo + u(rng) * t_range[k].length();
    std::size_t idx = 0;
    for (std::size_t j = 0; j < rs.size(); ++j)
      for (auto& c : q.x[j]) {
        c = x_range[idx].lo + u(rng) * x_range[idx].length();
        ++idx;
      }
    if (box_contains(rs, box, multiply(rs, g_inv, q))) ++hits;
  }
  MonteCarloVolume mc;
  mc.samples = samples;
  mc.hits = hits;
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  mc.estimate = p * region;
  mc.std_error = region * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  return mc;
}

Tiling tile_box(const RootSystem& rs, const Box& box, double rho, TileCopies copies) {
  if (!(rho > 0.0) || !(rho <= 1.0)) throw PreconditionError("0 < rho <= 1", "rho = " + std::to_string(rho));
  Tiling t;
  t.rho = rho;
  t.copies = copies;
  t.box = box;
  t.box_volume = box_volume(rs, box);
  const std::size_t n = rs.dim_a();
  const auto per_axis = static_cast<std::size_t>(safe_floor(1.0 / rho));
  const Omega sub = scale_omega(box.omega, rho);
  std::vector<std::size_t> idx(n, 0);
  for (bool more = per_axis > 0; more;) {
    TileCell cell;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = rho * box.omega[k].length();
      const double lo = box.omega[k].lo + static_cast<double>(idx[k]) * w;
      cell.omega.push_back({lo, lo + w});
    }
    cell.tiles = 1.0;
    cell.tile_volume = omega_volume(cell.omega);
    for (std::size_t j = 0; j < rs.size(); ++j) {
      const auto& alpha = rs.root(j).alpha;
      const double log_side = copies == TileCopies::kLeftTranslate ? alpha_max(alpha, cell.omega) : alpha_max(alpha, sub);
      const double count = safe_floor(std::exp(alpha_max(alpha, box.omega) - log_side));
      const double side = std::exp(log_side);
      cell.fiber_side.push_back(side);
      cell.count.push_back(count);
      cell.tiles *= std::pow(count, rs.root(j).dim_v);
      cell.tile_volume *= std::pow(count * side, rs.root(j).dim_v);
    }
    t.tile_count += cell.tiles;
    t.tiles_volume += cell.tile_volume;
    t.cells.push_back(std::move(cell));
    more = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (++idx[k] < per_axis) {
        more = true;
        break;
      }
      idx[k] = 0;
    }
  }
  t.leftover_volume = std::max(0.0, t.box_volume - t.tiles_volume);
  t.leftover_fraction = t.leftover_volume / t.box_volume;
  double widest = 0.0, steepest = 0.0;
  for (const auto& iv : box.omega) widest = std::max(widest, rho * iv.length());
  for (const auto& r : rs.roots()) steepest = std::max(steepest, l1(r.alpha));
  const double eps_tile = 0.5 * std::max(widest, std::exp(widest * steepest));
  t.leftover_bound = folner_stats(rs, box.omega, 1.0, eps_tile).shell_fraction;
  return t;
}

Box tile_at(const RootSystem& rs, const Tiling& tiling, std::size_t cell, const std::vector<Vec>& index) {
  const auto& c = tiling.cells.at(cell);
  std::vector<Vec> origin = tiling.box.fiber_origin;
  for (std::size_t j = 0; j < rs.size(); ++j)
    for (std::size_t k = 0; k < origin[j].size(); ++k) {
      if (index[j][k] < 0.0 || index[j][k] >= c.count[j]) throw ConfigError("tile index out of range");
      origin[j][k] += index[j][k] * c.fiber_side[j];
    }
  return box_with(rs, c.omega, c.fiber_side, origin);
}

std::vector<Box> enumerate_tiles(const RootSystem& rs, const Tiling& tiling, std::size_t limit) {
  if (tiling.tile_count > static_cast<double>(limit))
    throw PreconditionError("tile count <= limit", std::to_string(tiling.tile_count) + " tiles");
  std::vector<Box> out;
  for (std::size_t ci = 0; ci < tiling.cells.size(); ++ci) {
    const auto& c = tiling.cells[ci];
    if (c.tiles < 1.0) continue;
    std::vector<Vec> index = zero_origin(rs);
    for (bool more = true; more;) {
      out.push_back(tile_at(rs, tiling, ci, index));
      more = false;
      for (std::size_t j = 0; j < rs.size() && !more; ++j)
        for (auto& v : index[j]) {
          if (++v < c.count[j]) {
            more = true;
            break;
          }
          v = 0.0;
        }
    }
  }
  return out;
}

std::vector<GeodesicSample> sample_geodesic_family(const RootSystem& rs, const Box& box, double m,
                                                   std::size_t density, const FamilyOptions& opts) {
  if (!(m >= 1.0)) throw PreconditionError("m >= 1", "m = " + std::to_string(m));
  if (density == 0) throw PreconditionError("density >= 1", "empty fiber lattice");
  if (!(opts.spacing > 0.0)) throw PreconditionError("spacing > 0", "sample spacing must be positive");
  const std::size_t n = rs.dim_a();
  const Omega& om = box.omega;
  const std::size_t grid = std::max<std::size_t>(2, opts.boundary_grid);
  std::set<Vec> boundary;
  if (n == 1) {
    boundary = {{om[0].lo}, {om[0].hi}};
  } else {
    for (std::size_t k = 0; k < n; ++k)
      for (double side : {om[k].lo, om[k].hi}) {
        std::vector<std::size_t> idx(n - 1, 0);
        for (bool more = true; more;) {
          Vec p(n);
          for (std::size_t l = 0, a = 0; l < n; ++l) {
            if (l == k) {
              p[l] = side;
              continue;
            }
            p[l] = om[l].lo + om[l].length() * static_cast<double>(idx[a]) / static_cast<double>(grid - 1);
            ++a;
          }
          boundary.insert(p);
          more = false;
          for (auto& v : idx) {
            if (++v < grid) {
              more = true;
              break;
            }
            v = 0;
          }
        }
      }
  }
  const std::vector<Vec> pts(boundary.begin(), boundary.end());
  auto share_face = [&](const Vec& a, const Vec& b) {
    for (std::size_t k = 0; k < n; ++k)
      if ((a[k] == om[k].lo && b[k] == om[k].lo) || (a[k] == om[k].hi && b[k] == om[k].hi)) return true;
    return false;
  };
  double diam2 = 0.0;
  for (const auto& iv : om) diam2 += iv.length() * iv.length();
  const double diam = std::sqrt(diam2);
  std::vector<std::pair<std::size_t, std::size_t>> chords;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      if (share_face(pts[a], pts[b])) continue;
      const double ratio = distance(pts[a], pts[b]) / diam;
      if (ratio * m >= 1.0 - 1e-12 && ratio <= m * (1.0 + 1e-12)) chords.emplace_back(a, b);
    }
  if (opts.max_chords > 0 && chords.size() > opts.max_chords) {
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    for (std::size_t i = 0; i < opts.max_chords; ++i) kept.push_back(chords[i * chords.size() / opts.max_chords]);
    chords = std::move(kept);
  }
  std::vector<std::size_t> dims;
  for (const auto& r : rs.roots()) dims.push_back(static_cast<std::size_t>(r.dim_v));
  const std::size_t coords = std::accumulate(dims.begin(), dims.end(), std::size_t{0});
  std::vector<GeodesicSample> out;
  for (const auto& [a, b] : chords) {
    const Vec& p = pts[a];
    const Vec& q = pts[b];
    const double len = distance(p, q);
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / opts.spacing - 1e-12)));
    Vec dir(n);
    for (std::size_t k = 0; k < n; ++k) dir[k] = (q[k] - p[k]) / len;
    std::vector<std::size_t> lat(coords, 0);
    for (bool more = true; more;) {
      GeodesicSample g;
      g.start = p;
      g.end = q;
      g.direction = dir;
      std::size_t c = 0;
      for (std::size_t j = 0; j < rs.size(); ++j) {
        Vec x(dims[j]);
        for (std::size_t k = 0; k < dims[j]; ++k, ++c)
          x[k] = box.fiber_origin[j][k] +
                 box.fiber_side[j] * (static_cast<double>(lat[c]) + 0.5) / static_cast<double>(density);
        g.base.push_back(std::move(x));
      }
      g.path.geodesic = true;
      for (std::size_t s = 0; s <= steps; ++s) {
        const double w = static_cast<double>(s) / static_cast<double>(steps);
        GroupPoint pt;
        pt.x = g.base;
        pt.t.resize(n);
        for (std::size_t k = 0; k < n; ++k) pt.t[k] = s == steps ? q[k] : p[k] + w * (q[k] - p[k]);
        const double step = s == 0 ? 0.0 : embedded_distance(rs, g.path.samples.back(), pt);
        g.path.params.push_back(s == 0 ? 0.0 : g.path.params.back() + step);
        g.path.samples.push_back(std::move(pt));
      }
      out.push_back(std::move(g));
      more = false;
      for (auto& v : lat) {
        if (++v < density) {
          more = true;
          break;
        }
        v = 0;
      }
    }
  }
  return out;
}

PhiKind parse_phi_kind(const std::string& name) {
  static const std::map<std::string, PhiKind> kinds{{"identity", PhiKind::kIdentity},
                                                    {"standard", PhiKind::kStandard},
                                                    {"translate", PhiKind::kTranslate},
                                                    {"fold", PhiKind::kFold},
                                                    {"shuffle", PhiKind::kShuffle}};
  const auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown phi kind '" + name + "'");
  return it->second;
}

std::string phi_kind_name(PhiKind kind) {
  switch (kind) {
    case PhiKind::kIdentity: return "identity";
    case PhiKind::kStandard: return "standard";
    case PhiKind::kTranslate: return "translate";
    case PhiKind::kFold: return "fold";
    case PhiKind::kShuffle: return "shuffle";
  }
  return "identity";
}

GroupPoint apply_phi(const RootSystem& rs, const PhiSpec& phi, const GroupPoint& p) {
  GroupPoint q = p;
  switch (phi.kind) {
    case PhiKind::kIdentity:
      break;
    case PhiKind::kStandard:
      for (std::size_t k = 0; k < q.t.size() && k < phi.shift.size(); ++k) q.t[k] += phi.shift[k];
      for (std::size_t j = 0; j < rs.size(); ++j) {
        const double a = j < phi.fiber_scale.size() ? phi.fiber_scale[j] : 1.0;
        const double w = j < phi.fiber_wiggle.size() ? phi.fiber_wiggle[j] : 0.0;
        for (auto& c : q.x[j]) c = a * c + w * std::sin(c);
      }
      break;
    case PhiKind::kTranslate:
      q = multiply(rs, phi.left.t.empty() ? identity_point(rs) : phi.left, p);
      break;
    case PhiKind::kFold: {
      const double per = phi.fold_period;
      const double u = p.t[0] - per * std::floor(p.t[0] / per);
      q.t[0] = per / 2.0 - std::abs(u - per / 2.0);
      break;
    }
    case PhiKind::kShuffle: {
      // Adds the unit-scale coordinates of a root from another class into the first root's block.
      const auto classes = root_classes(rs);
      std::optional<std::size_t> other;
      for (const auto& cl : classes)
        if (std::find(cl.members.begin(), cl.members.end(), std::size_t{0}) == cl.members.end()) {
          other = cl.representative;
          break;
        }
      if (!other) throw PreconditionError("at least two root classes", "shuffle needs a second root class");
      const double w = std::exp(rs.eval(0, p.t) - rs.eval(*other, p.t));
      for (std::size_t c = 0; c < q.x[0].size(); ++c) q.x[0][c] += w * p.x[*other][c % p.x[*other].size()];
      break;
    }
  }
  return q;
}

GroupPoint apply_phi(const RootSystem& rs, const PhiSpec& phi, const GroupPoint& p, std::uint64_t stream) {
  GroupPoint q = apply_phi(rs, phi, p);
  if (phi.noise > 0.0) {
    double steep = 0.0;
    for (const auto& r : rs.roots()) steep += l1(r.alpha);
    // A displacement with sup norm noise / (2 sum |alpha_j|_1) moves at most noise / 2.
    const double amp = phi.noise / (2.0 * steep);
    auto rng = substream(phi.seed, stream);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& c : q.t) c += amp * u(rng);
  }
  return q;
}

Path map_path(const RootSystem& rs, const PhiSpec& phi, const Path& path, std::uint64_t stream) {
  Path out;
  out.kappa = path.kappa;
  out.c_add = path.c_add + phi.noise;
  for (std::size_t i = 0; i < path.size(); ++i) {
    GroupPoint q = apply_phi(rs, phi, path.samples[i], splitmix64(stream) + i);
    if (i == 0) {
      out.params.push_back(0.0);
    } else {
      const double step = embedded_distance(rs, out.samples.back(), q);
      if (!(step > 0.0)) throw PreconditionError("consecutive images distinct", "sample " + std::to_string(i));
      out.params.push_back(out.params.back() + step);
    }
    out.samples.push_back(std::move(q));
  }
  return out;
}

double IsotonicFit::eval(double x) const {
  if (knots.empty()) return 0.0;
  if (x <= knots.front()) return values.front();
  if (x >= knots.back()) return values.back();
  const auto it = std::lower_bound(knots.begin(), knots.end(), x);
  const auto i = static_cast<std::size_t>(it - knots.begin());
  if (knots[i] == x) return values[i];
  const double w = (x - knots[i - 1]) / (knots[i] - knots[i - 1]);
  return (1.0 - w) * values[i - 1] + w * values[i];
}

// Means are updated incrementally so that pooling equal values is exact.
IsotonicFit isotonic_fit(const Vec& x, const Vec& y) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  Vec knots, mean, weight;
  for (std::size_t i : order) {
    if (!knots.empty() && knots.back() == x[i]) {
      weight.back() += 1.0;
      mean.back() += (y[i] - mean.back()) / weight.back();
    } else {
      knots.push_back(x[i]);
      mean.push_back(y[i]);
      weight.push_back(1.0);
    }
  }
  auto pava = [&](double sign) {
    struct Block {
      double value, weight;
      std::size_t count;
    };
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      blocks.push_back({sign * mean[i], weight[i], 1});
      while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
        auto b = blocks.back();
        blocks.pop_back();
        auto& a = blocks.back();
        a.weight += b.weight;
        a.value += (b.value - a.value) * (b.weight / a.weight);
        a.count += b.count;
      }
    }
    Vec fitted;
    for (const auto& b : blocks) fitted.insert(fitted.end(), b.count, sign * b.value);
    return fitted;
  };
  auto sse = [&](const Vec& fitted) {
    double s = 0.0;
    for (std::size_t i = 0; i < knots.size(); ++i) s += weight[i] * (fitted[i] - mean[i]) * (fitted[i] - mean[i]);
    return s;
  };
  IsotonicFit up{knots, pava(1.0), false};
  IsotonicFit down{knots, pava(-1.0), true};
  return sse(down.values) < sse(up.values) ? down : up;
}

StandardMapFit standard_map_fit(const RootSystem& rs, const std::vector<GroupPoint>& domain,
                                const std::vector<GroupPoint>& image, double diameter) {
  if (domain.empty() || domain.size() != image.size())
    throw PreconditionError("P0 nonempty", "need matching nonempty domain and image samples");
  const std::size_t n = rs.dim_a();
  const auto rows = static_cast<Eigen::Index>(domain.size());
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::VectorXd mean_in = Eigen::VectorXd::Zero(dim), mean_out = Eigen::VectorXd::Zero(dim);
  for (std::size_t i = 0; i < domain.size(); ++i)
    for (std::size_t k = 0; k < n; ++k) {
      mean_in(static_cast<Eigen::Index>(k)) += domain[i].t[k];
      mean_out(static_cast<Eigen::Index>(k)) += image[i].t[k];
    }
  mean_in /= static_cast<double>(rows);
  mean_out /= static_cast<double>(rows);
  Eigen::MatrixXd design(rows, dim);
  Eigen::MatrixXd target(rows, dim);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < dim; ++k) {
      design(i, k) = domain[static_cast<std::size_t>(i)].t[static_cast<std::size_t>(k)] - mean_in(k);
      target(i, k) = image[static_cast<std::size_t>(i)].t[static_cast<std::size_t>(k)] - mean_out(k);
    }
  StandardMapFit fit;
  fit.diameter = diameter;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < dim) {
    fit.reason = "rank-deficient affine fit: rank " + std::to_string(qr.rank() + 1) + " < " + std::to_string(n + 1);
    return fit;
  }
  // Centred normal equations: an exact affine image is recovered exactly in rank one.
  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::MatrixXd coef = gram.ldlt().solve(design.transpose() * target);
  fit.linear.assign(n, Vec(n, 0.0));
  fit.offset.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double shift = mean_out(static_cast<Eigen::Index>(r));
    for (std::size_t c = 0; c < n; ++c) {
      fit.linear[r][c] = coef(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
      shift -= fit.linear[r][c] * mean_in(static_cast<Eigen::Index>(c));
    }
    fit.offset[r] = shift;
  }
  fit.fiber.resize(rs.size());
  for (std::size_t j = 0; j < rs.size(); ++j)
    for (std::size_t c = 0; c < domain.front().x[j].size(); ++c) {
      Vec xs, ys;
      for (std::size_t i = 0; i < domain.size(); ++i) {
        xs.push_back(domain[i].x[j][c]);
        ys.push_back(image[i].x[j][c]);
      }
      fit.fiber[j].push_back(isotonic_fit(xs, ys));
    }
  fit.ok = true;
  for (std::size_t i = 0; i < domain.size(); ++i) {
    GroupPoint pred = domain[i];
    for (std::size_t r = 0; r < n; ++r) {
      double v = fit.offset[r];
      for (std::size_t c = 0; c < n; ++c) v += fit.linear[r][c] * domain[i].t[c];
      pred.t[r] = v;
    }
    for (std::size_t j = 0; j < rs.size(); ++j)
      for (std::size_t c = 0; c < pred.x[j].size(); ++c) pred.x[j][c] = fit.fiber[j][c].eval(domain[i].x[j][c]);
    fit.error = std::max(fit.error, embedded_distance(rs, image[i], pred));
  }
  fit.error_fraction = diameter > 0.0 ? fit.error / diameter : 0.0;
  return fit;
}

GeodesicVerdict classify_image(const RootSystem& rs_prime, const Path& image, const GoodBoxParams& p) {
  GeodesicVerdict v;
  try {
    GeodesicApproxParams gp;
    gp.mode = MonotoneMode{p.delta};
    gp.eps = p.eps;
    gp.hbar = desk_hbar(image.kappa);
    gp.wall_slope = p.wall_slope;
    const auto rep = geodesic_approximation(rs_prime, image, gp);
    v.deviation = rep.deviation;
    Vec u = rep.segment.samples.back().t;
    for (std::size_t k = 0; k < u.size(); ++k) u[k] -= rep.segment.samples.front().t[k];
    const double ulen = l2(u);
    for (std::size_t j = 0; j < rs_prime.size(); ++j) {
      const double s = std::abs(rs_prime.eval(j, u)) / (l2(rs_prime.root(j).alpha) * ulen);
      if (s < p.eta_tilde) {
        v.reason = "angle to root kernels >= asin(eta_tilde)";
        return v;
      }
    }
    LinearNeighborhoodSpec spec{p.eta, p.c_add + 1e-9, rep.segment.samples.front()};
    for (const auto& y : image.samples)
      if (!linear_neighborhood_contains(rs_prime, spec, rep.segment.samples, y)) {
        v.reason = "inside the eta-linear + C neighborhood of the segment";
        return v;
      }
    v.good = true;
  } catch (const PreconditionError& e) {
    v.reason = e.inequality();
  } catch (const NumericalFailure&) {
    v.reason = "numerical failure";
  }
  return v;
}

BoxReport good_box_experiment(const RootSystem& rs, const RootSystem& rs_prime, const PhiSpec& phi,
                              const Omega& omega, const GoodBoxParams& p) {
  check_same_shape(rs, rs_prime);
  check_omega(rs, omega);
  if (!(p.n_bound > 1.0)) throw PreconditionError("N > 1", "N = " + std::to_string(p.n_bound));
  for (const auto& iv : omega)
    if (iv.length() < p.m * p.l0)
      throw PreconditionError("Omega side >= m L0", "side " + std::to_string(iv.length()) + " < " +
                                                          std::to_string(p.m * p.l0));
  const Box box = build_box(rs, omega);
  BoxReport rep;
  rep.threshold = 1.0 - std::sqrt(1.0 / p.n_bound);
  FamilyOptions fo{p.boundary_grid, p.spacing, 8};

  // Whole-box family: scale selection and uniform points.
  std::vector<Path> images;
  for (const auto& g : sample_geodesic_family(rs, box, p.m, 1, fo)) {
    try {
      images.push_back(map_path(rs, phi, g.path, (std::uint64_t{1} << 40) + images.size()));
    } catch (const PreconditionError&) {
    }
  }
  StageReport eff, mono, uni;
  eff.name = "family efficiency scale";
  mono.name = "family monotone scale";
  uni.name = "uniform points";
  if (images.empty()) {
    eff.detail = mono.detail = uni.detail = "no admissible image in the whole-box family";
  } else {
    try {
      EfficiencyParams ep{p.eps, p.n_bound, p.spacing, desk_hbar(1.0)};
      const auto fr = find_efficiency_scale_family(rs_prime, images, ep, p.n_bound / 2.0);
      eff.ok = true;
      eff.rho = std::pow(std::pow(p.eps, 0.25) / 2.0, static_cast<double>(fr.index));
      eff.detail = "index " + std::to_string(fr.index) + ", mean delta " + std::to_string(fr.mean_deltas[fr.index]);
    } catch (const std::runtime_error& e) {
      eff.detail = e.what();
    }
    try {
      MonotoneScaleParams mp{p.delta, p.eps, p.n_bound, p.spacing, desk_hbar(1.0)};
      const auto mr = find_monotone_scale_family(rs_prime, images, mp, p.n_bound / 2.0);
      mono.ok = true;
      mono.rho = std::pow(p.delta, static_cast<double>(mr.index));
      mono.detail = "index " + std::to_string(mr.index);
    } catch (const std::runtime_error& e) {
      mono.detail = e.what();
    }
    try {
      double worst = 0.0;
      for (const auto& img : images) {
        const double gap = embedded_distance(rs_prime, img.samples.front(), img.samples.back());
        const auto ur = uniform_points(rs_prime, img, p.delta * gap, std::sqrt(p.n_bound), p.delta);
        worst = std::max(worst, ur.non_uniform_fraction);
      }
      uni.ok = true;
      uni.detail = "largest non-uniform fraction " + std::to_string(worst);
    } catch (const std::runtime_error& e) {
      uni.detail = e.what();
    }
  }
  rep.stages = {eff, mono, uni};

  if (p.rho) {
    rep.rho = *p.rho;
    rep.scale_source = "configured";
  } else if (eff.ok) {
    rep.rho = *eff.rho;
    rep.scale_source = "family efficiency scale";
  } else {
    rep.rho = 1.0;
    rep.scale_source = "whole box";
  }
  const Tiling tiling = tile_box(rs, box, rep.rho);

  struct Pick {
    std::size_t cell;
    std::vector<Vec> index;
  };
  std::vector<Pick> picks;
  for (std::size_t c = 0; c < tiling.cells.size(); ++c) {
    const auto& cell = tiling.cells[c];
    if (cell.tiles < 1.0) continue;
    auto rng = substream(p.seed, c);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Translates whose coordinates exceed 1e9 unit-scale lengths at the tile's lowest height
    // are not resolved in double precision.
    Vec reach;
    for (std::size_t j = 0; j < rs.size(); ++j) {
      const auto& alpha = rs.root(j).alpha;
      const double span = alpha_max(alpha, cell.omega) - alpha_min(alpha, cell.omega);
      reach.push_back(std::min(cell.count[j], std::max(1.0, std::floor(1e9 * std::exp(-span)))));
    }
    std::set<std::vector<Vec>> seen;
    for (std::size_t i = 0; i < p.tiles_per_cell; ++i) {
      Pick pk{c, zero_origin(rs)};
      for (std::size_t j = 0; j < rs.size(); ++j)
        for (auto& v : pk.index[j]) v = std::min(reach[j] - 1.0, std::floor(u(rng) * reach[j]));
      if (seen.insert(pk.index).second) picks.push_back(std::move(pk));
    }
  }

  struct TileOutcome {
    TileReport tile;
    std::vector<std::string> reasons;
  };
  auto run_tile = [&](std::size_t id) {
    TileOutcome out;
    auto& tr = out.tile;
    tr.id = id;
    tr.cell = picks[id].cell;
    tr.box = tile_at(rs, tiling, picks[id].cell, picks[id].index);
    auto fam = sample_geodesic_family(rs, tr.box, p.m, p.density, fo);
    if (p.max_geodesics > 0 && fam.size() > p.max_geodesics) {
      std::vector<GeodesicSample> kept;
      for (std::size_t i = 0; i < p.max_geodesics; ++i) kept.push_back(std::move(fam[i * fam.size() / p.max_geodesics]));
      fam = std::move(kept);
    }
    std::vector<GroupPoint> dom, img;
    std::size_t good = 0;
    for (std::size_t i = 0; i < fam.size(); ++i) {
      GeodesicVerdict v;
      Path image;
      try {
        image = map_path(rs, phi, fam[i].path, (static_cast<std::uint64_t>(id) << 20) + i);
        v = classify_image(rs_prime, image, p);
      } catch (const PreconditionError& e) {
        v.reason = e.inequality();
      }
      if (v.good) {
        ++good;
        dom.insert(dom.end(), fam[i].path.samples.begin(), fam[i].path.samples.end());
        img.insert(img.end(), image.samples.begin(), image.samples.end());
      } else {
        out.reasons.push_back(v.reason);
      }
    }
    tr.geodesics = fam.size();
    tr.good_fraction = fam.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(fam.size());
    tr.good = !fam.empty() && tr.good_fraction >= rep.threshold;
    if (tr.good) tr.fit = standard_map_fit(rs_prime, dom, img, box_diameter(rs, tr.box));
    return out;
  };
  auto outcomes = parallel_map(picks.size(), p.jobs, run_tile);

  std::map<std::string, std::size_t> failures;
  std::size_t total = 0, bad = 0;
  for (auto& o : outcomes) {
    total += o.tile.geodesics;
    bad += o.reasons.size();
    for (const auto& r : o.reasons) ++failures[r];
    if (o.tile.good) {
      rep.good_tiles.push_back(o.tile.id);
      if (o.tile.fit && o.tile.fit->ok) rep.max_fit_fraction = std::max(rep.max_fit_fraction, o.tile.fit->error_fraction);
    }
    rep.tiles.push_back(std::move(o.tile));
  }
  rep.failures.assign(failures.begin(), failures.end());
  rep.good_tile_fraction =
      rep.tiles.empty() ? 0.0 : static_cast<double>(rep.good_tiles.size()) / static_cast<double>(rep.tiles.size());
  rep.bad_tile_fraction = rep.tiles.empty() ? 0.0 : 1.0 - rep.good_tile_fraction;
  rep.bad_geodesic_fraction = total == 0 ? 0.0 : static_cast<double>(bad) / static_cast<double>(total);
  return rep;
}

}  // namespace coarse
