#include "coarse/metric_embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coarse/errors.hpp"

namespace coarse {

Vec project_to_base(const GroupPoint& p) { return p.t; }

WeightPoint project_to_weight(const RootSystem& rs, const GroupPoint& p, std::size_t root_index) {
  if (root_index >= rs.size()) throw ConfigError("root index out of range");
  return WeightPoint{p.x.at(root_index), rs.eval(root_index, p.t)};
}

double embedded_distance(const RootSystem& rs, const GroupPoint& p, const GroupPoint& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i)
    d += weight_distance(project_to_weight(rs, p, i), project_to_weight(rs, q, i), rs.metric(i), rs.convention());
  return d;
}

bool halfspaces_feasible(const std::vector<Halfspace>& constraints, std::size_t dim, double tol) {
  if (dim > 4) throw UnsupportedOperation("Fourier-Motzkin feasibility is limited to dim_a <= 4");
  struct Row {
    Vec a;
    double b;
  };
  std::vector<Row> rows;
  rows.reserve(constraints.size());
  for (const auto& h : constraints) rows.push_back(Row{h.normal, h.offset});
  for (std::size_t k = 0; k < dim; ++k) {
    std::vector<Row> pos, neg, next;
    for (auto& r : rows) {
      if (r.a[k] > 0.0)
        pos.push_back(r);
      else if (r.a[k] < 0.0)
        neg.push_back(r);
      else
        next.push_back(r);
    }
    for (const auto& p : pos)
      for (const auto& n : neg) {
        Row c{Vec(dim, 0.0), p.b / p.a[k] + n.b / -n.a[k]};
        for (std::size_t j = 0; j < dim; ++j) c.a[j] = p.a[j] / p.a[k] + n.a[j] / -n.a[k];
        c.a[k] = 0.0;
        next.push_back(std::move(c));
      }
    rows = std::move(next);
  }
  for (const auto& r : rows)
    if (r.b > tol * std::max(1.0, std::abs(r.b))) return false;
  return true;
}

HalfspaceRegion flat_overlap_region(const RootSystem& rs, const std::vector<Vec>& x, const std::vector<Vec>& y) {
  if (rs.dim_a() > 4) throw UnsupportedOperation("flat overlap regions are limited to dim_a <= 4");
  if (x.size() != rs.size() || y.size() != rs.size()) throw ConfigError("fiber block count mismatch");
  HalfspaceRegion region;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const double gap = distance(x[i], y[i]);
    if (gap <= 0.0 || std::log(gap) < 1.0) continue;
    region.constraints.push_back(Halfspace{rs.root(i).alpha, u_inverse(rs.metric(i), gap), i});
  }
  region.feasible = halfspaces_feasible(region.constraints, rs.dim_a());
  return region;
}

GroupPoint path_at_fraction(const Path& path, double s) {
  const double target = path.params.front() + std::clamp(s, 0.0, 1.0) * path.length();
  auto it = std::upper_bound(path.params.begin(), path.params.end(), target);
  std::size_t hi = static_cast<std::size_t>(it - path.params.begin());
  if (hi >= path.params.size()) return path.samples.back();
  if (hi == 0) return path.samples.front();
  const std::size_t lo = hi - 1;
  const double w = (target - path.params[lo]) / (path.params[hi] - path.params[lo]);
  const GroupPoint& a = path.samples[lo];
  const GroupPoint& b = path.samples[hi];
  GroupPoint out = a;
  for (std::size_t i = 0; i < out.x.size(); ++i)
    for (std::size_t k = 0; k < out.x[i].size(); ++k) out.x[i][k] = (1.0 - w) * a.x[i][k] + w * b.x[i][k];
  for (std::size_t j = 0; j < out.t.size(); ++j) out.t[j] = (1.0 - w) * a.t[j] + w * b.t[j];
  return out;
}

double sampled_hausdorff(const RootSystem& rs, const std::vector<GroupPoint>& a, const std::vector<GroupPoint>& b) {
  auto one_sided = [&](const std::vector<GroupPoint>& from, const std::vector<GroupPoint>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        best = std::min(best, embedded_distance(rs, p, q));
        if (best == 0.0) break;
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

double common_flat_fraction(const RootSystem& rs, const Path& g1, const Path& g2, double tol, std::size_t subsamples) {
  if (!g1.geodesic || !g2.geodesic) throw PreconditionError("geodesic input", "both paths must be geodesic segments");
  check_path(rs, g1);
  check_path(rs, g2);
  // Merge the breakpoints of both parametrizations in arclength-fraction units.
  Vec cuts;
  for (const Path* g : {&g1, &g2})
    for (double p : g->params) cuts.push_back((p - g->params.front()) / g->length());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double agree = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double width = (cuts[c + 1] - cuts[c]) / static_cast<double>(subsamples);
    for (std::size_t k = 0; k < subsamples; ++k) {
      const double s = cuts[c] + (static_cast<double>(k) + 0.5) * width;
      const GroupPoint p = path_at_fraction(g1, s);
      const GroupPoint q = path_at_fraction(g2, s);
      bool ok = true;
      for (std::size_t i = 0; i < rs.size() && ok; ++i) {
        const double h = std::max(rs.eval(i, p.t), rs.eval(i, q.t));
        const double gap = distance(p.x[i], q.x[i]);
        ok = gap == 0.0 || std::log(gap) - h + std::log(rs.metric(i)(h)) <= std::log(tol);
      }
      if (ok) agree += width;
    }
  }
  return std::clamp(agree, 0.0, 1.0);
}

bool linear_neighborhood_contains(const RootSystem& rs, const LinearNeighborhoodSpec& spec,
                                  const std::vector<GroupPoint>& xs, const GroupPoint& y) {
  for (const auto& x : xs)
    if (embedded_distance(rs, y, x) <= spec.eta * embedded_distance(rs, x, spec.basepoint) + spec.c) return true;
  return false;
}

namespace {

template <class Element>
double quadrature(const std::vector<GroupPoint>& vertices, std::size_t steps, Element element) {
  double total = 0.0;
  for (std::size_t e = 0; e + 1 < vertices.size(); ++e) {
    const GroupPoint& a = vertices[e];
    const GroupPoint& b = vertices[e + 1];
    GroupPoint mid = a;
    GroupPoint delta = a;
    for (std::size_t i = 0; i < a.x.size(); ++i)
      for (std::size_t k = 0; k < a.x[i].size(); ++k) delta.x[i][k] = (b.x[i][k] - a.x[i][k]) / steps;
    for (std::size_t j = 0; j < a.t.size(); ++j) delta.t[j] = (b.t[j] - a.t[j]) / steps;
    for (std::size_t s = 0; s < steps; ++s) {
      const double w = (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
      for (std::size_t i = 0; i < a.x.size(); ++i)
        for (std::size_t k = 0; k < a.x[i].size(); ++k) mid.x[i][k] = (1.0 - w) * a.x[i][k] + w * b.x[i][k];
      for (std::size_t j = 0; j < a.t.size(); ++j) mid.t[j] = (1.0 - w) * a.t[j] + w * b.t[j];
      total += element(mid, delta);
    }
  }
  return total;
}

double fiber_element(const RootSystem& rs, const GroupPoint& at, const GroupPoint& delta, std::size_t i) {
  const double h = rs.eval(i, at.t);
  double dx = 0.0;
  for (double c : delta.x[i]) dx += std::abs(c);
  return dx == 0.0 ? 0.0 : std::exp(-h) * rs.metric(i)(h) * dx;
}

}  // namespace

double mixed_finsler_length(const RootSystem& rs, const std::vector<GroupPoint>& vertices, std::size_t steps_per_edge) {
  return quadrature(vertices, steps_per_edge, [&](const GroupPoint& at, const GroupPoint& delta) {
    double v = 0.0;
    for (double c : delta.t) v += std::abs(c);
    for (std::size_t i = 0; i < rs.size(); ++i) v += fiber_element(rs, at, delta, i);
    return v;
  });
}

double weight_finsler_length(const RootSystem& rs, const std::vector<GroupPoint>& vertices, std::size_t root_index,
                             std::size_t steps_per_edge) {
  return quadrature(vertices, steps_per_edge, [&](const GroupPoint& at, const GroupPoint& delta) {
    return std::abs(rs.eval(root_index, delta.t)) + fiber_element(rs, at, delta, root_index);
  });
}

}  // namespace coarse
