#pragma once

#include <vector>

#include "coarse/group_model.hpp"
#include "coarse/weight_space.hpp"

namespace coarse {

Vec project_to_base(const GroupPoint& p);
WeightPoint project_to_weight(const RootSystem& rs, const GroupPoint& p, std::size_t root_index);

// Sum over roots of the weight-space distances of the projections.
double embedded_distance(const RootSystem& rs, const GroupPoint& p, const GroupPoint& q);

// {t : <normal, t> >= offset}
struct Halfspace {
  Vec normal;
  double offset = 0.0;
  std::size_t root_index = 0;
};

struct HalfspaceRegion {
  std::vector<Halfspace> constraints;
  bool feasible = true;
};

// Exact Fourier-Motzkin feasibility test, dim <= 4.
bool halfspaces_feasible(const std::vector<Halfspace>& constraints, std::size_t dim, double tol = 1e-12);

// Heights in A where the flats through fiber coordinates x and y come within unit distance.
HalfspaceRegion flat_overlap_region(const RootSystem& rs, const std::vector<Vec>& x, const std::vector<Vec>& y);

// Linear interpolation of a sampled path at arclength fraction s in [0, 1].
GroupPoint path_at_fraction(const Path& path, double s);

// Symmetric Hausdorff distance between the sample sets under the embedded metric.
double sampled_hausdorff(const RootSystem& rs, const std::vector<GroupPoint>& a, const std::vector<GroupPoint>& b);

// Fraction of arclength fraction s at which, for every root, the fiber offset of the two
// paths seen at the higher of the two heights is at most tol: e^{-h} Q(h) |dx| <= tol.
double common_flat_fraction(const RootSystem& rs, const Path& g1, const Path& g2, double tol,
                            std::size_t subsamples = 256);

struct LinearNeighborhoodSpec {
  double eta = 0.0;
  double c = 0.0;
  GroupPoint basepoint;
};

// y lies in the union of balls B(x, eta d(x, x0) + C) over x in xs.
bool linear_neighborhood_contains(const RootSystem& rs, const LinearNeighborhoodSpec& spec,
                                  const std::vector<GroupPoint>& xs, const GroupPoint& y);

// Lengths of a piecewise-linear path by midpoint quadrature of the Finsler elements.
double mixed_finsler_length(const RootSystem& rs, const std::vector<GroupPoint>& vertices,
                           std::size_t steps_per_edge = 2000);
double weight_finsler_length(const RootSystem& rs, const std::vector<GroupPoint>& vertices, std::size_t root_index,
                             std::size_t steps_per_edge = 2000);

}  // namespace coarse
