#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "coarse/group_model.hpp"

namespace coarse {

inline constexpr std::size_t kPathEnd = std::numeric_limits<std::size_t>::max();

struct Subdivision {
  std::vector<std::size_t> breakpoints;  // sample indices, first and last are the range ends
  double gap = 0.0;
  double max_overshoot = 0.0;            // largest d(q_i, q_{i+1}) - r over non-final cells
};

using IndexMetric = std::function<double(std::size_t, std::size_t)>;

// First-crossing subdivision of the sample range [begin, end].
Subdivision subdivide_by(std::size_t begin, std::size_t end, double r, const IndexMetric& dist);
// Under the embedded metric of G.
Subdivision subdivide(const RootSystem& rs, const Path& zeta, double r);
// Under the Euclidean metric of A.
Subdivision subdivide_base(std::span<const Vec> pts, double r, std::size_t begin = 0, std::size_t end = kPathEnd);

std::vector<Vec> base_curve(const Path& zeta);

// Sum of consecutive breakpoint distances.
double chord_sum(std::span<const Vec> pts, const Subdivision& s);

// Sum over S(lambda, rtilde |lambda|) is at most (1 + eps) |lambda|, with |lambda| the endpoint gap.
bool is_efficient(std::span<const Vec> pts, double eps, double rtilde, std::size_t begin = 0,
                  std::size_t end = kPathEnd);
bool is_efficient(const RootSystem& rs, const Path& zeta, double eps, double rtilde);

// Hausdorff distance between the sampled polyline and its endpoint chord.
double chord_hausdorff(std::span<const Vec> pts);

// 2^{2(|roots| - 1)} * 80 kappa
double default_hbar(const RootSystem& rs, double kappa);
// The constant making the per-scale length ratio bound equal to one.
double desk_hbar(double kappa);

// Scale index 0 is the whole path; index j >= 1 subdivides at (eps^{1/4}/2)^j |lambda|,
// nested inside the cells of index j - 1.
struct ScaleProfile {
  Vec rho;
  Vec delta;                               // gap-weighted inefficient fraction per index
  std::vector<std::size_t> cells;
  std::vector<std::vector<std::size_t>> breakpoints;
};

ScaleProfile efficiency_profile(std::span<const Vec> base, double eps, double l_stop);

struct ScaleReport {
  bool accepted = false;
  std::size_t index = 0;
  double rho = 0.0;
  Vec rhos;
  Vec deltas;
  double length = 0.0;           // parameter length L of the quasi-geodesic
  double required_length = 0.0;  // smallest L allowed by the length condition
  std::string reason;
};

struct EfficiencyParams {
  double eps = 0.5;
  double n_bound = 4.0;
  double l_stop = 1.0;
  std::optional<double> hbar;  // defaults to default_hbar
};

double efficiency_required_length(const EfficiencyParams& p, double hbar, double kappa);

// Throws PreconditionError when the length condition fails and the top scale is not efficient.
ScaleReport find_efficiency_scale(const RootSystem& rs, const Path& zeta, const EfficiencyParams& params);

struct FamilyScaleReport {
  std::size_t index = 0;
  double rho = 0.0;
  Vec mean_deltas;
  std::vector<std::size_t> selected;  // members with delta at the chosen index <= 1/N0
  std::vector<Vec> member_deltas;
};

FamilyScaleReport find_efficiency_scale_family(const RootSystem& rs, const std::vector<Path>& family,
                                               const EfficiencyParams& params, double n0);

struct SubsegmentReport {
  double bad_fraction = 0.0;
  double bound = 0.0;           // eps^{1/2} r_b / r_s
  std::vector<std::size_t> bad_cells;
};

SubsegmentReport efficient_subsegment_fraction(std::span<const Vec> base, double eps,
                                               const std::vector<std::size_t>& breakpoints, double r_s, double r_b);

struct ConfinementReport {
  double max_distance = 0.0;
  double ratio = 0.0;
  double hbar = 0.0;
  double base_diameter = 0.0;
  double max_detour = 0.0;
  bool holds = false;
};

// Largest sum(d(z_{i_j}, z_{i_{j+1}})) / d(z_{i_0}, z_{i_n}) over random increasing index chains.
double max_detour_ratio(const RootSystem& rs, const Path& zeta, std::size_t chains, std::mt19937_64& rng);

ConfinementReport confinement_check(const RootSystem& rs, const Path& zeta, double s, std::optional<double> hbar = {},
                                    std::size_t chains = 64, std::uint64_t seed = 0);

}  // namespace coarse
