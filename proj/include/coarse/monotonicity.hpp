#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "coarse/group_model.hpp"
#include "coarse/paths.hpp"

namespace coarse {

struct MonotoneVerdict {
  bool is_monotone = true;
  std::size_t first_index = 0;   // earlier sample of the worst pair
  std::size_t second_index = 0;  // later sample of the worst pair
  double first_param = 0.0;
  double second_param = 0.0;
  double worst_distance = 0.0;
  double worst_ratio = 0.0;      // worst distance over the allowed bound; <= 1 iff monotone
};

struct MonotoneOptions {
  std::optional<double> eps;   // recorded efficiency; enables the chord and delta >= 4 hbar eps checks
  std::optional<double> hbar;  // defaults to default_hbar
};

// Samples whose chord projections share a bucket of width equal to the projection mesh, but
// belong to different passes through that bucket, must be within delta d(zeta(0), zeta(L)).
MonotoneVerdict is_delta_monotone(const RootSystem& rs, const Path& zeta, double delta,
                                  const MonotoneOptions& opts = {});
// Same level test on the sample range [begin, end] without precondition checks.
MonotoneVerdict delta_monotone_range(const RootSystem& rs, const Path& zeta, double delta, std::size_t begin,
                                     std::size_t end);

// Bound nu d(zeta(t_later), zeta(0)) + c1.
MonotoneVerdict is_weakly_monotone(const RootSystem& rs, const Path& zeta, double nu, double c1);

struct MonotoneScaleParams {
  double delta = 0.5;
  double eps = 1e-16;
  double n_bound = 2.0;
  double l_a = 1.0;
  std::optional<double> hbar;  // defaults to default_hbar
};

// Index 0 is the whole path; index i >= 1 subdivides at delta^i d(zeta(0), zeta(L)) nested
// inside the cells of index i - 1, down to the last length L_D with 1.5 eps^{1/8} L_D >= l_a.
struct MonotoneProfile {
  Vec lengths;
  Vec flats;      // share of efficient cells that are not delta-monotone
  Vec naturals;   // share of efficient cells that are monotone and reversed against a monotone parent
  std::vector<std::size_t> efficient_cells;
  std::vector<std::size_t> cells;
  std::vector<std::vector<std::size_t>> breakpoints;
  std::vector<std::vector<std::size_t>> parents;  // parent cell of each cell, index 0 empty
};

MonotoneProfile monotone_scale_profile(const RootSystem& rs, const Path& zeta, const MonotoneScaleParams& p);

struct MonotoneScaleReport {
  bool accepted = false;
  std::size_t index = 0;  // I; the pair is (I, I + 1)
  double rho = 0.0;
  double rho_next = 0.0;
  MonotoneProfile profile;
  std::string reason;
};

// Left side of the length condition: the number of delta-steps from 2 kappa L down to l_a.
double monotone_scale_budget(const MonotoneScaleParams& p, double kappa, double length);
// Right side: (2 kappa)^2 hbar 2N / ((1 - eps^{1/2} hbar) delta).
double monotone_scale_demand(const MonotoneScaleParams& p, double kappa, double hbar);

MonotoneScaleReport find_monotone_scale(const RootSystem& rs, const Path& zeta, const MonotoneScaleParams& p);

struct FamilyMonotoneReport {
  std::size_t index = 0;
  double rho = 0.0;
  double rho_next = 0.0;
  Vec mean_scores;                  // family mean of flat + natural per index
  std::vector<std::size_t> selected;  // F0
  std::vector<Vec> member_scores;
  double chebyshev_floor = 0.0;     // (1 - 2 N0 / N) |F|
};

FamilyMonotoneReport find_monotone_scale_family(const RootSystem& rs, const std::vector<Path>& family,
                                                const MonotoneScaleParams& p, double n0);

struct UniformPointReport {
  std::vector<std::size_t> breakpoints;  // sample indices of the cells of S(zeta, l_s)
  std::vector<bool> bad_cells;
  double bad_fraction = 0.0;
  std::vector<std::size_t> uniform;       // positions in breakpoints
  double non_uniform_fraction = 0.0;
  Vec max_ratio;                           // per point max over T of P(x, zeta, T) / T, in cells
  double bound = 0.0;                      // 2 / M
};

// Cells are bad when they are not delta-monotone or run against the whole chord.
std::vector<bool> bad_cells_for(const RootSystem& rs, const Path& zeta, const std::vector<std::size_t>& breakpoints,
                               double delta);
// P(x, zeta, T) counts bad cells among the T cells leaving x; x is uniform iff P <= M mu T for all T.
UniformPointReport uniform_points(const std::vector<std::size_t>& breakpoints, const std::vector<bool>& bad,
                                  double m_factor);
UniformPointReport uniform_points(const RootSystem& rs, const Path& zeta, double l_s, double m_factor, double delta);

struct UniformStartCheck {
  double nu = 0.0;
  double hbar = 0.0;
  double worst_rate_gap = 0.0;  // min over T > L_s of (h(T) - h(x)) - (1 - nu - hbar nu) T / hbar
  bool moving_rate_holds = false;
  MonotoneVerdict weak;          // (nu (1 + hbar), 2 kappa L_s) from x
};

// Tail of zeta from the breakpoint at position point of the report.
Path path_tail(const Path& zeta, std::size_t start);

UniformStartCheck check_uniform_start(const RootSystem& rs, const Path& zeta, const UniformPointReport& rep,
                                      std::size_t point, double l_s, double nu, std::optional<double> hbar = {});

struct MonotoneMode {
  double delta = 0.1;
};
struct WeakMode {
  double delta = 0.1;  // level spacing as a fraction of the base gap
  double nu = 0.0;
  double c1 = 0.0;
};

struct GeodesicApproxParams {
  std::variant<MonotoneMode, WeakMode> mode = MonotoneMode{};
  double eps = 1e-3;
  std::optional<double> hbar;         // defaults to default_hbar
  std::optional<double> wall_slope;   // defaults to 3 / (delta d(zeta(0), zeta(L)))
};

struct GeodesicApproxReport {
  Path segment;                    // base point fibers fixed per root, A along the chord
  std::vector<VerticalApproximation> per_root;
  Vec level_params;                // last crossing parameter of each level
  double level_spacing = 0.0;
  double deviation = 0.0;          // sampled Hausdorff distance to zeta
  double bound = 0.0;              // monotone: 2|roots|(hbar sqrt(delta^2 + 4 eps^2)|AB| + delta gap)
  bool linear_contained = false;   // weak mode: zeta inside the |roots| nu-linear neighborhood
  bool certified = false;
  MonotoneVerdict verdict;
};

// Closed form of the wall neighborhood test in A: some wall point w based at t0 has
// |y - w| <= slope |w - t0| + c.
bool near_wall(const RootSystem& rs, const Vec& t0, const Vec& y, double slope, double c);

GeodesicApproxReport geodesic_approximation(const RootSystem& rs, const Path& zeta, const GeodesicApproxParams& p);

}  // namespace coarse
