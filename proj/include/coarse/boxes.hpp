#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coarse/group_model.hpp"
#include "coarse/monotonicity.hpp"
#include "coarse/paths.hpp"

namespace coarse {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const noexcept { return hi - lo; }
};

using Omega = std::vector<Interval>;

// B(Omega): the fiber cube origin_j + [0, side_j]^{dim_v} in every root block over t in Omega.
struct Box {
  Omega omega;
  Vec max_alpha;                 // a_j = max of alpha_j over Omega
  Vec min_alpha;                 // b_j = min of alpha_j over Omega
  Vec fiber_side;                // e^{a_j}
  std::vector<Vec> fiber_origin;
};

double omega_volume(const Omega& omega);
// max and min of alpha over the product of intervals.
double alpha_max(const Vec& alpha, const Omega& omega);
double alpha_min(const Vec& alpha, const Omega& omega);
Omega scale_omega(const Omega& omega, double r);

// Throws PreconditionError when some interval has empty interior.
Box build_box(const RootSystem& rs, const Omega& omega);
// Lebesgue volume in the coordinates (x, t).
double box_volume(const RootSystem& rs, const Box& box);
bool box_contains(const RootSystem& rs, const Box& box, const GroupPoint& p);
// Corners of the fiber cube times the corners of Omega.
std::vector<GroupPoint> box_corners(const RootSystem& rs, const Box& box);
double box_diameter(const RootSystem& rs, const Box& box);

struct FolnerStats {
  double volume = 0.0;            // prod_j e^{r a_j dim_j} r^n |Omega|
  double fiber_boundary = 0.0;    // term (1): faces transverse to the fibers, exact integral
  double fiber_boundary_bound = 0.0;  // the proof's bound for term (1)
  double base_boundary = 0.0;     // term (2): prod_j e^{r a_j dim_j} r^{n-1} |dOmega|
  double shell_fraction = 0.0;    // eps_shell (term (1) + term (2)) / volume
};

FolnerStats folner_stats(const RootSystem& rs, const Omega& omega, double r, double eps_shell);

struct MonteCarloVolume {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  std::size_t samples = 0;
};

// Hit-or-miss sampling of the left translate shift * box over its bounding region; the
// membership test pulls each sample back by shift^{-1}.
MonteCarloVolume monte_carlo_volume(const RootSystem& rs, const Box& box, std::size_t samples, std::uint64_t seed,
                                    const std::optional<GroupPoint>& shift = {});

enum class TileCopies {
  kLeftTranslate,  // (0, tau) B(rho Omega): fibers rescaled by e^{alpha(tau)}
  kUnscaled,       // every copy keeps the fiber sides of B(rho Omega)
};

struct TileCell {
  Omega omega;             // Omega_j, an integer translate of rho Omega
  Vec fiber_side;          // per root
  Vec count;               // translates per fiber coordinate, per root
  double tiles = 0.0;      // prod_j count_j^{dim_j}
  double tile_volume = 0.0;
};

struct Tiling {
  double rho = 1.0;
  TileCopies copies = TileCopies::kLeftTranslate;
  Box box;
  std::vector<TileCell> cells;
  double tile_count = 0.0;
  double tiles_volume = 0.0;
  double box_volume = 0.0;
  double leftover_volume = 0.0;
  double leftover_fraction = 0.0;
  double leftover_bound = 0.0;  // shell fraction of Omega at the tile size
};

Tiling tile_box(const RootSystem& rs, const Box& box, double rho, TileCopies copies = TileCopies::kLeftTranslate);
// The tile in `cell` with fiber translate indices `index` (one Vec per root block).
Box tile_at(const RootSystem& rs, const Tiling& tiling, std::size_t cell, const std::vector<Vec>& index);
// Every tile, when there are at most `limit`; throws PreconditionError otherwise.
std::vector<Box> enumerate_tiles(const RootSystem& rs, const Tiling& tiling, std::size_t limit);

struct GeodesicSample {
  Path path;
  Vec start;      // endpoints on the boundary of Omega
  Vec end;
  Vec direction;  // unit vector from start to end
  std::vector<Vec> base;  // fiber coordinates of the base point
};

struct FamilyOptions {
  std::size_t boundary_grid = 3;   // points per edge of every face, corners included
  double spacing = 1.0;            // A-spacing of the samples
  std::size_t max_chords = 0;      // 0 keeps every chord
};

// Geodesics p (segment in A) with both endpoints on the boundary of Omega on different faces,
// length / diam(Omega) in [1/m, m], and base points on the cell-centred fiber lattice with
// `density` points per fiber coordinate. Parameters are embedded arclength.
std::vector<GeodesicSample> sample_geodesic_family(const RootSystem& rs, const Box& box, double m,
                                                   std::size_t density, const FamilyOptions& opts = {});

enum class PhiKind { kIdentity, kStandard, kTranslate, kFold, kShuffle };

struct PhiSpec {
  PhiKind kind = PhiKind::kIdentity;
  double noise = 0.0;       // per-sample displacement bound in the embedded metric
  std::uint64_t seed = 0;
  Vec shift;                // A translation of the affine part; empty means 0
  Vec fiber_scale;          // per root, positive; empty means 1
  Vec fiber_wiggle;         // per root, |w| < scale; empty means 0
  GroupPoint left;          // translate: left factor
  double fold_period = 8.0; // fold: triangle wave along the first A axis
};

PhiKind parse_phi_kind(const std::string& name);
std::string phi_kind_name(PhiKind kind);

// Noiseless map.
GroupPoint apply_phi(const RootSystem& rs, const PhiSpec& phi, const GroupPoint& p);
// With noise drawn from the substream of (phi.seed, stream).
GroupPoint apply_phi(const RootSystem& rs, const PhiSpec& phi, const GroupPoint& p, std::uint64_t stream);
// Image path reparametrized by embedded arclength; throws PreconditionError if two consecutive
// images coincide.
Path map_path(const RootSystem& rs, const PhiSpec& phi, const Path& path, std::uint64_t stream);

struct IsotonicFit {
  Vec knots;   // sorted distinct inputs
  Vec values;  // nondecreasing fitted outputs, or nonincreasing when decreasing
  bool decreasing = false;
  double eval(double x) const;
};

// Least-squares monotone regression (pool adjacent violators), direction picked by the smaller residual.
IsotonicFit isotonic_fit(const Vec& x, const Vec& y);

struct StandardMapFit {
  bool ok = false;
  std::string reason;
  std::vector<Vec> linear;      // f(t) = linear t + offset, row major
  Vec offset;
  std::vector<std::vector<IsotonicFit>> fiber;  // per root, per coordinate
  double error = 0.0;           // sup over P0 of d(phi(p), (g x f)(p))
  double diameter = 0.0;
  double error_fraction = 0.0;  // error / diameter
};

StandardMapFit standard_map_fit(const RootSystem& rs, const std::vector<GroupPoint>& domain,
                                const std::vector<GroupPoint>& image, double diameter);

struct GoodBoxParams {
  double delta = 0.25;
  double eta = 0.1;
  double eta_tilde = 0.1;
  double m = 4.0;
  double n_bound = 16.0;
  std::optional<double> rho;     // tile scale; defaults to the family efficiency scale
  double eps = 0.01;
  std::optional<double> wall_slope;  // defaults to 3 / (delta d(zeta(0), zeta(L)))
  double c_add = 0.0;            // additive constant of the linear neighborhood
  double eta_hat = 0.25;
  double l0 = 8.0;
  std::size_t density = 3;
  std::size_t boundary_grid = 3;
  double spacing = 4.0;
  std::size_t tiles_per_cell = 4;
  std::size_t max_geodesics = 48;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct GeodesicVerdict {
  bool good = false;
  std::string reason;  // failed inequality, empty when good
  double deviation = 0.0;
};

struct TileReport {
  std::size_t id = 0;
  std::size_t cell = 0;
  Box box;
  std::size_t geodesics = 0;
  double good_fraction = 0.0;
  bool good = false;
  std::optional<StandardMapFit> fit;
};

struct StageReport {
  std::string name;
  bool ok = false;
  std::string detail;
  std::optional<double> rho;
};

struct BoxReport {
  double rho = 1.0;
  std::string scale_source;
  std::vector<StageReport> stages;
  std::vector<TileReport> tiles;
  std::vector<std::size_t> good_tiles;
  double good_tile_fraction = 0.0;
  double bad_geodesic_fraction = 0.0;   // theta analogue
  double bad_tile_fraction = 0.0;       // varkappa analogue
  double threshold = 0.0;               // 1 - sqrt(1/N)
  double max_fit_fraction = 0.0;        // over good tiles with a fit
  std::vector<std::pair<std::string, std::size_t>> failures;  // reason counts
};

// Good when the image admits a geodesic approximation and lies in the eta-linear + c_add
// neighborhood of the approximating segment, whose angle to every root kernel is at least
// asin(eta_tilde).
GeodesicVerdict classify_image(const RootSystem& rs_prime, const Path& image, const GoodBoxParams& p);

BoxReport good_box_experiment(const RootSystem& rs, const RootSystem& rs_prime, const PhiSpec& phi,
                              const Omega& omega, const GoodBoxParams& p);

}  // namespace coarse
