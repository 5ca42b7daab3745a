#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coarse/weight_space.hpp"

namespace coarse {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  // Exact conversion of integer-valued or dyadic doubles; empty otherwise.
  static std::optional<Rational> from_double(double v);
  static std::optional<Rational> parse(const std::string& text);
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

struct Root {
  Vec alpha;                  // coefficients of the functional on A
  int dim_v = 1;              // dimension of the weight space V_alpha
  std::vector<Vec> q_poly;    // ascending coefficients, constant slot must be 0
  std::optional<std::vector<Rational>> exact_alpha;
};

struct RootSystemSpec {
  int dim_a = 0;
  std::vector<Root> roots;
};

struct Diagnostic {
  std::string condition;   // "zero root", "bad polynomial", "degenerate", "non-unimodular", "malformed"
  std::optional<std::size_t> root_index;
  std::string message;
};

class RootSystem;

struct ValidationResult;
ValidationResult validate_root_system(const RootSystemSpec& spec,
                                      DistanceConvention convention = DistanceConvention::kJoin);

class RootSystem {
 public:
  std::size_t dim_a() const noexcept { return dim_a_; }
  std::size_t size() const noexcept { return roots_.size(); }
  const std::vector<Root>& roots() const noexcept { return roots_; }
  const Root& root(std::size_t i) const { return roots_.at(i); }
  const MetricPolynomial& metric(std::size_t i) const { return metrics_.at(i); }
  double eval(std::size_t i, std::span<const double> t) const;
  bool diagonal() const noexcept { return diagonal_; }
  DistanceConvention convention() const noexcept { return convention_; }
  RootSystem with_convention(DistanceConvention c) const;
  const RootSystemSpec& spec() const noexcept { return spec_; }

 private:
  friend ValidationResult validate_root_system(const RootSystemSpec&, DistanceConvention);
  RootSystem() = default;

  RootSystemSpec spec_;
  std::size_t dim_a_ = 0;
  std::vector<Root> roots_;
  std::vector<MetricPolynomial> metrics_;
  bool diagonal_ = true;
  DistanceConvention convention_ = DistanceConvention::kJoin;
};

struct ValidationResult {
  std::optional<RootSystem> system;
  std::vector<Diagnostic> diagnostics;
  bool ok() const noexcept { return system.has_value(); }
};

// Validates and throws ConfigError listing every violation.
RootSystem make_root_system(const RootSystemSpec& spec,
                            DistanceConvention convention = DistanceConvention::kJoin);

RootSystem sol_group();
// dim A = 2 with roots (1,0), (0,1), (-1,-1).
RootSystem rank2_group();

struct GroupPoint {
  std::vector<Vec> x;   // fiber coordinates, one block per root
  Vec t;                // A coordinate
};

GroupPoint identity_point(const RootSystem& rs);
// Throws ConfigError on length mismatch or non-finite entry.
void check_point(const RootSystem& rs, const GroupPoint& p);

struct RootClass {
  std::size_t representative = 0;
  std::vector<std::size_t> members;
};

std::vector<RootClass> root_classes(const RootSystem& rs, double rel_tol = 1e-9);

std::vector<Vec> act(const RootSystem& rs, std::span<const double> t, const std::vector<Vec>& x);
GroupPoint multiply(const RootSystem& rs, const GroupPoint& g, const GroupPoint& h);
GroupPoint inverse(const RootSystem& rs, const GroupPoint& g);

struct Path {
  std::vector<GroupPoint> samples;
  Vec params;
  double kappa = 1.0;
  double c_add = 0.0;
  bool geodesic = false;

  std::size_t size() const noexcept { return samples.size(); }
  double length() const { return params.back() - params.front(); }
};

// Structural checks: >= 2 samples, strictly increasing params, matching coordinates.
void check_path(const RootSystem& rs, const Path& path);

}  // namespace coarse
