#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coarse/boxes.hpp"
#include "coarse/combinatorics.hpp"
#include "coarse/errors.hpp"
#include "coarse/group_model.hpp"
#include "coarse/metric_embed.hpp"
#include "coarse/monotonicity.hpp"
#include "coarse/parallel.hpp"
#include "coarse/paths.hpp"
#include "coarse/quadrilaterals.hpp"
#include "json_io.hpp"

namespace {

using namespace coarse;
using io::json;

constexpr const char* kVersion = "0.1.0";

struct Options {
  std::string group, group_prime, path, image, out, csv, config, convention = "join";
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;

  // dist / subdivide
  std::optional<std::size_t> i, j;
  double r = 1.0;
  bool base = false;
  std::optional<double> rtilde;

  // scales
  double eps = 1e-4, n_bound = 4.0, l_stop = 1.0, kappa = 1.0, delta = 0.5, l_a = 1.0;
  std::optional<double> hbar;
  bool desk_hbar = false;
  double l_s = 1.0, m_factor = 10.0;

  // boxes
  std::string omega = "-1:1", r_list = "8,16,32", copies = "left_translate";
  double eps_shell = 1.0, rho = 0.5, m = 4.0, spacing = 1.0;
  std::size_t mc_samples = 0, density = 3, grid = 3, max_chords = 0;

  // quad
  std::string quad_in, emit, v = "1";
  double t = 3.0, x = 1.0, y = 1.0, eta = 0.1;
  std::size_t words = 0;

  // lemmas
  std::string suite = "mixing";
  std::size_t trials = 100000;

  // fitmap
  std::string phi;
};

class Output {
 public:
  Output(std::string command, json config) : command_(std::move(command)), config_(std::move(config)) {}

  json finish(json body) const {
    body["command"] = command_;
    body["version"] = kVersion;
    body["config"] = config_;
    body["config_hash"] = io::hex64(io::fnv1a(config_.dump()));
    return body;
  }

 private:
  std::string command_;
  json config_;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

struct Csv {
  std::string text;
  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) text += (k ? "," : "") + cells[k];
    text += "\n";
  }
};

// Inputs enter the config hash by content.
struct Inputs {
  json hashes = json::object();
  std::string read(const std::string& name, const std::string& path) {
    std::string text = io::read_file(path);
    hashes[name] = io::hex64(io::fnv1a(text));
    return text;
  }
};

DistanceConvention parse_convention(const std::string& name) {
  if (name == "join") return DistanceConvention::kJoin;
  if (name == "literal") return DistanceConvention::kLiteral;
  throw ConfigError("unknown convention '" + name + "' (join, literal)");
}

RootSystem load_group(Inputs& in, const std::string& name, const std::string& path, const std::string& convention) {
  if (path.empty()) throw ConfigError("--" + name + " is required");
  const auto spec = io::group_spec_from_json(io::parse_json(in.read(name, path), path));
  return make_root_system(spec, parse_convention(convention));
}

Path load_path(Inputs& in, const RootSystem& rs, const std::string& name, const std::string& path, double kappa) {
  if (path.empty()) throw ConfigError("--" + name + " is required");
  Path p = io::path_from_jsonl(rs, in.read(name, path));
  p.kappa = kappa;
  return p;
}

std::uint64_t require_seed(const Options& o, const std::string& why) {
  if (!o.seed) throw ConfigError("--seed is required for " + why);
  return *o.seed;
}

json validate_cmd(const Options& o, Inputs& in, Csv&, int& code) {
  if (o.group.empty()) throw ConfigError("--group is required");
  const auto spec = io::group_spec_from_json(io::parse_json(in.read("group", o.group), o.group));
  const auto res = validate_root_system(spec, parse_convention(o.convention));
  json diags = json::array();
  for (const auto& d : res.diagnostics) {
    json dj = {{"condition", d.condition}, {"message", d.message}};
    dj["root_index"] = d.root_index ? json(*d.root_index) : json(nullptr);
    diags.push_back(dj);
  }
  json body = {{"valid", res.ok()}, {"diagnostics", diags}, {"dim_a", spec.dim_a}, {"roots", spec.roots.size()}};
  if (res.ok()) {
    body["diagonal"] = res.system->diagonal();
    json classes = json::array();
    for (const auto& c : root_classes(*res.system)) classes.push_back(c.members);
    body["root_classes"] = classes;
  } else {
    code = 1;
  }
  return body;
}

json dist_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const auto path = load_path(in, rs, "path", o.path, o.kappa);
  const std::size_t a = o.i.value_or(0), b = o.j.value_or(path.size() - 1);
  if (a >= path.size() || b >= path.size()) throw ConfigError("sample index out of range");
  const auto& p = path.samples[a];
  const auto& q = path.samples[b];
  json roots = json::array();
  for (std::size_t k = 0; k < rs.size(); ++k)
    roots.push_back(weight_distance(project_to_weight(rs, p, k), project_to_weight(rs, q, k), rs.metric(k),
                                    rs.convention()));
  csv.row({"index", "s", "step_distance", "distance_from_start"});
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double step = k ? embedded_distance(rs, path.samples[k - 1], path.samples[k]) : 0.0;
    csv.row({std::to_string(k), csv_number(path.params[k]), csv_number(step),
             csv_number(embedded_distance(rs, path.samples[0], path.samples[k]))});
  }
  return {{"i", a},
          {"j", b},
          {"distance", embedded_distance(rs, p, q)},
          {"base_distance", distance(p.t, q.t)},
          {"root_distances", roots}};
}

json project_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const auto path = load_path(in, rs, "path", o.path, o.kappa);
  json samples = json::array();
  std::vector<std::string> header{"s"};
  for (std::size_t d = 0; d < rs.dim_a(); ++d) header.push_back("t" + std::to_string(d));
  for (std::size_t k = 0; k < rs.size(); ++k) header.push_back("height" + std::to_string(k));
  csv.row(header);
  for (std::size_t n = 0; n < path.size(); ++n) {
    json weights = json::array();
    std::vector<std::string> cells{csv_number(path.params[n])};
    const Vec base = project_to_base(path.samples[n]);
    for (double c : base) cells.push_back(csv_number(c));
    for (std::size_t k = 0; k < rs.size(); ++k) {
      const auto w = project_to_weight(rs, path.samples[n], k);
      weights.push_back({{"x", w.x}, {"t", w.t}});
      cells.push_back(csv_number(w.t));
    }
    csv.row(cells);
    samples.push_back({{"s", path.params[n]}, {"base", base}, {"weights", weights}});
  }
  return {{"samples", samples}};
}

json subdivide_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const auto path = load_path(in, rs, "path", o.path, o.kappa);
  const auto base = base_curve(path);
  const Subdivision s = o.base ? subdivide_base(base, o.r) : subdivide(rs, path, o.r);
  csv.row({"breakpoint", "sample", "s"});
  for (std::size_t k = 0; k < s.breakpoints.size(); ++k)
    csv.row({std::to_string(k), std::to_string(s.breakpoints[k]), csv_number(path.params[s.breakpoints[k]])});
  json body = {{"metric", o.base ? "base" : "embedded"},
               {"r", o.r},
               {"breakpoints", s.breakpoints},
               {"gap", s.gap},
               {"max_overshoot", s.max_overshoot},
               {"chord_hausdorff", chord_hausdorff(base)}};
  if (o.base) body["chord_sum"] = chord_sum(base, s);
  if (o.rtilde) body["efficient"] = o.base ? is_efficient(base, o.eps, *o.rtilde) : is_efficient(rs, path, o.eps, *o.rtilde);
  return body;
}

std::optional<double> chosen_hbar(const Options& o) {
  if (o.desk_hbar) return desk_hbar(o.kappa);
  return o.hbar;
}

json eff_scale_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const auto path = load_path(in, rs, "path", o.path, o.kappa);
  EfficiencyParams p;
  p.eps = o.eps;
  p.n_bound = o.n_bound;
  p.l_stop = o.l_stop;
  p.hbar = chosen_hbar(o);
  const auto rep = find_efficiency_scale(rs, path, p);
  csv.row({"index", "rho", "delta"});
  for (std::size_t k = 0; k < rep.rhos.size(); ++k)
    csv.row({std::to_string(k), csv_number(rep.rhos[k]), csv_number(rep.deltas[k])});
  return {{"accepted", rep.accepted},
          {"index", rep.index},
          {"rho_j", rep.rho},
          {"rhos", rep.rhos},
          {"deltas", rep.deltas},
          {"length", rep.length},
          {"required_length", rep.required_length},
          {"hbar", p.hbar ? *p.hbar : default_hbar(rs, o.kappa)},
          {"reason", rep.reason}};
}

json mono_scale_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const auto path = load_path(in, rs, "path", o.path, o.kappa);
  MonotoneScaleParams p;
  p.delta = o.delta;
  p.eps = o.eps;
  p.n_bound = o.n_bound;
  p.l_a = o.l_a;
  p.hbar = chosen_hbar(o);
  const auto rep = find_monotone_scale(rs, path, p);
  const auto& prof = rep.profile;
  csv.row({"index", "length", "flat", "natural", "cells", "efficient_cells"});
  for (std::size_t k = 0; k < prof.lengths.size(); ++k)
    csv.row({std::to_string(k), csv_number(prof.lengths[k]), csv_number(prof.flats[k]), csv_number(prof.naturals[k]),
             std::to_string(prof.cells[k]), std::to_string(prof.efficient_cells[k])});
  const double hbar = p.hbar ? *p.hbar : default_hbar(rs, o.kappa);
  return {{"accepted", rep.accepted},
          {"index", rep.index},
          {"rho", rep.rho},
          {"rho_next", rep.rho_next},
          {"lengths", prof.lengths},
          {"flats", prof.flats},
          {"naturals", prof.naturals},
          {"budget", monotone_scale_budget(p, o.kappa, path.length())},
          {"demand", monotone_scale_demand(p, o.kappa, hbar)},
          {"reason", rep.reason}};
}

json uniform_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const auto path = load_path(in, rs, "path", o.path, o.kappa);
  const auto rep = uniform_points(rs, path, o.l_s, o.m_factor, o.delta);
  csv.row({"point", "sample", "bad_cell", "max_ratio"});
  for (std::size_t k = 0; k < rep.breakpoints.size(); ++k)
    csv.row({std::to_string(k), std::to_string(rep.breakpoints[k]),
             k < rep.bad_cells.size() ? std::to_string(static_cast<int>(rep.bad_cells[k])) : "",
             k < rep.max_ratio.size() ? csv_number(rep.max_ratio[k]) : ""});
  std::vector<int> bad(rep.bad_cells.begin(), rep.bad_cells.end());
  return {{"breakpoints", rep.breakpoints},
          {"bad_cells", bad},
          {"bad_fraction", rep.bad_fraction},
          {"uniform", rep.uniform},
          {"non_uniform_fraction", rep.non_uniform_fraction},
          {"max_ratio", rep.max_ratio},
          {"bound", rep.bound},
          {"holds", rep.non_uniform_fraction <= rep.bound}};
}

json folner_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const Omega omega = io::parse_omega(o.omega, rs.dim_a());
  const Vec rs_list = io::parse_vec(o.r_list);
  const std::uint64_t seed = o.mc_samples ? require_seed(o, "Monte Carlo volumes") : 0;
  json rows = json::array();
  csv.row({"r", "volume", "shell_fraction", "mc_estimate", "mc_std_error"});
  for (std::size_t k = 0; k < rs_list.size(); ++k) {
    const double r = rs_list[k];
    const auto st = folner_stats(rs, omega, r, o.eps_shell);
    json row = io::to_json(st);
    row["r"] = r;
    std::string est, err;
    if (o.mc_samples) {
      const auto mc = monte_carlo_volume(rs, build_box(rs, scale_omega(omega, r)), o.mc_samples, splitmix64(seed + k));
      row["monte_carlo"] = {{"estimate", mc.estimate},
                            {"std_error", mc.std_error},
                            {"hits", mc.hits},
                            {"samples", mc.samples},
                            {"relative_error", std::abs(mc.estimate - st.volume) / st.volume}};
      est = csv_number(mc.estimate);
      err = csv_number(mc.std_error);
    }
    csv.row({csv_number(r), csv_number(st.volume), csv_number(st.shell_fraction), est, err});
    rows.push_back(row);
  }
  return {{"omega", io::to_json(omega)}, {"stats", rows}};
}

json tile_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const Omega omega = io::parse_omega(o.omega, rs.dim_a());
  TileCopies copies;
  if (o.copies == "left_translate") copies = TileCopies::kLeftTranslate;
  else if (o.copies == "unscaled") copies = TileCopies::kUnscaled;
  else throw ConfigError("unknown --copies '" + o.copies + "' (left_translate, unscaled)");
  const auto t = tile_box(rs, build_box(rs, omega), o.rho, copies);
  csv.row({"cell", "tiles", "tile_volume"});
  for (std::size_t k = 0; k < t.cells.size(); ++k)
    csv.row({std::to_string(k), csv_number(t.cells[k].tiles), csv_number(t.cells[k].tile_volume)});
  return io::to_json(t);
}

json geodesics_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const Omega omega = io::parse_omega(o.omega, rs.dim_a());
  FamilyOptions fo;
  fo.boundary_grid = o.grid;
  fo.spacing = o.spacing;
  fo.max_chords = o.max_chords;
  const auto family = sample_geodesic_family(rs, build_box(rs, omega), o.m, o.density, fo);
  json members = json::array();
  csv.row({"id", "samples", "length"});
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto& g = family[k];
    json base = json::object();
    for (std::size_t b = 0; b < g.base.size(); ++b) base[std::to_string(b)] = g.base[b];
    members.push_back({{"start", g.start},
                       {"end", g.end},
                       {"direction", g.direction},
                       {"base", base},
                       {"samples", g.path.size()},
                       {"length", g.path.length()}});
    csv.row({std::to_string(k), std::to_string(g.path.size()), csv_number(g.path.length())});
  }
  return {{"count", family.size()}, {"geodesics", members}};
}

std::vector<Vec> blocks_in(const RootSystem& rs, const Vec& v, int sign, double value) {
  const auto signs = eigen_signs(rs, v);
  std::vector<Vec> out;
  for (std::size_t k = 0; k < rs.size(); ++k)
    out.emplace_back(static_cast<std::size_t>(rs.root(k).dim_v), signs[k] == sign ? value : 0.0);
  return out;
}

json quad_report(const RootSystem& rs, const Quadrilateral& q, double eta) {
  return {{"verdict", io::to_json(check_quadrilateral(rs, q, eta))},
          {"orientation", io::to_json(orientation_pattern(q))},
          {"structure", io::to_json(structure_report(rs, q, eta))},
          {"quadrilateral", io::quad_to_json(q)}};
}

json quad_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const Vec v = io::parse_vec(o.v);
  if (!o.quad_in.empty()) {
    const auto q = io::quad_from_json(rs, io::parse_json(in.read("in", o.quad_in), o.quad_in));
    json body = quad_report(rs, q, o.eta);
    body["mode"] = "input";
    if (!o.emit.empty()) write_text(o.emit, io::quad_to_json(q).dump(2) + "\n");
    return body;
  }
  if (o.words) {
    const std::uint64_t seed = require_seed(o, "random words");
    struct Row {
      WordReport w;
      bool quad_ok = false;
      bool structure_ok = false;
    };
    const auto rows = parallel_map(o.words, o.jobs, [&](std::size_t n) {
      auto rng = substream(seed, n);
      const auto word = random_trivial_word(rs, v, o.eta, rng);
      Row row{word_residual(rs, v, word, o.eta)};
      const auto q = quadrilateral_from_word(rs, v, word);
      row.quad_ok = check_quadrilateral(rs, q, o.eta).ok();
      const auto st = structure_report(rs, q, o.eta);
      row.structure_ok = st.spread_ok && st.cosets_ok;
      return row;
    });
    std::size_t trivial = 0, spread = 0, exact_heights = 0, quads = 0, structures = 0;
    double worst = 0.0;
    csv.row({"word", "residual", "height_gap", "spread_holds", "quad_ok"});
    for (std::size_t n = 0; n < rows.size(); ++n) {
      const auto& w = rows[n].w;
      trivial += w.trivial;
      spread += w.trivial && w.spread_holds;
      exact_heights += w.height_gap == 0.0;
      quads += rows[n].quad_ok;
      structures += rows[n].structure_ok;
      worst = std::max(worst, w.residual);
      csv.row({std::to_string(n), csv_number(w.residual), csv_number(w.height_gap),
               std::to_string(static_cast<int>(w.spread_holds)), std::to_string(static_cast<int>(rows[n].quad_ok))});
    }
    return {{"mode", "words"},
            {"words", o.words},
            {"trivial", trivial},
            {"spread_holds", spread},
            {"exact_heights", exact_heights},
            {"quadrilaterals_ok", quads},
            {"structures_ok", structures},
            {"max_residual", worst},
            {"seed", seed}};
  }
  const auto q = build_commutator_quadrilateral(rs, v, blocks_in(rs, v, 1, o.x), blocks_in(rs, v, -1, o.y), o.t);
  if (!o.emit.empty()) write_text(o.emit, io::quad_to_json(q).dump(2) + "\n");
  json body = quad_report(rs, q, o.eta);
  body["mode"] = "commutator";
  return body;
}

json lemmas_cmd(const Options& o, Inputs&, Csv& csv, int&) {
  const auto rep = run_lemma_suite(o.suite, o.trials, require_seed(o, "lemma suites"), o.jobs);
  csv.row({"suite", "trials", "counterexamples", "oracle_mismatches", "vacuous"});
  csv.row({rep.suite, std::to_string(rep.trials), std::to_string(rep.counterexamples),
           std::to_string(rep.oracle_mismatches), std::to_string(rep.vacuous)});
  return io::to_json(rep);
}

double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j[key].get<double>();
}

Vec get_vec(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  if (!j[key].is_array()) throw ConfigError(std::string(key) + " must be an array");
  Vec out;
  for (const auto& e : j[key]) {
    if (!e.is_number()) throw ConfigError(std::string(key) + " must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// {"kind", "params": {noise, shift, fiber_scale, fiber_wiggle, left, fold_period}, "seed"}
PhiSpec phi_from_json(const RootSystem& rs, const json& j) {
  if (!j.is_object()) throw ConfigError("phi must be an object");
  PhiSpec phi;
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw ConfigError("phi.kind must be a string");
    try {
      phi.kind = parse_phi_kind(j["kind"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("phi.seed must be a nonnegative integer");
    phi.seed = j["seed"].get<std::uint64_t>();
  }
  const json params = j.value("params", json::object());
  phi.noise = get_number(params, "noise", 0.0);
  phi.shift = get_vec(params, "shift");
  phi.fiber_scale = get_vec(params, "fiber_scale");
  phi.fiber_wiggle = get_vec(params, "fiber_wiggle");
  phi.fold_period = get_number(params, "fold_period", phi.fold_period);
  phi.left = params.contains("left") ? io::point_from_json(rs, params["left"]) : identity_point(rs);
  return phi;
}

Omega omega_from_json(const json& j, std::size_t dim) {
  if (!j.is_array()) throw ConfigError("omega must be an array of [lo, hi] pairs");
  Omega out;
  for (const auto& iv : j) {
    if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
      throw ConfigError("omega entries must be [lo, hi]");
    out.push_back(Interval{iv[0].get<double>(), iv[1].get<double>()});
  }
  if (out.size() != dim) throw ConfigError("omega dimension does not match dim A");
  return out;
}

RootSystem group_from_config(Inputs& in, const json& j, const std::filesystem::path& dir, const char* key,
                             const std::string& convention) {
  if (!j.contains(key)) throw ConfigError(std::string("config needs ") + key);
  const json& g = j[key];
  if (g.is_object()) return make_root_system(io::group_spec_from_json(g), parse_convention(convention));
  if (!g.is_string()) throw ConfigError(std::string(key) + " must be a file name or a group object");
  const auto file = (dir / g.get<std::string>()).string();
  return make_root_system(io::group_spec_from_json(io::parse_json(in.read(key, file), file)),
                          parse_convention(convention));
}

json goodbox_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  if (o.config.empty()) throw ConfigError("--config is required");
  const json cfg = io::parse_json(in.read("config", o.config), o.config);
  if (!cfg.is_object()) throw ConfigError("config must be an object");
  const auto dir = std::filesystem::path(o.config).parent_path();
  const auto rs = group_from_config(in, cfg, dir, "group", o.convention);
  const auto rs_prime = cfg.contains("group_prime") ? group_from_config(in, cfg, dir, "group_prime", o.convention) : rs;
  const PhiSpec phi = phi_from_json(rs, cfg.value("phi", json::object()));
  if (!cfg.contains("omega")) throw ConfigError("config needs omega");
  const Omega omega = omega_from_json(cfg["omega"], rs.dim_a());
  GoodBoxParams p;
  p.delta = get_number(cfg, "delta", p.delta);
  p.eta = get_number(cfg, "eta", p.eta);
  p.eta_tilde = get_number(cfg, "eta_tilde", p.eta_tilde);
  p.m = get_number(cfg, "m", p.m);
  p.n_bound = get_number(cfg, "N", p.n_bound);
  if (cfg.contains("rho")) p.rho = get_number(cfg, "rho", 0.0);
  p.eps = get_number(cfg, "eps", p.eps);
  if (cfg.contains("wall_slope")) p.wall_slope = get_number(cfg, "wall_slope", 0.0);
  p.c_add = get_number(cfg, "c_add", p.c_add);
  p.eta_hat = get_number(cfg, "eta_hat", p.eta_hat);
  p.l0 = get_number(cfg, "L0", p.l0);
  p.density = static_cast<std::size_t>(get_number(cfg, "density", static_cast<double>(p.density)));
  p.boundary_grid = static_cast<std::size_t>(get_number(cfg, "boundary_grid", static_cast<double>(p.boundary_grid)));
  p.spacing = get_number(cfg, "spacing", p.spacing);
  p.tiles_per_cell = static_cast<std::size_t>(get_number(cfg, "tiles_per_cell", static_cast<double>(p.tiles_per_cell)));
  p.max_geodesics = static_cast<std::size_t>(get_number(cfg, "max_geodesics", static_cast<double>(p.max_geodesics)));
  if (cfg.contains("seed")) {
    if (!cfg["seed"].is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
    p.seed = cfg["seed"].get<std::uint64_t>();
  } else {
    p.seed = require_seed(o, "the good-box experiment (config seed or --seed)");
  }
  p.jobs = o.jobs;
  const auto rep = good_box_experiment(rs, rs_prime, phi, omega, p);
  csv.row({"tile_id", "good_fraction", "fit_error"});
  for (const auto& t : rep.tiles)
    csv.row({std::to_string(t.id), csv_number(t.good_fraction), t.fit && t.fit->ok ? csv_number(t.fit->error) : ""});
  json body = io::to_json(rep);
  body["phi"] = phi_kind_name(phi.kind);
  body["seed"] = p.seed;
  return body;
}

json fitmap_cmd(const Options& o, Inputs& in, Csv& csv, int&) {
  const auto rs = load_group(in, "group", o.group, o.convention);
  const auto rs_prime = o.group_prime.empty() ? rs : load_group(in, "group_prime", o.group_prime, o.convention);
  const auto domain = load_path(in, rs, "path", o.path, o.kappa);
  std::vector<GroupPoint> image;
  if (!o.image.empty()) {
    image = load_path(in, rs_prime, "image", o.image, o.kappa).samples;
  } else if (!o.phi.empty()) {
    const PhiSpec phi = phi_from_json(rs, io::parse_json(in.read("phi", o.phi), o.phi));
    for (std::size_t k = 0; k < domain.size(); ++k) image.push_back(apply_phi(rs, phi, domain.samples[k], k));
  } else {
    throw ConfigError("fitmap needs --image or --phi");
  }
  if (image.size() != domain.size()) throw ConfigError("image and domain sample counts differ");
  double diam = 0.0;
  for (std::size_t a = 0; a < domain.size(); ++a)
    for (std::size_t b = a + 1; b < domain.size(); ++b)
      diam = std::max(diam, embedded_distance(rs, domain.samples[a], domain.samples[b]));
  const auto fit = standard_map_fit(rs_prime, domain.samples, image, diam);
  csv.row({"sample", "s"});
  for (std::size_t k = 0; k < domain.size(); ++k) csv.row({std::to_string(k), csv_number(domain.params[k])});
  return io::to_json(fit);
}

using Handler = std::function<json(const Options&, Inputs&, Csv&, int&)>;

void print_error(const std::string& kind, const std::string& message, const std::string& inequality = {}) {
  json err = {{"error", kind}, {"message", message}, {"version", kVersion}};
  if (!inequality.empty()) err["inequality"] = inequality;
  std::cerr << err.dump(2) << "\n";
}

// Every option value of the subcommand except outputs and the worker count.
json collect_config(const CLI::App& sub, const Inputs& in) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt == sub.get_help_ptr()) continue;
    const std::string name = opt->get_name();
    if (name.empty() || name == "--out" || name == "--csv" || name == "--jobs" || name == "--emit")
      continue;
    const auto& res = opt->results();
    if (!res.empty()) {
      cfg[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else if (opt->get_type_size() == 0) {
      cfg[name] = false;
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  cfg["inputs"] = in.hashes;
  return cfg;
}

int run_command(int argc, char** argv) {
  CLI::App app{"Coarse geometry toolkit for abelian-by-abelian solvable groups"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->always_capture_default();
  Options o;
  std::map<const CLI::App*, Handler> handlers;

  auto common = [&](CLI::App* sub, bool group, bool path) {
    if (group) sub->add_option("--group", o.group, "group spec JSON");
    if (path) sub->add_option("--path", o.path, "path JSONL");
    sub->add_option("--out", o.out, "JSON report (stdout when absent)");
    sub->add_option("--csv", o.csv, "CSV table");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    if (group) sub->add_option("--convention", o.convention, "distance convention: join or literal");
    if (path) sub->add_option("--kappa", o.kappa, "quasi-geodesic constant of the path");
  };
  auto hbar_opts = [&](CLI::App* sub) {
    sub->add_option("--hbar", o.hbar, "confinement constant");
    sub->add_flag("--desk-hbar", o.desk_hbar, "use the constant making the length ratio bound one");
  };

  auto* validate = app.add_subcommand("validate", "validate a group spec");
  common(validate, true, false);
  handlers[validate] = validate_cmd;

  auto* dist = app.add_subcommand("dist", "distance between two path samples");
  common(dist, true, true);
  dist->add_option("--i", o.i, "first sample (default 0)");
  dist->add_option("--j", o.j, "second sample (default last)");
  handlers[dist] = dist_cmd;

  auto* project = app.add_subcommand("project", "base and weight-space projections of a path");
  common(project, true, true);
  handlers[project] = project_cmd;

  auto* subdiv = app.add_subcommand("subdivide", "first-crossing subdivision of a path");
  common(subdiv, true, true);
  subdiv->add_option("--r", o.r, "cell size")->check(CLI::PositiveNumber);
  subdiv->add_flag("--base", o.base, "subdivide the A-projection");
  subdiv->add_option("--eps", o.eps, "efficiency tolerance");
  subdiv->add_option("--rtilde", o.rtilde, "relative scale of the efficiency test");
  handlers[subdiv] = subdivide_cmd;

  auto* eff = app.add_subcommand("eff-scale", "efficiency scale of a path");
  common(eff, true, true);
  eff->add_option("--eps", o.eps, "efficiency tolerance");
  eff->add_option("--N", o.n_bound, "inefficiency bound 1/N");
  eff->add_option("--Lstop", o.l_stop, "smallest cell length");
  hbar_opts(eff);
  handlers[eff] = eff_scale_cmd;

  auto* mono = app.add_subcommand("mono-scale", "monotone scale pair of a path");
  common(mono, true, true);
  mono->add_option("--delta", o.delta, "monotonicity ratio");
  mono->add_option("--eps", o.eps, "efficiency tolerance");
  mono->add_option("--N", o.n_bound, "score bound 1/N");
  mono->add_option("--La", o.l_a, "smallest length");
  hbar_opts(mono);
  handlers[mono] = mono_scale_cmd;

  auto* uni = app.add_subcommand("uniform", "uniform points of a path");
  common(uni, true, true);
  uni->add_option("--Ls", o.l_s, "cell length")->check(CLI::PositiveNumber);
  uni->add_option("--M", o.m_factor, "uniformity factor")->check(CLI::PositiveNumber);
  uni->add_option("--delta", o.delta, "monotonicity ratio");
  handlers[uni] = uniform_cmd;

  auto* folner = app.add_subcommand("folner", "volume and boundary statistics of boxes B(r Omega)");
  common(folner, true, false);
  folner->add_option("--omega", o.omega, "intervals lo:hi,lo:hi (one entry repeats)");
  folner->add_option("--r", o.r_list, "comma-separated scales");
  folner->add_option("--eps-shell", o.eps_shell, "shell width");
  folner->add_option("--mc-samples", o.mc_samples, "Monte Carlo samples per scale (0 skips)");
  handlers[folner] = folner_cmd;

  auto* tile = app.add_subcommand("tile", "tile a box by copies at scale rho");
  common(tile, true, false);
  tile->add_option("--omega", o.omega, "intervals lo:hi,lo:hi (one entry repeats)");
  tile->add_option("--rho", o.rho, "tile scale")->check(CLI::PositiveNumber);
  tile->add_option("--copies", o.copies, "left_translate or unscaled");
  handlers[tile] = tile_cmd;

  auto* geo = app.add_subcommand("geodesics", "geodesic family with endpoints on the boundary of Omega");
  common(geo, true, false);
  geo->add_option("--omega", o.omega, "intervals lo:hi,lo:hi (one entry repeats)");
  geo->add_option("--m", o.m, "length ratio bound")->check(CLI::PositiveNumber);
  geo->add_option("--density", o.density, "base points per fiber coordinate");
  geo->add_option("--grid", o.grid, "boundary points per face edge");
  geo->add_option("--spacing", o.spacing, "A-spacing of samples")->check(CLI::PositiveNumber);
  geo->add_option("--max-chords", o.max_chords, "chord cap (0 keeps all)");
  handlers[geo] = geodesics_cmd;

  auto* quad = app.add_subcommand("quad", "quadrilateral checks: commutator, input file or random words");
  common(quad, true, false);
  quad->add_option("--in", o.quad_in, "quadrilateral JSON to check");
  quad->add_option("--emit", o.emit, "write the quadrilateral JSON");
  quad->add_option("--v", o.v, "direction in A, comma separated");
  quad->add_option("--t", o.t, "commutator height");
  quad->add_option("--x", o.x, "fiber entry of the expanding element");
  quad->add_option("--y", o.y, "fiber entry of the contracting element");
  quad->add_option("--eta", o.eta, "closeness ratio");
  quad->add_option("--words", o.words, "number of random trivial words");
  handlers[quad] = quad_cmd;

  auto* lemmas = app.add_subcommand("lemmas", "randomized lemma suites");
  common(lemmas, false, false);
  lemmas->add_option("--suite", o.suite, "mixing, triangle or pingpong");
  lemmas->add_option("--trials", o.trials, "instances");
  handlers[lemmas] = lemmas_cmd;

  auto* goodbox = app.add_subcommand("goodbox", "good-box experiment from a JSON config");
  common(goodbox, false, false);
  goodbox->add_option("--config", o.config, "experiment config JSON");
  goodbox->add_option("--convention", o.convention, "distance convention: join or literal");
  handlers[goodbox] = goodbox_cmd;

  auto* fitmap = app.add_subcommand("fitmap", "fit a standard map to a sampled map");
  common(fitmap, true, true);
  fitmap->add_option("--group-prime", o.group_prime, "target group spec (default --group)");
  fitmap->add_option("--image", o.image, "image samples JSONL, one per domain sample");
  fitmap->add_option("--phi", o.phi, "phi JSON {kind, params, seed} applied to the domain");
  handlers[fitmap] = fitmap_cmd;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    Inputs in;
    Csv csv;
    int code = 0;
    json body = handlers.at(sub)(o, in, csv, code);
    const Output out(sub->get_name(), collect_config(*sub, in));
    write_text(o.out, out.finish(std::move(body)).dump(2) + "\n");
    if (!o.csv.empty()) write_text(o.csv, csv.text);
    return code;
  } catch (const DomainError& e) {
    print_error("domain", e.what(), e.inequality());
    return 2;
  } catch (const PreconditionError& e) {
    print_error("precondition", e.what(), e.inequality());
    return 2;
  } catch (const NumericalFailure& e) {
    print_error("numerical", e.what());
    return 3;
  } catch (const UnsupportedOperation& e) {
    print_error("unsupported", e.what());
    return 1;
  } catch (const ConfigError& e) {
    print_error("config", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("config", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run_command(argc, argv); }
