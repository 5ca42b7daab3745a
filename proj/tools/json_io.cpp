#include "json_io.hpp"

#include <fstream>
#include <sstream>

#include "coarse/errors.hpp"

namespace coarse::io {

namespace {

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  return j.get<double>();
}

Vec numbers(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vec out;
  for (const auto& e : j) out.push_back(number(e, what));
  return out;
}

json array_of(const auto& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(v);
  return out;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

RootSystemSpec group_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim_a") || !j.contains("roots")) throw ConfigError("group spec needs dim_a and roots");
  RootSystemSpec spec;
  if (!j["dim_a"].is_number_integer()) throw ConfigError("dim_a must be an integer");
  spec.dim_a = j["dim_a"].get<int>();
  if (!j["roots"].is_array()) throw ConfigError("roots must be an array");
  for (const auto& r : j["roots"]) {
    if (!r.is_object() || !r.contains("alpha")) throw ConfigError("every root needs alpha");
    Root root;
    std::vector<Rational> exact;
    bool all_exact = true;
    if (!r["alpha"].is_array()) throw ConfigError("alpha must be an array");
    for (const auto& a : r["alpha"]) {
      if (a.is_string()) {
        const auto q = Rational::parse(a.get<std::string>());
        if (!q) throw ConfigError("malformed rational '" + a.get<std::string>() + "'");
        exact.push_back(*q);
        root.alpha.push_back(q->value());
      } else {
        root.alpha.push_back(number(a, "alpha entry"));
        all_exact = false;
      }
    }
    if (all_exact && !exact.empty()) root.exact_alpha = exact;
    if (r.contains("dim_v")) {
      if (!r["dim_v"].is_number_integer()) throw ConfigError("dim_v must be an integer");
      root.dim_v = r["dim_v"].get<int>();
    }
    if (r.contains("q_poly")) {
      if (!r["q_poly"].is_array()) throw ConfigError("q_poly must be an array of coefficient arrays");
      for (const auto& part : r["q_poly"]) root.q_poly.push_back(numbers(part, "q_poly coefficient"));
    }
    spec.roots.push_back(std::move(root));
  }
  return spec;
}

json group_spec_to_json(const RootSystemSpec& spec) {
  json roots = json::array();
  for (const auto& r : spec.roots) {
    json q = json::array();
    for (const auto& part : r.q_poly) q.push_back(array_of(part));
    roots.push_back({{"alpha", array_of(r.alpha)}, {"dim_v", r.dim_v}, {"q_poly", q}});
  }
  return {{"dim_a", spec.dim_a}, {"roots", roots}};
}

GroupPoint point_from_json(const RootSystem& rs, const json& j) {
  if (!j.is_object() || !j.contains("t")) throw ConfigError("point needs t");
  GroupPoint p = identity_point(rs);
  p.t = numbers(j["t"], "t");
  if (j.contains("x")) {
    if (!j["x"].is_object()) throw ConfigError("x must be an object keyed by root index");
    for (const auto& [key, block] : j["x"].items()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(key, &used);
        if (used != key.size()) throw ConfigError("bad root key");
      } catch (const std::exception&) {
        throw ConfigError("root key '" + key + "' is not an index");
      }
      if (idx >= rs.size()) throw ConfigError("root key '" + key + "' out of range");
      p.x[idx] = numbers(block, "fiber block");
    }
  }
  check_point(rs, p);
  return p;
}

json point_to_json(const GroupPoint& p) {
  json x = json::object();
  for (std::size_t i = 0; i < p.x.size(); ++i) x[std::to_string(i)] = array_of(p.x[i]);
  return {{"t", array_of(p.t)}, {"x", x}};
}

Path path_from_jsonl(const RootSystem& rs, const std::string& text) {
  Path p;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json rec = parse_json(line, "path line " + std::to_string(lineno));
    if (!rec.contains("s")) throw ConfigError("path line " + std::to_string(lineno) + " needs s");
    p.params.push_back(number(rec["s"], "s"));
    p.samples.push_back(point_from_json(rs, rec));
  }
  check_path(rs, p);
  return p;
}

std::string path_to_jsonl(const Path& p) {
  std::string out;
  for (std::size_t k = 0; k < p.size(); ++k) {
    json rec = point_to_json(p.samples[k]);
    rec["s"] = p.params[k];
    out += rec.dump() + "\n";
  }
  return out;
}

Quadrilateral quad_from_json(const RootSystem& rs, const json& j) {
  if (!j.is_object() || !j.contains("direction") || !j.contains("edges") || !j["edges"].is_array() ||
      j["edges"].size() != 4)
    throw ConfigError("quadrilateral needs direction and four edges");
  Quadrilateral q;
  q.direction = numbers(j["direction"], "direction");
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& e = j["edges"][i];
    if (!e.contains("begin") || !e.contains("end")) throw ConfigError("edge needs begin and end");
    q.begin[i] = point_from_json(rs, e["begin"]);
    q.end[i] = point_from_json(rs, e["end"]);
  }
  return q;
}

json quad_to_json(const Quadrilateral& q) {
  json edges = json::array();
  for (std::size_t i = 0; i < 4; ++i) edges.push_back({{"begin", point_to_json(q.begin[i])}, {"end", point_to_json(q.end[i])}});
  return {{"direction", array_of(q.direction)}, {"edges", edges}};
}

json to_json(const QuadVerdict& v) {
  return {{"ok", v.ok()},
          {"direction_ok", v.direction_ok},
          {"floor_ok", v.floor_ok},
          {"closeness_ok", v.closeness_ok},
          {"divergence_ok", v.divergence_ok},
          {"lengths", array_of(v.lengths)},
          {"joints", array_of(v.joints)},
          {"divergences", array_of(v.divergences)},
          {"perimeter", v.perimeter},
          {"failures", array_of(v.failures)}};
}

json to_json(const OrientationPattern& o) {
  return {{"signs", array_of(o.signs)}, {"conformant", o.conformant}, {"pattern", o.text}};
}

json to_json(const WordReport& w) {
  return {{"residual", w.residual},
          {"distance", w.distance},
          {"height_gap", w.height_gap},
          {"trivial", w.trivial},
          {"nondegenerate", w.nondegenerate},
          {"sizes", array_of(w.sizes)},
          {"spread", array_of(w.spread)},
          {"spread_bound", array_of(w.spread_bound)},
          {"spread_holds", w.spread_holds}};
}

json to_json(const StructureReport& s) {
  return {{"spread", s.spread},        {"bound", s.bound},         {"spread_ok", s.spread_ok},
          {"proximity", array_of(s.proximity)}, {"coset", array_of(s.coset)}, {"cosets_ok", s.cosets_ok}};
}

json to_json(const FolnerStats& f) {
  return {{"volume", f.volume},
          {"fiber_boundary", f.fiber_boundary},
          {"fiber_boundary_bound", f.fiber_boundary_bound},
          {"base_boundary", f.base_boundary},
          {"shell_fraction", f.shell_fraction}};
}

json to_json(const Omega& omega) {
  json out = json::array();
  for (const auto& i : omega) out.push_back(json::array({i.lo, i.hi}));
  return out;
}

json to_json(const Tiling& t) {
  json cells = json::array();
  for (const auto& c : t.cells)
    cells.push_back({{"omega", to_json(c.omega)},
                     {"fiber_side", array_of(c.fiber_side)},
                     {"count", array_of(c.count)},
                     {"tiles", c.tiles},
                     {"tile_volume", c.tile_volume}});
  return {{"rho", t.rho},
          {"copies", t.copies == TileCopies::kLeftTranslate ? "left_translate" : "unscaled"},
          {"cells", cells},
          {"tile_count", t.tile_count},
          {"tiles_volume", t.tiles_volume},
          {"box_volume", t.box_volume},
          {"leftover_volume", t.leftover_volume},
          {"leftover_fraction", t.leftover_fraction},
          {"leftover_bound", t.leftover_bound}};
}

json to_json(const StandardMapFit& f) {
  json linear = json::array();
  for (const auto& row : f.linear) linear.push_back(array_of(row));
  return {{"ok", f.ok},
          {"reason", f.reason},
          {"linear", linear},
          {"offset", array_of(f.offset)},
          {"error", f.error},
          {"diameter", f.diameter},
          {"error_fraction", f.error_fraction}};
}

json to_json(const BoxReport& b) {
  json stages = json::array();
  for (const auto& s : b.stages) {
    json st = {{"name", s.name}, {"ok", s.ok}, {"detail", s.detail}};
    st["rho"] = s.rho ? json(*s.rho) : json(nullptr);
    stages.push_back(st);
  }
  json tiles = json::array();
  for (const auto& t : b.tiles) {
    json tj = {{"id", t.id},
               {"cell", t.cell},
               {"omega", to_json(t.box.omega)},
               {"geodesics", t.geodesics},
               {"good_fraction", t.good_fraction},
               {"good", t.good}};
    tj["fit"] = t.fit ? to_json(*t.fit) : json(nullptr);
    tiles.push_back(tj);
  }
  json failures = json::object();
  for (const auto& [reason, count] : b.failures) failures[reason] = count;
  return {{"rho", b.rho},
          {"scale_source", b.scale_source},
          {"stages", stages},
          {"tiles", tiles},
          {"good_tiles", array_of(b.good_tiles)},
          {"good_tile_fraction", b.good_tile_fraction},
          {"bad_geodesic_fraction", b.bad_geodesic_fraction},
          {"bad_tile_fraction", b.bad_tile_fraction},
          {"threshold", b.threshold},
          {"max_fit_fraction", b.max_fit_fraction},
          {"failures", failures}};
}

json to_json(const SuiteReport& s) {
  return {{"suite", s.suite},
          {"trials", s.trials},
          {"counterexamples", s.counterexamples},
          {"oracle_mismatches", s.oracle_mismatches},
          {"angle_violations", s.angle_violations},
          {"vacuous", s.vacuous},
          {"worst_margin", s.worst_margin},
          {"seed", s.seed}};
}

Vec parse_vec(const std::string& text) {
  Vec out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw ConfigError("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("malformed number list '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

Omega parse_omega(const std::string& text, std::size_t dim) {
  Omega out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("interval '" + item + "' must read lo:hi");
    const Vec lo = parse_vec(item.substr(0, colon)), hi = parse_vec(item.substr(colon + 1));
    out.push_back(Interval{lo[0], hi[0]});
  }
  if (out.size() == 1 && dim > 1) out.assign(dim, out.front());
  if (out.size() != dim) throw ConfigError("omega has " + std::to_string(out.size()) + " intervals, dim A is " +
                                           std::to_string(dim));
  return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 15];
    h >>= 4;
  }
  return out;
}

}  // namespace coarse::io
