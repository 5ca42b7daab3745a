#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "coarse/boxes.hpp"
#include "coarse/combinatorics.hpp"
#include "coarse/group_model.hpp"
#include "coarse/quadrilaterals.hpp"

namespace coarse::io {

using json = nlohmann::json;

std::string read_file(const std::string& path);
// Parse failures become ConfigError.
json parse_json(const std::string& text, const std::string& origin);

// {"dim_a", "roots": [{"alpha", "dim_v", "q_poly"}]}; alpha entries are numbers or "p/q" strings.
RootSystemSpec group_spec_from_json(const json& j);
json group_spec_to_json(const RootSystemSpec& spec);

// {"x": {"<root>": [...]}, "t": [...]}; missing root blocks are zero.
GroupPoint point_from_json(const RootSystem& rs, const json& j);
json point_to_json(const GroupPoint& p);

// One {"s", "x", "t"} record per line; blank lines are skipped.
Path path_from_jsonl(const RootSystem& rs, const std::string& text);
std::string path_to_jsonl(const Path& p);

Quadrilateral quad_from_json(const RootSystem& rs, const json& j);
json quad_to_json(const Quadrilateral& q);

json to_json(const QuadVerdict& v);
json to_json(const OrientationPattern& o);
json to_json(const WordReport& w);
json to_json(const StructureReport& s);
json to_json(const FolnerStats& f);
json to_json(const Tiling& t);
json to_json(const StandardMapFit& f);
json to_json(const BoxReport& b);
json to_json(const SuiteReport& s);
json to_json(const Omega& omega);

// "lo:hi,lo:hi" or a single "lo:hi" repeated dim times.
Omega parse_omega(const std::string& text, std::size_t dim);
Vec parse_vec(const std::string& text);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t h);

}  // namespace coarse::io
