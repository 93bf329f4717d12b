#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finsler/norm.hpp"
#include "finsler/polygon.hpp"

namespace finsler {

// One study: an anisotropy, a domain, a list of exponents and solver knobs.
// Parsed from JSON of the form
//
//   {
//     "norm":   {"kind": "lq", "q": 2},
//     "domain": "square" | "disk256" | "wulff256" | "spindle(8,2)" | {...polygon...},
//     "p_list": [2, 4, 8],
//     "mesh_h": 0.05,
//     "seeds": [0],
//     "output_dir": "out",
//     "spindle_ks": [4, 8, 16]
//   }
//
// Only "norm" is required. The builtin domains are pinned vertex lists:
// square is the unit square, disk256 / wulff256 are 256-gons inscribed in
// the unit circle / unit Wulff shape, spindle(k,d) as in polygon.hpp.
struct StudyConfig {
  Norm norm = Norm::lq(2.0);
  ConvexPolygon domain = ConvexPolygon({Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}});
  std::string domain_name = "square";
  std::vector<double> p_list = {2.0};
  double mesh_h = 0.05;
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = ".";
  std::vector<int> spindle_ks = {4, 8, 16};

  static StudyConfig from_json(const std::string& text);
  static StudyConfig load(const std::string& path);

  // FNV-1a of the canonical re-serialized config; stable across field order
  // and whitespace in the input.
  std::string hash() const;
  std::string canonical_json() const;
};

ConvexPolygon builtin_domain(const std::string& name, const Norm& f);

// Fixed-width float formatting for CSV/JSON payloads: 9 significant digits,
// so identical runs produce byte-identical files.
std::string sig9(double v);

struct InequalityRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // signed slack in the proved direction
  bool pass = false;
};

struct InequalityReport {
  std::vector<InequalityRow> rows;
  std::string config_hash;
  std::string code_version;

  bool all_pass() const;
  std::string to_json() const;
  std::string to_markdown() const;
};

// Checks every inequality the suite tracks on one (domain, norm) pair:
// the isodiametric bound, the limit Szego-Weinberger comparison, the limit
// Neumann/Dirichlet comparison and, per exponent in p_list, the lower
// bracket pi_p/diam and the strict Neumann < Dirichlet comparison.
// Eigenvalue rows run on a pool of `jobs` workers.
InequalityReport run_inequality_report(const StudyConfig& cfg, int jobs = 1);

}  // namespace finsler
