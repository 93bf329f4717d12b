#include "finsler/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "finsler/spectra.hpp"

namespace finsler {

namespace {

constexpr const char* kCodeVersion = "finsler-spectra 1.0.0";

ConvexPolygon regular_polygon(int sides) {
  std::vector<Vec2> vs;
  vs.reserve(sides);
  for (int i = 0; i < sides; ++i) {
    const double th = 2.0 * M_PI * i / sides;
    vs.push_back({std::cos(th), std::sin(th)});
  }
  return ConvexPolygon(std::move(vs));
}

}  // namespace

ConvexPolygon builtin_domain(const std::string& name, const Norm& f) {
  if (name == "square")
    return ConvexPolygon({Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}});
  if (name == "disk256") return regular_polygon(256);
  if (name == "wulff256") return wulff_polygon(f, {0, 0}, 1.0, 256);
  int k = 0;
  double d = 0.0;
  if (std::sscanf(name.c_str(), "spindle(%d,%lf)", &k, &d) == 2)
    return spindle(f, k, d);
  throw std::invalid_argument("builtin_domain: unknown domain '" + name + "'");
}

StudyConfig StudyConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("StudyConfig: bad JSON: ") + e.what());
  }
  if (!j.contains("norm")) throw std::invalid_argument("StudyConfig: missing 'norm'");

  StudyConfig cfg;
  cfg.norm = Norm::from_json(j["norm"].dump());
  if (j.contains("domain")) {
    if (j["domain"].is_string()) {
      cfg.domain_name = j["domain"].get<std::string>();
      cfg.domain = builtin_domain(cfg.domain_name, cfg.norm);
    } else {
      cfg.domain_name = "custom";
      cfg.domain = ConvexPolygon::from_json(j["domain"].dump());
    }
  }
  if (j.contains("p_list")) cfg.p_list = j["p_list"].get<std::vector<double>>();
  if (j.contains("mesh_h")) cfg.mesh_h = j["mesh_h"].get<double>();
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("spindle_ks")) cfg.spindle_ks = j["spindle_ks"].get<std::vector<int>>();

  if (cfg.p_list.empty() || !std::is_sorted(cfg.p_list.begin(), cfg.p_list.end()))
    throw std::invalid_argument("StudyConfig: p_list must be nonempty and ascending");
  if (!(cfg.mesh_h > 0.0)) throw std::invalid_argument("StudyConfig: mesh_h must be > 0");
  if (cfg.seeds.empty()) cfg.seeds = {0};
  return cfg;
}

StudyConfig StudyConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("StudyConfig: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json(ss.str());
}

std::string StudyConfig::canonical_json() const {
  nlohmann::json j;
  j["norm"] = nlohmann::json::parse(norm.to_json());
  if (domain_name != "custom") {
    j["domain"] = domain_name;
  } else {
    j["domain"] = nlohmann::json::parse(domain.to_json());
  }
  j["p_list"] = p_list;
  j["mesh_h"] = mesh_h;
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  j["spindle_ks"] = spindle_ks;
  return j.dump();  // nlohmann emits object keys sorted
}

std::string StudyConfig::hash() const {
  const std::string s = canonical_json();
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

std::string sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

bool InequalityReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const InequalityRow& r) { return r.pass; });
}

std::string InequalityReport::to_json() const {
  nlohmann::json j;
  auto arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"name", r.name},
                   {"lhs", sig9(r.lhs)},
                   {"rhs", sig9(r.rhs)},
                   {"margin", sig9(r.margin)},
                   {"pass", r.pass}});
  j["rows"] = arr;
  j["config_hash"] = config_hash;
  j["code_version"] = code_version;
  j["all_pass"] = all_pass();
  return j.dump(2);
}

std::string InequalityReport::to_markdown() const {
  std::ostringstream os;
  os << "| inequality | lhs | rhs | margin | pass |\n";
  os << "|---|---|---|---|---|\n";
  for (const auto& r : rows)
    os << "| " << r.name << " | " << sig9(r.lhs) << " | " << sig9(r.rhs) << " | "
       << sig9(r.margin) << " | " << (r.pass ? "yes" : "NO") << " |\n";
  os << "\nconfig " << config_hash << ", " << code_version << "\n";
  return os.str();
}

InequalityReport run_inequality_report(const StudyConfig& cfg, int jobs) {
  InequalityReport rep;
  rep.config_hash = cfg.hash();
  rep.code_version = kCodeVersion;

  const Norm& f = cfg.norm;
  const ConvexPolygon& omega = cfg.domain;
  const MetricReport geo = metric_report(f, omega);
  const double kappa2 = f.wulff_measure();

  // |Omega| <= (kappa_2/4) diam^2
  {
    InequalityRow r;
    r.name = "isodiametric";
    r.lhs = geo.area;
    r.rhs = 0.25 * kappa2 * geo.diameter * geo.diameter;
    r.margin = r.rhs - r.lhs;
    r.pass = r.lhs <= r.rhs * (1.0 + 1e-9);
    rep.rows.push_back(r);
  }

  // Limit Szego-Weinberger: 2/diam(Omega) <= 2/diam(Omega#) for the Wulff
  // shape of equal measure.
  {
    const ConvexPolygon sharp = wulff_rescaled(f, omega, 256);
    InequalityRow r;
    r.name = "szego_weinberger_limit";
    r.lhs = 2.0 / geo.diameter;
    r.rhs = 2.0 / diameter(f, sharp).value;
    r.margin = r.rhs - r.lhs;
    r.pass = r.lhs <= r.rhs * (1.0 + 1e-9);
    rep.rows.push_back(r);
  }

  // Limit Neumann vs Dirichlet: 2/diam <= 1/inradius.
  {
    InequalityRow r;
    r.name = "neumann_dirichlet_limit";
    r.lhs = 2.0 / geo.diameter;
    r.rhs = 1.0 / geo.inradius;
    r.margin = r.rhs - r.lhs;
    r.pass = r.lhs <= r.rhs * (1.0 + 1e-9);
    rep.rows.push_back(r);
  }

  // Per-exponent rows need eigenvalues; run the solves on a small pool.
  struct PairResult {
    double p = 0.0;
    double neumann = 0.0;
    double dirichlet = 0.0;
    std::string error;
  };
  std::vector<PairResult> results(cfg.p_list.size());
  std::atomic<size_t> next{0};
  const int nworkers = std::max(1, std::min<int>(jobs, (int)cfg.p_list.size()));
  const auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cfg.p_list.size()) return;
      PairResult& out = results[i];
      out.p = cfg.p_list[i];
      try {
        EigenOptions opts;
        opts.seed = cfg.seeds[0];
        out.neumann = neumann_eigenvalue(f, omega, out.p, cfg.mesh_h, opts).lambda;
        out.dirichlet = dirichlet_eigenvalue(f, omega, out.p, cfg.mesh_h, opts).lambda;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < nworkers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const PairResult& pr : results) {
    if (!pr.error.empty()) throw SolverFailure("report row p=" + sig9(pr.p) + ": " + pr.error);
    char name[64];

    // Lambda_p >= pi_p / diam_F
    std::snprintf(name, sizeof name, "payne_weinberger_p%g", pr.p);
    InequalityRow lower;
    lower.name = name;
    lower.lhs = pi_p(pr.p) / geo.diameter;
    lower.rhs = pr.neumann;
    lower.margin = lower.rhs - lower.lhs;
    lower.pass = lower.lhs <= lower.rhs * (1.0 + 1e-6);
    rep.rows.push_back(lower);

    // Lambda_p < lambda_p, strict.
    std::snprintf(name, sizeof name, "neumann_lt_dirichlet_p%g", pr.p);
    InequalityRow strict;
    strict.name = name;
    strict.lhs = pr.neumann;
    strict.rhs = pr.dirichlet;
    strict.margin = strict.rhs - strict.lhs;
    strict.pass = strict.margin > 0.0;
    rep.rows.push_back(strict);
  }
  return rep;
}

}  // namespace finsler
