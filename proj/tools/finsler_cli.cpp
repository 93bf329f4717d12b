// Command-line front end: norm diagnostics, domain geometry, eigenvalue
// studies and the consolidated inequality report.
//
// Exit codes: 0 all good, 2 an inequality row failed, 3 the solver failed,
// 4 config or I/O error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "finsler/report.hpp"
#include "finsler/spectra.hpp"
#include "finsler/viscosity.hpp"

using namespace finsler;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "study config (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory (default: config output_dir)");
  cmd->add_option("--jobs", args.jobs, "worker threads for independent rows")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", args.seed, "override the config seed list");
}

StudyConfig load_config(CommonArgs& args) {
  StudyConfig cfg = StudyConfig::load(args.config_path);
  if (args.seed) cfg.seeds = {*args.seed};
  if (args.out_dir.empty()) args.out_dir = cfg.output_dir;
  std::filesystem::create_directories(args.out_dir);
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open " + path);
  os << text;
}

EigenOptions solver_options(const StudyConfig& cfg) {
  EigenOptions opts;
  opts.seed = cfg.seeds[0];
  return opts;
}

// Max residuals of the norm identities at seeded random points.
nlohmann::json identity_residuals(const Norm& f, std::uint64_t seed) {
  const Norm polar = f.polar();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  double om = 0, h1 = 0, hh0 = 0, sec = 0, sp = 0;
  for (int k = 0; k < 2000; ++k) {
    const Vec2 xi{box(rng), box(rng)};
    const Vec2 eta{box(rng), box(rng)};
    if (xi.norm() < 1e-6 || eta.norm() < 1e-6) continue;
    om = std::max(om, std::abs(f.gradient(xi).dot(xi) - f.value(xi)));
    h1 = std::max(h1, std::abs(f.value(polar.gradient(xi)) - 1.0));
    hh0 = std::max(hh0, std::abs(polar.value(f.gradient(xi)) - 1.0));
    const Vec2 s = f.gradient(polar.gradient(xi)) - xi / polar.value(xi);
    sec = std::max(sec, s.norm());
    sp = std::max(sp, std::max(0.0, std::abs(xi.dot(eta)) - f.value(xi) * polar.value(eta)));
  }
  return {{"gradient_euler", sig9(om)},
          {"polar_gradient_unit", sig9(h1)},
          {"gradient_polar_unit", sig9(hh0)},
          {"gradient_inversion", sig9(sec)},
          {"scalar_product", sig9(sp)}};
}

int cmd_norm_info(CommonArgs& args) {
  const StudyConfig cfg = load_config(args);
  const auto [alpha, beta] = cfg.norm.linearity_bounds();
  nlohmann::json j;
  j["norm"] = nlohmann::json::parse(cfg.norm.to_json());
  j["kappa2"] = sig9(cfg.norm.wulff_measure());
  j["alpha"] = sig9(alpha);
  j["beta"] = sig9(beta);
  j["identity_residuals"] = identity_residuals(cfg.norm, cfg.seeds[0]);
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  write_text(args.out_dir + "/norm_info.json", text);
  return 0;
}

int cmd_geometry(CommonArgs& args) {
  const StudyConfig cfg = load_config(args);
  const MetricReport rep = metric_report(cfg.norm, cfg.domain);
  const std::string csv = MetricReport::csv_header() + "\n" + rep.csv_row() + "\n";
  std::cout << csv;
  write_text(args.out_dir + "/geometry.csv", csv);
  return 0;
}

int cmd_eigen(CommonArgs& args) {
  const StudyConfig cfg = load_config(args);
  std::ostringstream csv;
  csv << "p,lambda_neumann,iterations,residual,constraint_defect\n";
  for (const double p : cfg.p_list) {
    const EigenResult res =
        neumann_eigenvalue(cfg.norm, cfg.domain, p, cfg.mesh_h, solver_options(cfg));
    csv << sig9(p) << ',' << sig9(res.lambda) << ',' << res.iterations << ','
        << sig9(res.residual) << ',' << sig9(res.constraint_defect) << '\n';
    char svg[64];
    std::snprintf(svg, sizeof svg, "/u_p%g.svg", p);
    write_svg_heatmap(res.field, args.out_dir + svg);
  }
  std::cout << csv.str();
  write_text(args.out_dir + "/eigen.csv", csv.str());
  return 0;
}

int cmd_sweep_p(CommonArgs& args) {
  const StudyConfig cfg = load_config(args);
  const auto [limit, dirichlet_limit] = limit_eigenvalues(cfg.norm, cfg.domain);
  (void)dirichlet_limit;
  std::ostringstream csv;
  csv << "p,lambda_p,limit,gap\n";
  for (const double p : cfg.p_list) {
    const EigenResult res =
        neumann_eigenvalue(cfg.norm, cfg.domain, p, cfg.mesh_h, solver_options(cfg));
    csv << sig9(p) << ',' << sig9(res.lambda) << ',' << sig9(limit) << ','
        << sig9(res.lambda - limit) << '\n';
  }
  std::cout << csv.str();
  write_text(args.out_dir + "/sweep_p.csv", csv.str());
  return 0;
}

int cmd_spindle_study(CommonArgs& args) {
  const StudyConfig cfg = load_config(args);
  const double p = cfg.p_list.back();
  const std::vector<SpindleRow> rows = spindle_limit_study(
      cfg.norm, 2.0, p, cfg.spindle_ks, cfg.mesh_h, solver_options(cfg));
  std::ostringstream csv;
  csv << "k,lambda_neumann,dirichlet_upper,gap,flagged\n";
  for (const SpindleRow& r : rows)
    csv << r.k << ',' << sig9(r.lambda_neumann) << ',' << sig9(r.upper) << ','
        << sig9(r.gap) << ',' << (r.flagged ? 1 : 0) << '\n';
  std::cout << csv.str();
  write_text(args.out_dir + "/spindle_study.csv", csv.str());
  return 0;
}

int cmd_viscosity_scan(CommonArgs& args) {
  const StudyConfig cfg = load_config(args);
  const DiameterResult diam = diameter(cfg.norm, cfg.domain);
  const SmoothCandidate pair = SmoothCandidate::cone_pair(diam.a, diam.b);
  const ScanReport rep = residual_scan(cfg.norm, cfg.domain, pair, 2.0 / diam.value,
                                       std::max(cfg.mesh_h, 0.01));
  const std::string text = rep.to_json() + "\n";
  std::cout << text;
  write_text(args.out_dir + "/viscosity_scan.json", text);
  return 0;
}

int cmd_report(CommonArgs& args) {
  const StudyConfig cfg = load_config(args);
  const InequalityReport rep = run_inequality_report(cfg, args.jobs);
  std::cout << rep.to_markdown();
  write_text(args.out_dir + "/report.json", rep.to_json() + "\n");
  write_text(args.out_dir + "/report.md", rep.to_markdown());
  return rep.all_pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic p-Laplacian spectral toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(CommonArgs&) = nullptr;
  const std::vector<std::pair<const char*, int (*)(CommonArgs&)>> cmds = {
      {"norm-info", cmd_norm_info},         {"geometry", cmd_geometry},
      {"eigen", cmd_eigen},                 {"sweep-p", cmd_sweep_p},
      {"spindle-study", cmd_spindle_study}, {"viscosity-scan", cmd_viscosity_scan},
      {"report", cmd_report}};
  for (const auto& [name, fn] : cmds) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, args);
    sub->callback([&handler, fn = fn] { handler = fn; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return handler(args);
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
