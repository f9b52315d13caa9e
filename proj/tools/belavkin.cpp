// belavkin: simulate | fig2 | convergence
//
// Exit codes: 0 success, 1 invalid input or I/O failure, 2 numerical failure.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "belavkin/cli/config.hpp"
#include "belavkin/cli/run.hpp"
#include "belavkin/ensemble.hpp"

namespace {

using namespace belavkin;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(cli::parse_double(item));
  if (out.empty()) throw cli::IoError("empty list");
  return out;
}

int simulate(const std::string& config_path) {
  const cli::RunConfig c = cli::parse_config(cli::read_text(config_path));
  const cli::RunResult r = cli::run_config(c);
  cli::write_table(c, r.table);
  if (r.comparison) std::cout << r.comparison->summary() << "\n";
  std::cout << "wrote " << r.table.rows.size() << " rows to " << c.output.path << "\n";
  return 0;
}

int fig2(const std::string& out_dir, const std::string& mu_list, bool overlay) {
  cli::Fig2Options o;
  o.overlay = overlay;
  for (const auto& c : cli::run_fig2(parse_list(mu_list), out_dir, o)) {
    const auto& last = c.table.rows.back();
    std::cout << "mu=" << c.mu << " dX(100)=" << last[1] << " dY(100)=" << last[2]
              << " settles(|dX-1/2|<0.05) at tau=" << c.crossing_tau << "  " << c.file.string() << "\n";
  }
  return 0;
}

int convergence(const std::string& name, const std::string& dt_list, std::size_t seeds) {
  const auto sc = parse_scenario(name);
  if (!sc) {
    std::cerr << "unknown scenario '" << name << "' (linear_coherent, deterministic_mu0, nonlinear_squeezed)\n";
    return 1;
  }
  const auto dts = dt_list.empty() ? default_dt_list(*sc) : parse_list(dt_list);
  const ConvergenceReport rep = convergence_order(*sc, dts, seeds);
  std::cout << rep.diagnostics;
  if (rep.order) std::cout << "order " << *rep.order << "\n";
  else std::cout << "no order reported\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous heterodyne filtering of a cavity mode"};
  app.require_subcommand(1);

  std::string config_path;
  auto* sim = app.add_subcommand("simulate", "Run the configured trajectory or ensemble");
  sim->add_option("--config", config_path, "JSON run configuration")->required();

  std::string out_dir;
  std::string mu_list = "0.01,0.04,0.08";
  bool no_overlay = false;
  auto* f2 = app.add_subcommand("fig2", "Squeezing relaxation curves for several mu");
  f2->add_option("--out", out_dir, "Output directory")->required();
  f2->add_option("--mu", mu_list, "Comma-separated mu values");
  f2->add_flag("--no-overlay", no_overlay, "Skip the numerical nonlinear-filter curves");

  std::string scenario;
  std::string dts;
  std::size_t seeds = 20;
  auto* conv = app.add_subcommand("convergence", "Strong error against step size");
  conv->add_option("--scenario", scenario, "linear_coherent | deterministic_mu0 | nonlinear_squeezed")->required();
  conv->add_option("--dt", dts, "Comma-separated step sizes, ratio 4 (default depends on the scenario)");
  conv->add_option("--seeds", seeds, "Number of noise realizations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*sim) return simulate(config_path);
    if (*f2) return fig2(out_dir, mu_list, !no_overlay);
    return convergence(scenario, dts, seeds);
  } catch (const cli::ConfigError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& m : e.errors()) std::cerr << "  " << m << "\n";
    return 1;
  } catch (const cli::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const GridMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
