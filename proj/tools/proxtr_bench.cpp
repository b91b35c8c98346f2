// Burgers control benchmark: kappa_grad sweep and exact/adaptive PDE comparison.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "proxtr/bench.hpp"

int main(int argc, char** argv) {
  using proxtr::bench::Setting;

  CLI::App app{"Inexact proximal trust-region benchmark on 1D Burgers control"};
  std::optional<std::string> config_path;
  std::optional<std::string> n, pde_mode, kappa_grad, gtol, max_iter, seed, output;
  bool compare_pde = false;
  bool no_timing = false;
  std::vector<std::string> sets;

  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--n", n, "number of mesh intervals");
  app.add_option("--pde-mode", pde_mode, "exact or adaptive")->check(CLI::IsMember({"exact", "adaptive"}));
  app.add_option("--kappa-grad", kappa_grad, "comma-separated kappa_grad sweep");
  app.add_option("--gtol", gtol, "stationarity tolerance");
  app.add_option("--max-iter", max_iter, "trust-region iteration limit");
  app.add_option("--seed", seed, "seed for the spectral estimate");
  app.add_option("--output", output, "CSV output path");
  app.add_flag("--compare-pde", compare_pde, "also run the exact vs adaptive PDE comparison");
  app.add_flag("--no-timing", no_timing, "write time_s = 0 for reproducible output");
  app.add_option("--set", sets, "extra key=value override (repeatable)");
  CLI11_PARSE(app, argc, argv);

  std::vector<Setting> overrides;
  auto push = [&](const char* key, const std::optional<std::string>& v) {
    if (v) overrides.push_back({key, *v, 0});
  };
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got '" << s << "'\n";
      return 2;
    }
    overrides.push_back({s.substr(0, eq), s.substr(eq + 1), 0});
  }
  push("n", n);
  push("pde_mode", pde_mode);
  push("kappa_grad_sweep", kappa_grad);
  push("gtol", gtol);
  push("max_iter", max_iter);
  push("seed", seed);
  push("output", output);
  if (compare_pde) overrides.push_back({"compare_pde", "true", 0});
  if (no_timing) overrides.push_back({"timing", "false", 0});

  proxtr::bench::BenchConfig config;
  try {
    config = proxtr::bench::parse_config(config_path, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  const auto rows = proxtr::bench::run_sweep(config);
  proxtr::bench::write_table(rows, std::cout);

  if (!config.output_path.empty()) {
    std::ofstream out(config.output_path);
    if (!out) {
      std::cerr << "error: cannot write " << config.output_path << '\n';
      return 1;
    }
    proxtr::bench::write_csv(rows, out);
  }

  if (config.compare_pde) {
    std::cout << '\n';
    proxtr::bench::write_comparison(proxtr::bench::run_pde_comparison(config), std::cout);
  }

  for (const auto& r : rows) {
    if (!r.converged) return 1;
  }
  return 0;
}
