#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "proxtr/burgers.hpp"
#include "proxtr/trust_region.hpp"

namespace proxtr::bench {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchConfig {
  std::size_t n = 512;
  std::vector<double> kappa_grad_sweep{1e2, 1e1, 1e0, 1e-1, 1e-2, 1e-3, 1e-4};
  burgers::PdeMode pde_mode = burgers::PdeMode::exact;
  std::string output_path;
  std::uint64_t seed = 7;
  bool compare_pde = false;
  /// When false, time_s is written as 0 so repeated runs are byte-identical.
  bool timing = true;
  double compare_kappa_grad = 1.0;
  double compare_kappa_obj = 1e3;
  TrConfig tr;

  void validate() const;
};

struct Setting {
  std::string key;
  std::string value;
  std::size_t line = 0;  ///< 0 for command-line settings
};

/// Parses UTF-8 `key = value` lines; blank lines and `#` comments are skipped.
std::vector<Setting> parse_settings(std::istream& in, const std::string& source = "<config>");

/// Applies one setting; unknown keys and malformed values throw ConfigError.
void apply_setting(BenchConfig& config, const Setting& setting, const std::string& source = "<config>");

/// Defaults, then the file (if any), then `overrides` (command-line flags win).
BenchConfig parse_config(const std::optional<std::string>& path, const std::vector<Setting>& overrides = {});
BenchConfig parse_config_text(const std::string& text, const std::vector<Setting>& overrides = {});

std::vector<double> parse_double_list(const std::string& text);

struct SweepRow {
  double kappa_grad = 0.0;
  double time_s = 0.0;
  std::size_t iter = 0;
  std::size_t obj = 0;
  std::size_t grad = 0;
  std::size_t hess = 0;
  std::size_t prox = 0;
  double av_piter = 0.0;
  bool converged = false;
  double final_objective = 0.0;
  double h_tilde = 0.0;
  std::size_t state_solves = 0;
  std::string error;  ///< empty on success; never contains commas or newlines

  bool operator==(const SweepRow&) const = default;
};

struct RunOutcome {
  SweepRow row;
  RunReport report;
};

/// One full solve on a fresh problem adapter, started from z = ones.
RunOutcome run_single(const BenchConfig& bench, double kappa_grad, burgers::PdeMode mode,
                      std::optional<double> kappa_obj = std::nullopt);

std::vector<SweepRow> run_sweep(const BenchConfig& bench);

struct PdeComparison {
  SweepRow exact;
  SweepRow adaptive;
  double exact_solves_per_iter = 0.0;
  double adaptive_solves_per_iter = 0.0;
};

/// Runs the exact and adaptive PDE modes at the comparison kappas.
PdeComparison run_pde_comparison(const BenchConfig& bench);

/// Newton linear solves per trust-region iteration (at least one iteration).
double solves_per_iteration(const SweepRow& row);

void write_csv(const std::vector<SweepRow>& rows, std::ostream& os);
std::vector<SweepRow> read_csv(std::istream& is);
void write_table(const std::vector<SweepRow>& rows, std::ostream& os);
void write_comparison(const PdeComparison& cmp, std::ostream& os);

}  // namespace proxtr::bench
