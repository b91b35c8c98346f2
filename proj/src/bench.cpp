#include "proxtr/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace proxtr::bench {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string where(const std::string& source, std::size_t line) {
  if (line == 0) return "command line";
  return source + ":" + std::to_string(line);
}

[[noreturn]] void fail(const Setting& s, const std::string& source, const std::string& why) {
  throw ConfigError(where(source, s.line) + ": " + why + " (" + s.key + " = " + s.value + ")");
}

double to_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    throw std::invalid_argument("not a number: '" + t + "'");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    throw std::invalid_argument("not a nonnegative integer: '" + t + "'");
  }
  return v;
}

bool to_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw std::invalid_argument("not a boolean: '" + t + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(BenchConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["n"] = [](BenchConfig& c, const std::string& v) { c.n = to_unsigned(v); };
    t["kappa_grad_sweep"] = [](BenchConfig& c, const std::string& v) { c.kappa_grad_sweep = parse_double_list(v); };
    t["pde_mode"] = [](BenchConfig& c, const std::string& v) {
      const std::string m = trim(v);
      if (m == "exact") {
        c.pde_mode = burgers::PdeMode::exact;
      } else if (m == "adaptive") {
        c.pde_mode = burgers::PdeMode::adaptive;
      } else {
        throw std::invalid_argument("pde_mode must be 'exact' or 'adaptive'");
      }
    };
    t["output"] = [](BenchConfig& c, const std::string& v) { c.output_path = trim(v); };
    t["seed"] = [](BenchConfig& c, const std::string& v) { c.seed = to_unsigned(v); };
    t["compare_pde"] = [](BenchConfig& c, const std::string& v) { c.compare_pde = to_bool(v); };
    t["timing"] = [](BenchConfig& c, const std::string& v) { c.timing = to_bool(v); };
    t["compare_kappa_grad"] = [](BenchConfig& c, const std::string& v) { c.compare_kappa_grad = to_double(v); };
    t["compare_kappa_obj"] = [](BenchConfig& c, const std::string& v) { c.compare_kappa_obj = to_double(v); };

    auto real = [&t](const char* key, double TrConfig::*field) {
      t[key] = [field](BenchConfig& c, const std::string& v) { c.tr.*field = to_double(v); };
    };
    auto count = [&t](const char* key, std::size_t TrConfig::*field) {
      t[key] = [field](BenchConfig& c, const std::string& v) { c.tr.*field = to_unsigned(v); };
    };
    real("delta1", &TrConfig::delta1);
    real("eta1", &TrConfig::eta1);
    real("eta2", &TrConfig::eta2);
    real("gamma1", &TrConfig::gamma1);
    real("gamma2", &TrConfig::gamma2);
    real("gamma3", &TrConfig::gamma3);
    real("kappa_rad", &TrConfig::kappa_rad);
    real("kappa_fcd", &TrConfig::kappa_fcd);
    real("kappa_dec", &TrConfig::kappa_dec);
    real("kappa_obj", &TrConfig::kappa_obj);
    real("eta", &TrConfig::eta);
    real("zeta", &TrConfig::zeta);
    real("theta_scale", &TrConfig::theta_scale);
    real("r0", &TrConfig::r0);
    real("gtol", &TrConfig::gtol);
    real("mu_cauchy", &TrConfig::mu_cauchy);
    real("refine_rtol", &TrConfig::refine_rtol);
    count("max_iter", &TrConfig::max_iter);
    count("max_cauchy_halvings", &TrConfig::max_cauchy_halvings);
    count("refine_max_iters", &TrConfig::refine_max_iters);
    count("gradient_max_rounds", &TrConfig::gradient_max_rounds);
    count("prox_max_iters", &TrConfig::prox_max_iters);
    return t;
  }();
  return table;
}

std::string sanitize(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char ch) { return ch == ',' || ch == '\n' || ch == '\r'; }, ';');
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void BenchConfig::validate() const {
  if (n < 4) throw ConfigError("n must be at least 4");
  if (kappa_grad_sweep.empty()) throw ConfigError("kappa_grad_sweep must not be empty");
  for (double k : kappa_grad_sweep) {
    if (!(k > 0.0)) throw ConfigError("kappa_grad_sweep values must be positive");
  }
  if (!(compare_kappa_grad > 0.0) || !(compare_kappa_obj > 0.0)) {
    throw ConfigError("comparison kappas must be positive");
  }
  try {
    tr.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split(text, ',')) out.push_back(to_double(item));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::vector<Setting> parse_settings(std::istream& in, const std::string& source) {
  std::vector<Setting> out;
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    if (line == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where(source, line) + ": expected key = value, got '" + trim(raw) + "'");
    }
    Setting s{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
    if (s.key.empty()) throw ConfigError(where(source, line) + ": missing key in '" + trim(raw) + "'");
    out.push_back(std::move(s));
  }
  return out;
}

void apply_setting(BenchConfig& config, const Setting& setting, const std::string& source) {
  const auto& table = setters();
  const auto it = table.find(setting.key);
  if (it == table.end()) fail(setting, source, "unknown key");
  try {
    it->second(config, setting.value);
  } catch (const std::invalid_argument& e) {
    fail(setting, source, e.what());
  }
}

BenchConfig parse_config_text(const std::string& text, const std::vector<Setting>& overrides) {
  std::istringstream in(text);
  BenchConfig config;
  for (const Setting& s : parse_settings(in)) apply_setting(config, s);
  for (const Setting& s : overrides) apply_setting(config, s);
  config.validate();
  return config;
}

BenchConfig parse_config(const std::optional<std::string>& path, const std::vector<Setting>& overrides) {
  BenchConfig config;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config file " + *path);
    for (const Setting& s : parse_settings(in, *path)) apply_setting(config, s, *path);
  }
  for (const Setting& s : overrides) apply_setting(config, s);
  config.validate();
  return config;
}

RunOutcome run_single(const BenchConfig& bench, double kappa_grad, burgers::PdeMode mode,
                      std::optional<double> kappa_obj) {
  RunOutcome out;
  out.row.kappa_grad = kappa_grad;

  TrConfig tr = bench.tr;
  tr.kappa_grad = kappa_grad;
  if (kappa_obj) tr.kappa_obj = *kappa_obj;

  const auto start = std::chrono::steady_clock::now();
  try {
    const burgers::Mesh1D mesh = burgers::Mesh1D::uniform(bench.n);
    burgers::BurgersProblem problem = burgers::make_problem(mesh, burgers::BurgersConfig{}, mode, bench.seed);
    const Vector z1(mesh.n_dof(), 1.0);
    out.report = solve(problem, tr, z1);
    const auto stop = std::chrono::steady_clock::now();

    const EvalCounts& c = out.report.counts;
    out.row.iter = out.report.iterations;
    out.row.obj = c.obj;
    out.row.grad = c.grad;
    out.row.hess = c.hess;
    out.row.prox = c.prox;
    out.row.av_piter = c.average_prox_iters();
    out.row.converged = out.report.converged;
    out.row.h_tilde = out.report.h_tilde;
    out.row.state_solves = problem.linear_solves().state;
    out.row.final_objective = problem.exact_value(out.report.x) + phi_eval(problem.phi(), out.report.x);
    if (!out.report.converged) out.row.error = sanitize(out.report.message);
    if (bench.timing) out.row.time_s = std::chrono::duration<double>(stop - start).count();
  } catch (const std::exception& e) {
    out.row.error = sanitize(e.what());
    if (bench.timing) {
      out.row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  }
  return out;
}

std::vector<SweepRow> run_sweep(const BenchConfig& bench) {
  bench.validate();
  std::vector<SweepRow> rows;
  rows.reserve(bench.kappa_grad_sweep.size());
  for (double kg : bench.kappa_grad_sweep) rows.push_back(run_single(bench, kg, bench.pde_mode).row);
  return rows;
}

double solves_per_iteration(const SweepRow& row) {
  return static_cast<double>(row.state_solves) / static_cast<double>(std::max<std::size_t>(row.iter, 1));
}

PdeComparison run_pde_comparison(const BenchConfig& bench) {
  bench.validate();
  PdeComparison cmp;
  cmp.exact = run_single(bench, bench.compare_kappa_grad, burgers::PdeMode::exact, bench.compare_kappa_obj).row;
  cmp.adaptive =
      run_single(bench, bench.compare_kappa_grad, burgers::PdeMode::adaptive, bench.compare_kappa_obj).row;
  cmp.exact_solves_per_iter = solves_per_iteration(cmp.exact);
  cmp.adaptive_solves_per_iter = solves_per_iteration(cmp.adaptive);
  return cmp;
}

void write_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "# obj: smooth objective evaluations (two per computed reduction)\n"
        "# grad: gradient evaluations including accuracy-control re-evaluations\n"
        "# hess: Hessian-vector products; prox: inexact prox calls\n"
        "# av_piter: mean inner prox iterations per prox call\n"
        "# state_solves: Newton linear solves\n";
  os << "kappa_grad,time_s,iter,obj,grad,hess,prox,av_piter,converged,final_objective,h_tilde,state_solves,error\n";
  for (const SweepRow& r : rows) {
    os << format_double(r.kappa_grad) << ',' << format_double(r.time_s) << ',' << r.iter << ',' << r.obj << ','
       << r.grad << ',' << r.hess << ',' << r.prox << ',' << format_double(r.av_piter) << ','
       << (r.converged ? 1 : 0) << ',' << format_double(r.final_objective) << ',' << format_double(r.h_tilde)
       << ',' << r.state_solves << ',' << r.error << '\n';
  }
}

std::vector<SweepRow> read_csv(std::istream& is) {
  std::vector<SweepRow> rows;
  std::string line;
  bool header_seen = false;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 13) throw ConfigError("csv line " + std::to_string(lineno) + ": expected 13 fields");
    try {
      SweepRow r;
      r.kappa_grad = to_double(f[0]);
      r.time_s = to_double(f[1]);
      r.iter = to_unsigned(f[2]);
      r.obj = to_unsigned(f[3]);
      r.grad = to_unsigned(f[4]);
      r.hess = to_unsigned(f[5]);
      r.prox = to_unsigned(f[6]);
      r.av_piter = to_double(f[7]);
      r.converged = to_bool(f[8]);
      r.final_objective = to_double(f[9]);
      r.h_tilde = to_double(f[10]);
      r.state_solves = to_unsigned(f[11]);
      r.error = f[12];
      rows.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("csv line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_table(const std::vector<SweepRow>& rows, std::ostream& os) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::left << std::setw(10) << "kappa_grad" << std::right << std::setw(10) << "time (s)" << std::setw(6)
     << "iter" << std::setw(6) << "obj" << std::setw(6) << "grad" << std::setw(6) << "hess" << std::setw(6)
     << "prox" << std::setw(10) << "av-piter" << std::setw(14) << "objective" << "  status\n";
  for (const SweepRow& r : rows) {
    std::ostringstream kg;
    kg << std::setprecision(3) << r.kappa_grad;
    os << std::left << std::setw(10) << kg.str() << std::right << std::fixed << std::setprecision(4)
       << std::setw(10) << r.time_s << std::setw(6) << r.iter << std::setw(6) << r.obj << std::setw(6) << r.grad
       << std::setw(6) << r.hess << std::setw(6) << r.prox << std::setprecision(2) << std::setw(10) << r.av_piter
       << std::scientific << std::setprecision(3) << std::setw(14) << r.final_objective << "  "
       << (r.error.empty() ? (r.converged ? "converged" : "not converged") : r.error) << '\n';
    os.flags(flags);
  }
  os.precision(prec);
}

void write_comparison(const PdeComparison& cmp, std::ostream& os) {
  const auto flags = os.flags();
  auto line = [&](const char* name, const SweepRow& r, double per_iter) {
    os << std::left << std::setw(10) << name << std::right << std::setw(6) << r.iter << std::setw(10)
       << r.state_solves << std::fixed << std::setprecision(4) << std::setw(14) << per_iter << std::scientific
       << std::setprecision(3) << std::setw(14) << r.final_objective << "  "
       << (r.error.empty() ? (r.converged ? "converged" : "not converged") : r.error) << '\n';
    os.flags(flags);
  };
  os << std::left << std::setw(10) << "pde" << std::right << std::setw(6) << "iter" << std::setw(10) << "solves"
     << std::setw(14) << "solves/iter" << std::setw(14) << "objective" << "  status\n";
  line("exact", cmp.exact, cmp.exact_solves_per_iter);
  line("adaptive", cmp.adaptive, cmp.adaptive_solves_per_iter);
}

}  // namespace proxtr::bench
