#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "proxtr/bench.hpp"

using namespace proxtr;
using namespace proxtr::bench;

namespace {

BenchConfig small_config() {
  BenchConfig c = parse_config_text("n = 32\ntiming = false\n");
  return c;
}

std::string csv_of(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  write_csv(rows, os);
  return os.str();
}

}  // namespace

TEST_CASE("parse_config defaults and precedence") {
  SUBCASE("empty text gives defaults") {
    const BenchConfig c = parse_config_text("");
    const BenchConfig d;
    CHECK(c.n == 512);
    CHECK(c.kappa_grad_sweep == d.kappa_grad_sweep);
    CHECK(c.kappa_grad_sweep.size() == 7);
    CHECK(c.pde_mode == burgers::PdeMode::exact);
    CHECK(c.tr.gtol == d.tr.gtol);
    CHECK(c.output_path.empty());
  }

  SUBCASE("missing file path gives defaults") {
    CHECK(parse_config(std::nullopt).n == 512);
  }

  SUBCASE("flags win over the file") {
    const BenchConfig c = parse_config_text("n=64\n", {Setting{"n", "128", 0}});
    CHECK(c.n == 128);
    CHECK(parse_config_text("n=64\n").n == 64);
  }

  SUBCASE("sweep list") {
    const BenchConfig c = parse_config_text("kappa_grad_sweep=1e2,1e0");
    REQUIRE(c.kappa_grad_sweep.size() == 2);
    CHECK(c.kappa_grad_sweep[0] == 100.0);
    CHECK(c.kappa_grad_sweep[1] == 1.0);
    CHECK(parse_double_list(" 1 , 0.5,2e-3 ") == std::vector<double>{1.0, 0.5, 2e-3});
  }

  SUBCASE("comments, blank lines and solver overrides") {
    const BenchConfig c = parse_config_text(
        "# header\n\n  pde_mode = adaptive  # trailing\ngtol=1e-6\nmax_iter = 17\ncompare_pde = yes\nseed=11\n");
    CHECK(c.pde_mode == burgers::PdeMode::adaptive);
    CHECK(c.tr.gtol == 1e-6);
    CHECK(c.tr.max_iter == 17);
    CHECK(c.compare_pde);
    CHECK(c.seed == 11);
  }

  SUBCASE("file on disk") {
    const auto path = std::filesystem::temp_directory_path() / "proxtr_bench_config_test.cfg";
    {
      std::ofstream f(path);
      f << "n = 48\nkappa_grad_sweep = 1\n";
    }
    const BenchConfig c = parse_config(path.string());
    CHECK(c.n == 48);
    CHECK(c.kappa_grad_sweep == std::vector<double>{1.0});
    std::filesystem::remove(path);
    CHECK_THROWS_AS(parse_config(path.string()), ConfigError);
  }
}

TEST_CASE("parse_config errors name the line") {
  auto message = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };

  const std::string unknown = message("n = 64\nbogus = 3\n");
  CHECK(unknown.find(":2") != std::string::npos);
  CHECK(unknown.find("bogus") != std::string::npos);

  const std::string malformed = message("n = 64\n\n# c\njust words\n");
  CHECK(malformed.find(":4") != std::string::npos);

  CHECK_FALSE(message("n = abc\n").empty());
  CHECK_FALSE(message("n = 2\n").empty());
  CHECK_FALSE(message("kappa_grad_sweep = 1,-1\n").empty());
  CHECK_FALSE(message("pde_mode = sloppy\n").empty());
  CHECK_FALSE(message("eta1 = 0.99\n").empty());
  CHECK_THROWS_AS(parse_config_text("", {Setting{"nope", "1", 0}}), ConfigError);
}

TEST_CASE("CSV round trip") {
  std::vector<SweepRow> rows(3);
  rows[0] = {100.0, 0.123456789, 16, 40, 30, 50, 20, 1.0 / 3.0, true, 5.684e-12, 0.0, 113, ""};
  rows[1] = {1e-4, 0.0, 40, 1, 2, 3, 4, 0.1 + 0.2, false, -1.25e-300, 2.5e-9, 0, "line search stagnated; n=3"};
  rows[2] = {0.5, 1e300, 0, 0, 0, 0, 0, 0.0, true, 0.0, 1e-17, 7, ""};
  const std::string text = csv_of(rows);
  CHECK(text.find("kappa_grad,time_s,iter,obj,grad,hess,prox,av_piter") != std::string::npos);
  std::istringstream in(text);
  CHECK(read_csv(in) == rows);

  std::istringstream bad("kappa_grad,time_s\n1,2\n");
  CHECK_THROWS(read_csv(bad));
}

TEST_CASE("solves_per_iteration") {
  SweepRow r;
  r.state_solves = 12;
  r.iter = 0;
  CHECK(solves_per_iteration(r) == 12.0);
  r.iter = 4;
  CHECK(solves_per_iteration(r) == 3.0);
}

TEST_CASE("run_sweep on a small mesh") {
  BenchConfig c = small_config();

  SUBCASE("single-row sweep") {
    c.kappa_grad_sweep = {1.0};
    const auto rows = run_sweep(c);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].kappa_grad == 1.0);
    CHECK(rows[0].converged);
    CHECK(rows[0].error.empty());
    CHECK(rows[0].h_tilde <= c.tr.gtol);
    CHECK(rows[0].time_s == 0.0);
    CHECK(rows[0].state_solves > 0);
  }

  SUBCASE("deterministic output") {
    c.kappa_grad_sweep = {1e2, 1e-2};
    const std::string a = csv_of(run_sweep(c));
    const std::string b = csv_of(run_sweep(c));
    CHECK(a == b);
  }

  SUBCASE("huge gtol stops immediately") {
    c.tr.gtol = 1e6;
    c.kappa_grad_sweep = {1.0};
    const auto rows = run_sweep(c);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].converged);
    CHECK(rows[0].iter <= 1);
    CHECK(std::isfinite(solves_per_iteration(rows[0])));
  }

  SUBCASE("per-row failures are recorded") {
    c.tr.max_iter = 1;
    c.tr.gtol = 1e-14;
    c.kappa_grad_sweep = {1.0, 10.0};
    const auto rows = run_sweep(c);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) CHECK_FALSE(r.converged);
  }

  SUBCASE("PDE comparison reports both modes") {
    const PdeComparison cmp = run_pde_comparison(c);
    CHECK(cmp.exact.converged);
    CHECK(cmp.adaptive.converged);
    CHECK(cmp.exact_solves_per_iter == solves_per_iteration(cmp.exact));
    CHECK(cmp.adaptive_solves_per_iter == solves_per_iteration(cmp.adaptive));
    CHECK(std::abs(cmp.exact.final_objective - cmp.adaptive.final_objective) <= 1e-6);
    std::ostringstream os;
    write_comparison(cmp, os);
    CHECK(os.str().find("adaptive") != std::string::npos);
  }

  SUBCASE("aligned table has one line per row") {
    c.kappa_grad_sweep = {1.0, 0.1};
    const auto rows = run_sweep(c);
    std::ostringstream os;
    write_table(rows, os);
    const std::string s = os.str();
    CHECK(std::count(s.begin(), s.end(), '\n') == 3);
  }
}
