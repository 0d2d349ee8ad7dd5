// Command-line driver: runs the built-in test problems and writes the
// per-iteration diagnostics as CSV (and optionally JSON).
//
//   thetacg solve  --test 1a --n 2048 --L 40 --xi 1 --nmax 60 --sigma 0,1,2 --out run.csv [--json run.json]
//   thetacg verify --test 2b
//
// Exit status: 0 success, 1 usage or I/O error, 2 gate or invariant failure.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thetacg/experiments.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string test;
  int n = 0;
  double L = 0.0;
  double xi = 1.0;
  int nmax = 0;
  std::vector<double> sigmas;
  std::string out;
  std::string json;
  double tol_rel = 0.0, tol_abs = 0.0, gate_tol = 0.0;
  std::uint64_t seed = 0;
};

void add_run_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON file with run settings; flags override it")
      ->check(CLI::ExistingFile);
  cmd->add_option("--test", o.test, "test id: 1a, 1b, 2a, 2b or custom");
  cmd->add_option("--n", o.n, "grid size (power of two) or custom dimension");
  cmd->add_option("--L", o.L, "half-width of the periodic domain [-L, L)");
  cmd->add_option("--xi", o.xi, "theta of the iterates (1 = conjugate gradients)");
  cmd->add_option("--nmax", o.nmax, "number of iterations");
  cmd->add_option("--sigma", o.sigmas, "sigma values for rho_sigma, comma separated")->delimiter(',');
  cmd->add_option("--tol-rel", o.tol_rel, "relative residual stopping tolerance");
  cmd->add_option("--tol-abs", o.tol_abs, "absolute residual stopping tolerance");
  cmd->add_option("--gate-tol", o.gate_tol, "consistency gate tolerance on |A f - g|/|g|");
  cmd->add_option("--seed", o.seed, "seed for a random custom spectrum");
}

thetacg::RunConfig make_config(const CLI::App* cmd, const Options& o) {
  thetacg::RunConfig c;
  if (!o.config_path.empty())
    c = thetacg::config_from_json(nlohmann::json::parse(thetacg::read_text_file(o.config_path)));
  auto given = [cmd](const char* name) { return cmd->count(name) > 0; };
  if (given("--test")) c.test = thetacg::parse_test_id(o.test);
  if (given("--n")) c.n = o.n;
  if (given("--L")) c.L = o.L;
  if (given("--xi")) c.xi = o.xi;
  if (given("--nmax")) c.nmax = o.nmax;
  if (given("--sigma")) c.sigmas = o.sigmas;
  if (given("--tol-rel")) c.tol.tol_rel = o.tol_rel;
  if (given("--tol-abs")) c.tol.tol_abs = o.tol_abs;
  if (given("--gate-tol")) c.tol.gate = o.gate_tol;
  if (given("--seed")) c.custom.seed = o.seed;
  if (cmd->get_option_no_throw("--out") && given("--out")) c.out = o.out;
  if (cmd->get_option_no_throw("--json") && given("--json")) c.json = o.json;
  return thetacg::resolve(c);
}

void print_checks(std::ostream& os, const thetacg::RunRecord& r) {
  for (const auto& c : r.checks)
    os << (c.ok ? "ok    " : "FAIL  ") << c.name << "  worst=" << c.worst << "  tol=" << c.tolerance << '\n';
}

int do_solve(const CLI::App* cmd, const Options& o) {
  const thetacg::RunConfig c = make_config(cmd, o);
  if (c.out.empty()) throw CLI::ValidationError("--out", "an output CSV path is required");
  const thetacg::RunRecord r = thetacg::run(c);
  thetacg::write_text_file(c.out, thetacg::to_csv(r));
  if (c.json) thetacg::write_text_file(*c.json, thetacg::to_json(r).dump(2) + "\n");
  std::cout << r.metadata.description << '\n'
            << "solver " << r.metadata.solver << ", " << (r.records.empty() ? 0 : r.records.back().n)
            << " iterations, termination " << r.metadata.termination << '\n';
  if (r.metadata.eigenbasis_deviation)
    std::cout << "rho_0 deviation from the eigenbasis iterates " << *r.metadata.eigenbasis_deviation << '\n';
  if (r.metadata.energy_rate)
    std::cout << "energy rate series " << (r.metadata.energy_rate->bounded ? "bounded" : "unbounded")
              << " (slope " << r.metadata.energy_rate->slope << ")\n";
  if (!r.all_checks_ok()) {
    print_checks(std::cerr, r);
    return 2;
  }
  return 0;
}

int do_verify(const CLI::App* cmd, const Options& o) {
  const thetacg::RunConfig c = make_config(cmd, o);
  const thetacg::TestCase tc = thetacg::build_case(c);
  if (tc.gate_residual)
    std::cout << (*tc.gate_residual <= c.tol.gate ? "ok    " : "FAIL  ") << "consistency_gate  residual="
              << *tc.gate_residual << "  tol=" << c.tol.gate << '\n';
  thetacg::enforce_gate(tc, c.tol.gate);
  const thetacg::RunRecord r = thetacg::run_case(c, tc);
  thetacg::RunRecord shown = r;
  std::erase_if(shown.checks, [](const auto& ch) { return ch.name == "consistency_gate"; });
  print_checks(std::cout, shown);
  return r.all_checks_ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"theta-iterate conjugate gradient experiments"};
  app.require_subcommand(1);
  Options solve_opts, verify_opts;
  CLI::App* solve = app.add_subcommand("solve", "run a test and write its diagnostics");
  add_run_options(solve, solve_opts);
  solve->add_option("--out", solve_opts.out, "CSV output path");
  solve->add_option("--json", solve_opts.json, "JSON output path");
  CLI::App* verify = app.add_subcommand("verify", "consistency gate and invariant suite for a test");
  add_run_options(verify, verify_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*solve) return do_solve(solve, solve_opts);
    return do_verify(verify, verify_opts);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const thetacg::GateFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
