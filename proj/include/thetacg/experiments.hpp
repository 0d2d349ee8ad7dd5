#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "thetacg/diagnostics.hpp"
#include "thetacg/krylov.hpp"

namespace thetacg {

enum class TestId { t1a, t1b, t2a, t2b, custom };

/// "1a", "1b", "2a", "2b", "custom"; throws std::invalid_argument otherwise.
TestId parse_test_id(std::string_view s);
std::string to_string(TestId id);

/// The manufactured-solution consistency check failed.
class GateFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Schema or content error while reading a run record.
class RecordFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kRecordSchemaVersion = 1;

struct Tolerances {
  double tol_rel = 1e-12;
  double tol_abs = 0.0;
  double gate = 1e-6;  ///< max |A f - g| / |g| for built-in tests
};

/// Diagonal problem given by its spectrum and initial error e_0 = f0 - f
/// with f = (1, ..., 1). If the spectrum is empty, a spectrum log-uniform in
/// [1e-3, 1e3] and a Gaussian e_0 of the configured dimension are drawn from
/// the seed.
struct CustomSpec {
  std::vector<double> spectrum;
  std::vector<double> error;
  std::uint64_t seed = 1;
};

struct RunConfig {
  TestId test = TestId::t1a;
  std::optional<int> n;     ///< default 2048 (Gaussian), 16384 (Lorentzian), 16 (random custom)
  std::optional<double> L;  ///< default 40 (Gaussian), 400 (Lorentzian)
  double xi = 1.0;
  int nmax = 60;
  std::vector<double> sigmas{0.0, 1.0, 2.0};
  std::string out;
  std::optional<std::string> json;
  Tolerances tol;
  CustomSpec custom;
};

int default_grid_size(TestId id);
double default_half_width(TestId id);

/// Applies the defaults and checks the invariants (n power of two, L > 0,
/// xi >= 1 for operators without spectrum, 0 <= nmax <= n).
RunConfig resolve(const RunConfig& config);

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

struct TestCase {
  std::optional<InverseProblem> problem;
  std::string description;
  /// |A f_s - g| / |g| with f_s the sampled analytic solution (built-ins).
  std::optional<double> gate_residual;
  /// Mean removed from g to put it in ran A (shift-0 operators).
  double datum_mean_removed = 0.0;
  /// |A^+ g - P f_s| / |f_s|, P the projection off the kernel (built-ins).
  std::optional<double> sampled_solution_distance;
  /// Grid spectral extent (pi n / 2L)^2 + shift, the surrogate's ||A||.
  double spectral_extent = 0.0;
};

/// Samples f and the analytic g = A f on the periodic grid of
/// FourierOperator(n, L, shift) (shift 1 for 1a/1b, 0 for 2a/2b), with
/// f0 = 0. The known solution is A^+ g computed spectrally. The gate is not
/// enforced here.
TestCase build_test_case(TestId id, int n, double half_width);
TestCase build_custom_case(const CustomSpec& spec, int dimension);
/// build_test_case / build_custom_case per config (config already resolved).
TestCase build_case(const RunConfig& config);

/// Throws GateFailure when the gate residual exceeds the tolerance.
void enforce_gate(const TestCase& tc, double tolerance);

struct InvariantCheck {
  std::string name;
  bool ok = true;
  double worst = 0.0;      ///< largest measured violation statistic
  double tolerance = 0.0;  ///< bound applied to worst
};

struct RunMetadata {
  std::string description;
  double operator_norm = 0.0;
  std::optional<double> gate_residual;
  double datum_mean_removed = 0.0;
  std::optional<double> sampled_solution_distance;
  std::string solver;
  /// Spectral runs with xi >= 1: largest relative difference in rho_0
  /// between the solver's iterates and the eigenbasis theta-iterates
  /// (roundoff level discounted).
  std::optional<double> eigenbasis_deviation;
  std::string termination;
  int krylov_dimension = 0;
  std::optional<double> lambda1_proxy;    ///< lambda_1^(N) at the last N
  std::optional<double> lambda_inf_proxy; ///< lambda_N^(N) at the last N
  bool polynomials_truncated = false;
  std::optional<RateMonitor> energy_rate;  ///< (sigma, sigma') = (0, 1)
  double wall_seconds = 0.0;
};

struct RunRecord {
  int schema_version = kRecordSchemaVersion;
  RunConfig config;
  RunMetadata metadata;
  std::vector<ConvergenceRecord> records;
  std::vector<InvariantCheck> checks;
  bool all_checks_ok() const;
};

/// Builds the case, enforces the gate for built-in tests, runs the solver
/// (run_cg for xi = 1, theta_iterates above, the eigenbasis route below) and
/// evaluates every diagnostic and invariant for N = 0..nmax. On spectral
/// runs the integral identity and the bound chain, which hold for the exact
/// iterates, use rho of the eigenbasis theta-iterates.
RunRecord run(const RunConfig& config);

/// Same on an already built case, without the gate.
RunRecord run_case(const RunConfig& config, const TestCase& tc);

inline constexpr std::string_view kCsvHeader =
    "N,rho0,rho1,rho1_N2,rho2,delta_n,ritz_min,ritz_max,bound_chain_ok";

/// Shortest representation that reads back to the same double.
std::string format_double(double v);

std::string to_csv(const RunRecord& r);
nlohmann::json to_json(const RunRecord& r);
/// Throws RecordFormatError on a schema version mismatch or malformed input.
RunRecord record_from_json(const nlohmann::json& j);

/// File output; failures raise std::runtime_error naming the path.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace thetacg
