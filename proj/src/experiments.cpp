#include "thetacg/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "thetacg/errors.hpp"
#include "thetacg/measures.hpp"
#include "thetacg/orthopoly.hpp"

namespace thetacg {

TestId parse_test_id(std::string_view s) {
  if (s == "1a") return TestId::t1a;
  if (s == "1b") return TestId::t1b;
  if (s == "2a") return TestId::t2a;
  if (s == "2b") return TestId::t2b;
  if (s == "custom") return TestId::custom;
  throw std::invalid_argument("unknown test id '" + std::string(s) + "' (expected 1a, 1b, 2a, 2b or custom)");
}

std::string to_string(TestId id) {
  switch (id) {
    case TestId::t1a: return "1a";
    case TestId::t1b: return "1b";
    case TestId::t2a: return "2a";
    case TestId::t2b: return "2b";
    case TestId::custom: return "custom";
  }
  return "?";
}

namespace {
bool lorentzian(TestId id) { return id == TestId::t1b || id == TestId::t2b; }
bool power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }
}  // namespace

int default_grid_size(TestId id) {
  if (id == TestId::custom) return 16;
  return lorentzian(id) ? 16384 : 2048;
}

double default_half_width(TestId id) { return lorentzian(id) ? 400.0 : 40.0; }

RunConfig resolve(const RunConfig& config) {
  RunConfig c = config;
  if (c.test == TestId::custom && !c.custom.spectrum.empty()) {
    if (c.n && *c.n != static_cast<int>(c.custom.spectrum.size()))
      throw std::invalid_argument("--n differs from the length of the custom spectrum");
    c.n = static_cast<int>(c.custom.spectrum.size());
    if (c.custom.error.size() != c.custom.spectrum.size())
      throw std::invalid_argument("custom error coefficients must match the spectrum length");
  }
  if (!c.n) c.n = default_grid_size(c.test);
  if (!c.L) c.L = default_half_width(c.test);
  if (c.test != TestId::custom && !power_of_two(*c.n))
    throw std::invalid_argument("grid size n must be a power of two >= 2");
  if (*c.n < 1) throw std::invalid_argument("dimension must be positive");
  if (!(*c.L > 0.0) || !std::isfinite(*c.L)) throw std::invalid_argument("half-width L must be positive");
  if (!(c.xi >= 0.0) || !std::isfinite(c.xi)) throw std::invalid_argument("xi must be >= 0");
  if (c.nmax < 0 || c.nmax > *c.n) throw std::invalid_argument("nmax must lie in [0, n]");
  if (c.sigmas.empty()) throw std::invalid_argument("at least one sigma is required");
  for (double s : c.sigmas)
    if (!std::isfinite(s)) throw std::invalid_argument("sigma values must be finite");
  if (!(c.tol.tol_rel >= 0.0) || !(c.tol.tol_abs >= 0.0) || !(c.tol.gate > 0.0))
    throw std::invalid_argument("tolerances must be non-negative (gate positive)");
  return c;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config JSON must be an object");
  static const std::set<std::string> known{"test", "n",       "L",        "xi",       "nmax",  "sigma", "out",
                                           "json", "tol_rel", "tol_abs",  "gate_tol", "spectrum", "error", "seed"};
  for (const auto& item : j.items())
    if (!known.contains(item.key())) throw std::invalid_argument("unknown config key '" + item.key() + "'");
  RunConfig c;
  try {
    if (j.contains("test")) c.test = parse_test_id(j.at("test").get<std::string>());
    if (j.contains("n")) c.n = j.at("n").get<int>();
    if (j.contains("L")) c.L = j.at("L").get<double>();
    if (j.contains("xi")) c.xi = j.at("xi").get<double>();
    if (j.contains("nmax")) c.nmax = j.at("nmax").get<int>();
    if (j.contains("sigma")) c.sigmas = j.at("sigma").get<std::vector<double>>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("json")) c.json = j.at("json").get<std::string>();
    if (j.contains("tol_rel")) c.tol.tol_rel = j.at("tol_rel").get<double>();
    if (j.contains("tol_abs")) c.tol.tol_abs = j.at("tol_abs").get<double>();
    if (j.contains("gate_tol")) c.tol.gate = j.at("gate_tol").get<double>();
    if (j.contains("spectrum")) c.custom.spectrum = j.at("spectrum").get<std::vector<double>>();
    if (j.contains("error")) c.custom.error = j.at("error").get<std::vector<double>>();
    if (j.contains("seed")) c.custom.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["test"] = to_string(c.test);
  if (c.n) j["n"] = *c.n;
  if (c.L) j["L"] = *c.L;
  j["xi"] = c.xi;
  j["nmax"] = c.nmax;
  j["sigma"] = c.sigmas;
  j["out"] = c.out;
  if (c.json) j["json"] = *c.json;
  j["tol_rel"] = c.tol.tol_rel;
  j["tol_abs"] = c.tol.tol_abs;
  j["gate_tol"] = c.tol.gate;
  if (c.test == TestId::custom) {
    j["spectrum"] = c.custom.spectrum;
    j["error"] = c.custom.error;
    j["seed"] = c.custom.seed;
  }
  return j;
}

// ---------------------------------------------------------------------------

TestCase build_test_case(TestId id, int n, double half_width) {
  if (id == TestId::custom) throw std::invalid_argument("custom cases are built from a CustomSpec");
  const double shift = (id == TestId::t1a || id == TestId::t1b) ? 1.0 : 0.0;
  auto op = std::make_shared<const FourierOperator>(n, half_width, shift);
  const Vector x = op->grid();
  Vector f(n), g(n);
  for (int i = 0; i < n; ++i) {
    const double t = x[i], t2 = t * t;
    if (lorentzian(id)) {
      const double q = 1.0 + t2;
      f[i] = 1.0 / q;
      g[i] = (2.0 - 6.0 * t2) / (q * q * q) + shift * f[i];
    } else {
      const double e = std::exp(-t2);
      f[i] = e;
      g[i] = (2.0 - 4.0 * t2) * e + shift * e;
    }
  }
  TestCase tc;
  if (shift == 0.0) {
    tc.datum_mean_removed = g.mean();
    g.array() -= tc.datum_mean_removed;
  }
  tc.gate_residual = (op->apply(f) - g).norm() / g.norm();
  const Vector solution = fractional_apply(*op, -1.0, g);
  const Vector f_range = fractional_apply(*op, 0.0, f);
  tc.sampled_solution_distance = (solution - f_range).norm() / f.norm();
  tc.spectral_extent = op->eigenvalues().maxCoeff();
  std::ostringstream os;
  os << "test-" << to_string(id) << ": A = -d2/dx2" << (shift != 0.0 ? " + 1" : "") << ", f = "
     << (lorentzian(id) ? "1/(1+x^2)" : "exp(-x^2)") << ", periodic grid n=" << n << " on [-" << half_width << ", "
     << half_width << "), ||A|| = " << tc.spectral_extent;
  tc.description = os.str();
  tc.problem.emplace(op, g, Vector::Zero(n), solution);
  return tc;
}

TestCase build_custom_case(const CustomSpec& spec, int dimension) {
  Vector lam, e0;
  if (spec.spectrum.empty()) {
    if (dimension < 1) throw std::invalid_argument("custom dimension must be positive");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> expo(-3.0, 3.0);
    std::normal_distribution<double> normal;
    lam.resize(dimension);
    e0.resize(dimension);
    for (int i = 0; i < dimension; ++i) lam[i] = std::pow(10.0, expo(rng));
    for (int i = 0; i < dimension; ++i) e0[i] = normal(rng);
    std::sort(lam.begin(), lam.end());
  } else {
    if (spec.error.size() != spec.spectrum.size())
      throw std::invalid_argument("custom error coefficients must match the spectrum length");
    lam = Eigen::Map<const Vector>(spec.spectrum.data(), static_cast<Eigen::Index>(spec.spectrum.size()));
    e0 = Eigen::Map<const Vector>(spec.error.data(), static_cast<Eigen::Index>(spec.error.size()));
  }
  auto op = std::make_shared<const DiagonalOperator>(lam);
  const Vector f = Vector::Ones(lam.size());
  TestCase tc;
  tc.spectral_extent = lam.maxCoeff();
  std::ostringstream os;
  os << "custom diagonal problem, dimension " << lam.size() << ", spectrum in [" << lam.minCoeff() << ", "
     << lam.maxCoeff() << "]" << (spec.spectrum.empty() ? ", seed " + std::to_string(spec.seed) : "");
  tc.description = os.str();
  tc.problem.emplace(op, op->apply(f), f + e0, f);
  return tc;
}

TestCase build_case(const RunConfig& config) {
  if (config.test == TestId::custom) return build_custom_case(config.custom, config.n.value_or(16));
  return build_test_case(config.test, config.n.value(), config.L.value());
}

void enforce_gate(const TestCase& tc, double tolerance) {
  if (tc.gate_residual && !(*tc.gate_residual <= tolerance)) {
    std::ostringstream os;
    os << "consistency gate failed: |A f - g|/|g| = " << *tc.gate_residual << " > " << tolerance << " ("
       << tc.description << ")";
    throw GateFailure(os.str());
  }
}

// ---------------------------------------------------------------------------

bool RunRecord::all_checks_ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.ok; });
}

namespace {

struct Tracker {
  InvariantCheck check;
  Tracker(std::string name, double tol) {
    check.name = std::move(name);
    check.tolerance = tol;
  }
  void see(double v) {
    // Keeps the statistic finite so that records stay valid JSON.
    if (!(v <= std::numeric_limits<double>::max())) v = std::numeric_limits<double>::max();
    check.worst = std::max(check.worst, v);
    if (!(v <= check.tolerance)) check.ok = false;
  }
};

double relative_excess(double lhs, double rhs) {
  if (lhs <= rhs) return 0.0;
  if (rhs <= 0.0) return std::numeric_limits<double>::infinity();
  return lhs / rhs - 1.0;
}

std::string sigma_key(double s) { return format_double(s); }

}  // namespace

RunRecord run_case(const RunConfig& config, const TestCase& tc) {
  const auto start = std::chrono::steady_clock::now();
  const InverseProblem& prob = tc.problem.value();
  const SelfAdjointOperator& op = prob.op();
  const bool spectral = op.has_spectrum();
  const double xi = config.xi;

  RunRecord rec;
  rec.config = config;
  RunMetadata& meta = rec.metadata;
  meta.description = tc.description;
  meta.operator_norm = prob.norm();
  meta.gate_residual = tc.gate_residual;
  meta.datum_mean_removed = tc.datum_mean_removed;
  meta.sampled_solution_distance = tc.sampled_solution_distance;

  IterateHistory hist;
  if (xi == 1.0) {
    meta.solver = "cg";
    hist = run_cg(prob, config.nmax, {}, CgOptions{config.tol.tol_rel, config.tol.tol_abs});
  } else if (xi >= 1.0) {
    meta.solver = "theta-krylov";
    hist = theta_iterates(prob, xi, config.nmax);
  } else {
    meta.solver = "theta-spectral";
    hist = theta_iterates_spectral(prob, xi, config.nmax);
  }
  // The exact-arithmetic identities are checked on the eigenbasis iterates,
  // which do not carry the roundoff that a physical-space Krylov solver
  // amplifies on smooth data.
  std::optional<IterateHistory> eigen_hist;
  if (spectral && xi >= 1.0) eigen_hist = theta_iterates_spectral(prob, xi, config.nmax);
  const IterateHistory& exact = eigen_hist ? *eigen_hist : hist;
  meta.termination = std::string(to_string(hist.termination));
  meta.krylov_dimension = hist.krylov_dimension;

  std::set<double> sigmas(config.sigmas.begin(), config.sigmas.end());
  sigmas.insert({0.0, 1.0, 2.0});

  std::optional<ProblemMeasures> measures;
  std::optional<PolynomialFamily> family;
  std::map<double, DiscreteSpectralMeasure> mu;
  if (spectral && prob.initial_error().norm() > 0.0) {
    measures = problem_measures(prob, xi);
    family = residual_polynomials(measures->nu, config.nmax);
    meta.polynomials_truncated = family->truncated;
    for (double s : sigmas) mu.emplace(s, weight_by_power(measures->error, s));
  }

  Tracker cauchy("cauchy_schwarz", 1e-10);
  Tracker monotone("objective_monotone", 1e-10);
  Tracker identity("integral_identity", 1e-8);
  Tracker zeros("zeros_positive_simple", 0.0);
  Tracker separation("zero_separation", 1e-10);
  Tracker monotonicity("zero_monotonicity", 1e-10);
  Tracker orth("orthogonality_gap", 1e-8);
  Tracker lemma("lemma_bound", 1e-10);
  Tracker chain("bound_chain", kChainSlack);
  Tracker kernel("kernel_component_preserved", 1e-10);
  double deviation = 0.0;
  std::map<double, double> floor;
  if (spectral)
    for (double s : sigmas) floor[s] = rho_resolution(prob, s);

  const Vector& f0 = prob.initial_guess();
  double objective_prev = 0.0, objective0 = 0.0;
  // N_max = 0 yields a metadata-only record; otherwise the N = 0 row is kept
  // as the reference for the ratio columns.
  for (const IterateRecord& it : hist.records) {
    if (config.nmax == 0) break;
    ConvergenceRecord cr;
    cr.n = it.n;
    for (double s : sigmas) cr.rho[s] = rho(prob, it.iterate, s);
    const double r0 = cr.rho.at(0.0), r1 = cr.rho.at(1.0), r2 = cr.rho.at(2.0);
    cr.n_sq_rho1 = static_cast<double>(it.n) * it.n * r1;

    if (spectral)
      cauchy.see(cauchy_schwarz_excess(r0, r1, r2, floor.at(0.0), floor.at(1.0), floor.at(2.0)));
    else
      cauchy.see(cauchy_schwarz_excess(r0, r1, r2));
    const double objective = sigmas.contains(xi) ? cr.rho.at(xi) : rho(prob, it.iterate, xi);
    if (it.n == 0) {
      objective0 = objective;
    } else if (objective0 > 0.0) {
      monotone.see((objective - objective_prev) / objective0);
    }
    objective_prev = objective;

    if (spectral) {
      const double knorm = kernel_component_norm(op, it.iterate - f0);
      const double scale = it.iterate.norm() + f0.norm();
      kernel.see(scale > 0.0 ? knorm / scale : knorm);
    }

    if (family && static_cast<std::size_t>(it.n) < family->polynomials.size()) {
      const ResidualPolynomial& p = family->polynomials[static_cast<std::size_t>(it.n)];
      const bool have_exact = static_cast<std::size_t>(it.n) < exact.records.size();
      std::map<double, double> exact_rho;
      for (double s : sigmas) {
        if (!have_exact) break;
        const Vector& h = exact.records[static_cast<std::size_t>(it.n)].iterate;
        const double direct = eigen_hist ? rho(prob, h, s) : cr.rho.at(s);
        exact_rho[s] = direct;
        const double integral = rho_integral_identity(p, mu.at(s));
        if (eigen_hist && s == 0.0) {
          const double dev = std::max(std::abs(direct - cr.rho.at(0.0)) - floor.at(0.0), 0.0);
          const double scale = std::max(direct, cr.rho.at(0.0));
          deviation = std::max(deviation, scale > 0.0 ? dev / scale : 0.0);
        }
        const double excess = std::max(std::abs(direct - integral) - floor.at(s), 0.0);
        const double scale = std::max(direct, integral);
        identity.see(scale > 0.0 ? excess / scale : 0.0);
      }
      if (it.n >= 1) {
        cr.ritz_min = p.smallest_zero();
        cr.ritz_max = p.largest_zero();
        cr.delta_n = delta_n(p);
        zeros.see(check_zeros(p).max_violation);
        if (it.n >= 2) separation.see(check_separation(family->polynomials[it.n - 1], p).max_violation);
        orth.see(orthogonality_gap(p, measures->nu).relative_gap);
        bool chain_ok = true;
        for (double s : sigmas) {
          const DiscreteSpectralMeasure& m = mu.at(s);
          if (xi - s + 1.0 >= 0.0) {
            const LemmaBound lb = lemma_bound(p, measures->nu, m, xi, s);
            lemma.see(relative_excess(lb.lhs, lb.rhs));
          }
          if (xi >= s && have_exact) {
            const BoundChainReport bc = bound_chain(exact_rho.at(s), p, m, xi, s, floor.at(s));
            for (const BoundLink& link : bc.links) chain.see(relative_excess(link.lhs, link.rhs));
            chain_ok = chain_ok && bc.satisfied;
          }
        }
        cr.bound_chain_ok = chain_ok;
      }
    }
    rec.records.push_back(std::move(cr));
  }

  if (family && family->polynomials.size() > 1) {
    monotonicity.see(check_monotonicity(family->polynomials).max_violation);
    const std::size_t last = std::min(family->polynomials.size() - 1, hist.records.size() - 1);
    if (last >= 1) {
      meta.lambda1_proxy = family->polynomials[last].smallest_zero();
      meta.lambda_inf_proxy = family->polynomials[last].largest_zero();
    }
  }

  if (eigen_hist) meta.eigenbasis_deviation = deviation;

  if (xi >= 1.0 && rec.records.size() >= 9 && rec.records.front().rho.at(0.0) > 0.0)
    meta.energy_rate = np_rate_monitor(rec.records, 0.0, 1.0, xi);

  if (tc.gate_residual) {
    Tracker gate("consistency_gate", config.tol.gate);
    gate.see(*tc.gate_residual);
    rec.checks.push_back(gate.check);
  }
  rec.checks.push_back(cauchy.check);
  rec.checks.push_back(monotone.check);
  if (spectral) rec.checks.push_back(kernel.check);
  if (family) {
    for (const Tracker* t : {&identity, &zeros, &separation, &monotonicity, &orth, &lemma, &chain})
      rec.checks.push_back(t->check);
  }
  meta.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

RunRecord run(const RunConfig& config) {
  const RunConfig c = resolve(config);
  const TestCase tc = build_case(c);
  enforce_gate(tc, c.tol.gate);
  return run_case(c, tc);
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const RunRecord& r) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const ConvergenceRecord& c : r.records) {
    os << c.n << ',' << format_double(c.rho.at(0.0)) << ',' << format_double(c.rho.at(1.0)) << ','
       << format_double(c.n_sq_rho1) << ',' << format_double(c.rho.at(2.0)) << ',' << opt(c.delta_n) << ','
       << opt(c.ritz_min) << ',' << opt(c.ritz_max) << ','
       << (c.bound_chain_ok ? (*c.bound_chain_ok ? "true" : "false") : "") << '\n';
  }
  return os.str();
}

namespace {

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

nlohmann::json rate_json(const RateMonitor& m) {
  return {{"bounded", m.bounded}, {"sup", m.sup}, {"slope", m.slope}, {"series", m.series}};
}

}  // namespace

nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json j;
  j["schema_version"] = r.schema_version;
  j["config"] = to_json(r.config);
  const RunMetadata& m = r.metadata;
  j["metadata"] = {
      {"description", m.description},
      {"operator_norm", m.operator_norm},
      {"gate_residual", opt_json(m.gate_residual)},
      {"datum_mean_removed", m.datum_mean_removed},
      {"sampled_solution_distance", opt_json(m.sampled_solution_distance)},
      {"solver", m.solver},
      {"eigenbasis_deviation", opt_json(m.eigenbasis_deviation)},
      {"termination", m.termination},
      {"krylov_dimension", m.krylov_dimension},
      {"lambda1_proxy", opt_json(m.lambda1_proxy)},
      {"lambda_inf_proxy", opt_json(m.lambda_inf_proxy)},
      {"polynomials_truncated", m.polynomials_truncated},
      {"energy_rate", m.energy_rate ? rate_json(*m.energy_rate) : nlohmann::json(nullptr)},
      {"wall_seconds", m.wall_seconds},
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const ConvergenceRecord& c : r.records) {
    nlohmann::json rho = nlohmann::json::object();
    for (const auto& [s, v] : c.rho) rho[sigma_key(s)] = v;
    rows.push_back({{"N", c.n},
                    {"rho", rho},
                    {"rho1_N2", c.n_sq_rho1},
                    {"ritz_min", opt_json(c.ritz_min)},
                    {"ritz_max", opt_json(c.ritz_max)},
                    {"delta_n", opt_json(c.delta_n)},
                    {"bound_chain_ok", opt_json(c.bound_chain_ok)}});
  }
  j["records"] = rows;
  nlohmann::json checks = nlohmann::json::array();
  for (const InvariantCheck& c : r.checks)
    checks.push_back({{"name", c.name}, {"ok", c.ok}, {"worst", c.worst}, {"tolerance", c.tolerance}});
  j["checks"] = checks;
  return j;
}

RunRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("schema_version")) throw RecordFormatError("run record has no schema_version");
  const int version = j.at("schema_version").get<int>();
  if (version != kRecordSchemaVersion) {
    std::ostringstream os;
    os << "run record schema version " << version << " is not supported (expected " << kRecordSchemaVersion << ")";
    throw RecordFormatError(os.str());
  }
  try {
    RunRecord r;
    r.config = config_from_json(j.at("config"));
    const auto& m = j.at("metadata");
    RunMetadata& md = r.metadata;
    md.description = m.at("description").get<std::string>();
    md.operator_norm = m.at("operator_norm").get<double>();
    md.gate_residual = opt_from<double>(m, "gate_residual");
    md.datum_mean_removed = m.at("datum_mean_removed").get<double>();
    md.sampled_solution_distance = opt_from<double>(m, "sampled_solution_distance");
    md.solver = m.at("solver").get<std::string>();
    md.eigenbasis_deviation = opt_from<double>(m, "eigenbasis_deviation");
    md.termination = m.at("termination").get<std::string>();
    md.krylov_dimension = m.at("krylov_dimension").get<int>();
    md.lambda1_proxy = opt_from<double>(m, "lambda1_proxy");
    md.lambda_inf_proxy = opt_from<double>(m, "lambda_inf_proxy");
    md.polynomials_truncated = m.at("polynomials_truncated").get<bool>();
    if (!m.at("energy_rate").is_null()) {
      const auto& e = m.at("energy_rate");
      md.energy_rate = RateMonitor{e.at("bounded").get<bool>(), e.at("sup").get<double>(),
                                   e.at("slope").get<double>(), e.at("series").get<std::vector<double>>()};
    }
    md.wall_seconds = m.at("wall_seconds").get<double>();
    for (const auto& row : j.at("records")) {
      ConvergenceRecord c;
      c.n = row.at("N").get<int>();
      for (const auto& item : row.at("rho").items()) c.rho[std::stod(item.key())] = item.value().get<double>();
      c.n_sq_rho1 = row.at("rho1_N2").get<double>();
      c.ritz_min = opt_from<double>(row, "ritz_min");
      c.ritz_max = opt_from<double>(row, "ritz_max");
      c.delta_n = opt_from<double>(row, "delta_n");
      c.bound_chain_ok = opt_from<bool>(row, "bound_chain_ok");
      r.records.push_back(std::move(c));
    }
    for (const auto& c : j.at("checks"))
      r.checks.push_back({c.at("name").get<std::string>(), c.at("ok").get<bool>(), c.at("worst").get<double>(),
                          c.at("tolerance").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw RecordFormatError(std::string("malformed run record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw RecordFormatError(std::string("malformed run record: ") + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace thetacg
