#include "thetacg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "thetacg/errors.hpp"

namespace thetacg {

Vector raw_error(const InverseProblem& problem, const Vector& h) {
  if (h.size() != problem.dimension()) throw DimensionMismatch("iterate length differs from operator dimension");
  if (problem.known_solution()) return h - *problem.known_solution();
  if (problem.op().has_spectrum()) return fractional_apply(problem.op(), -1.0, problem.residual(h));
  throw CapabilityError("error needs a known solution or spectral capability");
}

namespace {

void require_clean_kernel(const SelfAdjointOperator& op, const Vector& e, double sigma) {
  const double kernel = kernel_component_norm(op, e);
  if (kernel > 1e-10 * e.norm()) {
    std::ostringstream os;
    os << "rho_" << sigma << " needs an error without kernel component; its norm is " << kernel;
    throw PreconditionViolation(os.str());
  }
}

double weighted_sum(const SelfAdjointOperator& op, const SpectralVector& c, double sigma) {
  const Vector& lam = op.eigenvalues();
  const double thr = kKernelRelTol * lam.maxCoeff();
  double s = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j)
    if (lam[j] > thr) s += std::pow(lam[j], sigma) * std::norm(c[j]);
  return s;
}

}  // namespace

double rho(const InverseProblem& problem, const Vector& h, double sigma) {
  if (sigma == 2.0) {
    if (h.size() != problem.dimension()) throw DimensionMismatch("iterate length differs from operator dimension");
    return problem.residual(h).squaredNorm();
  }
  const SelfAdjointOperator& op = problem.op();
  if (op.has_spectrum()) {
    const Vector e = raw_error(problem, h);
    if (sigma < 0.0) require_clean_kernel(op, e, sigma);
    return weighted_sum(op, op.to_spectral(e), sigma);
  }
  if (sigma == 0.0 || sigma == 1.0) {
    if (!problem.known_solution()) throw CapabilityError("matrix-free rho needs a known solution");
    const Vector e = h - *problem.known_solution();
    return sigma == 0.0 ? e.squaredNorm() : std::max(0.0, e.dot(op.apply(e)));
  }
  throw CapabilityError("rho for sigma outside {0, 1, 2} needs spectral capability");
}

double rho_resolution(const InverseProblem& problem, double sigma) {
  const SelfAdjointOperator& op = problem.op();
  if (!op.has_spectrum()) throw CapabilityError("rho resolution needs spectral capability");
  const Vector& lam = op.eigenvalues();
  const double thr = kKernelRelTol * lam.maxCoeff();
  double top = 0.0;
  for (Eigen::Index j = 0; j < lam.size(); ++j)
    if (lam[j] > thr) top = std::max(top, std::pow(lam[j], sigma));
  // Iterates, and for sigma = 2 the residual, are formed around f0, so its
  // size sets the rounding level as much as e_0 does.
  const double scale = kSpectralNoiseRel * (problem.initial_error().norm() + problem.initial_guess().norm());
  return static_cast<double>(problem.dimension()) * scale * scale * top;
}

double cauchy_schwarz_excess(double r0, double r1, double r2, double d0, double d1, double d2) {
  const double allowance = 2.0 * r1 * d1 + d1 * d1 + r0 * d2 + r2 * d0 + d0 * d2;
  const double excess = r1 * r1 - r0 * r2 - allowance;
  if (excess <= 0.0) return 0.0;
  const double rhs = r0 * r2;
  return rhs > 0.0 ? excess / rhs : std::numeric_limits<double>::infinity();
}

Vector u_sigma(const InverseProblem& problem, const Vector& h, double sigma) {
  const SelfAdjointOperator& op = problem.op();
  if (!op.has_spectrum()) throw CapabilityError("u_sigma needs spectral capability");
  const Vector e = raw_error(problem, h);
  if (sigma < 0.0) require_clean_kernel(op, e, sigma);
  return fractional_apply(op, sigma / 2.0, e);
}

ClassMembership class_membership_indicator(const InverseProblem& problem, const Vector& x, double sigma) {
  const SelfAdjointOperator& op = problem.op();
  if (!op.has_spectrum()) throw CapabilityError("class membership needs spectral capability");
  const Vector e = raw_error(problem, x);
  ClassMembership out;
  out.member = sigma >= 0.0 || kernel_component_norm(op, e) <= 1e-10 * e.norm();
  out.magnitude = weighted_sum(op, op.to_spectral(e), sigma);
  return out;
}

RateMonitor np_rate_monitor(const std::vector<ConvergenceRecord>& records, double sigma, double sigma_prime,
                            double xi) {
  if (!(sigma < sigma_prime) || !(sigma_prime <= xi))
    throw PreconditionViolation("rate monitor needs sigma < sigma' <= xi");
  const ConvergenceRecord* first = nullptr;
  for (const auto& r : records)
    if (r.n == 0) first = &r;
  if (!first || !first->rho.contains(sigma)) throw PreconditionViolation("rate monitor needs rho_sigma at N = 0");
  const double base = first->rho.at(sigma);
  if (!(base > 0.0)) throw PreconditionViolation("rate monitor needs rho_sigma(f^[0]) > 0");

  RateMonitor out;
  std::vector<double> logn, logs;
  for (const auto& r : records) {
    if (r.n < 1) continue;
    const auto it = r.rho.find(sigma_prime);
    if (it == r.rho.end()) throw PreconditionViolation("record lacks rho_sigma'");
    const double v = std::pow(2.0 * r.n + 1.0, 2.0 * (sigma_prime - sigma)) * it->second / base;
    out.series.push_back(v);
    if (v > 0.0) {
      logn.push_back(std::log(static_cast<double>(r.n)));
      logs.push_back(std::log(v));
    }
  }
  const std::size_t m = out.series.size();
  if (m < 8) {
    std::ostringstream os;
    os << "rate monitor needs at least 8 records with N >= 1, got " << m;
    throw PreconditionViolation(os.str());
  }
  out.sup = *std::max_element(out.series.begin(), out.series.end());
  const std::size_t q = std::max<std::size_t>(1, m / 4);
  const double head = *std::max_element(out.series.begin(), out.series.begin() + static_cast<long>(q));
  const double tail = *std::max_element(out.series.end() - static_cast<long>(q), out.series.end());
  out.bounded = tail <= 2.0 * head;

  if (logn.size() >= 2) {
    const double n = static_cast<double>(logn.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < logn.size(); ++i) {
      sx += logn[i];
      sy += logs[i];
      sxx += logn[i] * logn[i];
      sxy += logn[i] * logs[i];
    }
    const double den = n * sxx - sx * sx;
    out.slope = den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  }
  return out;
}

}  // namespace thetacg
