#pragma once

#include <map>
#include <optional>
#include <vector>

#include "thetacg/krylov.hpp"

namespace thetacg {

/// rho_sigma(h) = |u_sigma(h)|^2.
///
/// sigma = 2 is always |A h - g|^2 from the recomputed residual. With
/// spectral capability any real sigma is sum_{lambda > 0} lambda^sigma |e_j|^2
/// over the error coefficients; without it only sigma in {0, 1} (plus 2) is
/// available, from the known solution. For sigma < 0 the error h - f must
/// have no kernel component (PreconditionViolation otherwise).
double rho(const InverseProblem& problem, const Vector& h, double sigma);

/// Absolute level below which a directly computed rho_sigma is roundoff:
/// n (kSpectralNoiseRel (|e_0| + |f_0|))^2 max_{lambda > 0} lambda^sigma.
/// Needs spectral capability.
double rho_resolution(const InverseProblem& problem, double sigma);

/// Relative excess of rho_1^2 over rho_0 rho_2 (0 when the inequality holds)
/// after allowing each rho the absolute uncertainty d0, d1, d2.
double cauchy_schwarz_excess(double r0, double r1, double r2, double d0 = 0.0, double d1 = 0.0, double d2 = 0.0);

/// A^{sigma/2} applied to the error, kernel coefficients zeroed (the
/// minimal-norm branch for sigma < 0). Needs spectral capability.
Vector u_sigma(const InverseProblem& problem, const Vector& h, double sigma);

/// Error h - f as used by rho and u_sigma: the plain difference with the
/// known solution, or A^+ (A h - g) without one (spectral only).
Vector raw_error(const InverseProblem& problem, const Vector& h);

struct ClassMembership {
  bool member = true;
  /// sum_{lambda > 0} lambda^sigma |e_j|^2; finite here, divergent in the
  /// continuum limit when the initial guess is outside the class.
  double magnitude = 0.0;
};

/// In finite dimension x is in the class for sigma iff sigma >= 0 or the
/// error has no kernel component. Needs spectral capability.
ClassMembership class_membership_indicator(const InverseProblem& problem, const Vector& x, double sigma);

struct ConvergenceRecord {
  int n = 0;
  std::map<double, double> rho;  ///< keyed by sigma
  double n_sq_rho1 = 0.0;
  /// Smallest / largest zero of s_N and delta_N (absent for N = 0 or
  /// without spectral capability).
  std::optional<double> ritz_min;
  std::optional<double> ritz_max;
  std::optional<double> delta_n;
  std::optional<bool> bound_chain_ok;
};

struct RateMonitor {
  bool bounded = true;
  double sup = 0.0;
  double slope = 0.0;
  std::vector<double> series;  ///< one value per record with N >= 1
};

/// Series (2N+1)^{2(sigma' - sigma)} rho_{sigma'}(f^[N]) / rho_sigma(f^[0])
/// for N >= 1. bounded is a finite-data heuristic: the maximum over the last
/// quarter of the series is at most twice the maximum over the first quarter.
/// slope is the least-squares slope of log(series) against log N.
/// Needs sigma < sigma' <= xi, a record at N = 0 with rho_sigma > 0, and at
/// least 8 records with N >= 1.
RateMonitor np_rate_monitor(const std::vector<ConvergenceRecord>& records, double sigma, double sigma_prime,
                            double xi);

}  // namespace thetacg
