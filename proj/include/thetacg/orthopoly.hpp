#pragma once

#include <optional>
#include <string>
#include <vector>

#include "thetacg/krylov.hpp"
#include "thetacg/measures.hpp"

namespace thetacg {

/// s(lambda) = prod_k (1 - lambda / lambda_k), so s(0) = 1 and the degree is
/// the number of zeros. The zero-free polynomial is the constant 1.
class ResidualPolynomial {
 public:
  ResidualPolynomial() = default;
  /// Zeros must be finite and strictly positive; they are stored sorted.
  /// Each zero may carry a low-order part (zero = zeros[k] + low[k]), which
  /// keeps lambda - zero accurate for atoms very close to a zero.
  explicit ResidualPolynomial(std::vector<double> zeros, std::vector<double> low = {});

  int degree() const noexcept { return static_cast<int>(zeros_.size()); }
  const std::vector<double>& zeros() const noexcept { return zeros_; }
  /// Low-order parts of the zeros, all 0 unless given.
  const std::vector<double>& zero_corrections() const noexcept { return low_; }
  /// lambda_k - lambda in extended precision.
  long double zero_minus(std::size_t k, double lambda) const;
  /// lambda equals the k-th zero to the accuracy the zeros are known.
  bool at_zero(std::size_t k, double lambda) const;
  /// Smallest zero lambda_1^(N); requires degree >= 1.
  double smallest_zero() const;
  double largest_zero() const;

  /// Product form in long double; above 50 factors the magnitude is
  /// accumulated as a sum of logarithms. Exactly 0 at the zeros.
  double operator()(double lambda) const { return static_cast<double>(evaluate(lambda)); }
  /// Same value in long double, which does not overflow where double would.
  long double evaluate(double lambda) const;

 private:
  std::vector<double> zeros_;
  std::vector<double> low_;
};

struct PolynomialFamily {
  /// polynomials[N] for N = 0..degree reached.
  std::vector<ResidualPolynomial> polynomials;
  JacobiMatrix jacobi;
  /// Fewer than the requested number of degrees were available: the
  /// measure has too few (numerically distinguishable) atoms.
  bool truncated = false;
};

/// Orthogonal residual polynomials of nu up to degree n_max: the zeros of
/// s_N are the eigenvalues of the order-N Jacobi matrix of nu, built by the
/// Stieltjes procedure (twice-orthogonalised, long double). Requires nu to
/// have no atom at 0.
PolynomialFamily residual_polynomials(const DiscreteSpectralMeasure& nu, int n_max);

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with the
/// given diagonal and off-diagonal, by implicit QL in long double.
std::vector<double> tridiagonal_eigenvalues(const Vector& alpha, const Vector& beta);

/// 1/lambda_1 + 2 sum_{k>=2} 1/lambda_k; 0 for the constant polynomial.
double delta_n(const ResidualPolynomial& p);

struct CheckReport {
  bool ok = true;
  double max_violation = 0.0;  ///< largest relative amount by which the test failed (0 if ok)
};

/// Zeros strictly positive and pairwise distinct.
CheckReport check_zeros(const ResidualPolynomial& p);

/// lambda_k^(N+1) < lambda_k^(N) < lambda_{k+1}^(N+1) with slack 1e-10 lambda_k^(N).
CheckReport check_separation(const ResidualPolynomial& p_n, const ResidualPolynomial& p_n1);

/// For fixed k, lambda_k^(N) non-increasing and lambda_{N-k+1}^(N)
/// non-decreasing in N, slack 1e-10 relative.
CheckReport check_monotonicity(const std::vector<ResidualPolynomial>& family);

struct OrthogonalityGap {
  double lhs = 0.0;  ///< sum over lambda < lambda_1 of s^2 lambda_1/(lambda_1 - lambda) nu
  double rhs = 0.0;  ///< sum over lambda >= lambda_1 of s^2 lambda_1/(lambda - lambda_1) nu
  double relative_gap = 0.0;
};

/// Atoms that coincide with lambda_1 to the accuracy of the zeros count on the
/// right with value 0.
OrthogonalityGap orthogonality_gap(const ResidualPolynomial& p, const DiscreteSpectralMeasure& nu);

struct LemmaBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = true;
};

/// lhs = left side of the orthogonality identity, rhs = mu_sigma([0, lambda_1))
/// ((xi - sigma + 1)/delta_N)^(xi - sigma + 1). Requires xi - sigma + 1 >= 0.
LemmaBound lemma_bound(const ResidualPolynomial& p, const DiscreteSpectralMeasure& nu,
                       const DiscreteSpectralMeasure& mu_sigma, double xi, double sigma);

struct BoundLink {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

struct BoundChainReport {
  std::vector<BoundLink> links;
  bool satisfied = true;
  std::optional<std::string> first_failure;
};

inline constexpr double kChainSlack = 1e-8;

/// Evaluates, for the directly computed rho = rho_sigma(f^[N]) and
/// d = xi - sigma + 1, m = mu_sigma([0, lambda_1)):
///   split:     rho <= m + int_{[lambda_1, inf)} s^2 dmu_sigma
///   tail:      int_{[lambda_1, inf)} s^2 dmu_sigma <= lambda_1^{-d} I,  I = lemma lhs
///   lemma:     I <= m (d/delta_N)^d
///   combined:  rho <= m + m lambda_1^{-d} (d/delta_N)^d
///   scale:     lambda_1 delta_N >= 1
///   final:     rho <= (1 + d^d) m
/// each with multiplicative slack 1 + kChainSlack. Requires xi >= sigma.
/// Degree 0 is reported as satisfied with no links. rho_floor (see
/// rho_resolution) is subtracted from rho first, so that a direct value
/// sitting at the roundoff level is not compared against exact sums.
BoundChainReport bound_chain(double rho, const ResidualPolynomial& p, const DiscreteSpectralMeasure& mu_sigma,
                             double xi, double sigma, double rho_floor = 0.0);

/// sum_j s^2(lambda_j) w_j over the atoms of mu_sigma.
double rho_integral_identity(const ResidualPolynomial& p, const DiscreteSpectralMeasure& mu_sigma);

/// Builds mu_sigma = lambda^sigma |e_0|^2 and nu_xi = lambda^{xi+1} |e_0|^2
/// for a problem with spectral capability.
struct ProblemMeasures {
  DiscreteSpectralMeasure error;  ///< spectral measure of e_0 (sigma = 0)
  DiscreteSpectralMeasure nu;     ///< lambda^{xi+1} d|e_0|^2
};
ProblemMeasures problem_measures(const InverseProblem& problem, double xi);

}  // namespace thetacg
