#pragma once

#include <limits>

#include <cstdint>
#include <memory>
#include <string_view>

#include <Eigen/Core>

namespace thetacg {

using Vector = Eigen::VectorXd;
using SpectralVector = Eigen::VectorXcd;

/// An eigenvalue is treated as zero iff lambda <= kKernelRelTol * ||A||.
inline constexpr double kKernelRelTol = 1e-12;
/// Spectral coefficients with |c_j| <= kSpectralNoiseRel * |x| are below what
/// a double-precision transform resolves; spectral measures and the
/// eigenbasis solvers treat them as zero.
inline constexpr double kSpectralNoiseRel = 64 * std::numeric_limits<double>::epsilon();

/// Throws PreconditionViolation if any entry of x is NaN or infinite.
void require_finite(const Vector& x, std::string_view what);

/// Non-negative self-adjoint operator on R^n.
///
/// Operators are immutable after construction; apply() and the spectral
/// queries are const and safe to call from several threads at once.
///
/// Operators with spectral capability expose an exact unitary
/// diagonalisation: eigenvalues()[j] is the eigenvalue attached to
/// coefficient j of to_spectral(x), and from_spectral inverts to_spectral.
class SelfAdjointOperator {
 public:
  virtual ~SelfAdjointOperator() = default;

  virtual Eigen::Index dimension() const noexcept = 0;

  /// Returns A x. Throws DimensionMismatch on a length mismatch.
  Vector apply(const Vector& x) const;

  virtual bool has_spectrum() const noexcept { return false; }
  virtual const Vector& eigenvalues() const;
  virtual SpectralVector to_spectral(const Vector& x) const;
  virtual Vector from_spectral(const SpectralVector& coefficients) const;

 protected:
  virtual Vector apply_unchecked(const Vector& x) const = 0;
  void check_dimension(Eigen::Index size) const;
};

/// diag(lambda_1, ..., lambda_n) in the standard basis.
class DiagonalOperator final : public SelfAdjointOperator {
 public:
  /// Throws PreconditionViolation on negative or non-finite entries.
  explicit DiagonalOperator(Vector eigenvalues);

  Eigen::Index dimension() const noexcept override { return eigenvalues_.size(); }
  bool has_spectrum() const noexcept override { return true; }
  const Vector& eigenvalues() const override { return eigenvalues_; }
  SpectralVector to_spectral(const Vector& x) const override;
  Vector from_spectral(const SpectralVector& coefficients) const override;

 protected:
  Vector apply_unchecked(const Vector& x) const override;

 private:
  Vector eigenvalues_;
};

struct FftPlans;

/// -d^2/dx^2 + shift on the periodic grid x_i = -L + i * 2L/n, i = 0..n-1,
/// diagonalised by the unitary discrete Fourier transform. Coefficient j
/// carries wavenumber k = pi m / L with m = j for j < n/2 and m = j - n
/// otherwise, so the eigenvalue is k^2 + shift. The spectrum is bounded by
/// (pi n / 2L)^2 + shift; refining the grid is how unboundedness is emulated.
class FourierOperator final : public SelfAdjointOperator {
 public:
  /// n must be a power of two (>= 2), half_width > 0, shift >= 0.
  FourierOperator(Eigen::Index n, double half_width, double shift);

  Eigen::Index dimension() const noexcept override { return n_; }
  bool has_spectrum() const noexcept override { return true; }
  const Vector& eigenvalues() const override { return eigenvalues_; }
  SpectralVector to_spectral(const Vector& x) const override;
  Vector from_spectral(const SpectralVector& coefficients) const override;

  double half_width() const noexcept { return half_width_; }
  double shift() const noexcept { return shift_; }
  double spacing() const noexcept { return 2.0 * half_width_ / static_cast<double>(n_); }
  /// Grid abscissae x_i.
  Vector grid() const;
  /// Signed Fourier mode index m of coefficient j.
  Eigen::Index mode(Eigen::Index j) const noexcept { return j < n_ / 2 ? j : j - n_; }

 protected:
  Vector apply_unchecked(const Vector& x) const override;

 private:
  Eigen::Index n_;
  double half_width_;
  double shift_;
  Vector eigenvalues_;
  std::shared_ptr<const FftPlans> plans_;
};

/// Largest eigenvalue when the spectrum is known, estimate_norm otherwise.
double operator_norm(const SelfAdjointOperator& op);

/// kKernelRelTol * operator_norm(op).
double kernel_threshold(const SelfAdjointOperator& op);

/// Multiplies every spectral coefficient of x by lambda^t. Coefficients at
/// lambda = 0 (see kernel_threshold) are mapped to zero for every t, so t = 0
/// projects onto (ker A)^perp and t < 0 acts as the pseudo-inverse power.
///
/// Throws CapabilityError without spectral capability, and
/// PreconditionViolation when t < 0 and the kernel component of x exceeds
/// 1e-10 ||x||.
Vector fractional_apply(const SelfAdjointOperator& op, double t, const Vector& x);

/// Spectral-coefficient version of fractional_apply; same conventions.
SpectralVector fractional_scale(const SelfAdjointOperator& op, double t,
                                const SpectralVector& coefficients);

/// Norm of the part of x in ker A (spectral operators only).
double kernel_component_norm(const SelfAdjointOperator& op, const Vector& x);

struct PowerIterationOptions {
  int max_iterations = 2000;
  double relative_tolerance = 1e-9;
  std::uint64_t seed = 0x5eed;
};

/// Rayleigh-quotient power iteration for the largest eigenvalue.
double estimate_norm(const SelfAdjointOperator& op, const PowerIterationOptions& options = {});

struct SelfAdjointnessReport {
  double max_symmetry_defect = 0.0;    ///< max |<x,Ay> - <Ax,y>| / (|x||y||A|)
  double min_rayleigh_quotient = 0.0;  ///< min <x,Ax> / (|x|^2 |A|)
  bool symmetric = true;
  bool nonnegative = true;
};

/// Randomised check of symmetry (1e-10) and non-negativity (-1e-12), both
/// relative to ||A||.
SelfAdjointnessReport check_self_adjoint(const SelfAdjointOperator& op, int trials = 8,
                                         std::uint64_t seed = 7);

}  // namespace thetacg
