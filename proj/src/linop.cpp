#include "thetacg/linop.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include <fftw3.h>

#include "thetacg/errors.hpp"

namespace thetacg {

void require_finite(const Vector& x, std::string_view what) {
  if (!x.allFinite()) {
    std::ostringstream os;
    os << what << " contains NaN or infinite entries";
    throw PreconditionViolation(os.str());
  }
}

void SelfAdjointOperator::check_dimension(Eigen::Index size) const {
  if (size != dimension()) {
    std::ostringstream os;
    os << "vector of length " << size << " given to an operator of dimension " << dimension();
    throw DimensionMismatch(os.str());
  }
}

Vector SelfAdjointOperator::apply(const Vector& x) const {
  check_dimension(x.size());
  return apply_unchecked(x);
}

const Vector& SelfAdjointOperator::eigenvalues() const {
  throw CapabilityError("operator has no spectral decomposition");
}

SpectralVector SelfAdjointOperator::to_spectral(const Vector&) const {
  throw CapabilityError("operator has no spectral decomposition");
}

Vector SelfAdjointOperator::from_spectral(const SpectralVector&) const {
  throw CapabilityError("operator has no spectral decomposition");
}

// ---------------------------------------------------------------------------

DiagonalOperator::DiagonalOperator(Vector eigenvalues) : eigenvalues_(std::move(eigenvalues)) {
  if (eigenvalues_.size() == 0) throw PreconditionViolation("diagonal operator needs dimension >= 1");
  require_finite(eigenvalues_, "eigenvalue list");
  if (eigenvalues_.minCoeff() < 0.0) throw PreconditionViolation("negative eigenvalue in diagonal operator");
}

Vector DiagonalOperator::apply_unchecked(const Vector& x) const {
  return eigenvalues_.cwiseProduct(x);
}

SpectralVector DiagonalOperator::to_spectral(const Vector& x) const {
  check_dimension(x.size());
  return x.cast<std::complex<double>>();
}

Vector DiagonalOperator::from_spectral(const SpectralVector& c) const {
  check_dimension(c.size());
  return c.real();
}

// ---------------------------------------------------------------------------
// FFTW planning is not thread safe, execution with the new-array interface is.

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

bool is_power_of_two(Eigen::Index n) { return n >= 2 && (n & (n - 1)) == 0; }
}  // namespace

struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit FftPlans(int n) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_complex* buf = fftw_alloc_complex(static_cast<size_t>(n));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
    backward = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    if (!forward || !backward) throw std::runtime_error("FFTW plan creation failed");
  }
  ~FftPlans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
};

FourierOperator::FourierOperator(Eigen::Index n, double half_width, double shift)
    : n_(n), half_width_(half_width), shift_(shift) {
  if (!is_power_of_two(n)) throw PreconditionViolation("Fourier grid size must be a power of two >= 2");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw PreconditionViolation("Fourier half-width L must be positive and finite");
  if (!(shift >= 0.0) || !std::isfinite(shift))
    throw PreconditionViolation("Fourier shift must be non-negative and finite");
  eigenvalues_.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double k = std::numbers::pi * static_cast<double>(mode(j)) / half_width;
    eigenvalues_[j] = k * k + shift;
  }
  plans_ = std::make_shared<FftPlans>(static_cast<int>(n));
}

Vector FourierOperator::grid() const {
  Vector x(n_);
  for (Eigen::Index i = 0; i < n_; ++i) x[i] = -half_width_ + static_cast<double>(i) * spacing();
  return x;
}

SpectralVector FourierOperator::to_spectral(const Vector& x) const {
  check_dimension(x.size());
  SpectralVector c = x.cast<std::complex<double>>();
  fftw_execute_dft(plans_->forward, as_fftw(c.data()), as_fftw(c.data()));
  c /= std::sqrt(static_cast<double>(n_));
  return c;
}

Vector FourierOperator::from_spectral(const SpectralVector& coefficients) const {
  check_dimension(coefficients.size());
  SpectralVector c = coefficients;
  fftw_execute_dft(plans_->backward, as_fftw(c.data()), as_fftw(c.data()));
  return c.real() / std::sqrt(static_cast<double>(n_));
}

Vector FourierOperator::apply_unchecked(const Vector& x) const {
  SpectralVector c = x.cast<std::complex<double>>();
  fftw_execute_dft(plans_->forward, as_fftw(c.data()), as_fftw(c.data()));
  c = c.cwiseProduct(eigenvalues_.cast<std::complex<double>>()) / static_cast<double>(n_);
  fftw_execute_dft(plans_->backward, as_fftw(c.data()), as_fftw(c.data()));
  return c.real();
}

// ---------------------------------------------------------------------------

double operator_norm(const SelfAdjointOperator& op) {
  if (op.has_spectrum()) return op.eigenvalues().maxCoeff();
  return estimate_norm(op);
}

double kernel_threshold(const SelfAdjointOperator& op) { return kKernelRelTol * operator_norm(op); }

SpectralVector fractional_scale(const SelfAdjointOperator& op, double t, const SpectralVector& c) {
  if (!op.has_spectrum()) throw CapabilityError("fractional powers need spectral capability");
  const Vector& lam = op.eigenvalues();
  if (c.size() != lam.size()) {
    std::ostringstream os;
    os << "coefficient vector of length " << c.size() << " for operator of dimension " << lam.size();
    throw DimensionMismatch(os.str());
  }
  const double thr = kKernelRelTol * lam.maxCoeff();
  if (t < 0.0) {
    double kernel2 = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j)
      if (lam[j] <= thr) kernel2 += std::norm(c[j]);
    const double kernel = std::sqrt(kernel2);
    const double total = c.norm();
    if (kernel > 1e-10 * total) {
      std::ostringstream os;
      os.precision(3);
      os << "negative power " << t << " applied to a vector whose kernel component has norm "
         << kernel << " (limit 1e-10 * " << total << ")";
      throw PreconditionViolation(os.str());
    }
  }
  SpectralVector out(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j)
    out[j] = lam[j] <= thr ? std::complex<double>(0.0) : c[j] * std::pow(lam[j], t);
  return out;
}

Vector fractional_apply(const SelfAdjointOperator& op, double t, const Vector& x) {
  if (!op.has_spectrum()) throw CapabilityError("fractional powers need spectral capability");
  return op.from_spectral(fractional_scale(op, t, op.to_spectral(x)));
}

double kernel_component_norm(const SelfAdjointOperator& op, const Vector& x) {
  if (!op.has_spectrum()) throw CapabilityError("kernel detection needs spectral capability");
  const SpectralVector c = op.to_spectral(x);
  const Vector& lam = op.eigenvalues();
  const double thr = kKernelRelTol * lam.maxCoeff();
  double s = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j)
    if (lam[j] <= thr) s += std::norm(c[j]);
  return std::sqrt(s);
}

double estimate_norm(const SelfAdjointOperator& op, const PowerIterationOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Vector x(op.dimension());
  for (auto& v : x) v = normal(rng);
  x.normalize();
  double estimate = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    Vector y = op.apply(x);
    const double rq = x.dot(y);
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    x = y / ny;
    if (it > 0 && std::abs(rq - estimate) <= options.relative_tolerance * std::abs(rq)) return rq;
    estimate = rq;
  }
  return estimate;
}

SelfAdjointnessReport check_self_adjoint(const SelfAdjointOperator& op, int trials, std::uint64_t seed) {
  SelfAdjointnessReport report;
  const double norm = std::max(operator_norm(op), std::numeric_limits<double>::min());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  report.min_rayleigh_quotient = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    Vector x(op.dimension()), y(op.dimension());
    for (auto& v : x) v = normal(rng);
    for (auto& v : y) v = normal(rng);
    const Vector ax = op.apply(x), ay = op.apply(y);
    const double defect = std::abs(x.dot(ay) - ax.dot(y)) / (x.norm() * y.norm() * norm);
    report.max_symmetry_defect = std::max(report.max_symmetry_defect, defect);
    report.min_rayleigh_quotient = std::min(report.min_rayleigh_quotient, x.dot(ax) / (x.squaredNorm() * norm));
  }
  report.symmetric = report.max_symmetry_defect <= 1e-10;
  report.nonnegative = report.min_rayleigh_quotient >= -1e-12;
  return report;
}

}  // namespace thetacg
