#include "thetacg/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/QR>

#include "thetacg/errors.hpp"

namespace thetacg {

namespace {

void require_same_size(const Vector& v, Eigen::Index n, std::string_view what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << " has length " << v.size() << ", operator dimension is " << n;
    throw DimensionMismatch(os.str());
  }
}

bool is_integer(double t) { return std::isfinite(t) && t == std::round(t); }

void check_step_count(const InverseProblem& problem, int n) {
  if (n < 0 || n > problem.dimension()) {
    std::ostringstream os;
    os << "iteration count " << n << " outside [0, " << problem.dimension() << "]";
    throw PreconditionViolation(os.str());
  }
}

// Relative pivot size below which a leading block is treated as singular.
constexpr double kPivotRelTol = 1e-14;

// Solutions y_k of the leading k x k problems, k = 0..count-1 (y_0 empty).
struct LeadingSolutions {
  std::vector<Vector> y;
  int usable = 0;
};

// Cholesky of M without pivoting, so that the factor of every leading block
// is the leading block of the factor. Stops at the first tiny pivot.
LeadingSolutions gram_solutions(const Eigen::MatrixXd& m, const Vector& rhs) {
  const Eigen::Index k = m.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k, k);
  const double scale = k > 0 ? m.diagonal().cwiseAbs().maxCoeff() : 0.0;
  int usable = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > kPivotRelTol * scale)) break;
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < k; ++i)
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    usable = static_cast<int>(j) + 1;
  }
  LeadingSolutions out;
  out.usable = usable;
  out.y.emplace_back();
  for (int n = 1; n <= usable; ++n) {
    auto ln = l.topLeftCorner(n, n).triangularView<Eigen::Lower>();
    Vector z = ln.solve(rhs.head(n));
    out.y.push_back(ln.transpose().solve(z));
  }
  return out;
}

// Least squares min |target + W y| over the leading column blocks of W.
template <typename Scalar>
struct LeadingSolutionsT {
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> y;
  int usable = 0;
};

template <typename Scalar>
LeadingSolutionsT<Scalar> least_squares_leading(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& w,
                                                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& target) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index k = w.cols();
  LeadingSolutionsT<Scalar> out;
  out.y.emplace_back();
  if (k == 0) return out;
  Eigen::HouseholderQR<Mat> qr(w);
  const Vec z = qr.householderQ().adjoint() * (-target);
  const Mat& r = qr.matrixQR();
  const Scalar scale = r.diagonal().head(k).cwiseAbs().maxCoeff();
  int usable = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(std::abs(r(j, j)) > Scalar(kPivotRelTol) * scale)) break;
    usable = static_cast<int>(j) + 1;
  }
  out.usable = usable;
  for (int n = 1; n <= usable; ++n)
    out.y.push_back(r.topLeftCorner(n, n).template triangularView<Eigen::Upper>().solve(z.head(n)));
  return out;
}

LeadingSolutions least_squares_solutions(const Eigen::MatrixXd& w, const Vector& target) {
  auto s = least_squares_leading<double>(w, target);
  return {std::move(s.y), s.usable};
}

Eigen::MatrixXd apply_columns(const SelfAdjointOperator& op, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(b.rows(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) out.col(j) = op.apply(b.col(j));
  return out;
}

Eigen::MatrixXd fractional_columns(const SelfAdjointOperator& op, double t, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(b.rows(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) out.col(j) = fractional_apply(op, t, b.col(j));
  return out;
}

IterateRecord make_record(const InverseProblem& problem, int n, Vector iterate) {
  IterateRecord rec;
  rec.n = n;
  rec.residual = problem.residual(iterate);
  rec.iterate = std::move(iterate);
  return rec;
}

}  // namespace

// ---------------------------------------------------------------------------

InverseProblem::InverseProblem(std::shared_ptr<const SelfAdjointOperator> op, Vector datum,
                               Vector initial_guess, std::optional<Vector> known_solution)
    : op_(std::move(op)), g_(std::move(datum)), f0_(std::move(initial_guess)), f_(std::move(known_solution)) {
  if (!op_) throw PreconditionViolation("inverse problem without an operator");
  const Eigen::Index n = op_->dimension();
  require_same_size(g_, n, "datum g");
  require_same_size(f0_, n, "initial guess f0");
  require_finite(g_, "datum g");
  require_finite(f0_, "initial guess f0");
  norm_ = operator_norm(*op_);
  if (f_) {
    require_same_size(*f_, n, "known solution f");
    require_finite(*f_, "known solution f");
    const double defect = (op_->apply(*f_) - g_).norm();
    const double bound = 1e-10 * (norm_ * f_->norm() + g_.norm());
    if (defect > bound) {
      std::ostringstream os;
      os << "known solution is inconsistent with the datum: |Af - g| = " << defect << " > " << bound;
      throw PreconditionViolation(os.str());
    }
  }
  if (op_->has_spectrum()) {
    const double kernel = kernel_component_norm(*op_, g_);
    if (kernel > 1e-10 * g_.norm()) {
      std::ostringstream os;
      os << "datum g is not in ran A: kernel component has norm " << kernel;
      throw PreconditionViolation(os.str());
    }
  }
}

Vector InverseProblem::residual(const Vector& h) const { return op_->apply(h) - g_; }

Vector InverseProblem::error(const Vector& h) const {
  require_same_size(h, dimension(), "iterate");
  if (op_->has_spectrum()) {
    if (f_) return fractional_apply(*op_, 0.0, h - *f_);
    return fractional_apply(*op_, -1.0, residual(h));
  }
  if (f_) return h - *f_;
  throw CapabilityError("error h - P_S h needs a known solution or spectral capability");
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::max_steps: return "max_steps";
    case Termination::converged: return "converged";
    case Termination::breakdown: return "breakdown";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

IterateHistory run_cg(const InverseProblem& problem, int n_max,
                      const std::function<void(const IterateRecord&)>& callback, const CgOptions& options) {
  check_step_count(problem, n_max);
  const SelfAdjointOperator& a = problem.op();
  IterateHistory hist;
  hist.theta = 1.0;

  Vector f = problem.initial_guess();
  Vector r = problem.residual(f);
  hist.records.push_back({0, f, r});
  if (callback) callback(hist.records.back());

  const double stop = options.tol_abs + options.tol_rel * problem.datum().norm();
  double rr = r.squaredNorm();
  if (std::sqrt(rr) <= stop) {
    hist.termination = Termination::converged;
    return hist;
  }
  Vector p = -r;
  // Normalised residuals R_0..R_{k-1}, mutually orthogonal in exact arithmetic.
  Eigen::MatrixXd basis;
  if (options.reorthogonalize) {
    basis.resize(r.size(), std::min<Eigen::Index>(n_max, r.size()) + 1);
    basis.col(0) = r / std::sqrt(rr);
  }
  for (int k = 1; k <= n_max; ++k) {
    const Vector ap = a.apply(p);
    const double pap = p.dot(ap);
    if (!(pap > options.breakdown_rel * problem.norm() * p.squaredNorm())) {
      hist.termination = Termination::breakdown;
      return hist;
    }
    const double alpha = rr / pap;
    f += alpha * p;
    r += alpha * ap;
    hist.records.push_back(make_record(problem, k, f));
    hist.krylov_dimension = k;
    if (callback) callback(hist.records.back());
    if (options.reorthogonalize && k < basis.cols()) {
      const auto q = basis.leftCols(k);
      for (int pass = 0; pass < 2; ++pass) r -= q * (q.transpose() * r);
    }
    const double rr_new = r.squaredNorm();
    if (options.reorthogonalize && k < basis.cols() && rr_new > 0.0) basis.col(k) = r / std::sqrt(rr_new);
    if (std::sqrt(rr_new) <= stop) {
      hist.termination = Termination::converged;
      return hist;
    }
    p = -r + (rr_new / rr) * p;
    rr = rr_new;
  }
  hist.termination = Termination::max_steps;
  return hist;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd JacobiMatrix::dense() const {
  const Eigen::Index k = size();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) t(i, i) = alpha[i];
  for (Eigen::Index i = 0; i + 1 < k; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
  return t;
}

JacobiMatrix JacobiMatrix::leading(Eigen::Index k) const {
  k = std::min(k, size());
  return {alpha.head(k), beta.head(std::max<Eigen::Index>(k - 1, 0))};
}

LanczosResult lanczos(const SelfAdjointOperator& op, const Vector& b, int n_steps, double op_norm) {
  const Eigen::Index n = op.dimension();
  require_same_size(b, n, "Lanczos start vector");
  if (n_steps < 0 || n_steps > n) throw PreconditionViolation("Lanczos step count outside [0, dimension]");
  const double bnorm = b.norm();
  if (!(bnorm > 0.0)) throw PreconditionViolation("Lanczos start vector is zero");
  if (op_norm < 0.0) op_norm = operator_norm(op);

  LanczosResult res;
  res.basis.resize(n, n_steps);
  res.applied.resize(n, n_steps);
  Vector alpha(n_steps), beta(std::max(n_steps - 1, 0));
  Vector q = b / bnorm;
  int k = 0;
  res.remainder = Vector::Zero(n);
  while (k < n_steps) {
    res.basis.col(k) = q;
    Vector w = op.apply(q);
    res.applied.col(k) = w;
    alpha[k] = q.dot(w);
    auto basis = res.basis.leftCols(k + 1);
    for (int pass = 0; pass < 2; ++pass) w -= basis * (basis.transpose() * w);
    const double bk = w.norm();
    ++k;
    if (k == n_steps) {
      res.remainder = w;
      break;
    }
    if (bk <= 1e-13 * op_norm) {
      res.remainder = w;
      res.breakdown = true;
      break;
    }
    beta[k - 1] = bk;
    q = w / bk;
  }
  res.basis.conservativeResize(n, k);
  res.applied.conservativeResize(n, k);
  res.jacobi.alpha = alpha.head(k);
  res.jacobi.beta = beta.head(std::max(k - 1, 0));
  return res;
}

// ---------------------------------------------------------------------------

IterateHistory theta_iterates(const InverseProblem& problem, double theta, int n_max) {
  if (!(theta >= 1.0) || !std::isfinite(theta))
    throw PreconditionViolation("matrix-free theta-iterates need theta >= 1");
  check_step_count(problem, n_max);
  const SelfAdjointOperator& a = problem.op();
  const bool spectral = a.has_spectrum();
  if (!is_integer(theta) && !spectral)
    throw CapabilityError("non-integer theta needs an operator with spectral capability");

  IterateHistory hist;
  hist.theta = theta;
  const Vector& f0 = problem.initial_guess();
  const Vector r0 = problem.initial_residual();
  hist.records.push_back({0, f0, r0});
  if (r0.norm() == 0.0) {
    hist.termination = Termination::converged;
    return hist;
  }
  if (n_max == 0) return hist;

  const LanczosResult lz = lanczos(a, r0, n_max, problem.norm());
  const Eigen::MatrixXd& q = lz.basis;

  const bool odd = is_integer(theta) && static_cast<long>(theta) % 2 == 1;
  const bool even = is_integer(theta) && !odd;
  LeadingSolutions sol;
  if (theta == 1.0 || (odd && !spectral)) {
    const int half = static_cast<int>((theta - 1.0) / 2.0);
    Eigen::MatrixXd b = q;
    Vector r = r0;
    for (int i = 0; i < half; ++i) {
      b = apply_columns(a, b);
      r = a.apply(r);
    }
    const Eigen::MatrixXd ab = half == 0 ? lz.applied : apply_columns(a, b);
    Eigen::MatrixXd m = b.transpose() * ab;
    m = 0.5 * (m + m.transpose()).eval();
    sol = gram_solutions(m, -(b.transpose() * r));
  } else if (even) {
    const int half = static_cast<int>(theta / 2.0);
    Eigen::MatrixXd w = lz.applied;
    Vector target = r0;
    for (int i = 1; i < half; ++i) {
      w = apply_columns(a, w);
      target = a.apply(target);
    }
    sol = least_squares_solutions(w, target);
  } else {
    sol = least_squares_solutions(fractional_columns(a, theta / 2.0, q),
                                  fractional_apply(a, theta / 2.0 - 1.0, r0));
  }

  for (int n = 1; n <= sol.usable; ++n)
    hist.records.push_back(make_record(problem, n, f0 + q.leftCols(n) * sol.y[n]));
  hist.krylov_dimension = sol.usable;
  hist.termination = sol.usable < n_max ? Termination::breakdown : Termination::max_steps;
  return hist;
}

namespace {
ThetaIterate pick(const IterateHistory& hist, int n) {
  ThetaIterate out;
  const int last = static_cast<int>(hist.records.size()) - 1;
  out.iterate = hist.records[static_cast<std::size_t>(std::min(n, last))].iterate;
  out.krylov_dimension = std::min(n, last);
  out.terminated = n > last;
  return out;
}
}  // namespace

ThetaIterate theta_iterate(const InverseProblem& problem, double theta, int n) {
  return pick(theta_iterates(problem, theta, n), n);
}

IterateHistory theta_iterates_spectral(const InverseProblem& problem, double theta, int n_max) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw PreconditionViolation("theta must be >= 0");
  check_step_count(problem, n_max);
  const SelfAdjointOperator& a = problem.op();
  if (!a.has_spectrum()) throw CapabilityError("spectral theta-iterates need spectral capability");

  IterateHistory hist;
  hist.theta = theta;
  const Vector& f0 = problem.initial_guess();
  hist.records.push_back({0, f0, problem.initial_residual()});

  // In the eigenbasis e_0 has coefficients c_j = phase_j * amp_j, and every
  // admissible error is p(lambda_j) c_j with p(0) = 1, deg p <= N.
  const SpectralVector c = a.to_spectral(problem.initial_error());
  const Vector& lam_raw = a.eigenvalues();
  const double thr = kKernelRelTol * lam_raw.maxCoeff();
  const Eigen::Index dim = c.size();
  const double floor = kSpectralNoiseRel * c.norm();
  Vector lam(dim), amp(dim), weight(dim);
  SpectralVector phase(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const bool kernel = lam_raw[j] <= thr;
    lam[j] = kernel ? 0.0 : lam_raw[j];
    amp[j] = kernel || std::abs(c[j]) <= floor ? 0.0 : std::abs(c[j]);
    phase[j] = amp[j] > 0.0 ? c[j] / amp[j] : std::complex<double>(0.0);
    weight[j] = kernel ? 0.0 : std::pow(lam[j], theta / 2.0);
  }
  if (lam.cwiseProduct(amp).norm() == 0.0) {
    hist.termination = Termination::converged;
    return hist;
  }
  if (n_max == 0) return hist;

  // Lanczos on diag(lambda) from lambda * amp and the weighted least squares
  // run in long double: the coefficients of smooth data span more orders of
  // magnitude than double resolves relative to the basis vectors.
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const VecL laml = lam.cast<long double>();
  const VecL ampl = amp.cast<long double>();
  const VecL start = laml.cwiseProduct(ampl);
  const long double breakdown_tol = 1e-16L * laml.maxCoeff();
  MatL basis(dim, n_max);
  VecL q = start / start.norm();
  int steps = 0;
  while (steps < n_max) {
    basis.col(steps) = q;
    VecL w = laml.cwiseProduct(q);
    auto done = basis.leftCols(steps + 1);
    for (int pass = 0; pass < 2; ++pass) w -= done * (done.transpose() * w);
    ++steps;
    const long double bk = w.norm();
    if (steps == n_max || bk <= breakdown_tol) break;
    q = w / bk;
  }
  basis.conservativeResize(dim, steps);
  VecL weight_l = weight.cast<long double>();
  const MatL wmat = weight_l.asDiagonal() * basis;
  const auto sol = least_squares_leading<long double>(wmat, VecL(weight_l.cwiseProduct(ampl)));

  for (int n = 1; n <= sol.usable; ++n) {
    const VecL values = ampl + basis.leftCols(n) * sol.y[n];
    SpectralVector delta(dim);
    for (Eigen::Index j = 0; j < dim; ++j)
      delta[j] = amp[j] > 0.0 ? phase[j] * static_cast<double>(values[j]) - c[j] : 0.0;
    hist.records.push_back(make_record(problem, n, f0 + a.from_spectral(delta)));
  }
  hist.krylov_dimension = sol.usable;
  hist.termination = sol.usable < n_max ? Termination::breakdown : Termination::max_steps;
  return hist;
}

ThetaIterate theta_iterate_spectral(const InverseProblem& problem, double theta, int n) {
  return pick(theta_iterates_spectral(problem, theta, n), n);
}

double theta_objective(const InverseProblem& problem, double theta, const Vector& h) {
  const Vector e = problem.error(h);
  const SelfAdjointOperator& a = problem.op();
  if (a.has_spectrum()) {
    const SpectralVector c = a.to_spectral(e);
    const Vector& lam = a.eigenvalues();
    const double thr = kKernelRelTol * lam.maxCoeff();
    double s = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j)
      if (lam[j] > thr) s += std::pow(lam[j], theta) * std::norm(c[j]);
    return s;
  }
  if (!is_integer(theta) || theta < 0.0)
    throw CapabilityError("non-integer theta objective needs spectral capability");
  Vector v = e;
  const int half = static_cast<int>(theta) / 2;
  for (int i = 0; i < half; ++i) v = a.apply(v);
  if (static_cast<int>(theta) % 2 == 1) return v.dot(a.apply(v));
  return v.squaredNorm();
}

}  // namespace thetacg
