#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "thetacg/linop.hpp"

namespace thetacg {

/// A f = g with g in ran A, initial guess f0 and optionally a known exact
/// solution f (any solution; only its component on (ker A)^perp matters).
///
/// Residuals follow the sign R = A h - g throughout.
class InverseProblem {
 public:
  InverseProblem(std::shared_ptr<const SelfAdjointOperator> op, Vector datum, Vector initial_guess,
                 std::optional<Vector> known_solution = std::nullopt);

  const SelfAdjointOperator& op() const noexcept { return *op_; }
  const std::shared_ptr<const SelfAdjointOperator>& op_ptr() const noexcept { return op_; }
  const Vector& datum() const noexcept { return g_; }
  const Vector& initial_guess() const noexcept { return f0_; }
  const std::optional<Vector>& known_solution() const noexcept { return f_; }
  Eigen::Index dimension() const noexcept { return op_->dimension(); }
  /// operator_norm(op()), computed once.
  double norm() const noexcept { return norm_; }

  Vector residual(const Vector& h) const;
  Vector initial_residual() const { return residual(f0_); }

  /// h - P_S h, where S is the solution set. Uses, in order of preference,
  /// the known solution projected onto (ker A)^perp, the spectral
  /// pseudo-inverse of the residual, or (injective, matrix-free operators
  /// with a known solution) the plain difference h - f.
  Vector error(const Vector& h) const;
  Vector initial_error() const { return error(f0_); }

 private:
  std::shared_ptr<const SelfAdjointOperator> op_;
  Vector g_;
  Vector f0_;
  std::optional<Vector> f_;
  double norm_ = 0.0;
};

enum class Termination { max_steps, converged, breakdown };
std::string_view to_string(Termination t) noexcept;

struct IterateRecord {
  int n = 0;
  Vector iterate;
  Vector residual;  ///< A * iterate - g, recomputed from the iterate
};

struct IterateHistory {
  double theta = 1.0;
  std::vector<IterateRecord> records;  ///< records[k].n == k
  Termination termination = Termination::max_steps;
  /// Dimension of the Krylov space actually reached (records past it repeat).
  int krylov_dimension = 0;
};

struct CgOptions {
  double tol_rel = 1e-12;
  double tol_abs = 0.0;
  /// <p, Ap> <= breakdown_rel * ||A|| * ||p||^2 stops the iteration.
  double breakdown_rel = 1e-13;
  /// Keep the residuals orthogonal to all previous ones (two Gram-Schmidt
  /// passes). Without it the iterates drift from the Krylov minimisers once
  /// orthogonality is lost.
  bool reorthogonalize = true;
};

/// Conjugate gradients from f0 with the residual R = A f - g:
///   p_0 = -R_0,  f += alpha p,  R += alpha A p,  alpha = |R|^2 / <p, Ap>.
/// Stops after n_max steps, when |R_N| <= tol_abs + tol_rel |g|, or on breakdown.
IterateHistory run_cg(const InverseProblem& problem, int n_max,
                      const std::function<void(const IterateRecord&)>& callback = {},
                      const CgOptions& options = {});

/// Symmetric tridiagonal matrix with diagonal alpha (size k) and
/// off-diagonal beta (size k-1).
struct JacobiMatrix {
  Vector alpha;
  Vector beta;
  Eigen::Index size() const noexcept { return alpha.size(); }
  Eigen::MatrixXd dense() const;
  /// Leading k x k block.
  JacobiMatrix leading(Eigen::Index k) const;
};

struct LanczosResult {
  Eigen::MatrixXd basis;    ///< n x k, orthonormal columns q_1..q_k
  Eigen::MatrixXd applied;  ///< A * basis
  JacobiMatrix jacobi;      ///< basis^T A basis
  Vector remainder;         ///< A Q - Q T = remainder * e_k^T
  bool breakdown = false;   ///< invariant subspace found before N steps
};

/// Lanczos process with full (twice applied) reorthogonalisation.
/// Breakdown when the next beta is <= 1e-13 * ||A||; op_norm < 0 means
/// operator_norm(op) is computed here.
LanczosResult lanczos(const SelfAdjointOperator& op, const Vector& b, int n_steps,
                      double op_norm = -1.0);

struct ThetaIterate {
  Vector iterate;
  int krylov_dimension = 0;
  bool terminated = false;  ///< the Krylov space became invariant before N
};

/// The minimiser of |A^{theta/2}(h - P_S h)| over h in f0 + K_N(A, R_0).
///
/// theta = 1 and odd theta on operators without spectrum solve the Gram
/// system (A^a Q)^T A (A^a Q) y = -(A^a Q)^T A^a R_0 by Cholesky; other theta
/// minimise |A^{theta/2 - 1} R_0 + A^{theta/2} Q y| by Householder QR.
/// Non-integer theta needs spectral capability. Requires theta >= 1.
ThetaIterate theta_iterate(const InverseProblem& problem, double theta, int n);

/// All iterates N = 0..n_max from one Lanczos run.
IterateHistory theta_iterates(const InverseProblem& problem, double theta, int n_max);

/// Same minimiser computed in the eigenbasis for any theta >= 0.
ThetaIterate theta_iterate_spectral(const InverseProblem& problem, double theta, int n);
IterateHistory theta_iterates_spectral(const InverseProblem& problem, double theta, int n_max);

/// |A^{theta/2}(h - P_S h)|^2, evaluated spectrally when possible.
double theta_objective(const InverseProblem& problem, double theta, const Vector& h);

}  // namespace thetacg
