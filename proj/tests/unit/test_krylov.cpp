#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracle.hpp"
#include "random_problems.hpp"
#include "thetacg/errors.hpp"
#include "thetacg/krylov.hpp"
#include "thetacg/orthopoly.hpp"

using namespace thetacg;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// A = diag(1, 2), g = (1, 2), f0 = 0, f = (1, 1).
InverseProblem diag12() {
  return InverseProblem(std::make_shared<DiagonalOperator>(vec({1, 2})), vec({1, 2}), Vector::Zero(2), vec({1, 1}));
}

// Spectral operator without a shortcut, to exercise the matrix-free paths
// on something other than a diagonal.
class DenseOperator final : public SelfAdjointOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Eigen::Index dimension() const noexcept override { return m_.rows(); }

 protected:
  Vector apply_unchecked(const Vector& x) const override { return m_ * x; }

 private:
  Eigen::MatrixXd m_;
};

Eigen::MatrixXd random_spd(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd b(n, n);
  for (auto& v : b.reshaped()) v = gauss(rng);
  return b.transpose() * b + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST(InverseProblem, ValidatesInputs) {
  auto op = std::make_shared<DiagonalOperator>(vec({1, 2}));
  EXPECT_THROW(InverseProblem(op, vec({1, 2, 3}), Vector::Zero(2)), DimensionMismatch);
  EXPECT_THROW(InverseProblem(op, vec({1, 2}), Vector::Zero(3)), DimensionMismatch);
  EXPECT_THROW(InverseProblem(op, vec({1, NAN}), Vector::Zero(2)), PreconditionViolation);
  EXPECT_THROW(InverseProblem(op, vec({1, 2}), Vector::Zero(2), vec({1, 2})), PreconditionViolation);
  auto k = std::make_shared<DiagonalOperator>(vec({0, 2}));
  EXPECT_THROW(InverseProblem(k, vec({1, 2}), Vector::Zero(2)), PreconditionViolation);
}

TEST(InverseProblem, ErrorRoutes) {
  const InverseProblem p = diag12();
  EXPECT_EQ(p.initial_error(), vec({-1, -1}));
  EXPECT_EQ(p.initial_residual(), vec({-1, -2}));
  // Kernel component of a known solution does not count.
  auto k = std::make_shared<DiagonalOperator>(vec({0, 2}));
  const InverseProblem q(k, vec({0, 2}), vec({5, 0}), vec({-3, 1}));
  EXPECT_LT(rel(q.initial_error(), vec({0, -1})), 1e-15);
  const InverseProblem r(k, vec({0, 2}), vec({5, 0}));
  EXPECT_LT(rel(r.initial_error(), vec({0, -1})), 1e-15);
}

TEST(RunCg, DiagonalExample) {
  const auto h = run_cg(diag12(), 2);
  ASSERT_EQ(h.records.size(), 3u);
  EXPECT_LT(rel(h.records[1].iterate, vec({5.0 / 9, 10.0 / 9})), 1e-15);
  EXPECT_LT(rel(h.records[2].iterate, vec({1, 1})), 1e-14);
  EXPECT_EQ(h.records[0].residual, vec({-1, -2}));
  for (const auto& r : h.records) EXPECT_EQ(r.residual, diag12().residual(r.iterate));
}

TEST(RunCg, ExactStartTerminatesImmediately) {
  const InverseProblem p(std::make_shared<DiagonalOperator>(vec({1, 2})), vec({1, 2}), vec({1, 1}), vec({1, 1}));
  const auto h = run_cg(p, 2);
  ASSERT_EQ(h.records.size(), 1u);
  EXPECT_EQ(h.termination, Termination::converged);
  EXPECT_EQ(h.records[0].residual.norm(), 0.0);
}

TEST(RunCg, CallbackAndStepLimit) {
  int calls = 0;
  const auto h = run_cg(diag12(), 1, [&](const IterateRecord& r) { EXPECT_EQ(r.n, calls++); });
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(h.termination, Termination::max_steps);
  EXPECT_THROW(run_cg(diag12(), 3), PreconditionViolation);
}

TEST(ThetaIterate, DiagonalExamples) {
  EXPECT_LT(rel(theta_iterate(diag12(), 1.0, 1).iterate, vec({5.0 / 9, 10.0 / 9})), 1e-15);
  EXPECT_LT(rel(theta_iterate(diag12(), 2.0, 1).iterate, vec({9.0 / 17, 18.0 / 17})), 1e-15);
  EXPECT_EQ(theta_iterate(diag12(), 1.0, 0).iterate, Vector::Zero(2));
  EXPECT_THROW(theta_iterate(diag12(), 0.5, 1), PreconditionViolation);
}

TEST(ThetaIterateSpectral, DiagonalExamples) {
  // theta = 0: minimise (1 + c)^2 + (1 + 2c)^2, c = -3/5, e_1 = (2/5, -1/5).
  const auto h = theta_iterate_spectral(diag12(), 0.0, 1).iterate;
  EXPECT_LT(rel(h - vec({1, 1}), vec({-0.4, 0.2})), 1e-14);
  EXPECT_LT(rel(theta_iterate_spectral(diag12(), 1.0, 1).iterate, vec({5.0 / 9, 10.0 / 9})), 1e-14);
  EXPECT_LT(rel(theta_iterate_spectral(diag12(), 2.0, 1).iterate, vec({9.0 / 17, 18.0 / 17})), 1e-14);
  EXPECT_LT(rel(theta_iterate_spectral(diag12(), 0.7, 2).iterate, vec({1, 1})), 1e-13);
}

TEST(ThetaIterate, NonIntegerThetaNeedsSpectrum) {
  auto op = std::make_shared<DenseOperator>(random_spd(4, 1));
  const InverseProblem p(op, Vector::Ones(4), Vector::Zero(4));
  EXPECT_THROW(theta_iterate(p, 1.5, 2), CapabilityError);
  EXPECT_THROW(theta_iterate_spectral(p, 1.0, 2), CapabilityError);
  EXPECT_NO_THROW(theta_iterate(p, 3.0, 2));
}

TEST(ThetaIterate, MatchesBruteForceOnRandomSet) {
  for (const auto& rp : fixtures::random_diagonal_set(25, 101)) {
    const auto& p = rp.problem;
    for (double theta : {1.0, 1.5, 2.0, 3.0}) {
      for (int n = 0; n <= p.dimension(); ++n) {
        const double ref = oracle::brute_force_iterate(p, theta, n).objective;
        const double got = oracle::extended_objective(p, theta, theta_iterate(p, theta, n).iterate);
        const double scale = oracle::extended_objective(p, theta, p.initial_guess());
        EXPECT_LE(std::abs(got - ref), 1e-8 * std::max(ref, 1e-10 * scale))
            << "dim " << p.dimension() << " theta " << theta << " N " << n;
      }
    }
  }
}

TEST(ThetaIterateSpectral, MatchesBruteForceForSmallTheta) {
  for (const auto& rp : fixtures::random_diagonal_set(15, 202)) {
    const auto& p = rp.problem;
    for (double theta : {0.0, 0.5}) {
      for (int n = 0; n <= p.dimension(); ++n) {
        const double ref = oracle::brute_force_iterate(p, theta, n).objective;
        const double got = oracle::extended_objective(p, theta, theta_iterate_spectral(p, theta, n).iterate);
        const double scale = oracle::extended_objective(p, theta, p.initial_guess());
        EXPECT_LE(std::abs(got - ref), 1e-8 * std::max(ref, 1e-10 * scale));
      }
    }
  }
}

TEST(ThetaIterate, CgPathEquivalence) {
  for (const auto& rp : fixtures::random_diagonal_set(30, 303)) {
    const auto& p = rp.problem;
    const auto cg = run_cg(p, static_cast<int>(p.dimension()), {}, CgOptions{0.0, 0.0});
    const auto th = theta_iterates(p, 1.0, static_cast<int>(p.dimension()));
    const std::size_t n = std::min(cg.records.size(), th.records.size());
    for (std::size_t k = 1; k < n; ++k)
      EXPECT_LE(rel(cg.records[k].iterate, th.records[k].iterate), 1e-10) << "N " << k;
  }
}

TEST(ThetaIterate, ObjectiveMonotone) {
  for (const auto& rp : fixtures::random_diagonal_set(20, 404)) {
    const auto& p = rp.problem;
    for (double theta : {1.0, 2.0}) {
      const auto h = theta_iterates(p, theta, static_cast<int>(p.dimension()));
      const double o0 = theta_objective(p, theta, h.records[0].iterate);
      double prev = o0;
      for (const auto& r : h.records) {
        const double o = theta_objective(p, theta, r.iterate);
        EXPECT_LE(o, prev + 1e-10 * o0);
        prev = o;
      }
    }
  }
}

TEST(ThetaIterate, FiniteTermination) {
  for (const auto& rp : fixtures::random_diagonal_set(20, 505)) {
    const auto& p = rp.problem;
    const int n = static_cast<int>(p.dimension());
    for (double theta : {1.0, 2.0}) {
      const double o0 = oracle::extended_objective(p, theta, p.initial_guess());
      const auto h = theta_iterate_spectral(p, theta, n);
      EXPECT_LE(oracle::extended_objective(p, theta, h.iterate), 1e-10 * o0);
    }
  }
}

TEST(ThetaIterate, KernelComponentPreserved) {
  auto op = std::make_shared<FourierOperator>(64, 5.0, 0.0);
  const Vector x = op->grid();
  const Vector f = (-x.array().square()).exp().matrix();
  Vector g = op->apply(f);
  const Vector f0 = Vector::Constant(64, 0.3) + 0.1 * x.array().sin().matrix();
  const InverseProblem p(op, g, f0, f);
  const double k0 = kernel_component_norm(*op, f0);
  for (double theta : {1.0, 2.0}) {
    for (const auto& r : theta_iterates(p, theta, 20).records)
      EXPECT_NEAR(kernel_component_norm(*op, r.iterate), k0, 1e-10 * f0.norm());
    for (const auto& r : theta_iterates_spectral(p, theta, 20).records)
      EXPECT_NEAR(kernel_component_norm(*op, r.iterate), k0, 1e-10 * f0.norm());
  }
  for (const auto& r : run_cg(p, 20).records)
    EXPECT_NEAR(kernel_component_norm(*op, r.iterate), k0, 1e-10 * f0.norm());
}

TEST(ThetaIterate, PolynomialForm) {
  // e_N = s_N(A) e_0 with s_N from the orthogonal polynomials of nu_xi.
  for (const auto& rp : fixtures::random_diagonal_set(20, 606)) {
    const auto& p = rp.problem;
    for (double xi : {1.0, 2.0}) {
      const auto pm = problem_measures(p, xi);
      const int n_max = static_cast<int>(p.dimension()) - 1;
      const auto fam = residual_polynomials(pm.nu, n_max);
      const auto h = theta_iterates_spectral(p, xi, n_max);
      for (std::size_t k = 0; k < fam.polynomials.size() && k < h.records.size(); ++k) {
        Vector e(p.dimension());
        for (Eigen::Index j = 0; j < e.size(); ++j) e[j] = fam.polynomials[k](rp.eigenvalues[j]) * rp.initial_error[j];
        const Vector solver = p.error(h.records[k].iterate);
        EXPECT_LE((solver - e).norm(), 1e-8 * std::max(e.norm(), 1e-6 * rp.initial_error.norm())) << "N " << k;
      }
    }
  }
}

TEST(Lanczos, Examples) {
  DiagonalOperator d(vec({1, 2, 3, 4}));
  const Vector b = vec({1, 1, 1, 1});
  const auto one = lanczos(d, b, 1);
  EXPECT_NEAR(one.jacobi.alpha[0], b.dot(d.apply(b)) / b.squaredNorm(), 1e-15);

  const auto eig = lanczos(d, vec({0, 0, 1, 0}), 3);
  EXPECT_TRUE(eig.breakdown);
  ASSERT_EQ(eig.jacobi.size(), 1);
  EXPECT_DOUBLE_EQ(eig.jacobi.alpha[0], 3.0);
  EXPECT_THROW(lanczos(d, Vector::Zero(4), 2), PreconditionViolation);
}

TEST(Lanczos, FullRunRecoversSpectrum) {
  const Eigen::MatrixXd a = random_spd(6, 77);
  DenseOperator op(a);
  const auto lz = lanczos(op, Vector::Ones(6), 6);
  ASSERT_EQ(lz.jacobi.size(), 6);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const auto ritz = tridiagonal_eigenvalues(lz.jacobi.alpha, lz.jacobi.beta);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(ritz[i], es.eigenvalues()[i], 1e-8 * es.eigenvalues().maxCoeff());
  const Eigen::MatrixXd qtq = lz.basis.transpose() * lz.basis;
  EXPECT_LT((qtq - Eigen::MatrixXd::Identity(6, 6)).norm(), 1e-12);
}

TEST(Lanczos, ThreeTermRelation) {
  FourierOperator op(128, 10.0, 1.0);
  const Vector x = op.grid();
  const Vector b = (-x.array().square()).exp().matrix();
  const auto lz = lanczos(op, b, 15);
  const Eigen::Index k = lz.jacobi.size();
  Eigen::MatrixXd defect = lz.applied - lz.basis * lz.jacobi.dense();
  defect.col(k - 1) -= lz.remainder;
  EXPECT_LT(defect.norm(), 1e-10 * operator_norm(op));
  EXPECT_LT((lz.basis.transpose() * lz.basis - Eigen::MatrixXd::Identity(k, k)).norm(), 1e-12);
}

TEST(BruteForce, ZeroStepsIsInitialGuess) {
  const auto r = oracle::brute_force_iterate(diag12(), 1.0, 0);
  EXPECT_EQ(r.iterate, Vector::Zero(2));
  EXPECT_NEAR(r.objective, 3.0, 1e-15);
  EXPECT_LT(rel(oracle::brute_force_iterate(diag12(), 1.0, 1).iterate, vec({5.0 / 9, 10.0 / 9})), 1e-15);
}
