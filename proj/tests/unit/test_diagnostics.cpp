#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "random_problems.hpp"
#include "thetacg/diagnostics.hpp"
#include "thetacg/errors.hpp"
#include "thetacg/orthopoly.hpp"

using namespace thetacg;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

InverseProblem diag12() {
  return InverseProblem(std::make_shared<DiagonalOperator>(vec({1, 2})), vec({1, 2}), Vector::Zero(2), vec({1, 1}));
}

class DenseOperator final : public SelfAdjointOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Eigen::Index dimension() const noexcept override { return m_.rows(); }

 protected:
  Vector apply_unchecked(const Vector& x) const override { return m_ * x; }

 private:
  Eigen::MatrixXd m_;
};

std::vector<ConvergenceRecord> records_from(const std::vector<double>& rho0, const std::vector<double>& rho1) {
  std::vector<ConvergenceRecord> out;
  for (std::size_t n = 0; n < rho0.size(); ++n) {
    ConvergenceRecord r;
    r.n = static_cast<int>(n);
    r.rho[0.0] = rho0[n];
    r.rho[1.0] = rho1[n];
    r.n_sq_rho1 = static_cast<double>(n * n) * rho1[n];
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST(Rho, DiagonalExample) {
  const InverseProblem p = diag12();
  const Vector f1 = vec({5.0 / 9, 10.0 / 9});
  EXPECT_NEAR(rho(p, f1, 0.0), 17.0 / 81.0, 1e-16);
  EXPECT_NEAR(rho(p, f1, 1.0), 2.0 / 9.0, 1e-16);
  // Residual (-4/9, 2/9).
  EXPECT_NEAR(rho(p, f1, 2.0), 20.0 / 81.0, 1e-16);
  for (double s : {-1.0, 0.0, 0.5, 1.0, 2.0, 3.0}) EXPECT_EQ(rho(p, vec({1, 1}), s), 0.0);
}

TEST(Rho, MatrixFreeBranches) {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 3;
  auto op = std::make_shared<DenseOperator>(a);
  const Vector f = vec({1, -1});
  const InverseProblem p(op, a * f, Vector::Zero(2), f);
  const Vector h = vec({0.5, 0.5});
  const Vector e = h - f;
  EXPECT_NEAR(rho(p, h, 0.0), e.squaredNorm(), 1e-15);
  EXPECT_NEAR(rho(p, h, 1.0), e.dot(a * e), 1e-14);
  EXPECT_NEAR(rho(p, h, 2.0), (a * e).squaredNorm(), 1e-14);
  EXPECT_THROW(rho(p, h, 0.5), CapabilityError);
  EXPECT_THROW(rho(p, h, -1.0), CapabilityError);
  const InverseProblem unknown(op, a * f, Vector::Zero(2));
  EXPECT_THROW(rho(unknown, h, 0.0), CapabilityError);
}

TEST(Rho, SpectralMatchesMatrixFormulas) {
  for (const auto& rp : fixtures::random_diagonal_set(30, 808)) {
    const InverseProblem& p = rp.problem;
    const Vector& h = p.initial_guess();
    const Vector e = rp.initial_error;
    const Vector ae = p.op().apply(e);
    EXPECT_NEAR(rho(p, h, 0.0), e.squaredNorm(), 1e-10 * e.squaredNorm());
    EXPECT_NEAR(rho(p, h, 1.0), e.dot(ae), 1e-10 * e.dot(ae));
    EXPECT_NEAR(rho(p, h, 2.0), ae.squaredNorm(), 1e-10 * ae.squaredNorm());
  }
}

TEST(Rho, NegativeSigmaNeedsCleanKernel) {
  auto op = std::make_shared<DiagonalOperator>(vec({0, 2}));
  const InverseProblem p(op, vec({0, 2}), Vector::Zero(2), vec({0, 1}));
  EXPECT_NEAR(rho(p, vec({0, 1.5}), -2.0), 0.0625, 1e-16);
  // h - f has a kernel component: fine for sigma >= 0, where only lambda > 0
  // contributes, but not in the class for sigma < 0.
  EXPECT_THROW(rho(p, vec({1, 1.5}), -2.0), PreconditionViolation);
  EXPECT_NEAR(rho(p, vec({1, 1.5}), 0.0), 0.25, 1e-15);
}

TEST(USigma, Examples) {
  auto op = std::make_shared<DiagonalOperator>(vec({0, 2}));
  const InverseProblem p(op, vec({0, 2}), Vector::Zero(2), vec({0, 1}));
  const Vector u = u_sigma(p, vec({0, 1.5}), -2.0);
  EXPECT_NEAR(u[0], 0.0, 1e-16);
  EXPECT_NEAR(u[1], 0.25, 1e-16);
  EXPECT_NEAR(fractional_apply(*op, 1.0, u)[1], 0.5, 1e-15);

  const InverseProblem q = diag12();
  const Vector h = vec({0.3, -0.7});
  EXPECT_LT((u_sigma(q, h, 0.0) - (h - vec({1, 1}))).norm(), 1e-15);
  for (double s : {-1.0, 0.0, 0.5, 2.0}) EXPECT_NEAR(u_sigma(q, h, s).squaredNorm(), rho(q, h, s), 1e-12 * rho(q, h, s));
}

TEST(USigma, SemigroupAndNormBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 2.0);
  for (const auto& rp : fixtures::random_diagonal_set(30, 707)) {
    const InverseProblem& p = rp.problem;
    const Vector& h = p.initial_guess();
    const double s = unif(rng), sp = s + std::abs(unif(rng));
    const Vector lhs = u_sigma(p, h, sp);
    const Vector rhs = fractional_apply(p.op(), (sp - s) / 2.0, u_sigma(p, h, s));
    EXPECT_LE((lhs - rhs).norm(), 1e-10 * lhs.norm());
    EXPECT_LE(rho(p, h, sp), std::pow(estimate_norm(p.op()), sp - s) * rho(p, h, s) * (1 + 1e-8));
  }
}

TEST(ClassMembership, Examples) {
  auto op = std::make_shared<DiagonalOperator>(vec({1, 4}));
  const InverseProblem p(op, vec({1, 4}), vec({2, 2}), vec({1, 1}));
  const auto c = class_membership_indicator(p, vec({2, 2}), -1.0);
  EXPECT_TRUE(c.member);
  EXPECT_DOUBLE_EQ(c.magnitude, 1.25);

  auto k = std::make_shared<DiagonalOperator>(vec({0, 2}));
  const InverseProblem q(k, vec({0, 2}), Vector::Zero(2), vec({0, 1}));
  EXPECT_TRUE(class_membership_indicator(q, vec({3, 0}), 0.5).member);
  EXPECT_FALSE(class_membership_indicator(q, vec({3, 0}), -2.0).member);
}

TEST(RateMonitor, WellConditionedCgIsBounded) {
  Vector lam(40), e0(40);
  std::mt19937_64 rng(61);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 40; ++i) {
    lam[i] = 1.0 + 9.0 * i / 39.0;
    e0[i] = gauss(rng);
  }
  auto op = std::make_shared<DiagonalOperator>(lam);
  const Vector f = Vector::Ones(40);
  const InverseProblem p(op, op->apply(f), f + e0, f);
  std::vector<ConvergenceRecord> recs;
  for (const auto& it : run_cg(p, 20, {}, CgOptions{0.0, 0.0}).records) {
    ConvergenceRecord r;
    r.n = it.n;
    r.rho[0.0] = rho(p, it.iterate, 0.0);
    r.rho[1.0] = rho(p, it.iterate, 1.0);
    recs.push_back(r);
  }
  const auto mon = np_rate_monitor(recs, 0.0, 1.0, 1.0);
  EXPECT_TRUE(mon.bounded);
  EXPECT_EQ(mon.series.size(), recs.size() - 1);
  EXPECT_LT(mon.slope, 0.0);
}

TEST(RateMonitor, SyntheticSeries) {
  std::vector<double> r0(21, 1.0), r1(21), zero(21, 0.0);
  for (int n = 0; n <= 20; ++n) r1[n] = 1.0 / (1.0 + n);
  const auto growing = np_rate_monitor(records_from(r0, r1), 0.0, 1.0, 1.0);
  EXPECT_FALSE(growing.bounded);
  EXPECT_NEAR(growing.series[0], 9.0 * 0.5, 1e-15);
  EXPECT_GT(growing.slope, 0.5);

  zero[0] = 1.0;
  const auto finished = np_rate_monitor(records_from(r0, zero), 0.0, 1.0, 1.0);
  EXPECT_TRUE(finished.bounded);
  EXPECT_EQ(finished.sup, 0.0);
}

TEST(RateMonitor, Preconditions) {
  std::vector<double> r0(5, 1.0), r1(5, 1.0);
  EXPECT_THROW(np_rate_monitor(records_from(r0, r1), 0.0, 1.0, 1.0), PreconditionViolation);
  std::vector<double> z0(12, 0.0), z1(12, 1.0);
  EXPECT_THROW(np_rate_monitor(records_from(z0, z1), 0.0, 1.0, 1.0), PreconditionViolation);
  std::vector<double> a(12, 1.0);
  EXPECT_THROW(np_rate_monitor(records_from(a, a), 1.0, 0.0, 1.0), PreconditionViolation);
  EXPECT_THROW(np_rate_monitor(records_from(a, a), 0.0, 1.0, 0.5), PreconditionViolation);
}

TEST(CauchySchwarz, HoldsAlongRuns) {
  for (const auto& rp : fixtures::random_diagonal_set(30, 111)) {
    const InverseProblem& p = rp.problem;
    const double d0 = rho_resolution(p, 0.0), d1 = rho_resolution(p, 1.0), d2 = rho_resolution(p, 2.0);
    for (const auto& it : run_cg(p, static_cast<int>(p.dimension())).records) {
      const double r0 = rho(p, it.iterate, 0.0), r1 = rho(p, it.iterate, 1.0), r2 = rho(p, it.iterate, 2.0);
      EXPECT_LE(cauchy_schwarz_excess(r0, r1, r2, d0, d1, d2), 1e-10);
      // Above the roundoff level no allowance is needed.
      if (r0 > 1e6 * d0 && r2 > 1e6 * d2) EXPECT_LE(cauchy_schwarz_excess(r0, r1, r2), 1e-10);
    }
  }
}

TEST(CauchySchwarz, ExcessExamples) {
  EXPECT_EQ(cauchy_schwarz_excess(1.0, 1.0, 1.0), 0.0);
  EXPECT_NEAR(cauchy_schwarz_excess(1.0, 2.0, 2.0), 1.0, 1e-15);
  EXPECT_EQ(cauchy_schwarz_excess(0.0, 1.0, 1.0), INFINITY);
  EXPECT_EQ(cauchy_schwarz_excess(1.0, 2.0, 2.0, 0.0, 1.0, 0.0), 0.0);
}

TEST(RhoResolution, ScalesWithSigma) {
  const InverseProblem p = diag12();
  const double r0 = rho_resolution(p, 0.0);
  EXPECT_GT(r0, 0.0);
  EXPECT_LT(r0, 1e-25);
  EXPECT_DOUBLE_EQ(rho_resolution(p, 2.0), 4.0 * r0);
}
