#include "thetacg/orthopoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "thetacg/errors.hpp"

namespace thetacg {

using Real = long double;

ResidualPolynomial::ResidualPolynomial(std::vector<double> zeros, std::vector<double> low) {
  if (low.empty()) low.assign(zeros.size(), 0.0);
  if (low.size() != zeros.size()) throw DimensionMismatch("zero corrections do not match the zeros");
  std::vector<std::size_t> order(zeros.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double z = zeros[k];
    if (!std::isfinite(z) || !(z > 0.0) || !std::isfinite(low[k])) {
      std::ostringstream os;
      os << "residual polynomial zero " << z << " is not a positive finite number";
      throw PreconditionViolation(os.str());
    }
    order[k] = k;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return zeros[a] != zeros[b] ? zeros[a] < zeros[b] : low[a] < low[b];
  });
  for (std::size_t k : order) {
    zeros_.push_back(zeros[k]);
    low_.push_back(low[k]);
  }
}

double ResidualPolynomial::smallest_zero() const {
  if (zeros_.empty()) throw PreconditionViolation("constant polynomial has no zeros");
  return zeros_.front();
}

double ResidualPolynomial::largest_zero() const {
  if (zeros_.empty()) throw PreconditionViolation("constant polynomial has no zeros");
  return zeros_.back();
}

// The difference of two doubles within a factor 2 of each other is exact, so
// near a zero only the low part is rounded.
long double ResidualPolynomial::zero_minus(std::size_t k, double lambda) const {
  return (static_cast<Real>(zeros_[k]) - lambda) + low_[k];
}

namespace {

// Distance, relative to the largest zero, below which lambda is taken to be a
// zero: the absolute accuracy of the quadruple-precision eigenvalues, far
// below the atom merge tolerance. Closer than this the remaining factors only
// magnify rounding noise.
constexpr Real kZeroResolution = 1e-30L;

}  // namespace

bool ResidualPolynomial::at_zero(std::size_t k, double lambda) const {
  return std::abs(zero_minus(k, lambda)) <= kZeroResolution * zeros_.back();
}

long double ResidualPolynomial::evaluate(double lambda) const {
  const auto it = std::lower_bound(zeros_.begin(), zeros_.end(), lambda);
  const std::size_t near = static_cast<std::size_t>(it - zeros_.begin());
  if (near < zeros_.size() && at_zero(near, lambda)) return 0.0L;
  if (near > 0 && at_zero(near - 1, lambda)) return 0.0L;
  auto factor = [&](std::size_t k) { return zero_minus(k, lambda) / (static_cast<Real>(zeros_[k]) + low_[k]); };
  if (zeros_.size() <= 50) {
    Real prod = 1.0L;
    for (std::size_t k = 0; k < zeros_.size(); ++k) prod *= factor(k);
    return prod;
  }
  Real log_sum = 0.0L;
  bool negative = false;
  for (std::size_t k = 0; k < zeros_.size(); ++k) {
    const Real f = factor(k);
    if (f == 0.0L) return 0.0L;
    if (f < 0.0L) negative = !negative;
    log_sum += std::log(std::abs(f));
  }
  const Real mag = std::exp(log_sum);
  return negative ? -mag : mag;
}

// ---------------------------------------------------------------------------

namespace {

// The zeros are computed in quadruple precision: a Ritz value can sit within
// 1e-14 relative of an atom, and the orthogonality relation depends on that
// distance.
__extension__ typedef __float128 Quad;

Quad qabs(Quad x) { return x < 0 ? -x : x; }

// One Newton step from the long double root doubles its accuracy.
Quad qsqrt(Quad x) {
  if (!(x > 0)) return 0;
  const Quad y = std::sqrt(static_cast<long double>(x));
  return (y + x / y) / 2;
}

Quad qhypot(Quad a, Quad b) {
  a = qabs(a);
  b = qabs(b);
  if (a < b) std::swap(a, b);
  if (a == 0) return 0;
  const Quad r = b / a;
  return a * qsqrt(1 + r * r);
}

const Quad kQuadEps = static_cast<Quad>(std::numeric_limits<double>::epsilon()) *
                      static_cast<Quad>(std::numeric_limits<double>::epsilon()) / 256;  // 2^-112

struct Zeros {
  std::vector<double> hi, lo;
};

// Implicit QL on (d, e); e[i] couples d[i] and d[i + 1].
Zeros ql_eigenvalues(std::vector<Quad> d, std::vector<Quad> e) {
  const int n = static_cast<int>(d.size());
  if (n == 0) return {};
  e.resize(static_cast<std::size_t>(n), 0);

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const Quad dd = qabs(d[m]) + qabs(d[m + 1]);
        if (qabs(e[m]) <= kQuadEps * dd) break;
      }
      if (m != l) {
        if (++iter > 200) throw std::runtime_error("implicit QL did not converge");
        Quad g = (d[l + 1] - d[l]) / (2 * e[l]);
        Quad r = qhypot(g, 1);
        g = d[m] - d[l] + e[l] / (g + (g < 0 ? -r : r));
        Quad s = 1, c = 1, p = 0;
        bool underflow = false;
        for (int i = m - 1; i >= l; --i) {
          Quad f = s * e[i];
          const Quad b = c * e[i];
          r = qhypot(f, g);
          e[i + 1] = r;
          if (r == 0) {
            d[i + 1] -= p;
            e[m] = 0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  Zeros out;
  for (Quad z : d) {
    const double hi = static_cast<double>(z);
    out.hi.push_back(hi);
    out.lo.push_back(static_cast<double>(z - hi));
  }
  return out;
}

}  // namespace

std::vector<double> tridiagonal_eigenvalues(const Vector& alpha, const Vector& beta) {
  const int n = static_cast<int>(alpha.size());
  if (n == 0) return {};
  if (beta.size() != std::max(n - 1, 0)) throw DimensionMismatch("tridiagonal off-diagonal has wrong length");
  return ql_eigenvalues(std::vector<Quad>(alpha.data(), alpha.data() + n),
                        std::vector<Quad>(beta.data(), beta.data() + beta.size()))
      .hi;
}

PolynomialFamily residual_polynomials(const DiscreteSpectralMeasure& nu, int n_max) {
  if (n_max < 0) throw PreconditionViolation("negative polynomial degree requested");
  if (nu.has_atom_at_zero()) throw PreconditionViolation("orthogonality measure has an atom at 0");
  PolynomialFamily fam;
  fam.polynomials.emplace_back();
  const std::size_t m = nu.size();
  const int steps = static_cast<int>(std::min<std::size_t>(m, static_cast<std::size_t>(n_max)));
  fam.truncated = steps < n_max;
  if (steps == 0) return fam;

  // Stieltjes procedure = Lanczos for diag(x) from the start vector sqrt(w).
  std::vector<Quad> x(m), q(m);
  Quad total = 0;
  for (const Atom& a : nu.atoms()) total += a.weight;
  for (std::size_t j = 0; j < m; ++j) {
    x[j] = nu.atoms()[j].location;
    q[j] = qsqrt(nu.atoms()[j].weight / total);
  }
  const Quad breakdown = 1e-16 * x.back();
  std::vector<std::vector<Quad>> basis;
  std::vector<Quad> alpha, beta;
  for (int k = 0; k < steps; ++k) {
    basis.push_back(q);
    std::vector<Quad> w(m);
    Quad a = 0;
    for (std::size_t j = 0; j < m; ++j) {
      w[j] = x[j] * q[j];
      a += q[j] * w[j];
    }
    alpha.push_back(a);
    if (k + 1 == steps) break;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& v : basis) {
        Quad h = 0;
        for (std::size_t j = 0; j < m; ++j) h += v[j] * w[j];
        for (std::size_t j = 0; j < m; ++j) w[j] -= h * v[j];
      }
    Quad b = 0;
    for (Quad v : w) b += v * v;
    b = qsqrt(b);
    if (b <= breakdown) {
      fam.truncated = true;
      break;
    }
    beta.push_back(b);
    for (std::size_t j = 0; j < m; ++j) q[j] = w[j] / b;
  }

  const Eigen::Index k = static_cast<Eigen::Index>(alpha.size());
  fam.jacobi.alpha.resize(k);
  fam.jacobi.beta.resize(std::max<Eigen::Index>(k - 1, 0));
  for (Eigen::Index i = 0; i < k; ++i) fam.jacobi.alpha[i] = static_cast<double>(alpha[static_cast<std::size_t>(i)]);
  for (Eigen::Index i = 0; i + 1 < k; ++i) fam.jacobi.beta[i] = static_cast<double>(beta[static_cast<std::size_t>(i)]);
  // Zeros from the unrounded recurrence: rounding the Jacobi matrix to double
  // costs eps * max(x) absolutely, far too much for the small zeros.
  for (std::size_t n = 1; n <= alpha.size(); ++n) {
    Zeros z = ql_eigenvalues(std::vector<Quad>(alpha.begin(), alpha.begin() + n),
                             std::vector<Quad>(beta.begin(), beta.begin() + (n - 1)));
    fam.polynomials.emplace_back(std::move(z.hi), std::move(z.lo));
  }
  return fam;
}

double delta_n(const ResidualPolynomial& p) {
  const auto& z = p.zeros();
  if (z.empty()) return 0.0;
  Real s = 1.0L / z.front();
  for (std::size_t k = 1; k < z.size(); ++k) s += 2.0L / z[k];
  return static_cast<double>(s);
}

// ---------------------------------------------------------------------------

CheckReport check_zeros(const ResidualPolynomial& p) {
  CheckReport rep;
  const auto& z = p.zeros();
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!(z[k] > 0.0)) {
      rep.ok = false;
      rep.max_violation = std::max(rep.max_violation, 1.0);
    }
    if (k > 0 && !(z[k] > z[k - 1])) {
      rep.ok = false;
      rep.max_violation = std::max(rep.max_violation, (z[k - 1] - z[k]) / z[k - 1]);
    }
  }
  return rep;
}

CheckReport check_separation(const ResidualPolynomial& p_n, const ResidualPolynomial& p_n1) {
  if (p_n1.degree() != p_n.degree() + 1) throw PreconditionViolation("separation compares degrees N and N+1");
  CheckReport rep;
  const auto& a = p_n.zeros();
  const auto& b = p_n1.zeros();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double v1 = (b[k] - a[k]) / a[k];
    const double v2 = (a[k] - b[k + 1]) / a[k];
    const double v = std::max(v1, v2);
    if (!(v < 1e-10)) {
      rep.ok = false;
      rep.max_violation = std::max(rep.max_violation, v);
    }
  }
  return rep;
}

CheckReport check_monotonicity(const std::vector<ResidualPolynomial>& family) {
  CheckReport rep;
  auto note = [&rep](double v) {
    if (v > 1e-10) {
      rep.ok = false;
      rep.max_violation = std::max(rep.max_violation, v);
    }
  };
  for (std::size_t n = 1; n + 1 < family.size(); ++n) {
    const auto& a = family[n].zeros();
    const auto& b = family[n + 1].zeros();
    if (b.size() != a.size() + 1) continue;
    for (std::size_t k = 0; k < a.size(); ++k) {
      note((b[k] - a[k]) / a[k]);
      const double top_n = a[a.size() - 1 - k];
      const double top_n1 = b[b.size() - 1 - k];
      note((top_n - top_n1) / top_n);
    }
  }
  return rep;
}

namespace {

// Kernel s^2(l) l1 / |l1 - l| = |l1 - l| / l1 * prod_{k>=2} (1 - l/l_k)^2,
// written without the division by l1 - l.
Real orthogonality_kernel(const ResidualPolynomial& p, double lambda) {
  const auto& z = p.zeros();
  const auto& lo = p.zero_corrections();
  Real v = std::abs(p.zero_minus(0, lambda)) / (static_cast<Real>(z[0]) + lo[0]);
  for (std::size_t k = 1; k < z.size(); ++k) {
    const Real f = p.zero_minus(k, lambda) / (static_cast<Real>(z[k]) + lo[k]);
    v *= f * f;
  }
  return v;
}

struct Split {
  Real left = 0.0L;   // atoms strictly left of lambda_1
  Real right = 0.0L;  // atoms at or right of lambda_1
};

// Sums of kernel * weight and s^2 * weight on both sides of lambda_1, plus
// the plain mass left of lambda_1.
struct Sums {
  Split kernel;
  Split square;
  Real mass_left = 0.0L;
};

Sums split_sums(const ResidualPolynomial& p, const DiscreteSpectralMeasure& m) {
  Sums s;
  for (const Atom& a : m.atoms()) {
    const Real w = a.weight;
    const bool on_l1 = p.at_zero(0, a.location);
    const Real sv = on_l1 ? 0.0L : p.evaluate(a.location);
    const Real kern = sv == 0.0L ? 0.0L : orthogonality_kernel(p, a.location);
    if (!on_l1 && p.zero_minus(0, a.location) > 0.0L) {
      s.kernel.left += kern * w;
      s.square.left += sv * sv * w;
      s.mass_left += w;
    } else {
      s.kernel.right += kern * w;
      s.square.right += sv * sv * w;
    }
  }
  return s;
}

double power_ratio(double d, double delta) {
  if (d == 0.0) return 1.0;
  return std::pow(d / delta, d);
}

}  // namespace

OrthogonalityGap orthogonality_gap(const ResidualPolynomial& p, const DiscreteSpectralMeasure& nu) {
  OrthogonalityGap gap;
  if (p.degree() == 0) return gap;
  const Sums s = split_sums(p, nu);
  gap.lhs = static_cast<double>(s.kernel.left);
  gap.rhs = static_cast<double>(s.kernel.right);
  const double scale = std::max({gap.lhs, gap.rhs, std::numeric_limits<double>::min()});
  gap.relative_gap = std::abs(gap.lhs - gap.rhs) / scale;
  return gap;
}

LemmaBound lemma_bound(const ResidualPolynomial& p, const DiscreteSpectralMeasure& nu,
                       const DiscreteSpectralMeasure& mu_sigma, double xi, double sigma) {
  const double d = xi - sigma + 1.0;
  if (!(d >= 0.0)) throw PreconditionViolation("lemma bound needs xi - sigma + 1 >= 0");
  LemmaBound out;
  if (p.degree() == 0) return out;
  out.lhs = static_cast<double>(split_sums(p, nu).kernel.left);
  const double mass = static_cast<double>(split_sums(p, mu_sigma).mass_left);
  out.rhs = mass * power_ratio(d, delta_n(p));
  out.satisfied = out.lhs <= out.rhs * (1.0 + 1e-10);
  return out;
}

BoundChainReport bound_chain(double rho, const ResidualPolynomial& p, const DiscreteSpectralMeasure& mu_sigma,
                             double xi, double sigma, double rho_floor) {
  if (!(xi >= sigma)) throw PreconditionViolation("bound chain needs xi >= sigma");
  if (!(rho_floor >= 0.0)) throw PreconditionViolation("rho floor must be non-negative");
  rho = std::max(rho - rho_floor, 0.0);
  BoundChainReport rep;
  if (p.degree() == 0) return rep;
  const double d = xi - sigma + 1.0;
  const DiscreteSpectralMeasure nu = weight_by_power(mu_sigma, d);
  const Sums on_mu = split_sums(p, mu_sigma);
  const Sums on_nu = split_sums(p, nu);
  const double l1 = p.smallest_zero();
  const double delta = delta_n(p);
  const double m = static_cast<double>(on_mu.mass_left);
  const double tail = static_cast<double>(on_mu.square.right);
  const double lemma_lhs = static_cast<double>(on_nu.kernel.left);
  const double ratio = power_ratio(d, delta);

  auto add = [&rep](std::string name, double lhs, double rhs) {
    const bool holds = lhs <= rhs * (1.0 + kChainSlack);
    rep.links.push_back({name, lhs, rhs, holds});
    if (!holds && rep.satisfied) {
      rep.satisfied = false;
      rep.first_failure = std::move(name);
    }
  };
  add("split", rho, m + tail);
  add("tail", tail, lemma_lhs / std::pow(l1, d));
  add("lemma", lemma_lhs, m * ratio);
  add("combined", rho, m + m * ratio / std::pow(l1, d));
  add("scale", 1.0, l1 * delta);
  add("final", rho, (1.0 + std::pow(d, d)) * m);
  return rep;
}

double rho_integral_identity(const ResidualPolynomial& p, const DiscreteSpectralMeasure& mu_sigma) {
  Real s = 0.0L;
  for (const Atom& a : mu_sigma.atoms()) {
    const Real v = p.evaluate(a.location);
    s += v * v * a.weight;
  }
  return static_cast<double>(s);
}

ProblemMeasures problem_measures(const InverseProblem& problem, double xi) {
  ProblemMeasures out;
  out.error = spectral_measure(problem.op(), problem.initial_error());
  out.nu = weight_by_power(out.error, xi + 1.0);
  return out;
}

}  // namespace thetacg
