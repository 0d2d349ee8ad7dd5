#pragma once

#include <vector>

#include <json.hpp>

#include "thetacg/linop.hpp"

namespace thetacg {

struct Atom {
  double location = 0.0;
  double weight = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite non-negative measure sum_j w_j delta(lambda_j) on [0, inf).
///
/// Canonical form: support strictly increasing, atoms whose locations agree
/// within 1e-12 * max(1, lambda) merged, weights below 1e-300 dropped.
class DiscreteSpectralMeasure {
 public:
  DiscreteSpectralMeasure() = default;
  /// Throws PreconditionViolation on negative or non-finite entries.
  explicit DiscreteSpectralMeasure(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }
  double total_mass() const noexcept;
  /// Smallest / largest support point (0 for the empty measure).
  double min_support() const noexcept { return atoms_.empty() ? 0.0 : atoms_.front().location; }
  double max_support() const noexcept { return atoms_.empty() ? 0.0 : atoms_.back().location; }
  bool has_atom_at_zero() const noexcept { return !atoms_.empty() && atoms_.front().location == 0.0; }

  friend bool operator==(const DiscreteSpectralMeasure&, const DiscreteSpectralMeasure&) = default;

 private:
  std::vector<Atom> atoms_;
};

inline constexpr double kMinAtomWeight = 1e-300;
inline constexpr double kMergeRelTol = 1e-12;

/// Measure d<x, E(lambda) x>. Eigenvalues at or below kernel_threshold(op)
/// are placed exactly at 0.
DiscreteSpectralMeasure spectral_measure(const SelfAdjointOperator& op, const Vector& x);

/// (lambda, w) -> (lambda, lambda^t w). For t > 0 an atom at 0 disappears;
/// for t < 0 an atom at 0 is a PreconditionViolation.
DiscreteSpectralMeasure weight_by_power(const DiscreteSpectralMeasure& m, double t);

/// sum_j lambda_j^k w_j (with 0^0 = 1).
double moment(const DiscreteSpectralMeasure& m, int k);

/// sum over lambda_j < t of w_j.
double mass_below(const DiscreteSpectralMeasure& m, double t);

/// [[lambda, w], ...]
nlohmann::json to_json(const DiscreteSpectralMeasure& m);
DiscreteSpectralMeasure measure_from_json(const nlohmann::json& j);

}  // namespace thetacg
