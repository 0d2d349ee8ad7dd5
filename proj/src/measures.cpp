#include "thetacg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "thetacg/errors.hpp"

namespace thetacg {

DiscreteSpectralMeasure::DiscreteSpectralMeasure(std::vector<Atom> atoms) {
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.location) || !std::isfinite(a.weight))
      throw PreconditionViolation("measure atom with non-finite location or weight");
    if (a.location < 0.0 || a.weight < 0.0) {
      std::ostringstream os;
      os << "measure atom (" << a.location << ", " << a.weight << ") has a negative entry";
      throw PreconditionViolation(os.str());
    }
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  // Merge runs of nearly equal locations into their first (smallest) element.
  for (const Atom& a : atoms) {
    if (!atoms_.empty()) {
      Atom& last = atoms_.back();
      if (a.location - last.location <= kMergeRelTol * std::max(1.0, a.location)) {
        last.weight += a.weight;
        continue;
      }
    }
    atoms_.push_back(a);
  }
  std::erase_if(atoms_, [](const Atom& a) { return a.weight < kMinAtomWeight; });
}

double DiscreteSpectralMeasure::total_mass() const noexcept {
  double s = 0.0;
  for (const Atom& a : atoms_) s += a.weight;
  return s;
}

DiscreteSpectralMeasure spectral_measure(const SelfAdjointOperator& op, const Vector& x) {
  if (!op.has_spectrum()) throw CapabilityError("spectral measure needs spectral capability");
  const SpectralVector c = op.to_spectral(x);
  const Vector& lam = op.eigenvalues();
  const double thr = kKernelRelTol * lam.maxCoeff();
  const double floor = kSpectralNoiseRel * x.norm();
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(c.size()));
  for (Eigen::Index j = 0; j < c.size(); ++j)
    if (std::abs(c[j]) > floor) atoms.push_back({lam[j] <= thr ? 0.0 : lam[j], std::norm(c[j])});
  return DiscreteSpectralMeasure(std::move(atoms));
}

DiscreteSpectralMeasure weight_by_power(const DiscreteSpectralMeasure& m, double t) {
  if (t < 0.0 && m.has_atom_at_zero())
    throw PreconditionViolation("negative power of a measure with an atom at 0");
  std::vector<Atom> out;
  out.reserve(m.size());
  for (const Atom& a : m.atoms()) {
    if (a.location == 0.0) {
      if (t == 0.0) out.push_back(a);
      continue;
    }
    out.push_back({a.location, a.weight * std::pow(a.location, t)});
  }
  return DiscreteSpectralMeasure(std::move(out));
}

double moment(const DiscreteSpectralMeasure& m, int k) {
  if (k < 0) throw PreconditionViolation("moment order must be non-negative");
  double s = 0.0;
  for (const Atom& a : m.atoms()) s += a.weight * (k == 0 ? 1.0 : std::pow(a.location, k));
  return s;
}

double mass_below(const DiscreteSpectralMeasure& m, double t) {
  double s = 0.0;
  for (const Atom& a : m.atoms()) {
    if (!(a.location < t)) break;
    s += a.weight;
  }
  return s;
}

nlohmann::json to_json(const DiscreteSpectralMeasure& m) {
  nlohmann::json j = nlohmann::json::array();
  for (const Atom& a : m.atoms()) j.push_back({a.location, a.weight});
  return j;
}

DiscreteSpectralMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw PreconditionViolation("measure JSON must be an array of [lambda, w] pairs");
  std::vector<Atom> atoms;
  for (const auto& item : j) {
    if (!item.is_array() || item.size() != 2)
      throw PreconditionViolation("measure JSON entry must be a [lambda, w] pair");
    atoms.push_back({item[0].get<double>(), item[1].get<double>()});
  }
  return DiscreteSpectralMeasure(std::move(atoms));
}

}  // namespace thetacg
