#pragma once

#include <cstdint>
#include <vector>

#include "thetacg/krylov.hpp"

namespace thetacg::fixtures {

struct RandomDiagonalProblem {
  InverseProblem problem;
  Vector eigenvalues;
  Vector initial_error;  ///< f0 - f
};

/// Diagonal problems with dimension uniform in [2, max_dim], eigenvalues
/// log-uniform in [1e-3, 1e3], Gaussian known solution f and Gaussian
/// initial error; g = A f, f0 = f + e0.
std::vector<RandomDiagonalProblem> random_diagonal_set(int count, std::uint64_t seed, int max_dim = 12);

}  // namespace thetacg::fixtures
