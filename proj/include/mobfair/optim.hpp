#pragma once

#include <functional>
#include <span>
#include <vector>

namespace mobfair::optim {

struct NelderMeadOptions {
  /// Converged once the simplex's objective spread falls below
  /// f_tol * (|f_best| + f_tol).
  double f_tol = 1e-8;
  int max_iterations = 500;
  /// Per-coordinate initial simplex offsets; a single value applies to all.
  std::vector<double> initial_step{0.1};
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Derivative-free simplex minimization. Non-finite objective values are
/// treated as +inf. After the first convergence the simplex is rebuilt once
/// around the best vertex to guard against collapse.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0,
                             const NelderMeadOptions& opts = {});

}  // namespace mobfair::optim
