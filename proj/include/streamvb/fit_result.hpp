#pragma once

namespace streamvb {

struct FitOptions {
  double tol = 1e-8;
  int max_iter = 500;
};

/// Outcome of an iterated batch fit. `converged` is false when max_iter was
/// reached; `state` then holds the last iterate.
template <typename State>
struct FitResult {
  State state;
  int iterations = 0;
  bool converged = false;
  double last_change = 0.0;
};

}  // namespace streamvb
