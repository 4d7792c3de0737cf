#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace saved {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
  double step = 1e-5;
  /// Tensors larger than this are checked on a seeded random subset of entries.
  std::size_t max_entries_per_tensor = 256;
  /// Test hook: name of an op whose analytic gradient is perturbed before comparison.
  std::string corrupt;
};

struct GradcheckResult {
  std::string op;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // entries dropped because the finite difference straddles a kink
  bool passed = false;
};

/// Names of every check, in execution order.
std::vector<std::string> gradcheck_op_names();

/// Central finite differences against the tape gradients, in double precision.
/// Error per op is max|analytic - numeric| / max(max|analytic|, max|numeric|).
std::vector<GradcheckResult> run_gradcheck(const GradcheckOptions& options = {});

}  // namespace saved
