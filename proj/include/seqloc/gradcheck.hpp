#pragma once

#include <cstdint>
#include <iosfwd>

namespace seqloc {

struct GradCheckResult {
  int trials = 0;
  int failures = 0;
  double max_rel_error = 0.0;
  bool passed() const { return failures == 0 && trials > 0; }
};

// Compares the analytic gradient of the full sequence loss (BPTT through the
// LSTM and regressor plus the loss couplings, dropout masks held fixed)
// against central finite differences with eps=1e-5 for `trials` random small
// instances. Relative error must stay within 1e-4 per parameter.
GradCheckResult run_gradcheck(int trials, std::ostream& os, std::uint64_t seed = 9001);

}  // namespace seqloc
