#pragma once

namespace seqloc {

// Selects between the OpenMP kernels and their serial reference
// implementations. Both produce bit-identical results; the serial path exists
// as the comparison baseline for tests and the benchmark.
enum class ExecMode { Serial, Parallel };

}  // namespace seqloc
