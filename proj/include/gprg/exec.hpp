#pragma once

namespace gprg {

/// Execution policy for the data-parallel kernels (Monte Carlo trial loops,
/// feature sampling). Serial is a plain reference loop kept for testing;
/// Parallel is the OpenMP implementation with a thread-count-independent
/// reduction order.
enum class Execution { Parallel, Serial };

/// Resolves a requested thread count: 0 means "runtime default".
int resolve_threads(int requested);

/// Number of consecutive trials accumulated per reduction slot. Fixed so
/// that results are bit-identical for any thread count.
inline constexpr long kTrialChunk = 64;

}  // namespace gprg
