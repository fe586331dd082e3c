#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace modeq {

/// Worker count resolution: explicit argument > MODEQ_THREADS > hardware.
int resolve_threads(int requested = 0);

/// Runs fn over [0, n) split into contiguous chunks, one per worker.
/// Results must be written to disjoint, index-addressed storage; the spawn
/// pattern carries no ordering guarantees.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

/// Deterministic pairwise summation in fixed index order; independent of the
/// worker count used to fill the values.
double pairwise_sum(std::span<const double> values);

struct MeanStats {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double std_error = 0.0;
};

MeanStats mean_stats(std::span<const double> values);

}  // namespace modeq
