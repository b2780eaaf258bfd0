#pragma once

#include <cstddef>
#include <functional>

namespace diffgeo {

/// Runs body(i) for i in [0, n) on up to `jobs` threads (0 means one per
/// hardware thread). Results must be written to per-index slots, which keeps
/// the gathered output independent of the worker count. After a failure no
/// new indices start; the exception of the lowest failed index is rethrown.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)> &body);

/// Worker count from an explicit request, falling back to DIFFGEO_LAB_JOBS
/// and then to 1.
unsigned resolve_jobs(unsigned requested);

}  // namespace diffgeo
