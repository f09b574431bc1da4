#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace enfpd {

// Worker count: explicit value if given, else ENFPD_JOBS, else 1.
int resolve_jobs(std::optional<int> requested = std::nullopt);

// Runs fn(0..count-1) on up to `jobs` threads. Work items are claimed in
// index order; the first exception thrown by any item is rethrown after all
// workers stop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace enfpd
