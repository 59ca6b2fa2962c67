#pragma once

#include <functional>

namespace polsar {

/// Worker count from POLSAR_THREADS (0 or unset = hardware concurrency).
int thread_count();

/// Runs body(row) for row in [0, rows). Rows are split into contiguous
/// blocks; body must only write state owned by its row.
void parallel_rows(int rows, const std::function<void(int)>& body);

}  // namespace polsar
