#pragma once

#include <cstddef>
#include <functional>

namespace aarank {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception by index is rethrown after all threads finish.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace aarank
