#pragma once

#include <cstddef>
#include <functional>

namespace sshg {

/// Worker count used by parallel_for; values below 1 are clamped to 1.
void set_thread_count(int n);
int thread_count();

/// Calls body(i) for i in [0, count). Iterations must be independent; each
/// index is processed exactly once, so results do not depend on the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace sshg
