#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pvc {

// Error taxonomy. The CLI maps ConfigError to exit code 2 and the rest to 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct StreamError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

// FNV-1a, used for prior digests and config digests.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < n; i++) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// Fixed-partition fork/join helper. Each index is processed by exactly one
// worker and no reductions cross threads, so results do not depend on the
// thread count.
class ThreadPool {
public:
  static ThreadPool& instance();

  // Runs fn(begin, end) over [0, n) split into contiguous ranges.
  void parallel_ranges(size_t n, const std::function<void(size_t, size_t)>& fn);

  int workers() const { return workers_; }

  ~ThreadPool();

private:
  ThreadPool();

  struct Task {
    const std::function<void(size_t, size_t)>* fn = nullptr;
    size_t begin = 0, end = 0;
  };

  int workers_ = 1;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_work_, cv_done_;
  std::vector<Task> tasks_;
  size_t next_task_ = 0;
  size_t pending_ = 0;
  uint64_t epoch_ = 0;
  bool stop_ = false;
};

void parallel_for_ranges(size_t n, size_t grain, const std::function<void(size_t, size_t)>& fn);

// While alive on a thread, parallel_for_ranges on that thread runs inline.
// Used by fan-out workers (eval) so nested kernels do not fight over the
// shared pool, which is single-caller.
class SerialKernelGuard {
public:
  SerialKernelGuard();
  ~SerialKernelGuard();
  SerialKernelGuard(const SerialKernelGuard&) = delete;
  SerialKernelGuard& operator=(const SerialKernelGuard&) = delete;
};

}  // namespace pvc
