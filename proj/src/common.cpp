#include "pvc/common.hpp"

#include <algorithm>
#include <cstdlib>

namespace pvc {

namespace {

int env_thread_count() {
  if (const char* s = std::getenv("PVC_THREADS")) {
    int v = std::atoi(s);
    if (v >= 1) return std::min(v, 64);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 4u));
}

}  // namespace

ThreadPool& ThreadPool::instance() {
  static ThreadPool pool;
  return pool;
}

ThreadPool::ThreadPool() : workers_(env_thread_count()) {
  for (int t = 0; t + 1 < workers_; t++) {
    threads_.emplace_back([this] {
      uint64_t seen = 0;
      for (;;) {
        Task task;
        {
          std::unique_lock lock(mu_);
          cv_work_.wait(lock, [&] { return stop_ || (epoch_ != seen && next_task_ < tasks_.size()); });
          if (stop_) return;
          if (next_task_ >= tasks_.size()) {
            seen = epoch_;
            continue;
          }
          task = tasks_[next_task_++];
        }
        (*task.fn)(task.begin, task.end);
        {
          std::lock_guard lock(mu_);
          if (--pending_ == 0) cv_done_.notify_all();
        }
      }
    });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::parallel_ranges(size_t n, const std::function<void(size_t, size_t)>& fn) {
  if (n == 0) return;
  size_t shards = std::min<size_t>(workers_, n);
  if (shards <= 1) {
    fn(0, n);
    return;
  }
  std::vector<Task> tasks(shards);
  size_t chunk = (n + shards - 1) / shards;
  for (size_t s = 0; s < shards; s++) {
    tasks[s] = Task{&fn, s * chunk, std::min(n, (s + 1) * chunk)};
  }
  {
    std::lock_guard lock(mu_);
    tasks_ = std::move(tasks);
    next_task_ = 1;  // task 0 runs on the calling thread
    pending_ = shards - 1;
    epoch_++;
  }
  cv_work_.notify_all();
  fn(tasks_[0].begin, tasks_[0].end);
  // Help drain the queue instead of idling.
  for (;;) {
    Task task;
    {
      std::unique_lock lock(mu_);
      if (next_task_ < tasks_.size()) {
        task = tasks_[next_task_++];
      } else {
        cv_done_.wait(lock, [&] { return pending_ == 0; });
        return;
      }
    }
    (*task.fn)(task.begin, task.end);
    {
      std::lock_guard lock(mu_);
      if (--pending_ == 0) cv_done_.notify_all();
    }
  }
}

namespace {
thread_local int g_serial_depth = 0;
}

SerialKernelGuard::SerialKernelGuard() { g_serial_depth++; }
SerialKernelGuard::~SerialKernelGuard() { g_serial_depth--; }

void parallel_for_ranges(size_t n, size_t grain, const std::function<void(size_t, size_t)>& fn) {
  if (g_serial_depth > 0 || n < grain || ThreadPool::instance().workers() <= 1) {
    if (n) fn(0, n);
    return;
  }
  ThreadPool::instance().parallel_ranges(n, fn);
}

}  // namespace pvc
