#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cplds {

// Barrier-structured fork/join pool. parallel_for blocks the caller until
// every index has been processed; the caller participates as worker 0.
// Chunk assignment is dynamic, so only the *set* of processed indices is
// deterministic -- callers must not depend on ordering.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned workers);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  unsigned workers() const { return workers_; }

  void parallel_for(size_t n, const std::function<void(size_t, unsigned)>& body);

 private:
  void worker_loop(unsigned id);
  void work(unsigned id);

  unsigned workers_;
  std::vector<std::thread> threads_;

  std::mutex mu_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  uint64_t generation_ = 0;
  bool stop_ = false;
  unsigned pending_ = 0;

  const std::function<void(size_t, unsigned)>* body_ = nullptr;
  size_t n_ = 0;
  size_t chunk_ = 1;
  std::atomic<size_t> next_{0};
};

}  // namespace cplds
