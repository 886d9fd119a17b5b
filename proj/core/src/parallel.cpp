#include "cplds/parallel.hpp"

#include <algorithm>

namespace cplds {

WorkerPool::WorkerPool(unsigned workers) : workers_(std::max(1u, workers)) {
  for (unsigned id = 1; id < workers_; ++id)
    threads_.emplace_back([this, id] { worker_loop(id); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lk(mu_);
    stop_ = true;
  }
  cv_start_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::work(unsigned id) {
  for (;;) {
    size_t begin = next_.fetch_add(chunk_, std::memory_order_relaxed);
    if (begin >= n_) return;
    size_t end = std::min(begin + chunk_, n_);
    for (size_t i = begin; i < end; ++i) (*body_)(i, id);
  }
}

void WorkerPool::worker_loop(unsigned id) {
  uint64_t seen = 0;
  for (;;) {
    {
      std::unique_lock lk(mu_);
      cv_start_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
    }
    work(id);
    {
      std::lock_guard lk(mu_);
      if (--pending_ == 0) cv_done_.notify_one();
    }
  }
}

void WorkerPool::parallel_for(size_t n,
                              const std::function<void(size_t, unsigned)>& body) {
  if (n == 0) return;
  if (workers_ == 1 || n == 1) {
    for (size_t i = 0; i < n; ++i) body(i, 0);
    return;
  }
  {
    std::lock_guard lk(mu_);
    body_ = &body;
    n_ = n;
    chunk_ = std::max<size_t>(1, n / (workers_ * 8));
    next_.store(0, std::memory_order_relaxed);
    pending_ = workers_ - 1;
    ++generation_;
  }
  cv_start_.notify_all();
  work(0);
  std::unique_lock lk(mu_);
  cv_done_.wait(lk, [&] { return pending_ == 0; });
  body_ = nullptr;
}

}  // namespace cplds
