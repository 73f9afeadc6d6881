#pragma once

#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace toric {

// Fork-join pool for static range parallelism. Work is split into one
// contiguous chunk per worker, so every array element is produced by exactly
// one thread and results do not depend on scheduling order.
class ThreadPool {
 public:
  explicit ThreadPool(int n_threads) : n_threads_(n_threads < 1 ? 1 : n_threads) {
    for (int t = 1; t < n_threads_; ++t) {
      workers_.emplace_back([this, t] { worker_loop(t); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return n_threads_; }

  // Runs fn(begin, end) over a static partition of [0, n). Blocks until done.
  void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    int parts = n_threads_;
    if (parts == 1 || n < 2 * parts) {
      fn(0, n);
      return;
    }
    {
      std::unique_lock<std::mutex> lock(mu_);
      job_ = &fn;
      job_n_ = n;
      job_parts_ = parts;
      pending_ = parts - 1;
      ++epoch_;
    }
    cv_.notify_all();
    run_chunk(fn, 0);
    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  void run_chunk(const std::function<void(int64_t, int64_t)>& fn, int part) {
    int64_t chunk = (job_n_ + job_parts_ - 1) / job_parts_;
    int64_t begin = part * chunk;
    int64_t end = begin + chunk < job_n_ ? begin + chunk : job_n_;
    if (begin < end) fn(begin, end);
  }

  void worker_loop(int part) {
    uint64_t seen = 0;
    for (;;) {
      const std::function<void(int64_t, int64_t)>* job = nullptr;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return stop_ || epoch_ != seen; });
        if (stop_) return;
        seen = epoch_;
        job = job_;
      }
      if (job) {
        run_chunk(*job, part);
        std::unique_lock<std::mutex> lock(mu_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  int n_threads_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(int64_t, int64_t)>* job_ = nullptr;
  int64_t job_n_ = 0;
  int job_parts_ = 0;
  int pending_ = 0;
  uint64_t epoch_ = 0;
  bool stop_ = false;
};

// Worker count: TORIC_LAB_THREADS if set, else the hardware concurrency.
inline int default_thread_count() {
  if (const char* env = std::getenv("TORIC_LAB_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline ThreadPool& default_pool() {
  static ThreadPool pool(default_thread_count());
  return pool;
}

}  // namespace toric
