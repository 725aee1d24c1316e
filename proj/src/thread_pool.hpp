#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pdopf::detail {

// Fixed set of workers that run index ranges. parallel_for blocks until
// every index has run; when several indices throw, the exception from the
// lowest index is rethrown so failures are reported deterministically.
class ThreadPool {
 public:
  explicit ThreadPool(unsigned threads) {
    for (unsigned t = 1; t < threads; ++t) workers_.emplace_back([this, t] { work(t); });
  }

  ~ThreadPool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    start_.notify_all();
    for (auto& w : workers_) w.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  unsigned size() const { return static_cast<unsigned>(workers_.size()) + 1; }

  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    errors_.assign(n, nullptr);
    if (workers_.empty() || n == 1) {
      run_chunk(0, 1, n, body);
    } else {
      {
        std::lock_guard lock(mutex_);
        body_ = &body;
        count_ = n;
        pending_ = workers_.size();
        ++generation_;
      }
      start_.notify_all();
      run_chunk(0, size(), n, body);
      std::unique_lock lock(mutex_);
      done_.wait(lock, [this] { return pending_ == 0; });
      body_ = nullptr;
    }
    for (auto& e : errors_) {
      if (e) std::rethrow_exception(e);
    }
  }

 private:
  void run_chunk(unsigned worker, unsigned stride, std::size_t n,
                 const std::function<void(std::size_t)>& body) {
    for (std::size_t i = worker; i < n; i += stride) {
      try {
        body(i);
      } catch (...) {
        errors_[i] = std::current_exception();
      }
    }
  }

  void work(unsigned index) {
    std::size_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t)>* body;
      std::size_t n;
      {
        std::unique_lock lock(mutex_);
        start_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        body = body_;
        n = count_;
      }
      run_chunk(index, size(), n, *body);
      {
        std::lock_guard lock(mutex_);
        --pending_;
      }
      done_.notify_one();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable start_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* body_ = nullptr;
  std::size_t count_ = 0;
  std::size_t pending_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::vector<std::exception_ptr> errors_;
};

}  // namespace pdopf::detail
