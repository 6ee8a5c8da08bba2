// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/worker_pool.hpp"

#include <algorithm>

namespace patchfdtd
{

namespace
{

std::pair<std::size_t, std::size_t> chunk(std::size_t n, int parts, int id)
{
  const std::size_t p = static_cast<std::size_t>(parts);
  const std::size_t k = static_cast<std::size_t>(id);
  return {n * k / p, n * (k + 1) / p};
}

}  // namespace

WorkerPool::WorkerPool(int threads)
{
  const int n = std::max(1, threads);
  for (int id = 1; id < n; ++id)
    workers_.emplace_back([this, id] { worker_loop(id); });
}

WorkerPool::~WorkerPool()
{
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto &t : workers_)
    t.join();
}

void WorkerPool::for_each(std::size_t n, const std::function<void(std::size_t, std::size_t)> &fn)
{
  if (workers_.empty() || n < 2)
  {
    if (n > 0)
      fn(0, n);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    task_ = &fn;
    task_size_ = n;
    pending_ = static_cast<int>(workers_.size());
    ++generation_;
  }
  wake_.notify_all();

  const auto [b, e] = chunk(n, size(), 0);
  if (b < e)
    fn(b, e);

  std::unique_lock<std::mutex> lock(mutex_);
  done_.wait(lock, [this] { return pending_ == 0; });
  task_ = nullptr;
}

void WorkerPool::worker_loop(int id)
{
  long seen = 0;
  for (;;)
  {
    const std::function<void(std::size_t, std::size_t)> *task = nullptr;
    std::size_t n = 0;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_)
        return;
      seen = generation_;
      task = task_;
      n = task_size_;
    }
    const auto [b, e] = chunk(n, size(), id);
    if (b < e)
      (*task)(b, e);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (--pending_ == 0)
        done_.notify_one();
    }
  }
}

}  // namespace patchfdtd
