// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_WORKER_POOL_HPP
#define PATCHFDTD_WORKER_POOL_HPP

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace patchfdtd
{

// Fixed set of worker threads running index ranges. for_each(n, fn) calls
// fn(begin, end) on contiguous chunks of [0, n) and returns when all chunks
// are done. Chunks write disjoint data, so results do not depend on the
// number of workers.
class WorkerPool
{
public:
  explicit WorkerPool(int threads);
  ~WorkerPool();

  WorkerPool(const WorkerPool &) = delete;
  WorkerPool &operator=(const WorkerPool &) = delete;

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  void for_each(std::size_t n, const std::function<void(std::size_t, std::size_t)> &fn);

private:
  void worker_loop(int id);

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t, std::size_t)> *task_ = nullptr;
  std::size_t task_size_ = 0;
  long generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

}  // namespace patchfdtd

#endif  // PATCHFDTD_WORKER_POOL_HPP
