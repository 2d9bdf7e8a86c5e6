#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lazykdp
{
/// Worker count: hardware concurrency, capped by LAZYKDP_THREADS when set.
inline size_t WorkerCount()
{
  size_t workers = std::max<size_t>(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LAZYKDP_THREADS"))
  {
    try
    {
      const long cap = std::stol(env);
      if (cap >= 1)
      {
        workers = std::min(workers, static_cast<size_t>(cap));
      }
    }
    catch (const std::exception&)
    {
      // Ignore malformed values.
    }
  }
  return workers;
}

/// Runs fn(i) for i in [0, count) over a small pool. fn must write results by
/// index only; the first exception thrown by any worker is rethrown.
template <typename Fn>
void ParallelFor(const size_t count, Fn&& fn, size_t workers = 0)
{
  if (workers == 0)
  {
    workers = WorkerCount();
  }
  workers = std::min(workers, count);
  if (workers <= 1)
  {
    for (size_t i = 0; i < count; ++i)
    {
      fn(i);
    }
    return;
  }
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w)
  {
    pool.emplace_back([&]() {
      while (!failed.load())
      {
        const size_t i = next.fetch_add(1);
        if (i >= count)
        {
          return;
        }
        try
        {
          fn(i);
        }
        catch (...)
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error)
          {
            error = std::current_exception();
          }
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool)
  {
    t.join();
  }
  if (error)
  {
    std::rethrow_exception(error);
  }
}
}  // namespace lazykdp
