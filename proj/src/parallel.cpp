#include "ncfem/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ncfem {

namespace {

std::atomic<int> configured{0};

int default_workers()
{
  if (const char* env = std::getenv("NCFEM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0)
        return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace

int worker_count()
{
  const int n = configured.load();
  return n > 0 ? n : default_workers();
}

void set_worker_count(int n) { configured.store(std::max(0, n)); }

void parallel_for(int n, const std::function<void(int, int, int)>& body)
{
  if (n <= 0)
    return;
  // Small loops are not worth a thread start.
  const int workers = std::min(worker_count(), std::max(1, n / 64));
  if (workers == 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, begin, end, w] {
      try {
        body(begin, end, w);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace ncfem
