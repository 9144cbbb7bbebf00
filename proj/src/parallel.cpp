#include "occkit/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace occkit {
namespace {

std::atomic<int> g_override{0};

int env_cap() {
  const char* raw = std::getenv("OCCKIT_THREADS");
  if (raw == nullptr) return 0;
  try {
    const int n = std::stoi(raw);
    return n > 0 ? n : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int worker_count() {
  if (const int o = g_override.load(); o > 0) return o;
  int n = omp_get_max_threads();
  static const int cap = env_cap();
  if (cap > 0 && cap < n) n = cap;
  return n < 1 ? 1 : n;
}

void set_worker_count(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace occkit
