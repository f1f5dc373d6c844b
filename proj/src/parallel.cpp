#include "outbreak/parallel.hpp"

namespace outbreak {
namespace {

std::atomic<unsigned>& configured_threads() {
  static std::atomic<unsigned> count{std::max(1u, std::thread::hardware_concurrency())};
  return count;
}

}  // namespace

void set_thread_count(unsigned n) { configured_threads().store(std::max(1u, n)); }

unsigned thread_count() { return configured_threads().load(); }

}  // namespace outbreak
