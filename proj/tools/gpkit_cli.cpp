// gpkit command-line tool. See `gpkit --help`.

#include <cstdlib>
#include <iostream>
#include <new>

#include "gpkit/cli/app.hpp"

// Heap allocation counting for the bench table. The build links this
// program with --wrap for malloc, calloc, realloc and free, which routes the
// calls made from this translation unit (Eigen's storage included) through
// the counters below; operator new is replaced to go through malloc too.
extern "C" {
void* __real_malloc(std::size_t);
void* __real_calloc(std::size_t, std::size_t);
void* __real_realloc(void*, std::size_t);
void __real_free(void*);

void* __wrap_malloc(std::size_t size) {
  gpkit::cli::allocation_count.fetch_add(1, std::memory_order_relaxed);
  return __real_malloc(size);
}
void* __wrap_calloc(std::size_t n, std::size_t size) {
  gpkit::cli::allocation_count.fetch_add(1, std::memory_order_relaxed);
  return __real_calloc(n, size);
}
void* __wrap_realloc(void* p, std::size_t size) {
  gpkit::cli::allocation_count.fetch_add(1, std::memory_order_relaxed);
  return __real_realloc(p, size);
}
void __wrap_free(void* p) { __real_free(p); }
}

void* operator new(std::size_t size) {
  if (void* p = std::malloc(size ? size : 1)) return p;
  throw std::bad_alloc();
}
void operator delete(void* p) noexcept { __real_free(p); }
void operator delete(void* p, std::size_t) noexcept { __real_free(p); }

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return gpkit::cli::main_entry(args, std::cout, std::cerr);
}
