#pragma once

#include <exception>
#include <mutex>

namespace acp {

// Exceptions cannot cross an OpenMP region; loop bodies run through this
// and the first captured exception is rethrown after the region joins.
class ExceptionCollector {
 public:
  template <typename F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      if (!ptr_) ptr_ = std::current_exception();
    }
  }

  void rethrow() const {
    if (ptr_) std::rethrow_exception(ptr_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr ptr_;
};

// n > 0 pins the OpenMP thread count; n == 0 leaves the runtime default.
void set_jobs(int n);
int worker_count();

}  // namespace acp
