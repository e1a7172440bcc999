#pragma once

#include <exception>
#include <mutex>

namespace kpp {

/// Carries the first exception thrown inside an OpenMP loop body out of the
/// parallel region, where it would otherwise terminate the process.
class ExceptionSlot {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace kpp
