#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace iafs::detail {

namespace {

/// FFTW plans are created under a lock (the planner is not thread-safe) and
/// executed through the new-array interface, which is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t h, std::size_t w, bool inverse) {
    const std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(h, w, inverse);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(h * w);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf, buf,
                                      inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, bool>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void dft2d_plane(std::span<std::complex<double>> plane, std::size_t height, std::size_t width,
                 bool inverse) {
  if (plane.empty()) return;
  fftw_plan plan = plan_cache().get(height, width, inverse);
  auto* buf = reinterpret_cast<fftw_complex*>(plane.data());
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace iafs::detail
