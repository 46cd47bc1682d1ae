#include "ofdmrad/fft.hpp"

#include <fftw3.h>

#include <cassert>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace ofdmrad::fft {

namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n, Direction dir, bool in_place) {
    const auto key = std::make_tuple(n, dir, in_place);
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    // Planning overwrites the arrays. FFTW_UNALIGNED keeps the chosen codelets
    // independent of the alignment of the buffers later passed to execute.
    std::vector<std::complex<double>> a(n), b(n);
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = in_place ? pa : reinterpret_cast<fftw_complex*>(b.data());
    const int sign = dir == Direction::kForward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = fftw_plan_dft_1d(n, pa, pb, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, Direction, bool>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void transform(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
               Direction dir) {
  assert(in.size() == out.size());
  if (in.empty()) return;
  if (in.data() == out.data()) {
    transform(out, dir);
    return;
  }
  fftw_plan plan = cache().get(static_cast<int>(in.size()), dir, false);
  // FFTW's out-of-place complex transforms leave the input untouched.
  auto* src = const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data()));
  fftw_execute_dft(plan, src, reinterpret_cast<fftw_complex*>(out.data()));
}

void transform(std::span<std::complex<double>> data, Direction dir) {
  if (data.empty()) return;
  fftw_plan plan = cache().get(static_cast<int>(data.size()), dir, true);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

}  // namespace ofdmrad::fft
