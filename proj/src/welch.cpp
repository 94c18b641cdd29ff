#include "levcav/welch.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>

#include "levcav/constants.hpp"
#include "levcav/errors.hpp"

namespace levcav {

namespace {

std::mutex planner_mutex;  // FFTW planning is not thread-safe

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

std::size_t hop(const WelchOptions& o) {
  const auto h = static_cast<std::size_t>(
      std::floor(static_cast<double>(o.segment_length) * (1.0 - o.overlap)));
  return std::max<std::size_t>(h, 1);
}

}  // namespace

std::size_t welch_segment_count(std::size_t n, const WelchOptions& o) {
  if (o.segment_length == 0 || o.segment_length > n) return 0;
  return 1 + (n - o.segment_length) / hop(o);
}

PowerSpectrum welch_psd(std::span<const double> trace, double fs, const WelchOptions& o) {
  if (trace.empty()) throw DomainError("welch_psd: empty trace");
  if (!(fs > 0.0)) throw DomainError("welch_psd: sample rate must be positive");
  if (o.segment_length < 2) throw DomainError("welch_psd: segment length must be >= 2");
  if (o.segment_length > trace.size())
    throw DomainError("welch_psd: segment length exceeds trace length");
  if (!(o.overlap >= 0.0 && o.overlap < 1.0))
    throw DomainError("welch_psd: overlap must lie in [0, 1)");

  const std::size_t n = o.segment_length;
  const std::size_t bins = n / 2 + 1;
  std::vector<double> w(n, 1.0);
  if (o.window == Window::hann)
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n));
  const double wss = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

  std::unique_ptr<double, FftwDeleter> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwDeleter> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  }

  PowerSpectrum ps;
  ps.psd.assign(bins, 0.0);
  ps.segments = welch_segment_count(trace.size(), o);
  const std::size_t step = hop(o);
  for (std::size_t s = 0; s < ps.segments; ++s) {
    const double* seg = trace.data() + s * step;
    const double mean = std::accumulate(seg, seg + n, 0.0) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) in.get()[i] = (seg[i] - mean) * w[i];
    fftw_execute(plan);
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = out.get()[k][0], im = out.get()[k][1];
      ps.psd[k] += re * re + im * im;
    }
  }
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    fftw_destroy_plan(plan);
  }

  const double norm = 1.0 / (fs * wss * static_cast<double>(ps.segments));
  ps.freq_hz.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == bins - 1);
    ps.psd[k] *= (edge ? 1.0 : 2.0) * norm;
    ps.freq_hz[k] = fs * static_cast<double>(k) / static_cast<double>(n);
  }
  ps.resolution_hz = fs / static_cast<double>(n);
  return ps;
}

}  // namespace levcav
