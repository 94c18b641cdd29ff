#pragma once

#include <span>
#include <vector>

namespace levcav {

/// One-sided power spectral density on a uniform grid in Hz.
struct PowerSpectrum {
  std::vector<double> freq_hz;
  std::vector<double> psd;  // units²/Hz
  std::size_t segments = 0;
  double resolution_hz = 0.0;
};

enum class Window { hann, rectangular };

struct WelchOptions {
  std::size_t segment_length = 8192;
  double overlap = 0.5;  // fraction of segment_length, in [0, 1)
  Window window = Window::hann;
};

/// Averaged modified periodogram. Each segment is mean-removed and windowed.
/// Σ psd·Δf equals the trace variance for the rectangular window.
PowerSpectrum welch_psd(std::span<const double> trace, double sample_rate_hz,
                        const WelchOptions& options = {});

/// Number of segments a trace of `n` samples yields.
std::size_t welch_segment_count(std::size_t n, const WelchOptions& options);

}  // namespace levcav
