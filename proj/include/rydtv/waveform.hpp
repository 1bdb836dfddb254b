#pragma once
#include <cstddef>
#include <string>
#include <vector>

namespace rydtv {

// Sampled real-valued signal. Samples live as doubles in memory; the RYDWAV1
// container stores little-endian float32.
struct Waveform {
  double sample_rate_hz = 0.0;
  double start_time_s = 0.0;
  std::vector<double> samples;

  void validate() const;  // rate > 0, every sample finite
  double duration_s() const { return samples.size() / sample_rate_hz; }
  double time_at(std::size_t n) const { return start_time_s + n / sample_rate_hz; }
};

void write_rydwav(const std::string& path, const Waveform& w);
Waveform read_rydwav(const std::string& path);
std::string waveform_csv(const Waveform& w);  // time_s,amplitude rows

// Shared DSP helpers.
// Hamming-windowed sinc, unity DC gain, odd tap count required.
std::vector<double> fir_lowpass_taps(double cutoff_hz, double sample_rate_hz, std::size_t taps);
// Group-delay-compensated FIR (edges clamp to the boundary sample).
std::vector<double> fir_apply_centered(const std::vector<double>& x, const std::vector<double>& h);
// Amplitude of the freq_hz component over sample range [begin, end).
double tone_amplitude(const Waveform& w, double freq_hz, std::size_t begin, std::size_t end);

}  // namespace rydtv
