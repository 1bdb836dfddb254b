#pragma once
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rydtv/waveform.hpp"

namespace rydtv {

struct SyncError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RgbFrame {
  static constexpr int width = 720;
  static constexpr int height = 480;
  std::vector<std::uint8_t> pixels;  // interleaved RGB, row-major

  RgbFrame() : pixels(static_cast<std::size_t>(width) * height * 3, 0) {}
  std::uint8_t& at(int x, int y, int ch) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
  }
  std::uint8_t at(int x, int y, int ch) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
  }
  void validate() const;
};

struct Yiq {
  double y = 0, i = 0, q = 0;
};

Yiq rgb_to_yiq(std::uint8_t r, std::uint8_t g, std::uint8_t b);
void yiq_to_rgb(const Yiq& v, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b);

// Largest sqrt(i^2+q^2) over the RGB cube (the red/cyan corner).
double max_legal_saturation();

enum class FieldParity { odd, even };

struct LineTiming {
  double line_period_s = 910.0 / 14318180.0;  // 910 samples at 4 x fsc
  double hsync_width_s = 4.7e-6;
  double breezeway_s = 0.6e-6;
  int burst_cycles = 9;
  double back_porch_s = 1.6e-6;
  double active_duration_s = 52.6e-6;
  double subcarrier_hz = 3579545.0;
  double sample_rate_hz = 4.0 * 3579545.0;
  int vertical_sync_lines = 3;

  void validate() const;
  // Derived per-line sample offsets (rounded to the sample grid).
  int samples_per_line() const;
  int sync_end_sample() const;
  int burst_start_sample() const;
  int burst_end_sample() const;
  int active_start_sample() const;
  static constexpr int active_pixels = 720;
};

struct Levels {
  double sync = -0.285;
  double blank = 0.0;
  double black = 0.054;
  double white = 0.714;
  double burst_amplitude = 0.1429;
  void validate() const;
};

struct CompositeWaveform {
  Waveform waveform;
  LineTiming timing;
  Levels levels;
};

struct DecodeReport {
  int lines_detected = 0;
  int burst_locked_lines = 0;
  double mean_burst_amplitude = 0.0;
  std::vector<std::uint8_t> chroma_enabled;  // per decoded line, 0/1
  double lock_fraction() const {
    return lines_detected > 0 ? static_cast<double>(burst_locked_lines) / lines_detected : 0.0;
  }
  std::string serialize() const;
};

struct SyncInfo {
  std::vector<double> line_starts;  // fractional sample positions
  std::vector<double> field_starts;
  std::vector<FieldParity> field_parities;
  std::vector<std::uint8_t> irregular;  // per line: period deviates > 5%
  double estimated_line_period_samples = 0.0;
};

// pixels: one scan line of YIQ values. line_index counts active lines within
// the field; the subcarrier phase is tied to the line's absolute position in
// the two-field frame so it stays continuous across lines.
std::vector<double> encode_line(const std::vector<Yiq>& pixels, const LineTiming& t,
                                const Levels& v, int line_index, FieldParity parity);

CompositeWaveform encode_frame(const RgbFrame& frame, const LineTiming& t = {},
                               const Levels& v = {});

SyncInfo detect_sync(const CompositeWaveform& c);

struct DecodedLine {
  std::vector<Yiq> pixels;
  bool burst_locked = false;
  double burst_amplitude = 0.0;
  double burst_phase = 0.0;
};

DecodedLine decode_line(const std::vector<double>& line_samples, const LineTiming& t,
                        const Levels& v, double line_start_sample);

std::pair<RgbFrame, DecodeReport> decode_frame(const CompositeWaveform& c);

long long nominal_bitrate(int fields_per_s, int lines_per_field, int px_per_line, int bits_per_px);
std::string format_mbps(long long bits_per_s);  // e.g. "249 Mbps"

void write_ppm(const std::string& path, const RgbFrame& f);
RgbFrame read_ppm(const std::string& path);

// Timing+levels sidecar (key=value) for composite waveform files.
std::string composite_metadata(const CompositeWaveform& c);
void apply_metadata_line(const std::string& line, LineTiming& t, Levels& v);

// Estimates levels from the waveform itself when no sidecar is available:
// sync from the 1st percentile, blank from the mode of back-porch samples,
// black/white from the standard IRE ratios.
Levels estimate_levels(const Waveform& w, const LineTiming& t);

// 75%-amplitude SMPTE-style vertical bars with short raised-cosine ramps
// between bars so the pattern stays within legal modulation limits.
RgbFrame color_bars_frame();

}  // namespace rydtv
