#include "rydtv/ntsc_codec.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

namespace rydtv {

namespace {

constexpr double kYr = 0.299, kYg = 0.587, kYb = 0.114;
constexpr double kIr = 0.596, kIg = -0.274, kIb = -0.322;
constexpr double kQr = 0.211, kQg = -0.523, kQb = 0.312;

// Samples to skip at both ends of the back-porch noise window: after the burst
// so filter transients settle, and before active video so group delay in the
// signal path cannot slide the window onto the first picture edge.
constexpr int kPorchSettleGuard = 6;
// Correlation window: skip 1.5 subcarrier cycles on each side of the burst.
constexpr int kBurstWindowSkip = 6;
constexpr int kBurstWindowLen = 24;
constexpr double kAccGainCap = 30.0;
// Back-porch clamp gate: two full subcarrier cycles just after the burst, so
// any residual burst ripple averages out of the per-line black reference.
constexpr int kClampGateOffset = 2;
constexpr int kClampGateLen = 8;

constexpr int kLumaTaps = 101;
constexpr int kChromaTaps = 101;
constexpr double kLumaCutoffHz = 3.0e6;
constexpr double kChromaCutoffHz = 1.3e6;

double subcarrier_phase(const LineTiming& t, double abs_sample) {
  double cycles = std::fmod(abs_sample * t.subcarrier_hz / t.sample_rate_hz, 1.0);
  return 2.0 * M_PI * cycles;
}

int field_line_count(const LineTiming& t) { return t.vertical_sync_lines + RgbFrame::height / 2; }

// Replaces everything outside the active window with the boundary pixel value
// so the low-pass filters see no porch/blank step at the active edges.
std::vector<double> extend_active(const std::vector<double>& s, int active_start, int n_active) {
  std::vector<double> e = s;
  int end = active_start + n_active;
  for (int k = 0; k < active_start && k < static_cast<int>(e.size()); ++k)
    e[k] = s[active_start];
  for (int k = end; k < static_cast<int>(e.size()); ++k) e[k] = s[end - 1];
  return e;
}

struct PulseRun {
  double down, up;  // interpolated crossing positions, absolute samples
  double length() const { return up - down; }
};

std::vector<PulseRun> threshold_runs(const std::vector<double>& s, double th) {
  std::vector<PulseRun> runs;
  if (s.empty()) return runs;
  bool low = s[0] < th;  // a run already active at the start opens at 0
  double down = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!low && s[i - 1] >= th && s[i] < th) {
      double f = (s[i - 1] - th) / (s[i - 1] - s[i]);
      down = static_cast<double>(i - 1) + f;
      low = true;
    } else if (low && s[i - 1] < th && s[i] >= th) {
      double f = (th - s[i - 1]) / (s[i] - s[i - 1]);
      runs.push_back({down, static_cast<double>(i - 1) + f});
      low = false;
    }
  }
  return runs;
}

}  // namespace

void RgbFrame::validate() const {
  if (pixels.size() != static_cast<std::size_t>(width) * height * 3)
    throw std::invalid_argument("frame: pixel buffer must be 720x480 RGB");
}

Yiq rgb_to_yiq(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double rf = r / 255.0, gf = g / 255.0, bf = b / 255.0;
  return {kYr * rf + kYg * gf + kYb * bf, kIr * rf + kIg * gf + kIb * bf,
          kQr * rf + kQg * gf + kQb * bf};
}

void yiq_to_rgb(const Yiq& v, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) {
  // Inverse of the standard YIQ matrix.
  double rf = v.y + 0.956 * v.i + 0.619 * v.q;
  double gf = v.y - 0.272 * v.i - 0.647 * v.q;
  double bf = v.y - 1.106 * v.i + 1.703 * v.q;
  auto to8 = [](double x) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(x * 255.0), 0L, 255L));
  };
  r = to8(rf);
  g = to8(gf);
  b = to8(bf);
}

double max_legal_saturation() { return std::hypot(kIr, kQr); }  // red/cyan corner

void LineTiming::validate() const {
  if (!(line_period_s > 0) || !(sample_rate_hz > 0) || !(subcarrier_hz > 0))
    throw std::invalid_argument("timing: periods and rates must be > 0");
  if (sample_rate_hz < 4.0 * subcarrier_hz)
    throw std::invalid_argument("timing: sample_rate must be >= 4x subcarrier");
  const double burst_s = burst_cycles / subcarrier_hz;
  if (hsync_width_s + breezeway_s + burst_s + back_porch_s + active_duration_s > line_period_s)
    throw std::invalid_argument("timing: line segments exceed the line period");
  if (vertical_sync_lines < 1) throw std::invalid_argument("timing: need >= 1 vertical sync line");
  if (active_start_sample() + active_pixels > samples_per_line())
    throw std::invalid_argument("timing: active region does not fit the line");
}

int LineTiming::samples_per_line() const {
  return static_cast<int>(std::lround(line_period_s * sample_rate_hz));
}
int LineTiming::sync_end_sample() const {
  return static_cast<int>(std::lround(hsync_width_s * sample_rate_hz));
}
int LineTiming::burst_start_sample() const {
  return static_cast<int>(std::lround((hsync_width_s + breezeway_s) * sample_rate_hz));
}
int LineTiming::burst_end_sample() const {
  return burst_start_sample() +
         static_cast<int>(std::lround(burst_cycles * sample_rate_hz / subcarrier_hz));
}
int LineTiming::active_start_sample() const {
  return static_cast<int>(std::lround(
      (hsync_width_s + breezeway_s + burst_cycles / subcarrier_hz + back_porch_s) *
      sample_rate_hz));
}

void Levels::validate() const {
  if (!(sync < blank) || !(blank <= black) || !(black < white))
    throw std::invalid_argument("levels: need sync < blank <= black < white");
  if (!(burst_amplitude > 0)) throw std::invalid_argument("levels: burst amplitude must be > 0");
}

std::vector<double> encode_line(const std::vector<Yiq>& pixels, const LineTiming& t,
                                const Levels& v, int line_index, FieldParity parity) {
  t.validate();
  v.validate();
  if (static_cast<int>(pixels.size()) != LineTiming::active_pixels)
    throw std::invalid_argument("encode_line: exactly 720 pixels required");
  const int spl = t.samples_per_line();
  const int abs_line = (parity == FieldParity::even ? field_line_count(t) : 0) +
                       t.vertical_sync_lines + line_index;
  const double line_start = static_cast<double>(abs_line) * spl;

  std::vector<double> out(static_cast<std::size_t>(spl), v.blank);
  for (int k = 0; k < t.sync_end_sample(); ++k) out[k] = v.sync;
  for (int k = t.burst_start_sample(); k < t.burst_end_sample(); ++k)
    out[k] = v.blank + v.burst_amplitude * std::sin(subcarrier_phase(t, line_start + k) + M_PI);
  const int a0 = t.active_start_sample();
  const double luma_span = v.white - v.black;
  for (int j = 0; j < LineTiming::active_pixels; ++j) {
    const Yiq& p = pixels[static_cast<std::size_t>(j)];
    double th = subcarrier_phase(t, line_start + a0 + j);
    double chroma = (p.q * std::sin(th) + p.i * std::cos(th)) * luma_span;
    out[a0 + j] = v.black + p.y * luma_span + chroma;
  }
  return out;
}

CompositeWaveform encode_frame(const RgbFrame& frame, const LineTiming& t, const Levels& v) {
  frame.validate();
  t.validate();
  v.validate();
  const int spl = t.samples_per_line();
  const int fl = field_line_count(t);
  CompositeWaveform c;
  c.timing = t;
  c.levels = v;
  c.waveform.sample_rate_hz = t.sample_rate_hz;
  c.waveform.samples.assign(static_cast<std::size_t>(2) * fl * spl, v.blank);

  std::vector<Yiq> row(LineTiming::active_pixels);
  for (int f = 0; f < 2; ++f) {
    const FieldParity parity = f == 0 ? FieldParity::odd : FieldParity::even;
    const std::size_t field_base = static_cast<std::size_t>(f) * fl * spl;
    for (int k = 0; k < t.vertical_sync_lines * spl; ++k)
      c.waveform.samples[field_base + k] = v.sync;
    for (int k = 0; k < RgbFrame::height / 2; ++k) {
      const int src_row = 2 * k + f;
      for (int x = 0; x < RgbFrame::width; ++x)
        row[x] = rgb_to_yiq(frame.at(x, src_row, 0), frame.at(x, src_row, 1),
                            frame.at(x, src_row, 2));
      std::vector<double> line = encode_line(row, t, v, k, parity);
      std::copy(line.begin(), line.end(),
                c.waveform.samples.begin() + static_cast<long>(field_base) +
                    static_cast<long>(t.vertical_sync_lines + k) * spl);
    }
  }
  return c;
}

SyncInfo detect_sync(const CompositeWaveform& c) {
  c.timing.validate();
  c.levels.validate();
  const std::vector<double>& s = c.waveform.samples;
  const double th = 0.5 * (c.levels.sync + c.levels.blank);
  const double spl = c.timing.samples_per_line();
  const double hw = c.timing.sync_end_sample();

  std::vector<PulseRun> runs = threshold_runs(s, th);
  std::vector<PulseRun> pulses;
  for (const PulseRun& r : runs)
    if (r.length() >= 3.0) pulses.push_back(r);
  if (pulses.empty()) throw SyncError("detect_sync: no sync pulses found");

  SyncInfo info;
  for (const PulseRun& r : pulses) {
    const double len = r.length();
    if (len > 1.5 * spl) {
      info.field_starts.push_back(r.down);
      info.field_parities.push_back(info.field_starts.size() % 2 == 1 ? FieldParity::odd
                                                                      : FieldParity::even);
      // The first active line's hsync merges into the trigger; its start
      // follows from the nominal trigger length.
      info.line_starts.push_back(r.down + c.timing.vertical_sync_lines * spl);
    } else if (len >= 0.5 * hw && len <= 3.0 * hw) {
      info.line_starts.push_back(0.5 * (r.down + r.up) - 0.5 * hw);
    }
  }
  if (info.line_starts.empty()) throw SyncError("detect_sync: no horizontal sync found");
  std::sort(info.line_starts.begin(), info.line_starts.end());

  std::vector<double> periods;
  info.irregular.assign(info.line_starts.size(), 0);
  for (std::size_t i = 1; i < info.line_starts.size(); ++i) {
    double d = info.line_starts[i] - info.line_starts[i - 1];
    if (d < 1.5 * spl) {
      periods.push_back(d);
      if (std::abs(d - spl) > 0.05 * spl) info.irregular[i] = 1;
    }
  }
  if (!periods.empty()) {
    std::sort(periods.begin(), periods.end());
    info.estimated_line_period_samples = periods[periods.size() / 2];
  }
  return info;
}

DecodedLine decode_line(const std::vector<double>& line_samples, const LineTiming& t,
                        const Levels& v, double line_start_sample) {
  const int spl = t.samples_per_line();
  if (static_cast<int>(line_samples.size()) < spl)
    throw std::invalid_argument("decode_line: slice shorter than one line period");
  const int b0 = t.burst_start_sample() + kBurstWindowSkip;
  const int a0 = t.active_start_sample();
  const double luma_span = v.white - v.black;

  // Burst phase/amplitude by quadrature correlation.
  std::complex<double> z = 0;
  for (int k = 0; k < kBurstWindowLen; ++k) {
    double th = subcarrier_phase(t, line_start_sample + b0 + k);
    z += line_samples[b0 + k] * std::exp(std::complex<double>(0, -th));
  }
  const double burst_amp = 2.0 * std::abs(z) / kBurstWindowLen;
  const double delta = std::arg(z) - M_PI / 2.0;  // channel phase on top of the 180-deg burst

  // Noise floor: RMS of the quietest clamp-gate-sized stretch of the back
  // porch, so settling transients or channel lag at the window edges do not
  // mask a healthy burst.
  double rms = 0;
  {
    const int p0 = t.burst_end_sample() + kClampGateOffset;
    const int p1 = a0 - kClampGateOffset;
    const int win = kClampGateLen;
    auto window_rms = [&](int s0, int s1) {
      double mean = 0;
      for (int k = s0; k < s1; ++k) mean += line_samples[k];
      mean /= (s1 - s0);
      double acc = 0;
      for (int k = s0; k < s1; ++k) {
        double d = line_samples[k] - mean;
        acc += d * d;
      }
      return std::sqrt(acc / (s1 - s0));
    };
    if (p1 - p0 >= win) {
      rms = window_rms(p0, p0 + win);
      for (int s0 = p0 + 1; s0 + win <= p1; ++s0) rms = std::min(rms, window_rms(s0, s0 + win));
    } else if (p1 - p0 >= 4) {
      rms = window_rms(p0, p1);
    }
  }

  DecodedLine out;
  out.burst_amplitude = burst_amp;
  out.burst_phase = std::arg(z);
  out.burst_locked = burst_amp >= 3.0 * rms && burst_amp > 0;

  // Per-line DC restoration: clamp the black reference to this line's own
  // back porch, like a gated clamp in an analog receiver.
  double black = v.black;
  {
    const int g0 = t.burst_end_sample() + kClampGateOffset;
    if (g0 + kClampGateLen <= spl) {
      double porch = 0;
      for (int k = g0; k < g0 + kClampGateLen; ++k) porch += line_samples[k];
      black = porch / kClampGateLen + (v.black - v.blank);
    }
  }

  const std::vector<double> luma_taps =
      fir_lowpass_taps(kLumaCutoffHz, t.sample_rate_hz, kLumaTaps);
  const std::vector<double> chroma_taps =
      fir_lowpass_taps(kChromaCutoffHz, t.sample_rate_hz, kChromaTaps);

  std::vector<double> slice(line_samples.begin(), line_samples.begin() + spl);
  std::vector<double> luma_in = slice;
  std::vector<double> i_f, q_f;
  double acc_gain = 1.0;

  if (out.burst_locked) {
    // Mix from the edge-extended composite: outside the active region the
    // products are then pure carrier, which the LPF rejects, instead of the
    // DC shelf a product-domain extension would leave.
    const std::vector<double> ext = extend_active(slice, a0, LineTiming::active_pixels);
    std::vector<double> ip(slice.size()), qp(slice.size());
    for (int k = 0; k < spl; ++k) {
      double th = subcarrier_phase(t, line_start_sample + k) + delta;
      ip[k] = 2.0 * ext[k] * std::cos(th);
      qp[k] = 2.0 * ext[k] * std::sin(th);
    }
    i_f = fir_apply_centered(ip, chroma_taps);
    q_f = fir_apply_centered(qp, chroma_taps);
    acc_gain = std::min(v.burst_amplitude / burst_amp, kAccGainCap);
    for (int k = 0; k < spl; ++k) {
      double th = subcarrier_phase(t, line_start_sample + k) + delta;
      luma_in[k] = slice[k] - (i_f[k] * std::cos(th) + q_f[k] * std::sin(th));
    }
  }

  std::vector<double> luma =
      fir_apply_centered(extend_active(luma_in, a0, LineTiming::active_pixels), luma_taps);

  out.pixels.resize(LineTiming::active_pixels);
  for (int j = 0; j < LineTiming::active_pixels; ++j) {
    Yiq& p = out.pixels[j];
    p.y = std::clamp((luma[a0 + j] - black) / luma_span, 0.0, 1.2);
    if (out.burst_locked) {
      p.i = i_f[a0 + j] * acc_gain / luma_span;
      p.q = q_f[a0 + j] * acc_gain / luma_span;
    }
  }
  return out;
}

std::pair<RgbFrame, DecodeReport> decode_frame(const CompositeWaveform& c) {
  SyncInfo sync = detect_sync(c);
  if (sync.field_starts.size() < 2)
    throw SyncError("decode_frame: composite must contain at least 2 fields");

  const LineTiming& t = c.timing;
  const int spl = t.samples_per_line();
  const std::vector<double>& s = c.waveform.samples;
  RgbFrame frame;
  DecodeReport report;
  report.chroma_enabled.assign(RgbFrame::height, 0);
  double burst_sum = 0;

  for (int f = 0; f < 2; ++f) {
    const double line0 = sync.field_starts[f] + t.vertical_sync_lines * spl;
    for (int k = 0; k < RgbFrame::height / 2; ++k) {
      const double expected = line0 + static_cast<double>(k) * spl;
      auto it = std::lower_bound(sync.line_starts.begin(), sync.line_starts.end(), expected);
      double best = -1, bestd = 0.35 * spl;
      for (int probe = -1; probe <= 0; ++probe) {
        auto jt = it + probe;
        if (jt < sync.line_starts.begin() || jt >= sync.line_starts.end()) continue;
        double d = std::abs(*jt - expected);
        if (d < bestd) {
          bestd = d;
          best = *jt;
        }
      }
      const int row = 2 * k + f;
      if (best < 0) continue;  // missing line stays black
      const long s0 = std::lround(best);
      if (s0 < 0 || s0 + spl > static_cast<long>(s.size())) continue;
      std::vector<double> slice(s.begin() + s0, s.begin() + s0 + spl);
      DecodedLine line = decode_line(slice, t, c.levels, static_cast<double>(s0));
      ++report.lines_detected;
      burst_sum += line.burst_amplitude;
      if (line.burst_locked) {
        ++report.burst_locked_lines;
        report.chroma_enabled[row] = 1;
      }
      for (int x = 0; x < RgbFrame::width; ++x)
        yiq_to_rgb(line.pixels[x], frame.at(x, row, 0), frame.at(x, row, 1), frame.at(x, row, 2));
    }
  }
  if (report.lines_detected > 0) report.mean_burst_amplitude = burst_sum / report.lines_detected;
  return {std::move(frame), std::move(report)};
}

long long nominal_bitrate(int fields_per_s, int lines_per_field, int px_per_line,
                          int bits_per_px) {
  if (fields_per_s <= 0 || lines_per_field <= 0 || px_per_line <= 0 || bits_per_px <= 0)
    throw std::invalid_argument("nominal_bitrate: factors must be positive");
  return static_cast<long long>(fields_per_s) * lines_per_field * px_per_line * bits_per_px;
}

std::string format_mbps(long long bits_per_s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld Mbps", std::llround(bits_per_s / 1e6));
  return buf;
}

std::string DecodeReport::serialize() const {
  char head[256];
  std::snprintf(head, sizeof head,
                "lines_detected=%d\nburst_locked_lines=%d\nlock_fraction=%.6f\n"
                "mean_burst_amplitude=%.6f\n",
                lines_detected, burst_locked_lines, lock_fraction(), mean_burst_amplitude);
  std::string out = head;
  for (std::size_t i = 0; i < chroma_enabled.size(); ++i) {
    char row[48];
    std::snprintf(row, sizeof row, "line,%zu,locked,%d\n", i, chroma_enabled[i] ? 1 : 0);
    out += row;
  }
  return out;
}

void write_ppm(const std::string& path, const RgbFrame& f) {
  f.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "P6\n720 480\n255\n";
  out.write(reinterpret_cast<const char*>(f.pixels.data()),
            static_cast<std::streamsize>(f.pixels.size()));
  if (!out) throw std::runtime_error("short write: " + path);
}

RgbFrame read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  auto next_token = [&in, &path]() {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
      } else if (!std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
        while ((ch = in.get()) != EOF && !std::isspace(ch)) tok.push_back(static_cast<char>(ch));
        return tok;
      }
    }
    throw std::runtime_error("truncated PPM header: " + path);
  };
  if (next_token() != "P6") throw std::runtime_error("not a P6 pixmap: " + path);
  const std::string w = next_token(), h = next_token(), maxv = next_token();
  if (w != "720" || h != "480" || maxv != "255")
    throw std::runtime_error("PPM must be 720x480 with maxval 255: " + path);
  RgbFrame f;
  in.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != f.pixels.size())
    throw std::runtime_error("truncated PPM payload: " + path);
  return f;
}

std::string composite_metadata(const CompositeWaveform& c) {
  char buf[640];
  std::snprintf(buf, sizeof buf,
                "line_period_s=%.9e\nhsync_width_s=%.9e\nbreezeway_s=%.9e\nburst_cycles=%d\n"
                "back_porch_s=%.9e\nactive_duration_s=%.9e\nsubcarrier_hz=%.6f\n"
                "sample_rate_hz=%.6f\nvertical_sync_lines=%d\nsync_level=%.6f\nblank_level=%.6f\n"
                "black_level=%.6f\nwhite_level=%.6f\nburst_amplitude=%.6f\n",
                c.timing.line_period_s, c.timing.hsync_width_s, c.timing.breezeway_s,
                c.timing.burst_cycles, c.timing.back_porch_s, c.timing.active_duration_s,
                c.timing.subcarrier_hz, c.timing.sample_rate_hz, c.timing.vertical_sync_lines,
                c.levels.sync, c.levels.blank, c.levels.black, c.levels.white,
                c.levels.burst_amplitude);
  return buf;
}

void apply_metadata_line(const std::string& line, LineTiming& t, Levels& v) {
  auto eq = line.find('=');
  if (eq == std::string::npos) return;
  const std::string key = line.substr(0, eq);
  const double val = std::atof(line.c_str() + eq + 1);
  if (key == "line_period_s") t.line_period_s = val;
  else if (key == "hsync_width_s") t.hsync_width_s = val;
  else if (key == "breezeway_s") t.breezeway_s = val;
  else if (key == "burst_cycles") t.burst_cycles = static_cast<int>(val);
  else if (key == "back_porch_s") t.back_porch_s = val;
  else if (key == "active_duration_s") t.active_duration_s = val;
  else if (key == "subcarrier_hz") t.subcarrier_hz = val;
  else if (key == "sample_rate_hz") t.sample_rate_hz = val;
  else if (key == "vertical_sync_lines") t.vertical_sync_lines = static_cast<int>(val);
  else if (key == "sync_level") v.sync = val;
  else if (key == "blank_level") v.blank = val;
  else if (key == "black_level") v.black = val;
  else if (key == "white_level") v.white = val;
  else if (key == "burst_amplitude") v.burst_amplitude = val;
}

Levels estimate_levels(const Waveform& w, const LineTiming& t) {
  if (w.samples.size() < static_cast<std::size_t>(t.samples_per_line()))
    throw std::invalid_argument("estimate_levels: waveform shorter than one line");
  std::vector<double> sorted = w.samples;
  std::sort(sorted.begin(), sorted.end());
  const double sync = sorted[sorted.size() / 100];
  const double rough_blank = sorted[sorted.size() / 2];
  const double th = sync + 0.3 * (rough_blank - sync);

  // Collect back-porch samples behind each hsync-sized pulse, then take the
  // mode over a fine histogram as the blank level.
  std::vector<double> porch;
  const double hw = t.sync_end_sample();
  const int porch_off = t.burst_end_sample() - t.sync_end_sample() + kPorchSettleGuard;
  const int porch_len = t.active_start_sample() - t.burst_end_sample() - 2 * kPorchSettleGuard;
  for (const PulseRun& r : threshold_runs(w.samples, th)) {
    if (r.length() < 0.5 * hw || r.length() > 3.0 * hw) continue;
    long p0 = std::lround(r.up) + porch_off;
    for (int k = 0; k < porch_len; ++k)
      if (p0 + k >= 0 && p0 + k < static_cast<long>(w.samples.size()))
        porch.push_back(w.samples[p0 + k]);
  }
  double blank = rough_blank;
  if (porch.size() >= 16) {
    auto [lo_it, hi_it] = std::minmax_element(porch.begin(), porch.end());
    const double lo = *lo_it, span = std::max(*hi_it - *lo_it, 1e-12);
    constexpr int kBins = 256;
    std::vector<int> hist(kBins, 0);
    for (double x : porch)
      ++hist[std::min(static_cast<int>((x - lo) / span * kBins), kBins - 1)];
    int best = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
    blank = lo + (best + 0.5) * span / kBins;
  }

  Levels v;
  v.sync = sync;
  v.blank = blank;
  v.black = blank + (blank - sync) * 7.5 / 40.0;
  v.white = blank + (blank - sync) * 100.0 / 40.0;
  v.burst_amplitude = 0.1429 * (blank - sync) / 0.285;
  return v;
}

RgbFrame color_bars_frame() {
  // 75%-amplitude bars: gray, yellow, cyan, green, magenta, red, blue.
  static constexpr std::uint8_t kBars[7][3] = {{191, 191, 191}, {191, 191, 0}, {0, 191, 191},
                                               {0, 191, 0},     {191, 0, 191}, {191, 0, 0},
                                               {0, 0, 191}};
  // Transition half-width, px: band-limits the pattern to what the chroma
  // channel can carry, as a bars generator feeding an analog chain would.
  const double ramp = 5.0;
  RgbFrame f;
  std::array<std::array<double, 3>, RgbFrame::width> rowv{};
  for (int x = 0; x < RgbFrame::width; ++x) {
    double pos = x * 7.0 / RgbFrame::width;
    int bar = std::min(static_cast<int>(pos), 6);
    for (int ch = 0; ch < 3; ++ch) rowv[x][ch] = kBars[bar][ch];
    for (int b = 1; b < 7; ++b) {
      double edge = b * RgbFrame::width / 7.0;
      double d = x - edge;
      if (d >= -ramp && d < ramp) {
        double w = 0.5 - 0.5 * std::cos(M_PI * (d + ramp) / (2 * ramp));
        for (int ch = 0; ch < 3; ++ch)
          rowv[x][ch] = (1 - w) * kBars[b - 1][ch] + w * kBars[b][ch];
      }
    }
  }
  for (int y = 0; y < RgbFrame::height; ++y)
    for (int x = 0; x < RgbFrame::width; ++x)
      for (int ch = 0; ch < 3; ++ch)
        f.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(rowv[x][ch]));
  return f;
}

}  // namespace rydtv
