#include "rydtv/waveform.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rydtv {

void Waveform::validate() const {
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("waveform: sample_rate must be > 0");
  if (!std::isfinite(start_time_s)) throw std::invalid_argument("waveform: start_time not finite");
  for (double s : samples)
    if (!std::isfinite(s)) throw std::invalid_argument("waveform: non-finite sample");
}

void write_rydwav(const std::string& path, const Waveform& w) {
  w.validate();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  char head[128];
  int n = std::snprintf(head, sizeof head, "RYDWAV1 %.9g %zu %.9g\n", w.sample_rate_hz,
                        w.samples.size(), w.start_time_s);
  f.write(head, n);
  std::vector<unsigned char> buf(w.samples.size() * 4);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    float v = static_cast<float>(w.samples[i]);
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    buf[4 * i + 0] = u & 0xff;
    buf[4 * i + 1] = (u >> 8) & 0xff;
    buf[4 * i + 2] = (u >> 16) & 0xff;
    buf[4 * i + 3] = (u >> 24) & 0xff;
  }
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

Waveform read_rydwav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("missing RYDWAV1 header: " + path);
  double rate = 0, start = 0;
  unsigned long long count = 0;
  if (std::sscanf(line.c_str(), "RYDWAV1 %lf %llu %lf", &rate, &count, &start) != 3)
    throw std::runtime_error("bad RYDWAV1 header: " + path);
  Waveform w;
  w.sample_rate_hz = rate;
  w.start_time_s = start;
  w.samples.resize(count);
  std::vector<unsigned char> buf(count * 4);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<unsigned long long>(f.gcount()) != count * 4)
    throw std::runtime_error("truncated RYDWAV1 payload: " + path);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = buf[4 * i] | (buf[4 * i + 1] << 8) | (buf[4 * i + 2] << 16) |
                      (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    float v;
    std::memcpy(&v, &u, 4);
    w.samples[i] = v;
  }
  w.validate();
  return w;
}

std::string waveform_csv(const Waveform& w) {
  std::string out = "time_s,amplitude\n";
  char row[80];
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    std::snprintf(row, sizeof row, "%.9e,%.9e\n", w.time_at(i), w.samples[i]);
    out += row;
  }
  return out;
}

std::vector<double> fir_lowpass_taps(double cutoff_hz, double sample_rate_hz, std::size_t taps) {
  if (taps % 2 == 0 || taps < 3) throw std::invalid_argument("fir: odd tap count >= 3 required");
  if (!(cutoff_hz > 0) || !(cutoff_hz < sample_rate_hz / 2))
    throw std::invalid_argument("fir: cutoff must be in (0, nyquist)");
  std::vector<double> h(taps);
  const double fc = cutoff_hz / sample_rate_hz;
  const long m = static_cast<long>(taps - 1) / 2;
  double sum = 0;
  for (long k = -m; k <= m; ++k) {
    double x = (k == 0) ? 2 * fc : std::sin(2 * M_PI * fc * k) / (M_PI * k);
    double wnd = 0.54 + 0.46 * std::cos(M_PI * k / static_cast<double>(m));
    h[static_cast<std::size_t>(k + m)] = x * wnd;
    sum += x * wnd;
  }
  for (double& v : h) v /= sum;
  return h;
}

std::vector<double> fir_apply_centered(const std::vector<double>& x, const std::vector<double>& h) {
  const long n = static_cast<long>(x.size());
  const long m = static_cast<long>(h.size() - 1) / 2;
  std::vector<double> y(x.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    double acc = 0;
    for (long k = -m; k <= m; ++k) {
      long j = i + k;
      if (j < 0) j = 0;
      if (j >= n) j = n - 1;
      acc += h[static_cast<std::size_t>(k + m)] * x[static_cast<std::size_t>(j)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

double tone_amplitude(const Waveform& w, double freq_hz, std::size_t begin, std::size_t end) {
  if (end > w.samples.size() || begin >= end) throw std::invalid_argument("tone_amplitude: bad range");
  // Project about the window mean: a large DC pedestal would otherwise leak
  // into the bin whenever the window spans a non-integer number of cycles.
  double mean = 0;
  for (std::size_t n = begin; n < end; ++n) mean += w.samples[n];
  mean /= static_cast<double>(end - begin);
  std::complex<double> z = 0;
  const double dphi = 2 * M_PI * freq_hz / w.sample_rate_hz;
  for (std::size_t n = begin; n < end; ++n)
    z += (w.samples[n] - mean) * std::exp(std::complex<double>(0, -dphi * static_cast<double>(n)));
  return 2.0 * std::abs(z) / static_cast<double>(end - begin);
}

}  // namespace rydtv
