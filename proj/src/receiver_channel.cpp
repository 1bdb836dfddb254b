#include "rydtv/receiver_channel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace rydtv {

namespace {

// Discriminator transfer precomputed on a uniform Rabi-frequency grid;
// evaluation clamps to the tabulated range.
struct DiscriminatorLut {
  double lo = 0, hi = 0;
  std::vector<double> t;

  static DiscriminatorLut build(const ChannelConfig& c) {
    DiscriminatorLut lut;
    const double bias = c.drive.rf_rabi;
    const double d = c.modulation_depth;
    lut.lo = std::max(bias * (1.0 - 2.0 * d), 0.0);
    lut.hi = bias * (1.0 + 2.0 * d);
    if (!(lut.hi > lut.lo)) throw std::invalid_argument("channel: bias Rabi frequency must be > 0");
    const std::size_t n = 1024;
    lut.t.resize(n);
    DriveParameters dd = c.drive;
    for (std::size_t i = 0; i < n; ++i) {
      dd.rf_rabi = lut.lo + (lut.hi - lut.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      lut.t[i] = steady_state_transmission(dd, c.ladder, c.geometry, c.ensemble);
    }
    return lut;
  }

  double eval(double rabi) const {
    const std::size_t n = t.size();
    double u = (rabi - lo) / (hi - lo) * static_cast<double>(n - 1);
    if (u <= 0) return t.front();
    if (u >= static_cast<double>(n - 1)) return t.back();
    std::size_t i = static_cast<std::size_t>(u);
    double f = u - static_cast<double>(i);
    return t[i] + f * (t[i + 1] - t[i]);
  }
};

double detection_gain_apply(const ChannelConfig& c, double transmission, double bias_transmission) {
  if (c.detection_mode == DetectionMode::homodyne)
    return transmission * c.detector_gain * c.homodyne_factor();
  return (transmission - bias_transmission) * c.detector_gain;
}

}  // namespace

double ChannelConfig::homodyne_factor() const {
  return std::sqrt(homodyne_ref_power_w / homodyne_sig_power_w);
}

void ChannelConfig::validate() const {
  geometry.validate();
  ensemble.validate();
  ladder.validate();
  drive.validate();
  if (!(modulation_depth > 0.0) || modulation_depth > 1.0)
    throw std::invalid_argument("channel: modulation_depth must be in (0,1]");
  if (!(detector_bandwidth_hz > 0))
    throw std::invalid_argument("channel: detector_bandwidth must be > 0");
  if (noise_amplitude_density < 0)
    throw std::invalid_argument("channel: noise density must be >= 0");
  if (!(homodyne_ref_power_w > 0) || !(homodyne_sig_power_w > 0))
    throw std::invalid_argument("channel: homodyne powers must be > 0");
}

void AsymmetricFilter::validate() const {
  if (!(tau_rise_s > 0) || !(tau_fall_s > 0))
    throw std::invalid_argument("filter: time constants must be > 0");
}

double AsymmetricFilter::step(double x, double dt) {
  const double tau = x > state ? tau_rise_s : tau_fall_s;
  state += (x - state) * (1.0 - std::exp(-dt / tau));
  return state;
}

Waveform envelope_from_baseband(const Waveform& baseband, double bias_rabi, double depth) {
  baseband.validate();
  if (!(bias_rabi > 0)) throw std::invalid_argument("envelope: bias Rabi frequency must be > 0");
  if (!(depth > 0) || depth > 1) throw std::invalid_argument("envelope: depth must be in (0,1]");
  Waveform out = baseband;
  for (double& s : out.samples) {
    if (s < 0.0 || s > 1.0) throw std::out_of_range("envelope: baseband sample outside [0,1]");
    s = bias_rabi * (1.0 + depth * s);
  }
  return out;
}

Waveform asymmetric_filter(const Waveform& input, AsymmetricFilter filter) {
  input.validate();
  filter.validate();
  const double dt = 1.0 / input.sample_rate_hz;
  if (input.sample_rate_hz * std::min(filter.tau_rise_s, filter.tau_fall_s) < 5.0)
    throw std::invalid_argument("filter: undersampled relative to the time constants");
  Waveform out = input;
  for (double& s : out.samples) s = filter.step(s, dt);
  return out;
}

std::vector<double> static_response_curve(const ChannelConfig& config,
                                          const std::vector<double>& basebands) {
  config.validate();
  DiscriminatorLut lut = DiscriminatorLut::build(config);
  const double bias = config.drive.rf_rabi;
  const double bias_t = lut.eval(bias);
  std::vector<double> out;
  out.reserve(basebands.size());
  for (double x : basebands) {
    if (x < 0 || x > 1) throw std::out_of_range("static_response: baseband outside [0,1]");
    out.push_back(detection_gain_apply(
        config, lut.eval(bias * (1.0 + config.modulation_depth * x)), bias_t));
  }
  return out;
}

double static_response(const ChannelConfig& config, double x) {
  return static_response_curve(config, {x}).front();
}

Waveform atomic_receive(const Waveform& baseband, const ChannelConfig& config,
                        ChannelDiagnostics* diag) {
  config.validate();
  Waveform env = envelope_from_baseband(baseband, config.drive.rf_rabi, config.modulation_depth);

  DiscriminatorLut lut = DiscriminatorLut::build(config);
  const double bias_t = lut.eval(config.drive.rf_rabi);

  DiscriminatorGain disc = discriminator_gain(config.drive, config.ladder, config.geometry,
                                              config.ensemble);
  bool compression = false;
  Waveform optical = env;
  for (double& s : optical.samples) {
    if (std::abs(s - config.drive.rf_rabi) > disc.linear_halfwidth) compression = true;
    s = lut.eval(s);
  }

  TemporalResponse times = response_times(config.geometry, config.ensemble, config.calibration);
  const double ln9 = std::log(9.0);
  AsymmetricFilter filt{times.rise_time_s / ln9, times.fall_time_s / ln9,
                        optical.samples.empty() ? 0.0 : optical.samples.front()};
  Waveform filtered = asymmetric_filter(optical, filt);

  for (double& s : filtered.samples) s = detection_gain_apply(config, s, bias_t);

  const double sigma = config.noise_amplitude_density * std::sqrt(config.detector_bandwidth_hz);
  if (sigma > 0) {
    std::mt19937_64 rng(config.rng_seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (double& s : filtered.samples) s += gauss(rng);
  }

  // Detector pole.
  const double dt = 1.0 / filtered.sample_rate_hz;
  const double alpha = 1.0 - std::exp(-dt * two_pi * config.detector_bandwidth_hz);
  double state = filtered.samples.empty() ? 0.0 : filtered.samples.front();
  for (double& s : filtered.samples) {
    state += (s - state) * alpha;
    s = state;
  }

  if (diag) {
    diag->compression = compression;
    diag->bias_rabi = config.drive.rf_rabi;
    diag->linear_halfwidth = disc.linear_halfwidth;
    const double bias = config.drive.rf_rabi;
    diag->static_d0 = detection_gain_apply(config, lut.eval(bias), bias_t);
    diag->static_d1 =
        detection_gain_apply(config, lut.eval(bias * (1.0 + config.modulation_depth)), bias_t);
  }
  return filtered;
}

Waveform square_wave_response(const ChannelConfig& config, double freq_hz, int cycles,
                              double sample_rate_hz) {
  config.validate();
  if (!(freq_hz > 0) || cycles < 2) throw std::invalid_argument("square wave: bad parameters");
  TemporalResponse times = response_times(config.geometry, config.ensemble, config.calibration);
  const double ln9 = std::log(9.0);
  const double tmax = std::max(times.rise_time_s, times.fall_time_s) / ln9;
  if (freq_hz * tmax >= 0.2)
    throw std::invalid_argument("square wave: frequency too high for the response to settle");
  Waveform base;
  base.sample_rate_hz = sample_rate_hz;
  const std::size_t n =
      static_cast<std::size_t>(std::llround(sample_rate_hz * cycles / freq_hz));
  base.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double phase = std::fmod(static_cast<double>(i) * freq_hz / sample_rate_hz, 1.0);
    base.samples[i] = phase < 0.5 ? 0.0 : 1.0;
  }
  return atomic_receive(base, config);
}

std::pair<double, double> measure_rise_fall(const Waveform& w, double period_s) {
  w.validate();
  if (!(period_s > 0)) throw std::invalid_argument("measure_rise_fall: period must be > 0");
  const double fs = w.sample_rate_hz;
  const std::size_t n_per = static_cast<std::size_t>(std::llround(period_s * fs));
  const std::size_t n = w.samples.size();
  if (n_per < 8 || n < 2 * n_per)
    throw std::runtime_error("measure_rise_fall: need at least 2 full periods");

  const std::size_t start = n_per;  // first cycle discarded
  std::vector<double> los, his;
  for (std::size_t c = start; c + n_per <= n; c += n_per) {
    auto b = w.samples.begin() + static_cast<long>(c);
    auto e = b + static_cast<long>(n_per);
    los.push_back(*std::min_element(b, e));
    his.push_back(*std::max_element(b, e));
  }
  if (los.empty()) throw std::runtime_error("measure_rise_fall: need at least 2 full periods");
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double lo = median(los), hi = median(his);
  const double swing = hi - lo;

  // Robust noise RMS from the median absolute successive difference
  // (0.9539 sigma for white Gaussian noise; ~0 on settled slew segments).
  std::vector<double> adiff;
  adiff.reserve(n - start - 1);
  for (std::size_t i = start + 1; i < n; ++i)
    adiff.push_back(std::abs(w.samples[i] - w.samples[i - 1]));
  std::nth_element(adiff.begin(), adiff.begin() + static_cast<long>(adiff.size() / 2), adiff.end());
  const double noise = adiff[adiff.size() / 2] / 0.9539;
  if (!(swing > 5.0 * noise) || swing <= 0)
    throw std::runtime_error("measure_rise_fall: levels indistinguishable from noise");

  const double t10 = lo + 0.1 * swing, t90 = lo + 0.9 * swing;
  auto cross_time = [&](std::size_t i, double level) {
    double a = w.samples[i - 1], b = w.samples[i];
    double f = (level - a) / (b - a);
    return (static_cast<double>(i - 1) + f) / fs;
  };

  std::vector<double> rises, falls;
  int rise_state = 0;  // 1 = crossed t10 upward, waiting for t90
  int fall_state = 0;  // 1 = crossed t90 downward, waiting for t10
  double rise_t0 = 0, fall_t0 = 0;
  for (std::size_t i = start + 1; i < n; ++i) {
    double prev = w.samples[i - 1], cur = w.samples[i];
    if (rise_state == 0 && prev < t10 && cur >= t10) {
      rise_state = 1;
      rise_t0 = cross_time(i, t10);
    }
    if (rise_state == 1) {
      if (cur < t10 && prev >= t10) rise_state = 0;  // fell back, abandon
      else if (prev < t90 && cur >= t90) {
        rises.push_back(cross_time(i, t90) - rise_t0);
        rise_state = 0;
      }
    }
    if (fall_state == 0 && prev > t90 && cur <= t90) {
      fall_state = 1;
      fall_t0 = cross_time(i, t90);
    }
    if (fall_state == 1) {
      if (cur > t90 && prev <= t90) fall_state = 0;
      else if (prev > t10 && cur <= t10) {
        falls.push_back(cross_time(i, t10) - fall_t0);
        fall_state = 0;
      }
    }
  }
  if (rises.empty() || falls.empty())
    throw std::runtime_error("measure_rise_fall: no complete edges found");
  double mr = 0, mf = 0;
  for (double r : rises) mr += r;
  for (double f : falls) mf += f;
  return {mr / static_cast<double>(rises.size()), mf / static_cast<double>(falls.size())};
}

}  // namespace rydtv
