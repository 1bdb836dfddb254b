#pragma once
#include <cstdint>
#include <utility>

#include "rydtv/atomic_model.hpp"
#include "rydtv/waveform.hpp"

namespace rydtv {

enum class DetectionMode { homodyne, balanced };

struct ChannelConfig {
  BeamGeometry geometry{};
  AtomicEnsemble ensemble{};
  LadderScheme ladder{};
  DriveParameters drive{};  // lock-point bias in rf_rabi, detunings 0
  DetectionMode detection_mode = DetectionMode::homodyne;
  double detector_gain = 1.0;
  double detector_bandwidth_hz = 10e6;
  double noise_amplitude_density = 0.0;  // amplitude per sqrt(Hz) at the detector
  double modulation_depth = 0.5;         // fraction of the bias Rabi frequency
  std::uint64_t rng_seed = 0;
  CalibrationMode calibration = CalibrationMode::table;
  double homodyne_ref_power_w = 1.5e-3;
  double homodyne_sig_power_w = 30e-6;
  double homodyne_factor() const;  // sqrt(P_ref / P_sig)
  void validate() const;
};

struct AsymmetricFilter {
  double tau_rise_s = 0.0;
  double tau_fall_s = 0.0;
  double state = 0.0;
  void validate() const;
  double step(double x, double dt);
};

struct ChannelDiagnostics {
  bool compression = false;  // envelope left the discriminator linear region
  double bias_rabi = 0.0;
  double linear_halfwidth = 0.0;
  double static_d0 = 0.0;  // static-chain outputs at baseband 0 and 1,
  double static_d1 = 0.0;  // the calibration curve endpoints
};

// Maps normalized baseband in [0,1] to the RF Rabi envelope bias*(1+depth*x).
Waveform envelope_from_baseband(const Waveform& baseband, double bias_rabi, double depth);

Waveform asymmetric_filter(const Waveform& input, AsymmetricFilter filter);

// Static chain only (envelope -> discriminator -> detection gain), no
// filtering or noise: the value a DC baseband x settles to.
double static_response(const ChannelConfig& config, double x);

// static_response sampled at several basebands with one discriminator table
// build; the receiver's calibration ramp.
std::vector<double> static_response_curve(const ChannelConfig& config,
                                          const std::vector<double>& basebands);

// envelope -> discriminator lookup -> asymmetric transit filter -> detection
// gain -> additive white Gaussian noise -> detector-bandwidth pole.
Waveform atomic_receive(const Waveform& baseband, const ChannelConfig& config,
                        ChannelDiagnostics* diag = nullptr);

Waveform square_wave_response(const ChannelConfig& config, double freq_hz, int cycles,
                              double sample_rate_hz = 50e6);

// Mean 10-90% rise and 90-10% fall over all complete edges after the first
// period; levels from per-cycle extrema.
std::pair<double, double> measure_rise_fall(const Waveform& w, double period_s);

}  // namespace rydtv
