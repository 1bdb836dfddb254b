#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rydtv/metrics.hpp"
#include "rydtv/ntsc_codec.hpp"
#include "rydtv/receiver_channel.hpp"

namespace rydtv {

// Bad flags or configuration (exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Missing or unreadable/unwritable files (exit 2).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Detector amplitude noise per sqrt(Hz), calibrated so the default 85 um
// homodyne channel (static span ~5.9e-3, 10 MHz bandwidth) lands at
// ~0.002 RMS in recalibrated composite units.
inline constexpr double kDefaultNoiseDensity = 3.3e-12;

struct ExperimentConfig {
  std::vector<double> fwhm_um{85.0};
  double coupling_fwhm_um = 0.0;  // 0 = pair with the probe width as in Table I
  double atom_speed_mps = 240.0;
  double density_scale = 0.01;
  double probe_rabi_mhz = 3.0;  // Rabi frequencies given as f = omega / 2pi
  double coupling_rabi_mhz = 10.0;
  double rf_bias_rabi_mhz = 0.0;  // 0 = auto-place on the discriminator slope
  double modulation_depth = 0.5;
  DetectionMode detection = DetectionMode::homodyne;
  double detector_gain = 1.0;
  double detector_bandwidth_mhz = 10.0;
  double noise_density = kDefaultNoiseDensity;
  std::uint64_t seed = 0;  // 0 = draw one and echo it into the report
  CalibrationMode mode = CalibrationMode::table;
  std::string input;  // empty = built-in color bars
  std::string out_dir = "out";
  bool dump_waveforms = false;
  int dump_row = 100;  // frame row for --dump-waveforms
  int jobs = 1;
  std::vector<double> eit_probe_rabi_mhz{2.0, 4.0, 6.0, 8.0, 10.0};

  void validate() const;
};

// key=value configuration, one pair per line; '#' starts a comment.
ExperimentConfig load_config(const std::string& path);
void apply_config_line(ExperimentConfig& c, const std::string& line);

// The probe/coupling pairings used in the experiments.
double paired_coupling_fwhm_um(double probe_fwhm_um);

ChannelConfig channel_config_for(const ExperimentConfig& c, double fwhm_um,
                                 std::uint64_t seed);

// Scans the bias grid for the largest monotone static swing over one
// modulation span; throws UsageError if no usable bias exists.
double auto_bias_rabi(const ChannelConfig& base);

// Composite -> normalized baseband -> atomic channel -> composite recovered
// through the inverse of the measured static response curve.
CompositeWaveform channel_transmit(const CompositeWaveform& sent, const ChannelConfig& channel,
                                   ChannelDiagnostics* diag = nullptr);

struct SimulationResult {
  ReceptionScore score{};
  DecodeReport report{};
  bool sync_failed = false;
  std::uint64_t seed_used = 0;
  double bias_rabi = 0.0;  // rad/s actually applied
};

// Writes decoded.ppm, report.txt, score.txt (and optional waveform dumps)
// into c.out_dir. Sync failures still write report and score.
SimulationResult run_simulation(const ExperimentConfig& c, double fwhm_um);

// Runs run_simulation per width into fwhm_* subdirectories and writes
// sweep.csv; needs at least two widths. Failed entries become failed rows.
void run_sweep(const ExperimentConfig& c);

// Writes the Table I reproduction plus physics-mode EIT trend curves.
void run_eit_study(const ExperimentConfig& c);

}  // namespace rydtv
