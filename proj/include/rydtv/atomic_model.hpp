#pragma once
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace rydtv {

inline constexpr double two_pi = 6.28318530717958647692528676655900577;

// Four-level ladder 5S1/2 -> 5P3/2 -> 50D5/2 -> 51P3/2.
struct LadderScheme {
  double probe_wavelength_nm = 780.0;
  double coupling_wavelength_nm = 480.0;
  double intermediate_decay_rate = two_pi * 6.07e6;  // Rb 5P3/2
  double rydberg_decay_rate = two_pi * 10.0e3;       // effective, long-lived Rydberg states
  double rf_transition_frequency_hz = 17.0434e9;
  void validate() const;
};

struct BeamGeometry {
  double probe_fwhm_m = 85e-6;
  double coupling_fwhm_m = 120e-6;  // kept slightly larger than the probe
  void validate() const;
};

struct AtomicEnsemble {
  double mean_velocity_mps = 240.0;
  double density_scale = 0.01;  // links interaction volume to EIT amplitude
  void validate() const;
};

struct DriveParameters {
  double probe_rabi = 0.0;  // rad/s
  double coupling_rabi = 0.0;
  double rf_rabi = 0.0;  // 0 when carrier off
  double probe_detuning = 0.0;
  double coupling_detuning = 0.0;
  double rf_detuning = 0.0;
  void validate() const;
};

struct EitSpectrum {
  std::vector<double> detuning_grid;  // rad/s, strictly increasing coupling detunings
  std::vector<double> transmission;   // fractions in [0,1]
  void validate() const;
};

struct EitFit {
  double height = 0.0;  // peak minus baseline, transmission fraction
  double fwhm = 0.0;    // rad/s
};

struct TemporalResponse {
  double rise_time_s = 0.0;
  double fall_time_s = 0.0;
  double transit_time_s = 0.0;
  void validate() const;
};

enum class CalibrationMode { table, physics };

double beam_waist(double fwhm_m);  // FWHM / sqrt(2 ln 2)
double transit_time(const BeamGeometry& g, const AtomicEnsemble& e);  // 2 w / v

// Steady state of the ladder density matrix (RWA, Doppler-free); transit rate
// 1/t_transit enters as repopulation of the ground state. Probe coherence maps
// to transmission through an optical depth proportional to
// density_scale * probe_fwhm^2.
double steady_state_transmission(const DriveParameters& d, const LadderScheme& l,
                                 const BeamGeometry& g, const AtomicEnsemble& e);

std::pair<EitSpectrum, EitFit> eit_spectrum_and_fit(const DriveParameters& d,
                                                    const LadderScheme& l, const BeamGeometry& g,
                                                    const AtomicEnsemble& e, double scan_lo,
                                                    double scan_hi, std::size_t points);

// Table mode reproduces Table I rows and interpolates rise/fall between the
// 85..800 um rows (the 55 um row is anomalous and kept out of interpolation);
// physics mode uses rise = alpha * transit, fall = beta * transit.
TemporalResponse response_times(const BeamGeometry& g, const AtomicEnsemble& e,
                                CalibrationMode mode = CalibrationMode::table);

struct DiscriminatorGain {
  double gain = 0.0;              // d(transmission)/d(rf_rabi), per rad/s
  double linear_halfwidth = 0.0;  // rad/s span with < 5% deviation from linear
  double richardson_rel_change = 0.0;
  bool weak_bias_warning = false;  // bias not in a sensitive region
};

// Requires both optical detunings at the lock point (= 0); drive.rf_rabi is
// the operating bias.
DiscriminatorGain discriminator_gain(const DriveParameters& d, const LadderScheme& l,
                                     const BeamGeometry& g, const AtomicEnsemble& e);

std::string eit_spectrum_csv(const EitSpectrum& s);
std::string response_table_csv(const std::vector<double>& fwhm_um, const AtomicEnsemble& e,
                               CalibrationMode mode);

}  // namespace rydtv
