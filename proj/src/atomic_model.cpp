#include "rydtv/atomic_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>

namespace rydtv {

namespace {

using Cplx = std::complex<double>;
using Mat4 = Eigen::Matrix<Cplx, 4, 4>;
using Mat16 = Eigen::Matrix<Cplx, 16, 16>;
using Vec16 = Eigen::Matrix<Cplx, 16, 1>;

constexpr int idx(int r, int c) { return 4 * r + c; }

struct Decay {
  double rate;
  int from, to;
};

// Applies the Liouvillian to the basis matrix E(r,c) and scatters the result
// into column idx(r,c) of M.
Mat16 build_liouvillian(const Mat4& h, const std::array<Decay, 6>& decays) {
  Mat16 m = Mat16::Zero();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      Mat4 e = Mat4::Zero();
      e(r, c) = 1.0;
      Mat4 d = Cplx(0, -1) * (h * e - e * h);
      for (const Decay& dec : decays) {
        if (r == dec.from && c == dec.from) d(dec.to, dec.to) += dec.rate;
        if (r == dec.from)
          for (int k = 0; k < 4; ++k) d(dec.from, k) -= 0.5 * dec.rate * e(dec.from, k);
        if (c == dec.from)
          for (int k = 0; k < 4; ++k) d(k, dec.from) -= 0.5 * dec.rate * e(k, dec.from);
      }
      for (int rr = 0; rr < 4; ++rr)
        for (int cc = 0; cc < 4; ++cc) m(idx(rr, cc), idx(r, c)) = d(rr, cc);
    }
  }
  return m;
}

Vec16 steady_state_rho(const DriveParameters& d, const LadderScheme& l, double transit_rate) {
  Mat4 h = Mat4::Zero();
  h(0, 1) = h(1, 0) = d.probe_rabi / 2;
  h(1, 2) = h(2, 1) = d.coupling_rabi / 2;
  h(2, 3) = h(3, 2) = d.rf_rabi / 2;
  h(1, 1) = -d.probe_detuning;
  h(2, 2) = -(d.probe_detuning + d.coupling_detuning);
  h(3, 3) = -(d.probe_detuning + d.coupling_detuning + d.rf_detuning);

  const double g2 = l.intermediate_decay_rate;
  const double gr = l.rydberg_decay_rate;
  const double gt = transit_rate;
  // Spontaneous ladder decay plus transit repopulation of the ground state.
  const std::array<Decay, 6> decays{{{g2, 1, 0},
                                     {gr, 2, 1},
                                     {gr, 3, 0},
                                     {gt, 1, 0},
                                     {gt, 2, 0},
                                     {gt, 3, 0}}};

  Mat16 m = build_liouvillian(h, decays);
  Mat16 m0 = m;
  Vec16 rhs = Vec16::Zero();
  for (int k = 0; k < 16; ++k) m(0, k) = 0.0;  // trace constraint replaces one row
  for (int dd = 0; dd < 4; ++dd) m(0, idx(dd, dd)) = 1.0;
  rhs(0) = 1.0;

  Vec16 rho = m.partialPivLu().solve(rhs);
  // Solver sanity: unit trace and a small residual against the original
  // Liouvillian on the unconstrained rows.
  Cplx tr = rho(idx(0, 0)) + rho(idx(1, 1)) + rho(idx(2, 2)) + rho(idx(3, 3));
  Vec16 res = m0 * rho;
  double resn = 0;
  for (int k = 1; k < 16; ++k) resn = std::max(resn, std::abs(res(k)));
  double scale = std::max({g2, d.probe_rabi, d.coupling_rabi, 1.0});
  if (!rho.allFinite() || std::abs(tr - 1.0) > 1e-8 || resn > 1e-6 * scale) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "steady-state solve failed: |trace-1|=%.3e residual=%.3e scale=%.3e",
                  std::abs(tr - 1.0), resn, scale);
    throw std::runtime_error(msg);
  }
  return rho;
}

// Dimensionless probe absorption per unit optical depth.
double probe_absorption(const DriveParameters& d, const LadderScheme& l, double transit_rate) {
  DriveParameters dd = d;
  if (dd.probe_rabi <= 0) dd.probe_rabi = 1e-3;  // weak-probe limit is finite
  Vec16 rho = steady_state_rho(dd, l, transit_rate);
  double a = -std::imag(rho(idx(1, 0))) * l.intermediate_decay_rate / dd.probe_rabi;
  return std::max(a, 0.0);
}

double optical_depth(const BeamGeometry& g, const AtomicEnsemble& e) {
  const double r = g.probe_fwhm_m / 100e-6;
  return e.density_scale * r * r;
}

struct TableRow {
  double fwhm_um, rise_us, fall_us;
};
// Measured rise/fall times per probe width; the 55 um row is divergence
// dominated and excluded from interpolation.
constexpr TableRow kAnomalousRow{55.0, 1.5, 2.6};
constexpr std::array<TableRow, 5> kTable{{{85.0, 1.0, 1.2},
                                          {200.0, 1.2, 2.1},
                                          {400.0, 2.1, 3.8},
                                          {560.0, 3.2, 4.5},
                                          {800.0, 5.4, 6.1}}};

double interp_table(double fwhm_um, bool fall) {
  auto val = [fall](const TableRow& r) { return fall ? r.fall_us : r.rise_us; };
  if (fwhm_um <= kTable.front().fwhm_um) return val(kTable.front());
  if (fwhm_um >= kTable.back().fwhm_um) return val(kTable.back());
  for (std::size_t i = 1; i < kTable.size(); ++i) {
    if (fwhm_um <= kTable[i].fwhm_um) {
      const TableRow &a = kTable[i - 1], &b = kTable[i];
      double t = (fwhm_um - a.fwhm_um) / (b.fwhm_um - a.fwhm_um);
      return val(a) + t * (val(b) - val(a));
    }
  }
  return val(kTable.back());
}

// Least-squares through the origin: rise = alpha * transit, fall = beta * transit,
// fit over the 85..800 um rows with Eq.-(1) transit times at 240 m/s.
struct PhysicsFit {
  double alpha, beta;
};
PhysicsFit physics_fit() {
  double stt = 0, srt = 0, sft = 0;
  for (const TableRow& r : kTable) {
    BeamGeometry g{r.fwhm_um * 1e-6, r.fwhm_um * 1e-6};
    AtomicEnsemble e{};
    double t = transit_time(g, e) * 1e6;
    stt += t * t;
    srt += r.rise_us * t;
    sft += r.fall_us * t;
  }
  double alpha = srt / stt;
  double beta = std::max(sft / stt, alpha);  // fall never faster than rise
  return {alpha, beta};
}

}  // namespace

void LadderScheme::validate() const {
  if (!(probe_wavelength_nm > 0) || !(coupling_wavelength_nm > 0) ||
      !(intermediate_decay_rate > 0) || !(rydberg_decay_rate > 0) ||
      !(rf_transition_frequency_hz > 0))
    throw std::invalid_argument("ladder: rates and wavelengths must be strictly positive");
  if (!(intermediate_decay_rate > rydberg_decay_rate))
    throw std::invalid_argument("ladder: intermediate decay must exceed Rydberg decay");
}

void BeamGeometry::validate() const {
  if (!(probe_fwhm_m > 0) || !(coupling_fwhm_m > 0))
    throw std::invalid_argument("geometry: beam widths must be strictly positive");
  if (coupling_fwhm_m < probe_fwhm_m)
    throw std::invalid_argument("geometry: coupling beam must not be smaller than the probe");
}

void AtomicEnsemble::validate() const {
  if (!(mean_velocity_mps > 0)) throw std::invalid_argument("ensemble: velocity must be positive");
  if (density_scale < 0) throw std::invalid_argument("ensemble: density_scale must be >= 0");
}

void DriveParameters::validate() const {
  if (probe_rabi < 0 || coupling_rabi < 0 || rf_rabi < 0)
    throw std::invalid_argument("drive: Rabi frequencies must be >= 0");
}

void EitSpectrum::validate() const {
  if (detuning_grid.size() != transmission.size())
    throw std::invalid_argument("spectrum: grid/transmission length mismatch");
  for (std::size_t i = 1; i < detuning_grid.size(); ++i)
    if (!(detuning_grid[i] > detuning_grid[i - 1]))
      throw std::invalid_argument("spectrum: detuning grid must be strictly increasing");
  for (double t : transmission)
    if (t < 0 || t > 1) throw std::invalid_argument("spectrum: transmission outside [0,1]");
}

void TemporalResponse::validate() const {
  if (!(rise_time_s > 0) || !(fall_time_s > 0) || !(transit_time_s > 0))
    throw std::invalid_argument("response: times must be strictly positive");
  if (fall_time_s < rise_time_s)
    throw std::invalid_argument("response: fall time must be >= rise time");
}

double beam_waist(double fwhm_m) {
  if (fwhm_m < 0) throw std::domain_error("beam_waist: negative FWHM");
  return fwhm_m / std::sqrt(2.0 * std::log(2.0));
}

double transit_time(const BeamGeometry& g, const AtomicEnsemble& e) {
  g.validate();
  e.validate();
  return 2.0 * beam_waist(g.probe_fwhm_m) / e.mean_velocity_mps;
}

double steady_state_transmission(const DriveParameters& d, const LadderScheme& l,
                                 const BeamGeometry& g, const AtomicEnsemble& e) {
  d.validate();
  l.validate();
  g.validate();
  e.validate();
  const double gt = 1.0 / transit_time(g, e);
  double t = 1.0 - optical_depth(g, e) * probe_absorption(d, l, gt);
  return std::clamp(t, 0.0, 1.0);
}

std::pair<EitSpectrum, EitFit> eit_spectrum_and_fit(const DriveParameters& d,
                                                    const LadderScheme& l, const BeamGeometry& g,
                                                    const AtomicEnsemble& e, double scan_lo,
                                                    double scan_hi, std::size_t points) {
  if (points < 16) throw std::invalid_argument("eit fit: at least 16 scan points required");
  if (!(scan_hi > scan_lo)) throw std::invalid_argument("eit fit: empty scan range");
  EitSpectrum s;
  s.detuning_grid.resize(points);
  s.transmission.resize(points);
  DriveParameters dd = d;
  for (std::size_t i = 0; i < points; ++i) {
    double det = scan_lo + (scan_hi - scan_lo) * static_cast<double>(i) /
                               static_cast<double>(points - 1);
    dd.coupling_detuning = det;
    s.detuning_grid[i] = det;
    s.transmission[i] = steady_state_transmission(dd, l, g, e);
  }

  const std::size_t n = points;
  std::size_t k = std::max<std::size_t>(2, n / 10);
  std::vector<double> edge;
  edge.insert(edge.end(), s.transmission.begin(), s.transmission.begin() + k);
  edge.insert(edge.end(), s.transmission.end() - k, s.transmission.end());
  std::sort(edge.begin(), edge.end());
  double baseline = edge[edge.size() / 2];

  std::size_t p = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (s.transmission[i] > s.transmission[p]) p = i;
  double height = s.transmission[p] - baseline;
  if (height <= 0) throw std::runtime_error("eit fit: no peak above baseline in scan range");
  double half = baseline + height / 2;

  auto cross = [&](bool left) -> double {
    std::size_t i = p;
    while (true) {
      std::size_t j = left ? i - 1 : i + 1;
      if ((left && i == 0) || (!left && j >= n))
        throw std::runtime_error("eit fit: peak not contained in scan range");
      if (s.transmission[j] < half) {
        double t = (s.transmission[i] - half) / (s.transmission[i] - s.transmission[j]);
        return s.detuning_grid[i] + t * (s.detuning_grid[j] - s.detuning_grid[i]);
      }
      i = j;
    }
  };
  double lo = cross(true), hi = cross(false);
  return {std::move(s), EitFit{height, hi - lo}};
}

TemporalResponse response_times(const BeamGeometry& g, const AtomicEnsemble& e,
                                CalibrationMode mode) {
  const double t = transit_time(g, e);
  TemporalResponse r;
  r.transit_time_s = t;
  if (mode == CalibrationMode::table) {
    const double um = g.probe_fwhm_m * 1e6;
    if (std::abs(um - kAnomalousRow.fwhm_um) < 1e-9) {
      r.rise_time_s = kAnomalousRow.rise_us * 1e-6;
      r.fall_time_s = kAnomalousRow.fall_us * 1e-6;
    } else {
      r.rise_time_s = interp_table(um, false) * 1e-6;
      r.fall_time_s = interp_table(um, true) * 1e-6;
    }
  } else {
    static const PhysicsFit fit = physics_fit();
    r.rise_time_s = fit.alpha * t;
    r.fall_time_s = fit.beta * t;
  }
  r.validate();
  return r;
}

DiscriminatorGain discriminator_gain(const DriveParameters& d, const LadderScheme& l,
                                     const BeamGeometry& g, const AtomicEnsemble& e) {
  if (d.probe_detuning != 0.0 || d.coupling_detuning != 0.0)
    throw std::invalid_argument("discriminator_gain: lasers must be at the lock point");
  const double bias = d.rf_rabi;
  const double h = 1e-3 * (bias > 0 ? bias : two_pi * 1e6);
  auto tr = [&](double rf) {
    DriveParameters dd = d;
    dd.rf_rabi = std::max(rf, 0.0);
    return steady_state_transmission(dd, l, g, e);
  };
  auto diff = [&](double step) { return (tr(bias + step) - tr(bias - step)) / (2 * step); };
  double g1 = diff(h);
  double g2 = diff(h / 2);
  DiscriminatorGain out;
  out.gain = g2;
  out.richardson_rel_change = std::abs(g2 - g1) / std::max(std::abs(g2), 1e-16);

  // Sensitivity floor: 0.1% transmission change per 2pi MHz of RF drive,
  // normalized to the configured optical depth.
  const double od = optical_depth(g, e);
  out.weak_bias_warning = std::abs(out.gain) < 1e-3 * od / (two_pi * 1e6);

  if (!out.weak_bias_warning && bias > 0) {
    const double t0 = tr(bias);
    const double step = bias / 100.0;
    double good = 0.0;
    for (int k = 1; k <= 200; ++k) {
      double delta = k * step;
      if (bias - delta < 0) break;
      double lin = std::abs(out.gain) * delta;
      double dev = std::max(std::abs(tr(bias + delta) - (t0 + out.gain * delta)),
                            std::abs(tr(bias - delta) - (t0 - out.gain * delta)));
      if (dev > 0.05 * lin) break;
      good = delta;
    }
    out.linear_halfwidth = good;
  }
  return out;
}

std::string eit_spectrum_csv(const EitSpectrum& s) {
  s.validate();
  std::string out = "detuning_hz,transmission\n";
  char row[64];
  for (std::size_t i = 0; i < s.detuning_grid.size(); ++i) {
    std::snprintf(row, sizeof row, "%.9e,%.9e\n", s.detuning_grid[i] / two_pi, s.transmission[i]);
    out += row;
  }
  return out;
}

std::string response_table_csv(const std::vector<double>& fwhm_um, const AtomicEnsemble& e,
                               CalibrationMode mode) {
  std::string out = "fwhm_um,rise_us,fall_us,transit_us\n";
  char row[96];
  for (double um : fwhm_um) {
    BeamGeometry g{um * 1e-6, um * 1e-6};
    TemporalResponse r = response_times(g, e, mode);
    std::snprintf(row, sizeof row, "%.3f,%.6f,%.6f,%.6f\n", um, r.rise_time_s * 1e6,
                  r.fall_time_s * 1e6, r.transit_time_s * 1e6);
    out += row;
  }
  return out;
}

}  // namespace rydtv
