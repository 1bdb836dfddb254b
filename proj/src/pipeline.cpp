#include "rydtv/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace rydtv {

namespace {

// Composite excursion -40..+120 IRE mapped onto baseband [0,1].
constexpr double kIreSpan = 8.0 / 7.0;
constexpr double kIreOffset = 2.0 / 7.0;

double composite_to_baseband(double s) { return std::clamp((s + kIreOffset) / kIreSpan, 0.0, 1.0); }
double baseband_to_composite(double x) { return x * kIreSpan - kIreOffset; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t draw_seed() {
  std::random_device rd;
  std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  return s ? s : 1;
}

void atomic_write_text(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + tmp.string());
    out << content;
    if (!out) throw IoError("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void atomic_write_ppm(const fs::path& path, const RgbFrame& f) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_ppm(tmp.string(), f);
  fs::rename(tmp, path);
}

void atomic_write_rydwav(const fs::path& path, const Waveform& w) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_rydwav(tmp.string(), w);
  fs::rename(tmp, path);
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw UsageError("bad number in list: " + tok);
    out.push_back(v);
  }
  return out;
}

std::string fwhm_dir_name(double fwhm_um) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "fwhm_%g", fwhm_um);
  for (char& ch : buf)
    if (ch == '.') ch = 'p';
  return buf;
}

std::string report_text(const SimulationResult& r, const ExperimentConfig& c, double fwhm_um,
                        const ChannelDiagnostics& diag) {
  char head[512];
  std::snprintf(head, sizeof head,
                "fwhm_um=%g\nrng_seed=%llu\ncalibration=%s\ndetection=%s\n"
                "rf_bias_rabi_mhz=%.6f\nlinear_halfwidth_mhz=%.6f\ncompression=%d\n"
                "sync_failed=%d\n",
                fwhm_um, static_cast<unsigned long long>(r.seed_used),
                c.mode == CalibrationMode::table ? "table" : "physics",
                c.detection == DetectionMode::homodyne ? "homodyne" : "balanced",
                r.bias_rabi / (two_pi * 1e6), diag.linear_halfwidth / (two_pi * 1e6),
                diag.compression ? 1 : 0, r.sync_failed ? 1 : 0);
  return head + r.report.serialize();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (fwhm_um.empty()) throw UsageError("config: fwhm_um list must not be empty");
  for (double v : fwhm_um)
    if (!(v > 0)) throw UsageError("config: fwhm_um values must be > 0");
  if (!(atom_speed_mps > 0)) throw UsageError("config: atom_speed_mps must be > 0");
  if (!(density_scale > 0)) throw UsageError("config: density_scale must be > 0");
  if (!(probe_rabi_mhz > 0) || !(coupling_rabi_mhz > 0))
    throw UsageError("config: optical Rabi frequencies must be > 0");
  if (rf_bias_rabi_mhz < 0) throw UsageError("config: rf_bias_rabi_mhz must be >= 0");
  if (!(modulation_depth > 0) || modulation_depth > 1)
    throw UsageError("config: modulation_depth must be in (0,1]");
  if (!(detector_bandwidth_mhz > 0)) throw UsageError("config: detector bandwidth must be > 0");
  if (noise_density < 0) throw UsageError("config: noise_density must be >= 0");
  if (out_dir.empty()) throw UsageError("config: out_dir must not be empty");
  if (dump_row < 0 || dump_row >= RgbFrame::height)
    throw UsageError("config: dump_row out of range");
  if (jobs < 1) throw UsageError("config: jobs must be >= 1");
}

void apply_config_line(ExperimentConfig& c, const std::string& line) {
  std::string t = line.substr(0, line.find('#'));
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  std::size_t first = 0;
  while (first < t.size() && std::isspace(static_cast<unsigned char>(t[first]))) ++first;
  t = t.substr(first);
  if (t.empty()) return;
  auto eq = t.find('=');
  if (eq == std::string::npos) throw UsageError("config line is not key=value: " + line);
  const std::string key = t.substr(0, eq);
  const std::string val = t.substr(eq + 1);
  auto num = [&]() {
    char* end = nullptr;
    double v = std::strtod(val.c_str(), &end);
    if (end == val.c_str()) throw UsageError("bad numeric value for " + key + ": " + val);
    return v;
  };
  if (key == "fwhm_um") c.fwhm_um = parse_double_list(val);
  else if (key == "coupling_fwhm_um") c.coupling_fwhm_um = num();
  else if (key == "atom_speed_mps") c.atom_speed_mps = num();
  else if (key == "density_scale") c.density_scale = num();
  else if (key == "probe_rabi_mhz") c.probe_rabi_mhz = num();
  else if (key == "coupling_rabi_mhz") c.coupling_rabi_mhz = num();
  else if (key == "rf_bias_rabi_mhz") c.rf_bias_rabi_mhz = num();
  else if (key == "modulation_depth") c.modulation_depth = num();
  else if (key == "detection") {
    if (val == "homodyne") c.detection = DetectionMode::homodyne;
    else if (val == "balanced") c.detection = DetectionMode::balanced;
    else throw UsageError("detection must be homodyne|balanced, got: " + val);
  } else if (key == "detector_gain") c.detector_gain = num();
  else if (key == "detector_bandwidth_mhz") c.detector_bandwidth_mhz = num();
  else if (key == "noise_density") c.noise_density = num();
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(std::strtoull(val.c_str(), nullptr, 10));
  else if (key == "mode") {
    if (val == "table") c.mode = CalibrationMode::table;
    else if (val == "physics") c.mode = CalibrationMode::physics;
    else throw UsageError("mode must be table|physics, got: " + val);
  } else if (key == "input") c.input = val;
  else if (key == "out_dir") c.out_dir = val;
  else if (key == "dump_waveforms") c.dump_waveforms = num() != 0;
  else if (key == "dump_row") c.dump_row = static_cast<int>(num());
  else if (key == "jobs") c.jobs = static_cast<int>(num());
  else if (key == "eit_probe_rabi_mhz") c.eit_probe_rabi_mhz = parse_double_list(val);
  else throw UsageError("unknown config key: " + key);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  ExperimentConfig c;
  std::string line;
  while (std::getline(in, line)) apply_config_line(c, line);
  return c;
}

double paired_coupling_fwhm_um(double probe_fwhm_um) {
  // Probe/coupling FWHM pairs from the beam-geometry table.
  static constexpr double kPairs[6][2] = {{55, 120},  {85, 120},  {200, 220},
                                          {400, 800}, {560, 800}, {800, 800}};
  double best = kPairs[0][1], bestd = std::abs(probe_fwhm_um - kPairs[0][0]);
  for (const auto& p : kPairs) {
    double d = std::abs(probe_fwhm_um - p[0]);
    if (d < bestd) {
      bestd = d;
      best = p[1];
    }
  }
  return std::max(best, probe_fwhm_um);  // coupling beam never narrower than the probe
}

ChannelConfig channel_config_for(const ExperimentConfig& c, double fwhm_um, std::uint64_t seed) {
  ChannelConfig ch;
  ch.geometry.probe_fwhm_m = fwhm_um * 1e-6;
  ch.geometry.coupling_fwhm_m =
      (c.coupling_fwhm_um > 0 ? c.coupling_fwhm_um : paired_coupling_fwhm_um(fwhm_um)) * 1e-6;
  ch.ensemble.mean_velocity_mps = c.atom_speed_mps;
  ch.ensemble.density_scale = c.density_scale;
  ch.drive.probe_rabi = two_pi * c.probe_rabi_mhz * 1e6;
  ch.drive.coupling_rabi = two_pi * c.coupling_rabi_mhz * 1e6;
  ch.drive.rf_rabi = two_pi * c.rf_bias_rabi_mhz * 1e6;  // 0 until auto-bias runs
  ch.detection_mode = c.detection;
  ch.detector_gain = c.detector_gain;
  ch.detector_bandwidth_hz = c.detector_bandwidth_mhz * 1e6;
  ch.noise_amplitude_density = c.noise_density;
  ch.modulation_depth = c.modulation_depth;
  ch.rng_seed = seed;
  ch.calibration = c.mode;
  if (ch.drive.rf_rabi <= 0) {
    ChannelConfig probe = ch;
    probe.drive.rf_rabi = two_pi * 1e6;  // placeholder so validate() passes
    ch.drive.rf_rabi = auto_bias_rabi(probe);
  }
  return ch;
}

double auto_bias_rabi(const ChannelConfig& base) {
  const double depth = base.modulation_depth;
  auto trans = [&base](double rf) {
    DriveParameters d = base.drive;
    d.rf_rabi = rf;
    return steady_state_transmission(d, base.ladder, base.geometry, base.ensemble);
  };
  double best_bias = 0, best_span = 0;
  for (double mhz = 0.5; mhz <= 30.0 + 1e-9; mhz += 0.25) {
    const double b = two_pi * mhz * 1e6;
    double prev = trans(b);
    double lo = prev, hi = prev;
    int dir = 0;
    bool monotone = true;
    for (int k = 1; k <= 4; ++k) {
      double t = trans(b * (1.0 + depth * k / 4.0));
      int d = t > prev ? 1 : (t < prev ? -1 : 0);
      if (d != 0) {
        if (dir == 0) dir = d;
        else if (d != dir) monotone = false;
      }
      prev = t;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    if (monotone && hi - lo > best_span) {
      best_span = hi - lo;
      best_bias = b;
    }
  }
  if (best_bias <= 0 || best_span < 1e-6)
    throw UsageError("auto_bias: no monotone discriminator region with usable swing");
  return best_bias;
}

CompositeWaveform channel_transmit(const CompositeWaveform& sent, const ChannelConfig& channel,
                                   ChannelDiagnostics* diag) {
  Waveform baseband;
  baseband.sample_rate_hz = sent.waveform.sample_rate_hz;
  baseband.start_time_s = sent.waveform.start_time_s;
  baseband.samples.resize(sent.waveform.samples.size());
  for (std::size_t i = 0; i < baseband.samples.size(); ++i)
    baseband.samples[i] = composite_to_baseband(sent.waveform.samples[i]);

  ChannelDiagnostics local{};
  ChannelDiagnostics& d = diag ? *diag : local;
  Waveform detected = atomic_receive(baseband, channel, &d);

  const double span = d.static_d1 - d.static_d0;
  if (std::abs(span) < 1e-9 * std::max({1.0, std::abs(d.static_d0), std::abs(d.static_d1)}))
    throw UsageError("channel calibration degenerate: static span vanishes at this bias");

  // Receiver calibration ramp: invert the measured static curve so the
  // discriminator's curvature does not shift mid-range levels (a two-point
  // affine fit leaves the blanking level several IRE off).
  constexpr std::size_t kCalPoints = 129;
  std::vector<double> xs(kCalPoints);
  for (std::size_t i = 0; i < kCalPoints; ++i)
    xs[i] = static_cast<double>(i) / (kCalPoints - 1);
  std::vector<double> ds = static_response_curve(channel, xs);
  const bool falling = span < 0;
  if (falling)
    std::reverse(ds.begin(), ds.end());  // make ds ascending; xs index flips below
  for (std::size_t i = 1; i < ds.size(); ++i)
    if (!(ds[i] > ds[i - 1]))
      throw UsageError("channel calibration degenerate: static curve not monotone at this bias");
  auto invert = [&](double v) {
    if (v <= ds.front()) return falling ? 1.0 : 0.0;
    if (v >= ds.back()) return falling ? 0.0 : 1.0;
    const std::size_t j =
        static_cast<std::size_t>(std::upper_bound(ds.begin(), ds.end(), v) - ds.begin());
    const double f = (v - ds[j - 1]) / (ds[j] - ds[j - 1]);
    const double u = (static_cast<double>(j - 1) + f) / (kCalPoints - 1);
    return falling ? 1.0 - u : u;
  };

  CompositeWaveform out;
  out.timing = sent.timing;
  out.levels = sent.levels;
  out.waveform = detected;
  for (double& s : out.waveform.samples) s = baseband_to_composite(invert(s));
  return out;
}

SimulationResult run_simulation(const ExperimentConfig& c, double fwhm_um) {
  c.validate();
  if (!(fwhm_um > 0)) throw UsageError("run_simulation: fwhm must be > 0");

  RgbFrame input;
  if (c.input.empty()) {
    input = color_bars_frame();
  } else {
    try {
      input = read_ppm(c.input);
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
  }

  SimulationResult result;
  result.seed_used = c.seed ? c.seed : draw_seed();

  CompositeWaveform sent = encode_frame(input);
  ChannelConfig channel = channel_config_for(c, fwhm_um, result.seed_used);
  result.bias_rabi = channel.drive.rf_rabi;
  ChannelDiagnostics diag{};
  CompositeWaveform received = channel_transmit(sent, channel, &diag);

  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + c.out_dir);
  const fs::path dir(c.out_dir);

  if (c.dump_waveforms) {
    const LineTiming& t = sent.timing;
    const int spl = t.samples_per_line();
    const long field_len = static_cast<long>(t.vertical_sync_lines + RgbFrame::height / 2) * spl;
    const long start = (c.dump_row % 2) * field_len +
                       static_cast<long>(t.vertical_sync_lines + c.dump_row / 2) * spl;
    auto dump_row_of = [&](const char* name, const Waveform& wave) {
      Waveform row;
      row.sample_rate_hz = wave.sample_rate_hz;
      row.start_time_s = start / wave.sample_rate_hz;
      row.samples.assign(wave.samples.begin() + start, wave.samples.begin() + start + spl);
      atomic_write_rydwav(dir / name, row);
    };
    dump_row_of("sent_row.rydwav", sent.waveform);
    dump_row_of("received_row.rydwav", received.waveform);
  }

  RgbFrame decoded;
  try {
    auto [frame, report] = decode_frame(received);
    decoded = std::move(frame);
    result.report = std::move(report);
  } catch (const SyncError&) {
    result.sync_failed = true;
    result.report.chroma_enabled.assign(RgbFrame::height, 0);
  }
  result.score = color_verdict(result.report, decoded, input);
  if (result.sync_failed) result.score.color_verdict = ColorVerdict::failed;

  atomic_write_ppm(dir / "decoded.ppm", decoded);
  atomic_write_text(dir / "report.txt", report_text(result, c, fwhm_um, diag));
  atomic_write_text(dir / "score.txt",
                    "fwhm_um=" + std::to_string(fwhm_um) + "\n" + result.score.serialize());
  return result;
}

void run_sweep(const ExperimentConfig& c) {
  c.validate();
  if (c.fwhm_um.size() < 2) throw UsageError("sweep needs at least 2 fwhm_um values");

  std::vector<double> widths = c.fwhm_um;
  std::sort(widths.begin(), widths.end());
  const std::uint64_t base_seed = c.seed ? c.seed : draw_seed();

  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + c.out_dir);

  struct Row {
    double fwhm = 0;
    SimulationResult result{};
    bool errored = false;
    std::string error;
  };
  std::vector<Row> rows(widths.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= widths.size()) return;
      Row& row = rows[i];
      row.fwhm = widths[i];
      ExperimentConfig entry = c;
      entry.out_dir = (fs::path(c.out_dir) / fwhm_dir_name(widths[i])).string();
      entry.seed = splitmix64(base_seed + i);
      entry.jobs = 1;
      try {
        row.result = run_simulation(entry, widths[i]);
      } catch (const std::exception& e) {
        row.errored = true;
        row.error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::max(c.jobs, 1), widths.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  std::string csv = "fwhm_um,psnr_db,saturation,lock_fraction,verdict\n";
  for (const Row& row : rows) {
    char buf[160];
    if (row.errored || row.result.sync_failed) {
      std::snprintf(buf, sizeof buf, "%g,0.0000,0.000000,%.6f,failed\n", row.fwhm,
                    row.errored ? 0.0 : row.result.report.lock_fraction());
    } else {
      std::snprintf(buf, sizeof buf, "%g,%.4f,%.6f,%.6f,%s\n", row.fwhm,
                    row.result.score.psnr_db, row.result.score.mean_saturation,
                    row.result.score.burst_lock_fraction,
                    to_string(row.result.score.color_verdict).c_str());
    }
    csv += buf;
  }
  atomic_write_text(fs::path(c.out_dir) / "sweep.csv", csv);
}

void run_eit_study(const ExperimentConfig& c) {
  c.validate();
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + c.out_dir);
  const fs::path dir(c.out_dir);

  AtomicEnsemble ensemble;
  ensemble.mean_velocity_mps = c.atom_speed_mps;
  ensemble.density_scale = c.density_scale;
  LadderScheme ladder;

  // Table I reproduction, always in table mode.
  const std::vector<double> table_widths{55, 85, 200, 400, 560, 800};
  atomic_write_text(dir / "table1.csv",
                    response_table_csv(table_widths, ensemble, CalibrationMode::table));

  std::vector<double> widths = c.fwhm_um;
  std::sort(widths.begin(), widths.end());

  // Physics-mode response-time trends.
  atomic_write_text(dir / "response_physics.csv",
                    response_table_csv(widths, ensemble, CalibrationMode::physics));

  // EIT height/width trends vs probe Rabi frequency per beam size.
  std::string trends = "fwhm_um,probe_rabi_mhz,height,fwhm_mhz\n";
  const double scan = two_pi * 30e6;
  for (double w : widths) {
    BeamGeometry g;
    g.probe_fwhm_m = w * 1e-6;
    g.coupling_fwhm_m =
        (c.coupling_fwhm_um > 0 ? c.coupling_fwhm_um : paired_coupling_fwhm_um(w)) * 1e-6;
    for (double pr : c.eit_probe_rabi_mhz) {
      DriveParameters d;
      d.probe_rabi = two_pi * pr * 1e6;
      d.coupling_rabi = two_pi * c.coupling_rabi_mhz * 1e6;
      auto [spectrum, fit] = eit_spectrum_and_fit(d, ladder, g, ensemble, -scan, scan, 1201);
      char buf[120];
      std::snprintf(buf, sizeof buf, "%g,%g,%.8f,%.6f\n", w, pr, fit.height,
                    fit.fwhm / (two_pi * 1e6));
      trends += buf;
      if (std::abs(pr - c.eit_probe_rabi_mhz[c.eit_probe_rabi_mhz.size() / 2]) < 1e-12) {
        char name[64];
        std::snprintf(name, sizeof name, "spectrum_%s.csv", fwhm_dir_name(w).c_str() + 5);
        atomic_write_text(dir / name, eit_spectrum_csv(spectrum));
      }
    }
  }
  atomic_write_text(dir / "eit_trends.csv", trends);
}

}  // namespace rydtv
