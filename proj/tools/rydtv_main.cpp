#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rydtv/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

using namespace rydtv;

struct FlagValues {
  std::string config, metadata, input, out_dir, seed, mode, detection, jobs;
  std::vector<std::string> fwhm, set_kvs;
  bool dump_waveforms = false;
};

// Config file first, then --set pairs, then dedicated flags.
ExperimentConfig resolve_config(const FlagValues& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config);
  for (const std::string& kv : f.set_kvs) apply_config_line(cfg, kv);
  if (!f.input.empty()) apply_config_line(cfg, "input=" + f.input);
  if (!f.out_dir.empty()) apply_config_line(cfg, "out_dir=" + f.out_dir);
  if (!f.fwhm.empty()) {
    std::string joined;
    for (const std::string& v : f.fwhm) joined += (joined.empty() ? "" : ",") + v;
    apply_config_line(cfg, "fwhm_um=" + joined);
  }
  if (!f.seed.empty()) apply_config_line(cfg, "seed=" + f.seed);
  if (!f.mode.empty()) apply_config_line(cfg, "mode=" + f.mode);
  if (!f.detection.empty()) apply_config_line(cfg, "detection=" + f.detection);
  if (!f.jobs.empty()) apply_config_line(cfg, "jobs=" + f.jobs);
  if (f.dump_waveforms) apply_config_line(cfg, "dump_waveforms=1");
  cfg.validate();
  return cfg;
}

int do_encode(const ExperimentConfig& cfg) {
  if (cfg.input.empty()) throw UsageError("encode requires --input <image.ppm>");
  RgbFrame frame;
  try {
    frame = read_ppm(cfg.input);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  CompositeWaveform c = encode_frame(frame);
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + cfg.out_dir);
  const fs::path wav = fs::path(cfg.out_dir) / "composite.rydwav";
  write_rydwav(wav.string(), c.waveform);
  std::ofstream meta(fs::path(cfg.out_dir) / "composite.meta", std::ios::trunc);
  if (!meta) throw IoError("cannot write metadata sidecar");
  meta << composite_metadata(c);
  std::printf("encoded %zu samples (%.3f ms) -> %s\n", c.waveform.samples.size(),
              1e3 * c.waveform.duration_s(), wav.string().c_str());
  return 0;
}

int do_decode(const ExperimentConfig& cfg, const std::string& metadata_path) {
  if (cfg.input.empty()) throw UsageError("decode requires --input <composite.rydwav>");
  CompositeWaveform c;
  try {
    c.waveform = read_rydwav(cfg.input);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  fs::path meta = metadata_path.empty() ? fs::path(cfg.input + ".meta") : fs::path(metadata_path);
  if (fs::exists(meta)) {
    std::ifstream in(meta);
    std::string line;
    while (std::getline(in, line)) apply_metadata_line(line, c.timing, c.levels);
  } else {
    c.levels = estimate_levels(c.waveform, c.timing);
    std::printf("no metadata sidecar; estimated levels sync=%.4f blank=%.4f\n", c.levels.sync,
                c.levels.blank);
  }
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + cfg.out_dir);

  try {
    auto [frame, report] = decode_frame(c);
    write_ppm((fs::path(cfg.out_dir) / "decoded.ppm").string(), frame);
    std::ofstream rep(fs::path(cfg.out_dir) / "report.txt", std::ios::trunc);
    rep << report.serialize();
    std::printf("decoded %d lines, burst lock %.3f\n", report.lines_detected,
                report.lock_fraction());
  } catch (const SyncError& e) {
    std::ofstream rep(fs::path(cfg.out_dir) / "report.txt", std::ios::trunc);
    rep << "sync_failed=1\nmessage=" << e.what() << "\n";
    std::fprintf(stderr, "sync failure: %s\n", e.what());
    return 3;
  }
  return 0;
}

int do_simulate(const ExperimentConfig& cfg) {
  SimulationResult r = run_simulation(cfg, cfg.fwhm_um.front());
  std::printf("fwhm %g um: psnr %.2f dB, saturation %.3f, lock %.3f, verdict %s, seed %llu\n",
              cfg.fwhm_um.front(), r.score.psnr_db, r.score.mean_saturation,
              r.score.burst_lock_fraction, to_string(r.score.color_verdict).c_str(),
              static_cast<unsigned long long>(r.seed_used));
  return r.sync_failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rydberg-atom RF receiver carrying NTSC 480i composite video"};
  app.require_subcommand(1);

  FlagValues f;
  auto add_common = [&f](CLI::App* s, bool physics) {
    s->add_option("--config", f.config, "key=value configuration file");
    s->add_option("--set", f.set_kvs, "raw key=value override (repeatable)");
    s->add_option("--input", f.input, "input file");
    s->add_option("--out-dir", f.out_dir, "output directory");
    if (!physics) return;
    s->add_option("--fwhm-um", f.fwhm, "probe beam FWHM in um (repeatable or comma list)");
    s->add_option("--seed", f.seed, "RNG seed (0 = draw one and echo it)");
    s->add_option("--mode", f.mode, "calibration mode table|physics");
    s->add_option("--detection", f.detection, "detection homodyne|balanced");
    s->add_flag("--dump-waveforms", f.dump_waveforms, "write sent/received RYDWAV1 row dumps");
    s->add_option("--jobs", f.jobs, "parallel sweep entries");
  };

  CLI::App* enc = app.add_subcommand("encode", "image -> composite waveform + metadata");
  add_common(enc, false);
  CLI::App* dec = app.add_subcommand("decode", "composite waveform -> image + report");
  add_common(dec, false);
  dec->add_option("--metadata", f.metadata, "metadata sidecar path");
  CLI::App* sim = app.add_subcommand("simulate", "encode -> atomic channel -> decode");
  add_common(sim, true);
  CLI::App* swp = app.add_subcommand("sweep", "simulate across beam widths, emit sweep.csv");
  add_common(swp, true);
  CLI::App* eit = app.add_subcommand("eit", "EIT spectra, response times, Table I files");
  add_common(eit, true);

  CLI::App* bit = app.add_subcommand("bitrate", "nominal uncompressed video bitrate");
  int fields_per_s = 60, lines_per_field = 240, px_per_line = 720, bits_per_px = 24;
  bit->add_option("--fields-per-s", fields_per_s);
  bit->add_option("--lines-per-field", lines_per_field);
  bit->add_option("--pixels-per-line", px_per_line);
  bit->add_option("--bits-per-pixel", bits_per_px);

  try {
    app.parse(argc, argv);

    if (bit->parsed()) {
      long long bps = nominal_bitrate(fields_per_s, lines_per_field, px_per_line, bits_per_px);
      std::printf("%lld b/s (%s)\n", bps, format_mbps(bps).c_str());
      return 0;
    }

    ExperimentConfig cfg = resolve_config(f);
    if (enc->parsed()) return do_encode(cfg);
    if (dec->parsed()) return do_decode(cfg, f.metadata);
    if (sim->parsed()) return do_simulate(cfg);
    if (swp->parsed()) {
      run_sweep(cfg);
      std::printf("wrote %s\n", (fs::path(cfg.out_dir) / "sweep.csv").string().c_str());
      return 0;
    }
    if (eit->parsed()) {
      run_eit_study(cfg);
      std::printf("wrote EIT study files to %s\n", cfg.out_dir.c_str());
      return 0;
    }
    throw UsageError("no subcommand selected");
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 2;
  } catch (const SyncError& e) {
    std::fprintf(stderr, "sync failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
