#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rydtv/metrics.hpp"
#include "rydtv/ntsc_codec.hpp"

using namespace rydtv;

namespace {

std::vector<Yiq> flat_line(double y, double i = 0, double q = 0) {
  return std::vector<Yiq>(LineTiming::active_pixels, Yiq{y, i, q});
}

// Single-bin DFT amplitude over the active region of one encoded line.
double active_subcarrier_amplitude(const std::vector<double>& line, const LineTiming& t) {
  Waveform w;
  w.sample_rate_hz = t.sample_rate_hz;
  w.samples = line;
  return tone_amplitude(w, t.subcarrier_hz, t.active_start_sample(),
                        t.active_start_sample() + LineTiming::active_pixels);
}

}  // namespace

TEST_SUITE("ntsc_codec") {

TEST_CASE("color matrix: primaries and inverse roundtrip") {
  Yiq red = rgb_to_yiq(255, 0, 0);
  CHECK(red.i == doctest::Approx(0.596));
  CHECK(red.q == doctest::Approx(0.211));
  CHECK(max_legal_saturation() == doctest::Approx(0.632248).epsilon(1e-5));

  for (int r : {0, 64, 191, 255})
    for (int g : {0, 127, 255})
      for (int b : {0, 191}) {
        Yiq v = rgb_to_yiq(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                           static_cast<std::uint8_t>(b));
        std::uint8_t rr, gg, bb;
        yiq_to_rgb(v, rr, gg, bb);
        CHECK(std::abs(rr - r) <= 2);
        CHECK(std::abs(gg - g) <= 2);
        CHECK(std::abs(bb - b) <= 2);
      }
}

TEST_CASE("line timing derived offsets land on the documented sample grid") {
  LineTiming t;
  t.validate();
  CHECK(t.samples_per_line() == 910);
  CHECK(t.sync_end_sample() == 67);
  CHECK(t.burst_start_sample() == 76);
  CHECK(t.burst_end_sample() == 112);
  CHECK(t.active_start_sample() == 135);
  CHECK(t.active_start_sample() + LineTiming::active_pixels <= t.samples_per_line());

  LineTiming bad = t;
  bad.active_duration_s = 70e-6;  // segments no longer fit the line
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = t;
  bad.sample_rate_hz = 3.0 * t.subcarrier_hz;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("levels validate their ordering") {
  Levels v;
  v.validate();
  v.black = -0.01;
  CHECK_THROWS_AS(v.validate(), std::invalid_argument);
}

TEST_CASE("encoded gray line: sync, burst, flat active, no subcarrier leakage") {
  LineTiming t;
  Levels v;
  const double y = 0.55;
  std::vector<double> line = encode_line(flat_line(y), t, v, 7, FieldParity::odd);
  REQUIRE(static_cast<int>(line.size()) == t.samples_per_line());

  for (int k = 0; k < t.sync_end_sample(); ++k) CHECK(line[k] == doctest::Approx(v.sync));
  for (int k = t.burst_end_sample() + 1; k < t.active_start_sample(); ++k)
    CHECK(line[k] == doctest::Approx(v.blank));

  Waveform w;
  w.sample_rate_hz = t.sample_rate_hz;
  w.samples = line;
  double burst = tone_amplitude(w, t.subcarrier_hz, t.burst_start_sample() + 4,
                                t.burst_end_sample() - 4);
  CHECK(burst == doctest::Approx(v.burst_amplitude).epsilon(0.02));

  const double expect = v.black + y * (v.white - v.black);
  for (int j = 0; j < LineTiming::active_pixels; ++j)
    CHECK(line[t.active_start_sample() + j] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(active_subcarrier_amplitude(line, t) < 1e-6);  // < -60 dBc on a gray line
}

TEST_CASE("encoded color line carries chroma at the subcarrier") {
  LineTiming t;
  Levels v;
  Yiq red = rgb_to_yiq(191, 0, 0);
  std::vector<double> line = encode_line(flat_line(red.y, red.i, red.q), t, v, 0,
                                         FieldParity::odd);
  const double expect = std::hypot(red.i, red.q) * (v.white - v.black);
  CHECK(active_subcarrier_amplitude(line, t) == doctest::Approx(expect).epsilon(0.02));
  CHECK_THROWS_AS(encode_line(std::vector<Yiq>(10), t, v, 0, FieldParity::odd),
                  std::invalid_argument);
}

TEST_CASE("encode_frame emits two fields of the documented length") {
  CompositeWaveform c = encode_frame(color_bars_frame());
  const LineTiming& t = c.timing;
  const int spl = t.samples_per_line();
  const std::size_t field = static_cast<std::size_t>(t.vertical_sync_lines + 240) * spl;
  CHECK(c.waveform.samples.size() == 2 * field);  // 2 x (field sync + 240 line periods)
  CHECK(c.waveform.samples.size() == 442260);
  for (int k = 0; k < t.vertical_sync_lines * spl; ++k) {
    CHECK(c.waveform.samples[k] == doctest::Approx(c.levels.sync));
    CHECK(c.waveform.samples[field + k] == doctest::Approx(c.levels.sync));
  }
}

TEST_CASE("detect_sync finds every line of a clean frame") {
  CompositeWaveform c = encode_frame(color_bars_frame());
  SyncInfo info = detect_sync(c);
  REQUIRE(info.field_starts.size() == 2);
  CHECK(info.field_parities[0] == FieldParity::odd);
  CHECK(info.field_parities[1] == FieldParity::even);
  CHECK(info.line_starts.size() == 480);
  CHECK(info.estimated_line_period_samples == doctest::Approx(910.0).epsilon(1e-4));
  for (std::uint8_t f : info.irregular) CHECK(f == 0);
}

TEST_CASE("detect_sync rejects signals without pulses") {
  CompositeWaveform c;
  c.waveform.sample_rate_hz = c.timing.sample_rate_hz;
  c.waveform.samples.assign(50000, 0.0);
  CHECK_THROWS_AS(detect_sync(c), SyncError);
}

TEST_CASE("decode_line recovers luma on a clean gray line") {
  LineTiming t;
  Levels v;
  const double y = 0.42;
  std::vector<double> line = encode_line(flat_line(y), t, v, 4, FieldParity::odd);
  const double start = (t.vertical_sync_lines + 4) * static_cast<double>(t.samples_per_line());
  DecodedLine d = decode_line(line, t, v, start);
  CHECK(d.burst_locked);
  CHECK(d.burst_amplitude == doctest::Approx(v.burst_amplitude).epsilon(0.02));
  for (int j = 20; j < 700; ++j)
    CHECK_MESSAGE(std::abs(d.pixels[j].y - y) < 0.02, "pixel ", j, " y=", d.pixels[j].y);
}

TEST_CASE("decode_line recovers hue and saturation per bar") {
  LineTiming t;
  Levels v;
  RgbFrame bars = color_bars_frame();
  std::vector<Yiq> px(LineTiming::active_pixels);
  for (int x = 0; x < RgbFrame::width; ++x)
    px[x] = rgb_to_yiq(bars.at(x, 0, 0), bars.at(x, 0, 1), bars.at(x, 0, 2));
  std::vector<double> line = encode_line(px, t, v, 10, FieldParity::odd);
  const double start = (t.vertical_sync_lines + 10) * static_cast<double>(t.samples_per_line());
  DecodedLine d = decode_line(line, t, v, start);
  REQUIRE(d.burst_locked);
  // Bar centers, skipping the gray bar (no hue defined there).
  for (int bar = 1; bar < 7; ++bar) {
    int x = static_cast<int>((bar + 0.5) * RgbFrame::width / 7.0);
    double sat_in = std::hypot(px[x].i, px[x].q);
    double sat_out = std::hypot(d.pixels[x].i, d.pixels[x].q);
    CHECK(sat_out == doctest::Approx(sat_in).epsilon(0.05));
    double hue_in = std::atan2(px[x].q, px[x].i);
    double hue_out = std::atan2(d.pixels[x].q, d.pixels[x].i);
    double err = std::remainder(hue_out - hue_in, 2 * M_PI) * 180.0 / M_PI;
    CHECK_MESSAGE(std::abs(err) < 5.0, "bar ", bar, " hue error ", err);
  }
}

TEST_CASE("frame roundtrip through an identity channel") {
  RgbFrame bars = color_bars_frame();
  auto [decoded, report] = decode_frame(encode_frame(bars));
  CHECK(report.lines_detected == 480);
  CHECK(report.lock_fraction() >= 0.99);
  CHECK(psnr(bars, decoded) >= 30.0);
  CHECK(mean_hue_error_deg(bars, decoded) <= 5.0);
}

TEST_CASE("a deleted hsync pulse leaves one black line and a detected gap") {
  RgbFrame bars = color_bars_frame();
  CompositeWaveform c = encode_frame(bars);
  const LineTiming& t = c.timing;
  const int spl = t.samples_per_line();
  // Blank out line 40 of the odd field (frame row 80) including its hsync.
  const long start = static_cast<long>(t.vertical_sync_lines + 40) * spl;
  for (int k = 0; k < spl; ++k) c.waveform.samples[start + k] = c.levels.blank;
  auto [decoded, report] = decode_frame(c);
  CHECK(report.lines_detected == 479);
  bool black_row = true;
  for (int x = 0; x < RgbFrame::width; ++x)
    for (int ch = 0; ch < 3; ++ch)
      if (decoded.at(x, 80, ch) != 0) black_row = false;
  CHECK(black_row);
}

TEST_CASE("ppm roundtrip with the exact header") {
  RgbFrame bars = color_bars_frame();
  auto path = std::filesystem::temp_directory_path() / "rydtv_bars.ppm";
  write_ppm(path.string(), bars);
  {
    std::ifstream in(path, std::ios::binary);
    char head[15] = {};
    in.read(head, 15);
    CHECK(std::string(head, 15) == "P6\n720 480\n255\n");
  }
  RgbFrame back = read_ppm(path.string());
  CHECK(back.pixels == bars.pixels);
  std::filesystem::remove(path);
  CHECK_THROWS(read_ppm("/nonexistent/image.ppm"));
}

TEST_CASE("metadata sidecar roundtrip") {
  CompositeWaveform c = encode_frame(color_bars_frame());
  std::string meta = composite_metadata(c);
  LineTiming t;
  t.line_period_s = 1;  // scrambled on purpose
  Levels v;
  v.white = 2;
  std::stringstream ss(meta);
  std::string line;
  while (std::getline(ss, line)) apply_metadata_line(line, t, v);
  CHECK(t.line_period_s == doctest::Approx(c.timing.line_period_s));
  CHECK(t.sample_rate_hz == doctest::Approx(c.timing.sample_rate_hz));
  CHECK(t.burst_cycles == c.timing.burst_cycles);
  CHECK(v.white == doctest::Approx(c.levels.white));
  CHECK(v.sync == doctest::Approx(c.levels.sync));
}

TEST_CASE("estimate_levels recovers the nominal levels from a clean composite") {
  CompositeWaveform c = encode_frame(color_bars_frame());
  Levels est = estimate_levels(c.waveform, c.timing);
  CHECK(est.sync == doctest::Approx(-0.285).epsilon(0.05));
  CHECK(std::abs(est.blank) < 0.01);
  CHECK(est.white == doctest::Approx(0.714).epsilon(0.05));
}

TEST_CASE("nominal bitrate and its report string") {
  CHECK(nominal_bitrate(60, 240, 720, 24) == 248832000LL);
  CHECK(format_mbps(248832000LL) == "249 Mbps");
  CHECK_THROWS_AS(nominal_bitrate(0, 240, 720, 24), std::invalid_argument);
}

TEST_CASE("color bars pattern has the documented 75% bars") {
  RgbFrame f = color_bars_frame();
  const std::uint8_t expect[7][3] = {{191, 191, 191}, {191, 191, 0}, {0, 191, 191}, {0, 191, 0},
                                     {191, 0, 191},   {191, 0, 0},   {0, 0, 191}};
  for (int bar = 0; bar < 7; ++bar) {
    int x = static_cast<int>((bar + 0.5) * RgbFrame::width / 7.0);
    for (int ch = 0; ch < 3; ++ch) CHECK(f.at(x, 200, ch) == expect[bar][ch]);
  }
}

}  // TEST_SUITE
