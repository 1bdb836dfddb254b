#include "rydtv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace rydtv {

namespace {
constexpr double kPsnrCapDb = 99.0;

double pixel_saturation(const RgbFrame& f, int x, int y) {
  Yiq p = rgb_to_yiq(f.at(x, y, 0), f.at(x, y, 1), f.at(x, y, 2));
  return std::hypot(p.i, p.q);
}
}  // namespace

std::string to_string(ColorVerdict v) {
  switch (v) {
    case ColorVerdict::color: return "color";
    case ColorVerdict::monochrome: return "monochrome";
    default: return "failed";
  }
}

std::string ReceptionScore::serialize() const {
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "psnr_db=%.4f\nmean_saturation=%.6f\nburst_lock_fraction=%.6f\n"
                "color_verdict=%s\n",
                psnr_db, mean_saturation, burst_lock_fraction,
                to_string(color_verdict).c_str());
  return buf;
}

double psnr(const RgbFrame& a, const RgbFrame& b) {
  a.validate();
  b.validate();
  double mse = 0;
  for (std::size_t k = 0; k < a.pixels.size(); ++k) {
    double d = static_cast<double>(a.pixels[k]) - static_cast<double>(b.pixels[k]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels.size());
  if (mse <= 0) return kPsnrCapDb;
  return std::min(10.0 * std::log10(255.0 * 255.0 / mse), kPsnrCapDb);
}

double mean_chroma_saturation(const RgbFrame& frame) {
  frame.validate();
  double sum = 0;
  for (int y = 0; y < RgbFrame::height; ++y)
    for (int x = 0; x < RgbFrame::width; ++x) sum += pixel_saturation(frame, x, y);
  return sum / (static_cast<double>(RgbFrame::width) * RgbFrame::height * max_legal_saturation());
}

double mean_hue_error_deg(const RgbFrame& reference, const RgbFrame& test,
                          double min_ref_saturation) {
  reference.validate();
  test.validate();
  const double min_abs = min_ref_saturation * max_legal_saturation();
  double sum = 0;
  long count = 0;
  for (int y = 0; y < RgbFrame::height; ++y)
    for (int x = 0; x < RgbFrame::width; ++x) {
      Yiq r = rgb_to_yiq(reference.at(x, y, 0), reference.at(x, y, 1), reference.at(x, y, 2));
      if (std::hypot(r.i, r.q) < min_abs) continue;
      Yiq t = rgb_to_yiq(test.at(x, y, 0), test.at(x, y, 1), test.at(x, y, 2));
      double d = std::atan2(t.q, t.i) - std::atan2(r.q, r.i);
      d = std::remainder(d, 2.0 * M_PI);
      sum += std::abs(d) * 180.0 / M_PI;
      ++count;
    }
  return count > 0 ? sum / count : 0.0;
}

ReceptionScore color_verdict(const DecodeReport& report, const RgbFrame& frame,
                             const RgbFrame& reference) {
  ReceptionScore score;
  score.psnr_db = psnr(reference, frame);
  score.mean_saturation = std::clamp(mean_chroma_saturation(frame), 0.0, 1.0);
  score.burst_lock_fraction = std::clamp(report.lock_fraction(), 0.0, 1.0);
  // The YIQ row sums are not exactly zero in floating point, so a gray
  // reference carries ~1e-16 of saturation dust; anything below 1e-9 is zero.
  const double ref_sat = mean_chroma_saturation(reference);
  const bool sat_ok = ref_sat > 1e-9 && score.mean_saturation >= 0.5 * ref_sat;
  if (score.burst_lock_fraction >= 0.9 && sat_ok)
    score.color_verdict = ColorVerdict::color;
  else if (score.psnr_db >= 15.0)
    score.color_verdict = ColorVerdict::monochrome;
  else
    score.color_verdict = ColorVerdict::failed;
  return score;
}

}  // namespace rydtv
