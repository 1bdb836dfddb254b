#pragma once

#include <string>

#include "rydtv/ntsc_codec.hpp"

namespace rydtv {

enum class ColorVerdict { color, monochrome, failed };

std::string to_string(ColorVerdict v);

struct ReceptionScore {
  double psnr_db = 0;
  double mean_saturation = 0;
  double burst_lock_fraction = 0;
  ColorVerdict color_verdict = ColorVerdict::failed;

  std::string serialize() const;
};

// Peak signal-to-noise ratio over all channels, capped at 99 dB.
double psnr(const RgbFrame& a, const RgbFrame& b);

// Mean per-pixel chroma magnitude, normalized so the most saturated legal
// color maps to 1.
double mean_chroma_saturation(const RgbFrame& frame);

// Mean absolute hue-angle error in degrees over pixels whose reference
// saturation exceeds `min_ref_saturation` (normalized units); returns 0 if no
// pixel qualifies.
double mean_hue_error_deg(const RgbFrame& reference, const RgbFrame& test,
                          double min_ref_saturation = 0.15);

// Scores a decoded frame against the encoder input. Verdict thresholds:
// color needs burst lock >= 0.9 and saturation >= half the reference's;
// otherwise PSNR >= 15 dB earns monochrome, anything less is failed.
ReceptionScore color_verdict(const DecodeReport& report, const RgbFrame& frame,
                             const RgbFrame& reference);

}  // namespace rydtv
