#pragma once

#include <vector>

namespace rowsim::spectrum {

struct BandPower {
  double mean_square;  // one-sided power of the mean-removed signal in the band
  double dominant_hz;  // bin with the largest power inside the band (0 if none)
};

/// Power of a uniformly sampled signal between lo and hi (inclusive). The mean
/// is removed first; a sinusoid of amplitude A on an integer number of cycles
/// yields A^2 / 2.
BandPower band_power(const std::vector<double>& x, double dt_s, double lo_hz, double hi_hz);

}  // namespace rowsim::spectrum
