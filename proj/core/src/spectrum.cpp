#include "rowsim/spectrum.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <numeric>

namespace rowsim::spectrum {

namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct PlanDestroy {
  void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

}  // namespace

BandPower band_power(const std::vector<double>& x, double dt_s, double lo_hz, double hi_hz) {
  const std::size_t n = x.size();
  BandPower out{0.0, 0.0};
  if (n < 2) return out;

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::unique_ptr<double[], FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  const std::size_t nc = n / 2 + 1;
  std::unique_ptr<fftw_complex[], FftwFree> spec(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));
  Plan plan(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), spec.get(), FFTW_ESTIMATE));
  for (std::size_t i = 0; i < n; ++i) in[i] = x[i] - mean;
  fftw_execute(plan.get());

  const double df = 1.0 / (static_cast<double>(n) * dt_s);
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  double best = -1.0;
  for (std::size_t k = 1; k < nc; ++k) {
    const double f = static_cast<double>(k) * df;
    if (f < lo_hz || f > hi_hz) continue;
    const double mag2 = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    // One-sided: double every bin except Nyquist.
    const bool nyquist = (n % 2 == 0) && k == n / 2;
    const double p = (nyquist ? 1.0 : 2.0) * mag2 / nn;
    out.mean_square += p;
    if (p > best) {
      best = p;
      out.dominant_hz = f;
    }
  }
  return out;
}

}  // namespace rowsim::spectrum
