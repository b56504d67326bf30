#pragma once

// Unit conventions used across rowsim: fields carry their unit in the name
// suffix (_kw, _kwh, _s, _v, _a, _mf ...). The helpers below are the only
// place conversions between those scales happen.

#include <cmath>
#include <limits>

namespace rowsim::units {

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kWattsPerKw = 1000.0;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr double kws_to_kwh(double kw_s) { return kw_s / kSecondsPerHour; }
constexpr double kwh_to_kws(double kwh) { return kwh * kSecondsPerHour; }

constexpr double us_to_s(double us) { return us * 1e-6; }
constexpr double ms_to_s(double ms) { return ms * 1e-3; }
constexpr double mf_to_f(double mf) { return mf * 1e-3; }
constexpr double uh_to_h(double uh) { return uh * 1e-6; }
constexpr double mohm_to_ohm(double mohm) { return mohm * 1e-3; }
/// mV/A to V/A.
constexpr double mv_per_a_to_ohm(double mv_per_a) { return mv_per_a * 1e-3; }

/// Current drawn by a power at a voltage: kW and V in, A out.
constexpr double current_a(double p_kw, double v) { return p_kw * kWattsPerKw / v; }
/// Power from a current at a voltage: A and V in, kW out.
constexpr double power_kw(double i_a, double v) { return i_a * v / kWattsPerKw; }

/// ceil() that treats values within eps above an integer as that integer.
inline double ceil_tolerant(double x, double eps = 1e-9) { return std::ceil(x - eps); }

}  // namespace rowsim::units
