#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace softcoord {

/// Line-drop-compensation relay settings of the tap changer.
struct LdcSettings {
  double target_pu = 1.0;
  double r_pu = 0.864;
  double x_pu = 0.538;
  double deadband_pu = 0.008;
  double delay_s = 180.0;
  int tap_min = -8;
  int tap_max = 8;
  double step_ratio = 0.00625;
  /// Base power of the compensator's current transformer. Feeder currents
  /// in system per-unit are rescaled to this base before compensation.
  double current_base_mva = 100.0;

  double band_low() const { return target_pu - deadband_pu; }
  double band_high() const { return target_pu + deadband_pu; }
  void validate() const;
};

enum class TimerDirection { none, over, under };

struct OltcState {
  int tap = 0;
  double timer_s = 0.0;
  TimerDirection direction = TimerDirection::none;

  friend bool operator==(const OltcState&, const OltcState&) = default;
};

struct OltcStep {
  OltcState state;
  int tap_delta = 0;
};

/// |V0 - I0 (R + jX)| with all quantities on the compensator's base.
template <typename Scalar>
Scalar estimate_voltage(const std::complex<Scalar>& v0, const std::complex<Scalar>& i0,
                        const LdcSettings& settings) {
  const std::complex<Scalar> z(static_cast<Scalar>(settings.r_pu), static_cast<Scalar>(settings.x_pu));
  return std::abs(v0 - i0 * z);
}

/// Converts a feeder current in system per-unit to the compensator base.
template <typename Scalar>
std::complex<Scalar> to_compensator_current(const std::complex<Scalar>& i0_system, double system_base_mva,
                                            const LdcSettings& settings) {
  return i0_system * static_cast<Scalar>(system_base_mva / settings.current_base_mva);
}

/// One sample of the timer-gated tap logic. Pure.
OltcStep oltc_step(const OltcState& state, double v_est, double dt_s, const LdcSettings& settings);

const char* to_string(TimerDirection d);

}  // namespace softcoord
