#include "softcoord/oltc.hpp"

#include <algorithm>

namespace softcoord {

void LdcSettings::validate() const {
  if (!(deadband_pu > 0.0)) throw std::invalid_argument("LDC dead band must be positive");
  if (!(delay_s > 0.0)) throw std::invalid_argument("LDC time delay must be positive");
  if (tap_min >= tap_max) throw std::invalid_argument("LDC tap range is empty");
  if (!(step_ratio > 0.0)) throw std::invalid_argument("LDC tap step must be positive");
  if (!(current_base_mva > 0.0)) throw std::invalid_argument("LDC current base must be positive");
}

OltcStep oltc_step(const OltcState& state, double v_est, double dt_s, const LdcSettings& settings) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("oltc_step: dt must be positive");
  if (state.tap < settings.tap_min || state.tap > settings.tap_max) {
    throw std::invalid_argument("oltc_step: tap outside configured range");
  }

  OltcStep out{state, 0};
  TimerDirection violation = TimerDirection::none;
  if (v_est > settings.band_high()) violation = TimerDirection::over;
  if (v_est < settings.band_low()) violation = TimerDirection::under;

  if (violation == TimerDirection::none) {
    out.state.timer_s = 0.0;
    out.state.direction = TimerDirection::none;
    return out;
  }

  if (violation != state.direction) out.state.timer_s = 0.0;
  out.state.direction = violation;
  out.state.timer_s += dt_s;
  if (out.state.timer_s < settings.delay_s) return out;

  // over-voltage steps the tap down, under-voltage steps it up
  const int delta = violation == TimerDirection::over ? -1 : +1;
  const int next = state.tap + delta;
  if (next < settings.tap_min || next > settings.tap_max) {
    out.state.timer_s = settings.delay_s;
    return out;
  }
  out.state.tap = next;
  out.state.timer_s = 0.0;
  out.state.direction = TimerDirection::none;
  out.tap_delta = delta;
  return out;
}

const char* to_string(TimerDirection d) {
  switch (d) {
    case TimerDirection::over:
      return "over";
    case TimerDirection::under:
      return "under";
    default:
      return "none";
  }
}

}  // namespace softcoord
