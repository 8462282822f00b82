#include "doctest.h"
#include "softcoord/grid.hpp"
#include "softcoord/oltc.hpp"

#include <random>

using namespace softcoord;

TEST_CASE("line-drop compensation estimate") {
  const LdcSettings s;
  CHECK(estimate_voltage<double>({1.01, 0.02}, {0.0, 0.0}, s) == doctest::Approx(std::abs(Complex(1.01, 0.02))));
  // 1 - 0.05 (0.864 + j0.538) = 0.9568 - j0.0269
  CHECK(estimate_voltage<double>({1.0, 0.0}, {0.05, 0.0}, s) ==
        doctest::Approx(std::hypot(0.9568, 0.0269)).epsilon(1e-12));
  CHECK(estimate_voltage<double>({1.0, 0.0}, {0.05, 0.0}, s) == doctest::Approx(0.95718).epsilon(1e-5));
  const double reverse = estimate_voltage<double>({1.0, 0.0}, {-0.05, 0.0}, s);
  CHECK(reverse == doctest::Approx(std::hypot(1.0432, 0.0269)).epsilon(1e-12));
  CHECK(reverse == doctest::Approx(1.04355).epsilon(1e-5));
}

TEST_CASE("compensator current rescaling") {
  LdcSettings s;
  s.current_base_mva = 100.0;
  CHECK(to_compensator_current<double>({3.0, -2.0}, 1.0, s) == Complex(0.03, -0.02));
}

TEST_CASE("in-band reading resets the timer") {
  const LdcSettings s;
  for (auto dir : {TimerDirection::over, TimerDirection::under}) {
    const auto r = oltc_step({3, 120.0, dir}, 1.003, 60.0, s);
    CHECK(r.tap_delta == 0);
    CHECK(r.state == OltcState{3, 0.0, TimerDirection::none});
  }
}

TEST_CASE("persistent over-band taps down once after the delay") {
  const LdcSettings s;
  OltcState st{0, 0.0, TimerDirection::none};
  const int expected[] = {0, 0, -1, 0, 0, -1};
  for (int k = 0; k < 6; ++k) {
    const auto r = oltc_step(st, 1.02, 60.0, s);
    CHECK(r.tap_delta == expected[k]);
    st = r.state;
    if (r.tap_delta != 0) CHECK(st.timer_s == 0.0);
  }
  CHECK(st.tap == -2);
}

TEST_CASE("interrupted violation never taps") {
  const LdcSettings s;
  OltcState st;
  for (double v : {1.02, 1.02, 1.0, 1.02, 1.02, 1.0, 1.02}) {
    const auto r = oltc_step(st, v, 60.0, s);
    CHECK(r.tap_delta == 0);
    st = r.state;
  }
  CHECK(st.tap == 0);
}

TEST_CASE("direction change restarts the timer") {
  const LdcSettings s;
  OltcState st;
  st = oltc_step(st, 1.02, 60.0, s).state;
  st = oltc_step(st, 1.02, 60.0, s).state;
  auto r = oltc_step(st, 0.98, 60.0, s);
  CHECK(r.tap_delta == 0);
  CHECK(r.state.direction == TimerDirection::under);
  CHECK(r.state.timer_s == 60.0);
}

TEST_CASE("timer saturates at a tap limit") {
  const LdcSettings s;
  OltcState st{-8, 0.0, TimerDirection::none};
  for (int k = 0; k < 10; ++k) {
    const auto r = oltc_step(st, 1.03, 60.0, s);
    CHECK(r.tap_delta == 0);
    st = r.state;
  }
  CHECK(st.tap == -8);
  CHECK(st.timer_s == s.delay_s);
  // relief is immediate once the band flips back and the voltage recovers
  CHECK(oltc_step(st, 1.0, 60.0, s).state.timer_s == 0.0);
}

TEST_CASE("random walks respect the state-machine invariants") {
  const LdcSettings s;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> v(0.97, 1.03);
  OltcState st;
  double over_run = 0.0, under_run = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double reading = v(rng);
    const auto r = oltc_step(st, reading, 60.0, s);
    CHECK(std::abs(r.tap_delta) <= 1);
    CHECK(r.state.tap >= s.tap_min);
    CHECK(r.state.tap <= s.tap_max);
    CHECK(r.state.tap - st.tap == r.tap_delta);
    over_run = reading > s.band_high() ? over_run + 60.0 : 0.0;
    under_run = reading < s.band_low() ? under_run + 60.0 : 0.0;
    if (reading > s.band_high()) CHECK(r.tap_delta <= 0);
    if (reading < s.band_low()) CHECK(r.tap_delta >= 0);
    if (r.tap_delta == -1) CHECK(over_run >= s.delay_s);
    if (r.tap_delta == +1) CHECK(under_run >= s.delay_s);
    if (r.state.direction == TimerDirection::none) CHECK(r.state.timer_s == 0.0);
    if (r.tap_delta != 0) over_run = under_run = 0.0;
    CHECK(oltc_step(st, reading, 60.0, s).state == r.state);
    st = r.state;
  }
}

TEST_CASE("settings validation") {
  LdcSettings s;
  s.deadband_pu = 0.0;
  CHECK_THROWS(s.validate());
  s = {};
  s.tap_min = 8;
  CHECK_THROWS(s.validate());
}
