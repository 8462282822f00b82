#include "doctest.h"
#include "softcoord/baselines.hpp"
#include "softcoord/runner.hpp"

using namespace softcoord;

TEST_CASE("droop curve examples") {
  const DroopCurve c;
  CHECK(droop_control(1.00, 400.0, c) == 0.0);
  CHECK(droop_control(1.05, 400.0, c) == -400.0);
  CHECK(droop_control(1.035, 400.0, c) == doctest::Approx(-200.0).epsilon(1e-12));
  CHECK(droop_control(0.95, 400.0, c) == 400.0);
  CHECK(droop_control(0.965, 400.0, c) == doctest::Approx(200.0).epsilon(1e-12));
  CHECK(droop_control(1.2, 400.0, c) == -400.0);
}

TEST_CASE("droop is continuous and non-increasing") {
  const DroopCurve c;
  double prev = droop_control(0.9, 1.0, c);
  for (int k = 1; k <= 20000; ++k) {
    const double v = 0.9 + 0.2 * k / 20000.0;
    const double q = droop_control(v, 1.0, c);
    CHECK(q <= prev);
    CHECK(prev - q < 1e-3);  // slope 1/0.03 times a 1e-5 step
    prev = q;
  }
  CHECK_THROWS(DroopCurve{0.98, 0.95, 1.02, 1.05}.validate());
}

TEST_CASE("no-Var control") {
  CHECK(no_var_control() == 0.0);
  const auto m = build_ieee33();
  Environment env(m, make_day_scenario(m, ScenarioKind::strong, 60.0, 1));
  NoVarController none;
  std::vector<EpisodeLogRow> rows;
  run_episode(env, none, 0, {600, 60, {}}, &rows);
  for (const auto& r : rows) CHECK(r.q_pv.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant-PCC bisection") {
  const auto m = build_ieee33();
  Environment env(m, make_day_scenario(m, ScenarioKind::strong, 60.0, 1));
  const auto zero = Action::zero(7);
  const auto bus = static_cast<Eigen::Index>(m.index_of(m.pv_sites[2].bus));

  SUBCASE("already at the reference") {
    // lower the tap until the midday PCC voltage sits inside the band
    double v = 2.0;
    for (int tap = 0; tap >= -8 && v > 1.05; --tap) {
      env.reset(tap, 720, 10);
      v = std::abs(env.trial_flow(zero, 720).voltage[bus]);
    }
    INFO("v " << v);
    REQUIRE(v <= 1.05);
    const double q = constant_pcc_control(env, 2, v, zero, 720);
    CHECK(std::abs(q) < 2.0);  // 1e-4 p.u. through a sensitivity of roughly 1e-4 p.u. per kvar
  }
  SUBCASE("unreachable target saturates") {
    env.reset(8, 720, 10);
    CHECK(constant_pcc_control(env, 2, 0.95, zero, 720) == -env.q_max_kvar()[2]);
    env.reset(-8, 0, 10);
    CHECK(constant_pcc_control(env, 2, 1.05, zero, 0) == env.q_max_kvar()[2]);
  }
  SUBCASE("reachable target is met") {
    env.reset(0, 720, 10);
    Action a = zero;
    a.q_kvar[2] = -env.q_max_kvar()[2];
    const double lo = std::abs(env.trial_flow(a, 720).voltage[bus]);
    const double hi = std::abs(env.trial_flow(zero, 720).voltage[bus]);
    const double target = std::min(0.5 * (lo + hi), 1.05);
    REQUIRE(target > lo);
    a.q_kvar[2] = constant_pcc_control(env, 2, target, zero, 720);
    CHECK(std::abs(std::abs(env.trial_flow(a, 720).voltage[bus]) - target) <= 1e-4);
  }
  CHECK_THROWS(constant_pcc_control(env, 2, 1.2, zero, 0));
}

TEST_CASE("controllers stay within bounds and repeat exactly") {
  const auto m = build_ieee33();
  const auto day = make_day_scenario(m, ScenarioKind::strong, 60.0, 2);
  DroopController droop;
  ConstantPccController pcc;
  NoVarController none;
  for (Controller* c : std::initializer_list<Controller*>{&droop, &pcc, &none}) {
    Environment a(m, day), b(m, day);
    std::vector<EpisodeLogRow> ra, rb;
    const auto sa = run_episode(a, *c, 0, {660, 90, {}}, &ra);
    const auto sb = run_episode(b, *c, 0, {660, 90, {}}, &rb);
    CHECK(sa.loss_kwh == sb.loss_kwh);
    CHECK(sa.tap_ops == sb.tap_ops);
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CHECK(ra[i].q_pv == rb[i].q_pv);
      CHECK(((ra[i].q_pv.cwiseAbs() - a.q_max_kvar()).array() <= 0.0).all());
    }
  }
}
