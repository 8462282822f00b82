#pragma once

#include "softcoord/env.hpp"

#include <memory>
#include <string>

namespace softcoord {

/// Piecewise-linear Volt-Var curve: zero inside the dead band, full
/// injection at or below v_lo_sat, full absorption at or above v_hi_sat.
struct DroopCurve {
  double v_lo_sat = 0.95;
  double v_lo_db = 0.98;
  double v_hi_db = 1.02;
  double v_hi_sat = 1.05;

  void validate() const;
};

double droop_control(double v_site, double q_max_kvar, const DroopCurve& curve);

double no_var_control();

/// Var at one site that brings its voltage to v_ref with every other site
/// held at `others`. Bisection on trial flows; saturates at +/-Q_max when
/// the target is out of reach.
double constant_pcc_control(const Environment& env, std::size_t site, double v_ref, const Action& others,
                            std::size_t t, double tolerance_pu = 1e-4);

/// Inverter strategy driving one episode.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(const Environment& /*env*/) {}
  virtual Action act(const Environment& env, const MarkovState& state, std::size_t t) = 0;
};

class NoVarController final : public Controller {
 public:
  std::string name() const override { return "none"; }
  Action act(const Environment& env, const MarkovState& state, std::size_t t) override;
};

/// Local droop at every site. The set-points are the steady state of the
/// inverters' droop loops within the step, found by damped fixed-point
/// iteration on trial flows.
class DroopController final : public Controller {
 public:
  explicit DroopController(DroopCurve curve = {}, int max_rounds = 50, double tolerance_kvar = 0.01);
  std::string name() const override { return "droop"; }
  void begin_episode(const Environment& env) override;
  Action act(const Environment& env, const MarkovState& state, std::size_t t) override;

 private:
  DroopCurve curve_;
  int max_rounds_;
  double tolerance_kvar_;
  Eigen::VectorXd last_;
};

/// Every inverter holds its PCC voltage at v_ref (Gauss-Seidel over sites).
class ConstantPccController final : public Controller {
 public:
  explicit ConstantPccController(double v_ref = 1.0, int sweeps = 6, double tolerance_pu = 1e-4);
  std::string name() const override { return "constant-pcc"; }
  void begin_episode(const Environment& env) override;
  Action act(const Environment& env, const MarkovState& state, std::size_t t) override;

 private:
  double v_ref_;
  int sweeps_;
  double tolerance_pu_;
  Eigen::VectorXd last_;
};

}  // namespace softcoord
