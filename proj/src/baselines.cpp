#include "softcoord/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace softcoord {

void DroopCurve::validate() const {
  if (!(v_lo_sat < v_lo_db && v_lo_db <= v_hi_db && v_hi_db < v_hi_sat)) {
    throw std::invalid_argument("droop curve break points must satisfy lo_sat < lo_db <= hi_db < hi_sat");
  }
}

double droop_control(double v_site, double q_max_kvar, const DroopCurve& curve) {
  if (v_site >= curve.v_hi_sat) return -q_max_kvar;
  if (v_site <= curve.v_lo_sat) return q_max_kvar;
  if (v_site > curve.v_hi_db) return -q_max_kvar * (v_site - curve.v_hi_db) / (curve.v_hi_sat - curve.v_hi_db);
  if (v_site < curve.v_lo_db) return q_max_kvar * (curve.v_lo_db - v_site) / (curve.v_lo_db - curve.v_lo_sat);
  return 0.0;
}

double no_var_control() { return 0.0; }

double constant_pcc_control(const Environment& env, std::size_t site, double v_ref, const Action& others,
                            std::size_t t, double tolerance_pu) {
  if (!(v_ref >= 0.95 && v_ref <= 1.05)) throw std::invalid_argument("PCC reference outside [0.95, 1.05]");
  const auto& model = env.model();
  const auto bus = static_cast<Eigen::Index>(model.index_of(model.pv_sites.at(site).bus));
  const auto j = static_cast<Eigen::Index>(site);
  const double q_max = env.q_max_kvar()[j];

  Action trial = others;
  auto voltage_at = [&](double q) {
    trial.q_kvar[j] = q;
    return std::abs(env.trial_flow(trial, t).voltage[bus]);
  };

  // Site voltage rises with injected Var.
  double lo = -q_max;
  double hi = q_max;
  const double v_lo = voltage_at(lo);
  if (v_lo >= v_ref) return lo;
  const double v_hi = voltage_at(hi);
  if (v_hi <= v_ref) return hi;
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double v = voltage_at(mid);
    if (std::abs(v - v_ref) <= tolerance_pu) return mid;
    (v < v_ref ? lo : hi) = mid;
    if (hi - lo < 1e-6) break;
  }
  return 0.5 * (lo + hi);
}

Action NoVarController::act(const Environment& env, const MarkovState& /*state*/, std::size_t /*t*/) {
  return Action::zero(env.model().site_count());
}

DroopController::DroopController(DroopCurve curve, int max_rounds, double tolerance_kvar)
    : curve_(curve), max_rounds_(max_rounds), tolerance_kvar_(tolerance_kvar) {
  curve_.validate();
}

void DroopController::begin_episode(const Environment& env) {
  last_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(env.model().site_count()));
}

Action DroopController::act(const Environment& env, const MarkovState& /*state*/, std::size_t t) {
  const auto& model = env.model();
  const auto& q_max = env.q_max_kvar();
  if (last_.size() != q_max.size()) begin_episode(env);
  Action a{last_};
  for (int round = 0; round < max_rounds_; ++round) {
    const auto flow = env.trial_flow(a, t);
    Eigen::VectorXd target(q_max.size());
    for (Eigen::Index j = 0; j < q_max.size(); ++j) {
      const auto bus = static_cast<Eigen::Index>(model.index_of(model.pv_sites[static_cast<std::size_t>(j)].bus));
      target[j] = droop_control(std::abs(flow.voltage[bus]), q_max[j], curve_);
    }
    const double change = (target - a.q_kvar).cwiseAbs().maxCoeff();
    a.q_kvar = 0.5 * (a.q_kvar + target);
    if (change <= tolerance_kvar_) break;
  }
  a.q_kvar = a.q_kvar.cwiseMax(-q_max).cwiseMin(q_max);
  last_ = a.q_kvar;
  return a;
}

ConstantPccController::ConstantPccController(double v_ref, int sweeps, double tolerance_pu)
    : v_ref_(v_ref), sweeps_(sweeps), tolerance_pu_(tolerance_pu) {
  if (!(v_ref >= 0.95 && v_ref <= 1.05)) throw std::invalid_argument("PCC reference outside [0.95, 1.05]");
}

void ConstantPccController::begin_episode(const Environment& env) {
  last_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(env.model().site_count()));
}

Action ConstantPccController::act(const Environment& env, const MarkovState& /*state*/, std::size_t t) {
  if (last_.size() != env.q_max_kvar().size()) begin_episode(env);
  Action a{last_};
  for (int sweep = 0; sweep < sweeps_; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j < env.model().site_count(); ++j) {
      const double q = constant_pcc_control(env, j, v_ref_, a, t, tolerance_pu_);
      change = std::max(change, std::abs(q - a.q_kvar[static_cast<Eigen::Index>(j)]));
      a.q_kvar[static_cast<Eigen::Index>(j)] = q;
    }
    if (change < 0.01) break;
  }
  last_ = a.q_kvar;
  return a;
}

}  // namespace softcoord
