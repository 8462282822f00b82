#pragma once
// Independent reference implementations used only by tests.

#include "softcoord/grid.hpp"
#include "softcoord/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

using softcoord::Complex;

struct NrResult {
  Eigen::VectorXcd voltage;
  double loss_pu = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Full-Newton polar power flow on the bus admittance matrix. The head bus
/// is the slack at the tap-scaled source voltage; every other bus is PQ.
inline NrResult newton_raphson(const softcoord::NetworkModel& model, const Eigen::VectorXd& p_kw,
                               const Eigen::VectorXd& q_kvar, int tap, double tol = 1e-12, int max_iter = 30) {
  const auto n = static_cast<Eigen::Index>(model.buses.size());
  const double zbase = model.base_kv * model.base_kv / model.base_mva;
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& l : model.lines) {
    const auto a = static_cast<Eigen::Index>(model.index_of(l.from));
    const auto b = static_cast<Eigen::Index>(model.index_of(l.to));
    const Complex ys = 1.0 / Complex(l.r_ohm / zbase, l.x_ohm / zbase);
    y(a, a) += ys;
    y(b, b) += ys;
    y(a, b) -= ys;
    y(b, a) -= ys;
  }
  const auto slack = static_cast<Eigen::Index>(model.index_of(model.tap.head_bus));
  const double kw = 1000.0 * model.base_mva;
  Eigen::VectorXcd s_spec(n);
  for (Eigen::Index i = 0; i < n; ++i) s_spec[i] = -Complex(p_kw[i], q_kvar[i]) / kw;

  std::vector<Eigen::Index> pq;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != slack) pq.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(pq.size());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
  vm[slack] = model.source_voltage_pu * model.tap.ratio(tap);

  NrResult r;
  Eigen::VectorXcd v(n);
  for (int it = 0; it <= max_iter; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = std::polar(vm[i], theta[i]);
    const Eigen::VectorXcd ibus = y * v;
    const Eigen::VectorXcd s = v.cwiseProduct(ibus.conjugate());
    Eigen::VectorXd f(2 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const Complex mis = s[pq[k]] - s_spec[pq[k]];
      f[k] = mis.real();
      f[m + k] = mis.imag();
    }
    r.iterations = it;
    if (f.cwiseAbs().maxCoeff() < tol) {
      r.converged = true;
      break;
    }
    // dS/dtheta = j diag(V) conj(diag(I) - Y diag(V));  dS/d|V| = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    const Eigen::VectorXcd vn = v.cwiseQuotient(vm.cast<Complex>());
    const Eigen::MatrixXcd ds_dth =
        Complex(0, 1) * v.asDiagonal() * (Eigen::MatrixXcd(ibus.asDiagonal()) - y * v.asDiagonal()).conjugate();
    const Eigen::MatrixXcd ds_dvm = v.asDiagonal() * (y * vn.asDiagonal()).conjugate() +
                                    Eigen::MatrixXcd(ibus.conjugate().asDiagonal()) * vn.asDiagonal();
    Eigen::MatrixXd j(2 * m, 2 * m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        j(a, b) = ds_dth(pq[a], pq[b]).real();
        j(a, m + b) = ds_dvm(pq[a], pq[b]).real();
        j(m + a, b) = ds_dth(pq[a], pq[b]).imag();
        j(m + a, m + b) = ds_dvm(pq[a], pq[b]).imag();
      }
    }
    const Eigen::VectorXd dx = j.partialPivLu().solve(-f);
    for (Eigen::Index k = 0; k < m; ++k) {
      theta[pq[k]] += dx[k];
      vm[pq[k]] += dx[m + k];
    }
  }
  r.voltage = v;
  for (const auto& l : model.lines) {
    const auto a = static_cast<Eigen::Index>(model.index_of(l.from));
    const auto b = static_cast<Eigen::Index>(model.index_of(l.to));
    const Complex i = (v[a] - v[b]) / Complex(l.r_ohm / zbase, l.x_ohm / zbase);
    r.loss_pu += std::norm(i) * l.r_ohm / zbase;
  }
  return r;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Element-by-element GRU cell in the documented convention.
inline std::vector<double> gru_scalar(const std::vector<double>& x, const std::vector<double>& h,
                                      const softcoord::nn::GruParams& p) {
  const std::size_t nx = x.size(), nh = h.size();
  std::vector<double> xh(x);
  xh.insert(xh.end(), h.begin(), h.end());
  std::vector<double> z(nh), r(nh), out(nh);
  for (std::size_t k = 0; k < nh; ++k) {
    double az = p.bz(0, k), ar = p.br(0, k);
    for (std::size_t i = 0; i < nx + nh; ++i) {
      az += xh[i] * p.wz(i, k);
      ar += xh[i] * p.wr(i, k);
    }
    z[k] = sigmoid(az);
    r[k] = sigmoid(ar);
  }
  for (std::size_t k = 0; k < nh; ++k) {
    double a = p.bh(0, k);
    for (std::size_t i = 0; i < nx; ++i) a += x[i] * p.wh(i, k);
    for (std::size_t i = 0; i < nh; ++i) a += r[i] * h[i] * p.wh(nx + i, k);
    out[k] = (1.0 - z[k]) * h[k] + z[k] * std::tanh(a);
  }
  return out;
}

/// Element-by-element ReLU MLP with linear output.
inline std::vector<double> mlp_scalar(std::vector<double> x, const softcoord::nn::MlpParams& p) {
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const auto& w = p.weights[l];
    std::vector<double> y(static_cast<std::size_t>(w.cols()));
    for (Eigen::Index k = 0; k < w.cols(); ++k) {
      double a = p.biases[l](0, k);
      for (Eigen::Index i = 0; i < w.rows(); ++i) a += x[static_cast<std::size_t>(i)] * w(i, k);
      y[static_cast<std::size_t>(k)] = l + 1 < p.weights.size() ? std::max(a, 0.0) : a;
    }
    x = std::move(y);
  }
  return x;
}

/// Largest componentwise relative error between `analytic` and central
/// differences of `f` over every entry of `params`. The denominator is
/// floored so entries whose gradient is essentially zero compare absolutely.
inline double gradient_check(const std::vector<softcoord::nn::Matrix*>& params,
                             const std::vector<softcoord::nn::Matrix>& analytic, const std::function<double()>& f,
                             double step = 1e-5, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double keep = p.data()[i];
      p.data()[i] = keep + step;
      const double up = f();
      p.data()[i] = keep - step;
      const double down = f();
      p.data()[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k].data()[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

/// Midpoint-rule integral of exp(log_density) over (lo, hi).
inline double integrate(const std::function<double(double)>& log_density, double lo, double hi, int cells) {
  const double h = (hi - lo) / cells;
  double sum = 0.0;
  for (int i = 0; i < cells; ++i) sum += std::exp(log_density(lo + (i + 0.5) * h));
  return sum * h;
}

}  // namespace oracle
