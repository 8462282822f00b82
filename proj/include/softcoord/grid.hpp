#pragma once

#include <Eigen/Dense>

#include <complex>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace softcoord {

using Complex = std::complex<double>;

struct Bus {
  int id = 0;
  double p_kw = 0.0;
  double q_kvar = 0.0;
};

struct Line {
  int from = 0;
  int to = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
};

struct PvSite {
  int bus = 0;
  double p_max_kw = 0.0;
  double q_max_kvar = 0.0;
};

/// Ideal tap-changing transformer between the source and the head bus.
struct TapCoupling {
  int head_bus = 1;
  double step_ratio = 0.00625;
  int tap_min = -8;
  int tap_max = 8;

  double ratio(int tap) const { return 1.0 + step_ratio * tap; }
};

struct NetworkModel {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<PvSite> pv_sites;
  double base_kv = 12.66;
  double base_mva = 1.0;
  double source_voltage_pu = 1.0;
  TapCoupling tap;

  std::size_t bus_count() const { return buses.size(); }
  std::size_t site_count() const { return pv_sites.size(); }
  double impedance_base_ohm() const { return base_kv * base_kv / base_mva; }
  /// kW (or kvar) per unit of system base power.
  double kw_per_pu() const { return 1000.0 * base_mva; }

  /// Position of a bus id in `buses`; throws std::out_of_range.
  std::size_t index_of(int bus_id) const;
  Eigen::VectorXd base_p_kw() const;
  Eigen::VectorXd base_q_kvar() const;
  Eigen::VectorXd q_max_kvar() const;
  Eigen::VectorXd p_max_kw() const;
};

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PowerFlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The seven inverter sites of the modified 33-bus feeder (Q_max = 0.4 P_max).
std::vector<PvSite> default_pv_sites();

/// Standard 12.66 kV 33-bus radial feeder with the given PV sites attached.
NetworkModel build_ieee33(std::span<const PvSite> pv_sites);
inline NetworkModel build_ieee33() {
  const auto sites = default_pv_sites();
  return build_ieee33(sites);
}

/// Structural diagnostics; an empty list means the model is a well-formed tree.
std::vector<std::string> validate_network(const NetworkModel& model);

NetworkModel read_network_csv(const std::filesystem::path& path);
void write_network_csv(const NetworkModel& model, const std::filesystem::path& path);

/// Per-bus net demand (load minus PV) and the tap position for one solve.
struct Injections {
  Eigen::VectorXd p_kw;
  Eigen::VectorXd q_kvar;
  int tap = 0;

  static Injections from_loads(const NetworkModel& model);
};

struct PowerFlowResult {
  Eigen::VectorXcd voltage;       // per bus, p.u.
  Eigen::VectorXcd line_current;  // per line (in model order), p.u., from -> to
  double loss_pu = 0.0;           // sum |I|^2 R
  Complex v0;                     // feeder-side transformer voltage
  Complex i0;                     // current into the feeder, positive downstream
  int iterations = 0;
  bool converged = false;

  Eigen::VectorXd voltage_magnitude() const { return voltage.cwiseAbs(); }
  Complex source_power() const { return v0 * std::conj(i0); }
};

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iter = 100;
};

/// Backward/forward sweep with constant-power loads. Non-convergence is
/// reported through `converged`; non-finite iterates throw PowerFlowError.
PowerFlowResult solve_power_flow(const NetworkModel& model, const Injections& inj,
                                 const SolverOptions& options = {});

}  // namespace softcoord
