#include "softcoord/grid.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

namespace softcoord {

namespace {

// bus, line (from, to, r, x), load at the receiving bus (kW, kvar)
struct FeederRow {
  int from;
  int to;
  double r_ohm;
  double x_ohm;
  double p_kw;
  double q_kvar;
};

constexpr FeederRow kIeee33[] = {
    {1, 2, 0.0922, 0.0470, 100, 60},   {2, 3, 0.4930, 0.2511, 90, 40},
    {3, 4, 0.3660, 0.1864, 120, 80},   {4, 5, 0.3811, 0.1941, 60, 30},
    {5, 6, 0.8190, 0.7070, 60, 20},    {6, 7, 0.1872, 0.6188, 200, 100},
    {7, 8, 0.7114, 0.2351, 200, 100},  {8, 9, 1.0300, 0.7400, 60, 20},
    {9, 10, 1.0440, 0.7400, 60, 20},   {10, 11, 0.1966, 0.0650, 45, 30},
    {11, 12, 0.3744, 0.1238, 60, 35},  {12, 13, 1.4680, 1.1550, 60, 35},
    {13, 14, 0.5416, 0.7129, 120, 80}, {14, 15, 0.5910, 0.5260, 60, 10},
    {15, 16, 0.7463, 0.5450, 60, 20},  {16, 17, 1.2890, 1.7210, 60, 20},
    {17, 18, 0.7320, 0.5740, 90, 40},  {2, 19, 0.1640, 0.1565, 90, 40},
    {19, 20, 1.5042, 1.3554, 90, 40},  {20, 21, 0.4095, 0.4784, 90, 40},
    {21, 22, 0.7089, 0.9373, 90, 40},  {3, 23, 0.4512, 0.3083, 90, 50},
    {23, 24, 0.8980, 0.7091, 420, 200}, {24, 25, 0.8960, 0.7011, 420, 200},
    {6, 26, 0.2030, 0.1034, 60, 25},   {26, 27, 0.2842, 0.1447, 60, 25},
    {27, 28, 1.0590, 0.9337, 60, 20},  {28, 29, 0.8042, 0.7006, 120, 70},
    {29, 30, 0.5075, 0.2585, 200, 600}, {30, 31, 0.9744, 0.9630, 150, 70},
    {31, 32, 0.3105, 0.3619, 210, 100}, {32, 33, 0.3410, 0.5302, 60, 40},
};

// Breadth-first ordering of the tree from the head bus.
struct FeederOrder {
  std::vector<std::size_t> order;        // bus indices, root first
  std::vector<std::ptrdiff_t> up_line;   // line feeding each bus (-1 at root)
  std::vector<std::size_t> up_bus;       // parent bus index
  std::vector<bool> reached;
};

FeederOrder traverse(const NetworkModel& model, std::size_t root) {
  const std::size_t n = model.bus_count();
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t k = 0; k < model.lines.size(); ++k) {
    const auto& line = model.lines[k];
    incident[model.index_of(line.from)].push_back(k);
    incident[model.index_of(line.to)].push_back(k);
  }
  FeederOrder f;
  f.up_line.assign(n, -1);
  f.up_bus.assign(n, root);
  f.reached.assign(n, false);
  std::queue<std::size_t> pending;
  pending.push(root);
  f.reached[root] = true;
  while (!pending.empty()) {
    const std::size_t b = pending.front();
    pending.pop();
    f.order.push_back(b);
    for (std::size_t k : incident[b]) {
      if (static_cast<std::ptrdiff_t>(k) == f.up_line[b]) continue;
      const auto& line = model.lines[k];
      const std::size_t other =
          model.index_of(line.from) == b ? model.index_of(line.to) : model.index_of(line.from);
      if (f.reached[other]) continue;
      f.reached[other] = true;
      f.up_line[other] = static_cast<std::ptrdiff_t>(k);
      f.up_bus[other] = b;
      pending.push(other);
    }
  }
  return f;
}

}  // namespace

std::size_t NetworkModel::index_of(int bus_id) const {
  // Buses are usually stored in id order; fall back to a scan.
  if (bus_id >= 1 && static_cast<std::size_t>(bus_id) <= buses.size() &&
      buses[static_cast<std::size_t>(bus_id) - 1].id == bus_id) {
    return static_cast<std::size_t>(bus_id) - 1;
  }
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == bus_id) return i;
  }
  throw std::out_of_range("unknown bus id " + std::to_string(bus_id));
}

Eigen::VectorXd NetworkModel::base_p_kw() const {
  Eigen::VectorXd p(buses.size());
  for (std::size_t i = 0; i < buses.size(); ++i) p[static_cast<Eigen::Index>(i)] = buses[i].p_kw;
  return p;
}

Eigen::VectorXd NetworkModel::base_q_kvar() const {
  Eigen::VectorXd q(buses.size());
  for (std::size_t i = 0; i < buses.size(); ++i) q[static_cast<Eigen::Index>(i)] = buses[i].q_kvar;
  return q;
}

Eigen::VectorXd NetworkModel::q_max_kvar() const {
  Eigen::VectorXd q(pv_sites.size());
  for (std::size_t i = 0; i < pv_sites.size(); ++i)
    q[static_cast<Eigen::Index>(i)] = pv_sites[i].q_max_kvar;
  return q;
}

Eigen::VectorXd NetworkModel::p_max_kw() const {
  Eigen::VectorXd p(pv_sites.size());
  for (std::size_t i = 0; i < pv_sites.size(); ++i)
    p[static_cast<Eigen::Index>(i)] = pv_sites[i].p_max_kw;
  return p;
}

std::vector<PvSite> default_pv_sites() {
  return {{9, 600, 240},  {12, 600, 240}, {15, 1000, 400}, {21, 400, 160},
          {24, 400, 160}, {29, 600, 240}, {32, 1000, 400}};
}

NetworkModel build_ieee33(std::span<const PvSite> pv_sites) {
  NetworkModel model;
  model.buses.push_back({1, 0.0, 0.0});
  for (const auto& row : kIeee33) {
    model.buses.push_back({row.to, row.p_kw, row.q_kvar});
    model.lines.push_back({row.from, row.to, row.r_ohm, row.x_ohm});
  }
  std::sort(model.buses.begin(), model.buses.end(),
            [](const Bus& a, const Bus& b) { return a.id < b.id; });

  std::set<int> seen;
  for (const auto& site : pv_sites) {
    if (site.bus < 1 || site.bus > static_cast<int>(model.buses.size())) {
      throw NetworkError("PV bus out of range: " + std::to_string(site.bus));
    }
    if (!seen.insert(site.bus).second) {
      throw NetworkError("duplicate PV bus: " + std::to_string(site.bus));
    }
    model.pv_sites.push_back(site);
  }
  return model;
}

std::vector<std::string> validate_network(const NetworkModel& model) {
  std::vector<std::string> report;
  const std::size_t n = model.bus_count();
  if (n == 0) {
    report.emplace_back("empty network");
    return report;
  }
  if (model.base_mva <= 0.0) report.emplace_back("non-positive power base");
  if (model.base_kv <= 0.0) report.emplace_back("non-positive voltage base");

  std::set<int> ids;
  for (const auto& bus : model.buses) {
    if (!ids.insert(bus.id).second) report.push_back("duplicate bus " + std::to_string(bus.id));
  }

  bool endpoints_ok = true;
  for (const auto& line : model.lines) {
    if (!ids.contains(line.from) || !ids.contains(line.to)) {
      report.push_back("line " + std::to_string(line.from) + "-" + std::to_string(line.to) +
                       " references unknown bus");
      endpoints_ok = false;
    }
    if (line.r_ohm < 0.0 || line.x_ohm < 0.0) {
      report.push_back("negative impedance on line " + std::to_string(line.from) + "-" +
                       std::to_string(line.to));
    }
  }
  for (const auto& site : model.pv_sites) {
    if (!ids.contains(site.bus)) report.push_back("PV site at unknown bus " + std::to_string(site.bus));
  }
  if (!endpoints_ok) return report;

  if (!ids.contains(model.tap.head_bus)) {
    report.push_back("head bus " + std::to_string(model.tap.head_bus) + " missing");
    return report;
  }

  // Union-find for cycles, BFS for reachability.
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& line : model.lines) {
    const auto a = find(model.index_of(line.from));
    const auto b = find(model.index_of(line.to));
    if (a == b) {
      report.push_back("cycle detected at line " + std::to_string(line.from) + "-" +
                       std::to_string(line.to));
    } else {
      parent[a] = b;
    }
  }

  const auto order = traverse(model, model.index_of(model.tap.head_bus));
  std::ostringstream missing;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!order.reached[i]) {
      missing << (any ? ", " : "") << model.buses[i].id;
      any = true;
    }
  }
  if (any) report.push_back("disconnected bus: " + missing.str());
  return report;
}

Injections Injections::from_loads(const NetworkModel& model) {
  return {model.base_p_kw(), model.base_q_kvar(), 0};
}

PowerFlowResult solve_power_flow(const NetworkModel& model, const Injections& inj,
                                 const SolverOptions& options) {
  const std::size_t n = model.bus_count();
  if (static_cast<std::size_t>(inj.p_kw.size()) != n ||
      static_cast<std::size_t>(inj.q_kvar.size()) != n) {
    throw PowerFlowError("injection vectors do not match bus count");
  }
  if (inj.tap < model.tap.tap_min || inj.tap > model.tap.tap_max) {
    throw PowerFlowError("tap position " + std::to_string(inj.tap) + " out of range");
  }
  if (!inj.p_kw.allFinite() || !inj.q_kvar.allFinite()) {
    throw PowerFlowError("non-finite injection");
  }

  const std::size_t root = model.index_of(model.tap.head_bus);
  const auto tree = traverse(model, root);
  if (tree.order.size() != n) throw PowerFlowError("network is not connected");

  const double zbase = model.impedance_base_ohm();
  std::vector<Complex> z(model.lines.size());
  for (std::size_t k = 0; k < model.lines.size(); ++k) {
    z[k] = Complex(model.lines[k].r_ohm, model.lines[k].x_ohm) / zbase;
  }
  Eigen::VectorXcd demand(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    demand[e] = Complex(inj.p_kw[e], inj.q_kvar[e]) / model.kw_per_pu();
  }

  const Complex v_head(model.source_voltage_pu * model.tap.ratio(inj.tap), 0.0);
  PowerFlowResult result;
  result.voltage = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(n), v_head);
  result.line_current = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(model.lines.size()));

  Eigen::VectorXcd through(static_cast<Eigen::Index>(n));
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    result.iterations = iter;
    // Backward: current drawn by each bus plus everything below it.
    for (std::size_t i = 0; i < n; ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      through[e] = std::conj(demand[e] / result.voltage[e]);
    }
    for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
      const std::size_t b = *it;
      if (b == root) continue;
      through[static_cast<Eigen::Index>(tree.up_bus[b])] += through[static_cast<Eigen::Index>(b)];
    }
    // Forward: voltage drops from the head bus outward.
    double mismatch = 0.0;
    for (std::size_t b : tree.order) {
      if (b == root) continue;
      const auto k = static_cast<std::size_t>(tree.up_line[b]);
      const auto eb = static_cast<Eigen::Index>(b);
      const Complex updated =
          result.voltage[static_cast<Eigen::Index>(tree.up_bus[b])] - z[k] * through[eb];
      mismatch = std::max(mismatch, std::abs(updated - result.voltage[eb]));
      result.voltage[eb] = updated;
    }
    if (!std::isfinite(mismatch)) {
      throw PowerFlowError("non-finite voltage in sweep iteration " + std::to_string(iter));
    }
    if (mismatch <= options.tolerance) {
      result.converged = true;
      break;
    }
  }

  // Final currents consistent with the reported voltages.
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    through[e] = std::conj(demand[e] / result.voltage[e]);
  }
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const std::size_t b = *it;
    if (b == root) continue;
    through[static_cast<Eigen::Index>(tree.up_bus[b])] += through[static_cast<Eigen::Index>(b)];
  }
  result.loss_pu = 0.0;
  for (std::size_t b : tree.order) {
    if (b == root) continue;
    const auto k = static_cast<std::size_t>(tree.up_line[b]);
    const Complex current = through[static_cast<Eigen::Index>(b)];
    // Report in the line's stated from->to orientation.
    const bool downstream = model.index_of(model.lines[k].to) == b;
    result.line_current[static_cast<Eigen::Index>(k)] = downstream ? current : -current;
    result.loss_pu += std::norm(current) * z[k].real();
  }
  result.v0 = v_head;
  result.i0 = through[static_cast<Eigen::Index>(root)];
  return result;
}

}  // namespace softcoord
