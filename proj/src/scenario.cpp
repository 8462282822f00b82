#include "softcoord/scenario.hpp"

#include "softcoord/csv.hpp"
#include "softcoord/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace softcoord {

namespace {

constexpr double kDay = 86400.0;

std::size_t steps_per_day(double dt_s) {
  if (!(dt_s > 0.0)) throw ScenarioError("dt must be positive");
  const double n = kDay / dt_s;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 || rounded < 1.0) {
    throw ScenarioError("dt of " + csv::format(dt_s) + " s does not divide a day");
  }
  return static_cast<std::size_t>(rounded);
}

double clear_sky(double hour) {
  if (hour <= 6.0 || hour >= 18.0) return 0.0;
  return std::sin(std::numbers::pi * (hour - 6.0) / 12.0);
}

struct CloudRegime {
  double enter;   // per-minute probability of a cloud arriving
  double leave;   // per-minute probability of it passing
  double depth_lo;
  double depth_hi;
  double revert;  // per-minute mean-reversion weight
  double floor;
};

CloudRegime regime(ScenarioKind mode) {
  switch (mode) {
    case ScenarioKind::strong:
      return {0.08, 0.15, 0.2, 0.55, 0.6, 0.2};
    case ScenarioKind::mild:
      return {0.01, 0.2, 0.8, 0.92, 0.3, 0.8};
    default:
      throw ScenarioError("PV generator needs strong or mild mode");
  }
}

// Converts a per-minute rate to the chosen step.
double per_step(double per_minute, double dt_s) {
  return 1.0 - std::pow(1.0 - per_minute, dt_s / 60.0);
}

Eigen::VectorXd cloud_multiplier(const CloudRegime& r, std::size_t steps, double dt_s, Rng rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double enter = per_step(r.enter, dt_s);
  const double leave = per_step(r.leave, dt_s);
  const double revert = per_step(r.revert, dt_s);
  Eigen::VectorXd m(static_cast<Eigen::Index>(steps));
  bool cloudy = false;
  double target = 1.0;
  double level = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double u = unit(rng);
    if (cloudy) {
      if (u < leave) {
        cloudy = false;
        target = 1.0;
      }
    } else if (u < enter) {
      cloudy = true;
      target = r.depth_lo + (r.depth_hi - r.depth_lo) * unit(rng);
    }
    level += revert * (target - level);
    m[static_cast<Eigen::Index>(t)] = std::clamp(level, r.floor, 1.0);
  }
  return m;
}

double raw_diurnal(double hour) {
  auto bump = [hour](double center, double width) {
    double d = std::abs(hour - center);
    d = std::min(d, 24.0 - d);
    return std::exp(-(d / width) * (d / width));
  };
  return 0.45 * bump(8.5, 2.2) + 1.0 * bump(19.5, 2.5) + 0.25 * bump(13.5, 3.0);
}

struct DiurnalRange {
  double lo;
  double hi;
};

const DiurnalRange& diurnal_range() {
  static const DiurnalRange range = [] {
    DiurnalRange r{1e300, -1e300};
    for (int k = 0; k < 24 * 3600; ++k) {
      const double v = raw_diurnal(k / 3600.0);
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
    return r;
  }();
  return range;
}

}  // namespace

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::strong:
      return "strong";
    case ScenarioKind::mild:
      return "mild";
    default:
      return "custom";
  }
}

std::optional<ScenarioKind> parse_scenario_kind(std::string_view text) {
  if (text == "strong") return ScenarioKind::strong;
  if (text == "mild") return ScenarioKind::mild;
  if (text == "custom") return ScenarioKind::custom;
  return std::nullopt;
}

void DayScenario::validate(const NetworkModel& model) const {
  if (!(dt_s > 0.0)) throw ScenarioError("scenario dt must be positive");
  const auto n = static_cast<Eigen::Index>(model.bus_count());
  const auto s = static_cast<Eigen::Index>(model.site_count());
  const auto t = load_p_kw.rows();
  if (t == 0) throw ScenarioError("scenario has no steps");
  if (load_p_kw.cols() != n || load_q_kvar.cols() != n || load_q_kvar.rows() != t) {
    throw ScenarioError("load series do not match the bus count or step count");
  }
  if (pv_avail_kw.rows() != t || pv_avail_kw.cols() != s) {
    throw ScenarioError("PV series do not match the site count or step count");
  }
  if (!load_p_kw.allFinite() || !load_q_kvar.allFinite() || !pv_avail_kw.allFinite()) {
    throw ScenarioError("scenario contains non-finite values");
  }
  for (Eigen::Index j = 0; j < s; ++j) {
    const auto& site = model.pv_sites[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < t; ++k) {
      const double v = pv_avail_kw(k, j);
      if (v < 0.0 || v > site.p_max_kw) {
        throw ScenarioError("PV availability " + csv::format(v) + " kW at site bus " +
                            std::to_string(site.bus) + ", step " + std::to_string(k) +
                            " outside [0, " + csv::format(site.p_max_kw) + "]");
      }
    }
  }
}

std::uint64_t DayScenario::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof v);
    std::memcpy(&bits, &v, sizeof v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(dt_s);
  for (const auto* m : {&load_p_kw, &load_q_kvar, &pv_avail_kw}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) mix(m->data()[i]);
  }
  return h;
}

Eigen::MatrixXd generate_pv_profile(ScenarioKind mode, std::span<const PvSite> sites, double dt_s,
                                    std::uint64_t seed, const CloudOptions& options) {
  const std::size_t steps = steps_per_day(dt_s);
  const CloudRegime r = regime(mode);
  const auto ns = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd pv(static_cast<Eigen::Index>(steps), ns);

  Eigen::VectorXd envelope(static_cast<Eigen::Index>(steps));
  for (std::size_t t = 0; t < steps; ++t) {
    envelope[static_cast<Eigen::Index>(t)] = clear_sky(static_cast<double>(t) * dt_s / 3600.0);
  }
  const Eigen::VectorXd shared = cloud_multiplier(r, steps, dt_s, make_stream(seed, "clouds"));
  for (Eigen::Index j = 0; j < ns; ++j) {
    const Eigen::VectorXd m =
        options.per_site
            ? cloud_multiplier(r, steps, dt_s, make_stream(seed, "clouds", static_cast<std::uint64_t>(j) + 1))
            : shared;
    const double p_max = sites[static_cast<std::size_t>(j)].p_max_kw;
    pv.col(j) = (p_max * envelope.array() * m.array()).min(p_max).max(0.0).matrix();
  }
  return pv;
}

double diurnal_load_factor(double hour) {
  const auto& r = diurnal_range();
  const double f = (raw_diurnal(hour) - r.lo) / (r.hi - r.lo);
  return std::clamp(0.6 + 0.4 * f, 0.6, 1.0);
}

LoadProfile generate_load_profile(const NetworkModel& model, double dt_s, std::uint64_t seed) {
  const std::size_t steps = steps_per_day(dt_s);
  const auto n = static_cast<Eigen::Index>(model.bus_count());
  const Eigen::RowVectorXd p0 = model.base_p_kw().transpose();
  const Eigen::RowVectorXd q0 = model.base_q_kvar().transpose();
  Rng rng = make_stream(seed, "load-noise");
  std::uniform_real_distribution<double> noise(-0.02, 0.02);

  LoadProfile out{Eigen::MatrixXd(static_cast<Eigen::Index>(steps), n),
                  Eigen::MatrixXd(static_cast<Eigen::Index>(steps), n)};
  for (std::size_t t = 0; t < steps; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    const double scale = diurnal_load_factor(static_cast<double>(t) * dt_s / 3600.0);
    for (Eigen::Index b = 0; b < n; ++b) {
      const double k = scale * (1.0 + noise(rng));
      out.p_kw(row, b) = k * p0[b];
      out.q_kvar(row, b) = k * q0[b];
    }
  }
  return out;
}

DayScenario make_day_scenario(const NetworkModel& model, ScenarioKind mode, double dt_s,
                              std::uint64_t seed, const CloudOptions& options) {
  DayScenario s;
  s.dt_s = dt_s;
  auto load = generate_load_profile(model, dt_s, seed);
  s.load_p_kw = std::move(load.p_kw);
  s.load_q_kvar = std::move(load.q_kvar);
  s.pv_avail_kw = generate_pv_profile(mode, model.pv_sites, dt_s, seed, options);
  s.label = mode;
  s.seed = seed;
  return s;
}

void write_scenario_csv(const DayScenario& scenario, const NetworkModel& model,
                        const std::filesystem::path& path) {
  scenario.validate(model);
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file " + path.string());
  out << "# dt=" << csv::format(scenario.dt_s) << " label=" << to_string(scenario.label)
      << " seed=" << scenario.seed << '\n';
  out << "t_sec,bus_or_site,kind,p_kw,q_kvar\n";
  for (std::size_t t = 0; t < scenario.steps(); ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    const std::string stamp = csv::format(static_cast<double>(t) * scenario.dt_s);
    for (std::size_t b = 0; b < model.bus_count(); ++b) {
      const auto col = static_cast<Eigen::Index>(b);
      out << stamp << ',' << model.buses[b].id << ",LOAD," << csv::format(scenario.load_p_kw(row, col))
          << ',' << csv::format(scenario.load_q_kvar(row, col)) << '\n';
    }
    for (std::size_t j = 0; j < model.site_count(); ++j) {
      out << stamp << ',' << model.pv_sites[j].bus << ",PV,"
          << csv::format(scenario.pv_avail_kw(row, static_cast<Eigen::Index>(j))) << ",\n";
    }
  }
  if (!out) throw ScenarioError("write failed for " + path.string());
}

DayScenario load_scenario_csv(const std::filesystem::path& path, const NetworkModel& model) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());

  DayScenario s;
  std::optional<double> dt;
  std::string text;
  std::size_t line_no = 0;
  bool header = false;

  std::map<int, std::size_t> site_of_bus;
  for (std::size_t j = 0; j < model.site_count(); ++j) site_of_bus[model.pv_sites[j].bus] = j;

  // time stamp -> values; all keyed in file order
  std::vector<double> stamps;
  std::vector<std::vector<std::array<double, 2>>> loads;
  std::vector<std::vector<double>> pv;
  std::vector<std::vector<bool>> load_seen;
  std::vector<std::vector<bool>> pv_seen;
  auto where = [&](const std::string& msg) {
    return ScenarioError("scenario file " + path.string() + " line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty() || text == "\r") continue;
    if (text[0] == '#') {
      std::istringstream meta(text.substr(1));
      std::string token;
      while (meta >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const auto key = token.substr(0, eq);
        const auto value = token.substr(eq + 1);
        double d = 0.0;
        long long i = 0;
        if (key == "dt" && csv::parse_double(value, d)) dt = d;
        if (key == "label") s.label = parse_scenario_kind(value).value_or(ScenarioKind::custom);
        if (key == "seed" && csv::parse_int(value, i)) s.seed = static_cast<std::uint64_t>(i);
      }
      continue;
    }
    const auto f = csv::split(text);
    if (!header) {
      if (f.size() != 5 || f[0] != "t_sec" || f[1] != "bus_or_site" || f[2] != "kind" ||
          f[3] != "p_kw" || f[4] != "q_kvar") {
        throw where("expected header t_sec,bus_or_site,kind,p_kw,q_kvar");
      }
      header = true;
      continue;
    }
    if (f.size() != 5) throw where("expected 5 fields, found " + std::to_string(f.size()));
    double stamp = 0.0;
    long long bus = 0;
    double p = 0.0;
    if (!csv::parse_double(f[0], stamp)) throw where("bad t_sec '" + f[0] + "'");
    if (!csv::parse_int(f[1], bus)) throw where("bad bus_or_site '" + f[1] + "'");
    if (!csv::parse_double(f[3], p)) throw where("bad p_kw '" + f[3] + "'");

    if (stamps.empty() || stamp != stamps.back()) {
      if (!stamps.empty() && stamp < stamps.back()) throw where("rows not sorted by t_sec");
      stamps.push_back(stamp);
      loads.emplace_back(model.bus_count(), std::array<double, 2>{0.0, 0.0});
      pv.emplace_back(model.site_count(), 0.0);
      load_seen.emplace_back(model.bus_count(), false);
      pv_seen.emplace_back(model.site_count(), false);
    }
    if (f[2] == "LOAD") {
      double q = 0.0;
      if (!csv::parse_double(f[4], q)) throw where("bad q_kvar '" + f[4] + "'");
      std::size_t b = 0;
      try {
        b = model.index_of(static_cast<int>(bus));
      } catch (const std::out_of_range&) {
        throw where("unknown bus " + f[1]);
      }
      if (load_seen.back()[b]) throw where("duplicate LOAD row for bus " + f[1]);
      load_seen.back()[b] = true;
      loads.back()[b] = {p, q};
    } else if (f[2] == "PV") {
      if (!f[4].empty()) throw where("PV rows leave q_kvar empty");
      const auto it = site_of_bus.find(static_cast<int>(bus));
      if (it == site_of_bus.end()) throw where("no PV site at bus " + f[1]);
      if (pv_seen.back()[it->second]) throw where("duplicate PV row for bus " + f[1]);
      pv_seen.back()[it->second] = true;
      pv.back()[it->second] = p;
    } else {
      throw where("unknown kind '" + f[2] + "'");
    }
  }
  if (!header) throw ScenarioError("scenario file " + path.string() + " has no header");
  if (stamps.empty()) throw ScenarioError("scenario file " + path.string() + " has no rows");

  for (std::size_t t = 0; t < stamps.size(); ++t) {
    const bool loads_complete = std::all_of(load_seen[t].begin(), load_seen[t].end(), [](bool b) { return b; });
    const bool pv_complete = std::all_of(pv_seen[t].begin(), pv_seen[t].end(), [](bool b) { return b; });
    if (!loads_complete || !pv_complete) {
      throw ScenarioError("scenario file " + path.string() + ": series length mismatch at t_sec " +
                          csv::format(stamps[t]) + " (missing " + (loads_complete ? "PV" : "LOAD") +
                          " rows)");
    }
  }
  if (!dt) {
    if (stamps.size() < 2) throw ScenarioError("cannot infer dt from a single time stamp");
    dt = stamps[1] - stamps[0];
  }
  for (std::size_t t = 0; t < stamps.size(); ++t) {
    if (std::abs(stamps[t] - static_cast<double>(t) * *dt) > 1e-6) {
      throw ScenarioError("scenario file " + path.string() + ": t_sec " + csv::format(stamps[t]) +
                          " breaks the fixed step of " + csv::format(*dt) + " s");
    }
  }

  const auto steps = static_cast<Eigen::Index>(stamps.size());
  const auto n = static_cast<Eigen::Index>(model.bus_count());
  const auto ns = static_cast<Eigen::Index>(model.site_count());
  s.dt_s = *dt;
  s.load_p_kw.resize(steps, n);
  s.load_q_kvar.resize(steps, n);
  s.pv_avail_kw.resize(steps, ns);
  for (Eigen::Index t = 0; t < steps; ++t) {
    for (Eigen::Index b = 0; b < n; ++b) {
      s.load_p_kw(t, b) = loads[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)][0];
      s.load_q_kvar(t, b) = loads[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)][1];
    }
    for (Eigen::Index j = 0; j < ns; ++j) {
      s.pv_avail_kw(t, j) = pv[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
    }
  }
  s.validate(model);
  return s;
}

}  // namespace softcoord
