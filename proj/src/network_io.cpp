#include "softcoord/csv.hpp"
#include "softcoord/grid.hpp"

#include <fstream>

namespace softcoord {

namespace {

double number(const std::vector<std::string>& f, std::size_t i, std::size_t line_no) {
  double v = 0.0;
  if (i >= f.size() || !csv::parse_double(f[i], v)) {
    throw NetworkError("network file line " + std::to_string(line_no) + ": bad number in column " +
                       std::to_string(i + 1));
  }
  return v;
}

int integer(const std::vector<std::string>& f, std::size_t i, std::size_t line_no) {
  long long v = 0;
  if (i >= f.size() || !csv::parse_int(f[i], v)) {
    throw NetworkError("network file line " + std::to_string(line_no) + ": bad integer in column " +
                       std::to_string(i + 1));
  }
  return static_cast<int>(v);
}

}  // namespace

NetworkModel read_network_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open network file " + path.string());

  NetworkModel model;
  std::string text;
  std::string section;
  std::size_t line_no = 0;
  bool header_seen[3] = {false, false, false};
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty() || text == "\r" || text[0] == '#') continue;
    const auto f = csv::split(text);
    const auto& kind = f[0];
    int slot = kind == "BUS" ? 0 : kind == "LINE" ? 1 : kind == "PV" ? 2 : -1;
    if (slot < 0) {
      throw NetworkError("network file line " + std::to_string(line_no) + ": unknown record '" +
                         kind + "'");
    }
    double probe = 0.0;
    if (f.size() > 1 && !csv::parse_double(f[1], probe)) {
      header_seen[slot] = true;  // column header row of a section
      continue;
    }
    if (!header_seen[slot]) {
      throw NetworkError("network file line " + std::to_string(line_no) + ": " + kind +
                         " row before its header row");
    }
    const std::size_t want = 4;
    if (f.size() != want + (slot == 1 ? 1 : 0)) {
      throw NetworkError("network file line " + std::to_string(line_no) + ": wrong column count");
    }
    switch (slot) {
      case 0:
        model.buses.push_back({integer(f, 1, line_no), number(f, 2, line_no), number(f, 3, line_no)});
        break;
      case 1:
        model.lines.push_back({integer(f, 1, line_no), integer(f, 2, line_no),
                               number(f, 3, line_no), number(f, 4, line_no)});
        break;
      default:
        model.pv_sites.push_back(
            {integer(f, 1, line_no), number(f, 2, line_no), number(f, 3, line_no)});
        break;
    }
  }
  if (model.buses.empty()) throw NetworkError("network file has no BUS rows: " + path.string());
  return model;
}

void write_network_csv(const NetworkModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw NetworkError("cannot write network file " + path.string());
  out << "BUS,id,p_kw,q_kvar\n";
  for (const auto& b : model.buses) {
    out << "BUS," << b.id << ',' << csv::format(b.p_kw) << ',' << csv::format(b.q_kvar) << '\n';
  }
  out << "LINE,from,to,r_ohm,x_ohm\n";
  for (const auto& l : model.lines) {
    out << "LINE," << l.from << ',' << l.to << ',' << csv::format(l.r_ohm) << ','
        << csv::format(l.x_ohm) << '\n';
  }
  out << "PV,bus,p_max_kw,q_max_kvar\n";
  for (const auto& s : model.pv_sites) {
    out << "PV," << s.bus << ',' << csv::format(s.p_max_kw) << ',' << csv::format(s.q_max_kvar)
        << '\n';
  }
  if (!out) throw NetworkError("write failed for " + path.string());
}

}  // namespace softcoord
