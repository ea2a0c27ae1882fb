#include "cdna/scenario_io.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cdna {

namespace {

void write_node(std::ostream& os, const Node& nd) {
  os << (nd.kind == NodeKind::kSU ? "SU" : "PU") << ' ' << nd.id << ' ' << nd.position.x << ' '
     << nd.position.y << ' ' << nd.q0 << ' ' << nd.plan_price << ' ' << nd.c_min << ' ' << nd.tau_min << ' '
     << nd.energy_cost << ' ' << nd.reliability_prob << '\n';
}

[[noreturn]] void parse_error(int line, const std::string& what) {
  throw std::runtime_error("scenario line " + std::to_string(line) + ": " + what);
}

}  // namespace

void write_scenario(std::ostream& os, const NetworkScenario& s) {
  const auto old_prec = os.precision(17);
  os << "# cdna scenario\n";
  os << "area " << s.width << ' ' << s.height << '\n';
  os << "channels " << s.channels << '\n';
  os << "volume_scale " << s.volume_scale << '\n';
  os << "radio " << s.radio.beta << ' ' << s.radio.alpha << ' ' << s.radio.noise_psd << ' '
     << s.radio.tx_power_ratio << ' ' << s.radio.rx_threshold_ratio << ' ' << s.radio.int_threshold_ratio << '\n';
  os << "# kind id x y Q0 plan_price c_min tau_min e zeta\n";
  for (const auto& nd : s.sus) write_node(os, nd);
  for (const auto& nd : s.pus) write_node(os, nd);
  os << "# avail su_id pu_id channel a\n";
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.m(); ++j)
      for (int b = 0; b < s.channels; ++b) {
        const double a = s.a(i, j, b);
        if (a > 0.0) os << "avail " << s.sus[i].id << ' ' << s.pus[j].id << ' ' << b << ' ' << a << '\n';
      }
  os.precision(old_prec);
}

NetworkScenario read_scenario(std::istream& is) {
  NetworkScenario s;
  struct Avail {
    int su, pu, channel;
    double a;
    int line;
  };
  std::vector<Avail> avail;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "area") {
      if (!(ls >> s.width >> s.height)) parse_error(line_no, "bad area");
    } else if (key == "channels") {
      if (!(ls >> s.channels)) parse_error(line_no, "bad channel count");
    } else if (key == "volume_scale") {
      if (!(ls >> s.volume_scale) || !(s.volume_scale > 0.0)) parse_error(line_no, "bad volume scale");
    } else if (key == "radio") {
      auto& r = s.radio;
      if (!(ls >> r.beta >> r.alpha >> r.noise_psd >> r.tx_power_ratio >> r.rx_threshold_ratio >>
            r.int_threshold_ratio)) {
        parse_error(line_no, "bad radio line");
      }
    } else if (key == "SU" || key == "PU") {
      Node nd;
      nd.kind = key == "SU" ? NodeKind::kSU : NodeKind::kPU;
      if (!(ls >> nd.id >> nd.position.x >> nd.position.y >> nd.q0 >> nd.plan_price >> nd.c_min >> nd.tau_min >>
            nd.energy_cost >> nd.reliability_prob)) {
        parse_error(line_no, "bad node line");
      }
      (nd.kind == NodeKind::kSU ? s.sus : s.pus).push_back(nd);
    } else if (key == "avail") {
      Avail a{};
      a.line = line_no;
      if (!(ls >> a.su >> a.pu >> a.channel >> a.a)) parse_error(line_no, "bad availability line");
      avail.push_back(a);
    } else {
      parse_error(line_no, "unknown record '" + key + "'");
    }
    std::string extra;
    if (ls >> extra) parse_error(line_no, "trailing field '" + extra + "'");
  }

  std::map<int, int> su_index, pu_index;
  for (int i = 0; i < s.n(); ++i) su_index[s.sus[i].id] = i;
  for (int j = 0; j < s.m(); ++j) pu_index[s.pus[j].id] = j;
  if (s.channels < 1) throw std::runtime_error("scenario: channel count must be >= 1");
  s.availability = AvailabilityMap(s.n(), s.m(), s.channels);
  for (const auto& a : avail) {
    auto si = su_index.find(a.su);
    auto pj = pu_index.find(a.pu);
    if (si == su_index.end() || pj == pu_index.end()) parse_error(a.line, "availability for unknown node");
    if (a.channel < 0 || a.channel >= s.channels) parse_error(a.line, "channel out of range");
    if (!(a.a > 0.0 && a.a <= 1.0)) parse_error(a.line, "availability must be in (0,1]");
    s.availability.set(si->second, pj->second, a.channel, a.a);
  }
  s.validate();
  return s;
}

void save_scenario(const std::string& path, const NetworkScenario& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_scenario(os, s);
  if (!os) throw std::runtime_error("write failed: " + path);
}

NetworkScenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_scenario(is);
}

}  // namespace cdna
