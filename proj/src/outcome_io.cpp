#include "cdna/outcome_io.hpp"

#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace cdna {

void write_outcome_csv(std::ostream& os, const SchemeOutcome& o, const NetworkScenario& s) {
  os << std::setprecision(17);
  os << "row,su,pu,channel,a,q,price,u_su,u_pu,u_so,u_po,total_q,iterations,wall_time,converged,stable\n";
  for (const auto& t : o.topology.triples) {
    const auto pit = o.topology.price.find(t);
    const double price = pit == o.topology.price.end() ? 0.0 : pit->second;
    const double u_su = t.su < static_cast<int>(o.u_su.size()) ? o.u_su[t.su] : 0.0;
    const double u_pu = t.pu < static_cast<int>(o.u_pu.size()) ? o.u_pu[t.pu] : 0.0;
    os << "triple," << s.sus[t.su].id << ',' << s.pus[t.pu].id << ',' << t.channel << ',' << s.a(t.su, t.pu, t.channel)
       << ',' << o.topology.volume_of(t.su, t.pu) << ',' << price << ',' << u_su << ',' << u_pu << ",,,,,,,\n";
  }
  os << "summary,,,,,," << o.price << ',' << std::accumulate(o.u_su.begin(), o.u_su.end(), 0.0) << ','
     << std::accumulate(o.u_pu.begin(), o.u_pu.end(), 0.0) << ',' << o.u_so << ',' << o.u_po << ',' << o.total_q
     << ',' << o.iterations << ',' << o.wall_time << ',' << (o.converged ? 1 : 0) << ',';
  if (o.stable) os << (*o.stable ? 1 : 0);
  os << '\n';
  for (std::size_t k = 0; k < o.price_trace.size(); ++k)
    os << "trace," << k << ",,,,," << o.price_trace[k] << ",,,,,,,,,\n";
}

void save_outcome_csv(const std::string& path, const SchemeOutcome& outcome, const NetworkScenario& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_outcome_csv(f, outcome, s);
  if (!f) throw std::runtime_error("write failed: " + path);
}

void write_dynamic_csv(std::ostream& os, const std::vector<DynamicStep>& steps) {
  os << std::setprecision(17);
  os << "step,event,id,N,M,B,u_su,total_q,price,wall_time,rounds,stable,feasible\n";
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& st = steps[k];
    const auto& o = st.outcome;
    os << k << ',' << (st.event ? to_string(st.event->kind) : "initial") << ',';
    if (st.event) os << st.event->id;
    os << ',' << st.scenario.n() << ',' << st.scenario.m() << ',' << st.active_channels << ','
       << std::accumulate(o.u_su.begin(), o.u_su.end(), 0.0) << ',' << o.total_q << ',' << o.price << ','
       << o.wall_time << ',' << st.rounds << ',' << (o.stable.value_or(false) ? 1 : 0) << ','
       << (st.feasible ? 1 : 0) << '\n';
  }
}

}  // namespace cdna
