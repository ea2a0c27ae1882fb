// Plain-text scenario files.
//
//   # comment
//   area <width> <height>
//   channels <B>
//   volume_scale <data units per (bit/s/Hz * minute)>   (optional, default 0.1)
//   radio <beta> <alpha> <noise_psd> <tx_ratio> <rx_ratio> <int_ratio>
//   <SU|PU> <id> <x> <y> <Q0> <plan_price> <c_min> <tau_min> <e> <zeta>
//   ...
//   avail <su_id> <pu_id> <channel> <a>
//
// Node lines come before availability lines. Availability refers to nodes by
// id; (su, pu, channel) triples that are not listed are unavailable. Numbers
// are written with 17 significant digits so a file round-trips exactly.
#pragma once

#include <iosfwd>
#include <string>

#include "cdna/net_model.hpp"

namespace cdna {

void write_scenario(std::ostream& os, const NetworkScenario& s);
NetworkScenario read_scenario(std::istream& is);

void save_scenario(const std::string& path, const NetworkScenario& s);
NetworkScenario load_scenario(const std::string& path);

}  // namespace cdna
