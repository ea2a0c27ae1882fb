// CSV output of scheme outcomes and dynamic replays.
//
// Outcome CSV columns:
//   row,su,pu,channel,a,q,price,u_su,u_pu,u_so,u_po,total_q,iterations,wall_time,converged,stable
// One "triple" row per active association (u_su and u_pu of that SU and PU),
// one "summary" row (price is the scheme's reported price; stable is empty
// for schemes without a stability notion), then one "trace" row per recorded
// price step with the step index in the su column.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cdna/dynamics.hpp"
#include "cdna/net_model.hpp"
#include "cdna/schemes.hpp"

namespace cdna {

void write_outcome_csv(std::ostream& os, const SchemeOutcome& outcome, const NetworkScenario& s);
void save_outcome_csv(const std::string& path, const SchemeOutcome& outcome, const NetworkScenario& s);

/// One row per step: step,event,id,N,M,B,u_su,total_q,price,wall_time,rounds,stable,feasible.
/// u_su is the sum over SUs; B counts channels that are on.
void write_dynamic_csv(std::ostream& os, const std::vector<DynamicStep>& steps);

}  // namespace cdna
