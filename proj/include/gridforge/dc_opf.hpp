#pragma once

#include "gridforge/opf_types.hpp"

namespace gridforge::opf {

// Lossless linearized OPF as an exact LP: nodal balance over angles, branch
// flow (theta_i - theta_k)/x within min(thermal, angle) bounds, generator
// box bounds, optional shedding under the level's load cap. Costs are the
// linear c1 terms plus committed-unit constants.
OpfSolution solve_dc_opf(const PuNetwork& net, const LevelParams& lp,
                         const tables::Tables& tbl);

}  // namespace gridforge::opf
