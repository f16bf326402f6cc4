// Built-in initial-data scenarios with per-scenario default scheme
// parameters; every generator is deterministic for a fixed seed and
// produces data satisfying the solver preconditions (divergence-free
// velocity, unit director, bounded density perturbation).
#pragma once

#include <map>
#include <string>

#include "nematic/solver.hpp"

namespace nematic::scenarios {

struct Scenario {
    std::string name;
    SpectralField a0, u0, d0;
    solver::SolveConfig defaults;
};

/// Parameters: stationary_director takes "m" (wavenumber, default 1);
/// random_small takes "eta_target" (default 0.01) and "seed";
/// mixture_step_density takes "amplitude" (default 0.04).
Scenario make_scenario(const std::string& name, const Grid& g,
                       const PhysicalConstants& pc,
                       const std::map<std::string, std::string>& params = {});

std::vector<std::string> scenario_names();

} // namespace nematic::scenarios
