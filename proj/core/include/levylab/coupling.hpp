#pragma once

#include <cstdint>
#include <vector>

#include "levylab/levy_model.hpp"
#include "levylab/rho.hpp"

namespace levylab {

// Epsilon-coupling of a fresh path with a path started from the stationary
// overshoot law: run both independently until their difference enters
// [0, epsilon] at a grid time, then splice.
struct CouplingEpsilonConfig {
    double epsilon = 0.1;
    double horizon = 1000.0;
    double dt = 1e-2;
    long n_samples = 1000;
    double post_window = 20.0;  // length used for the increment validation
    std::uint64_t seed = 1;
    int workers = 0;
};

struct CouplingEpsilonReport {
    long n = 0;
    long coupled = 0;
    double success_fraction = 0.0;
    std::vector<double> tau;    // coupling times (coupled samples)
    std::vector<double> gamma;  // offsets, all in [0, epsilon]
    double max_gamma = 0.0;
    double ks_post_increments = 0.0;  // spliced-path increments vs fresh increments
};

CouplingEpsilonReport coupling_epsilon(const LevyModel& model, const RhoLaw& rho,
                                       const CouplingEpsilonConfig& cfg);

// Exact coupling by alternating first-passage chases; a round ends when a
// passage creeps onto its target level.  Requires a positive ascending ladder
// drift so creeping has positive probability.
struct CouplingExactConfig {
    double dt = 1e-3;
    double tol = 1e-9;
    double leg_horizon = 200.0;
    int round_cap = 64;
    long n_samples = 2000;
    std::uint64_t seed = 1;
    int workers = 0;
};

struct CouplingExactReport {
    long n = 0;
    std::vector<int> rounds;      // legs until the levels agreed
    std::vector<double> tau1, tau2;
    long cap_exceeded = 0;
    double r2_log_survival = 0.0;  // linearity of the round-count tail
    double mean_rounds = 0.0;
};

CouplingExactReport coupling_exact(const LevyModel& model, const RhoLaw& rho,
                                   const CouplingExactConfig& cfg);

}  // namespace levylab
