#pragma once

#include <cstdint>
#include <vector>

#include "levylab/ladder.hpp"
#include "levylab/levy_model.hpp"

namespace levylab {

struct EstimateLadderConfig {
    long n_paths = 100000;
    double horizon = 6.0;
    double dt = 1e-3;
    double x_top = 4.0;              // tabulation range of the renewal functions
    double x_ref = 1.0;              // start of the occupation-fit ensemble
    double y_top = 3.0;              // occupation fit range
    double occupation_horizon = 30.0;
    long occupation_paths = 0;       // 0 = n_paths
    std::vector<double> drift_probe_x = {0.30, 0.50, 0.75};
    long drift_probe_paths = 20000;  // per probe level
    double drift_probe_horizon = 50.0;
    double residual_gate = 0.25;     // CalibrationError beyond this fit residual
    int workers = 0;
    std::uint64_t seed = 1;
};

// Monte Carlo ladder data.
//
// Ascending/descending ladder heights are read off as the successive
// new-maximum increments of the discrete skeleton (the negated model supplies
// the descending side); empirical renewal functions follow from the pooled
// increment law via the renewal equation, each up to an unknown time-scale
// constant.  The product of the two constants is pinned by fitting the
// factorization identity against an independent occupation-measure estimate
// of the killed potential; the split between the sides is the equal-drift
// convention that also fixes the closed-form tables.  The ascending drift
// comes from continuous-exit fractions of the dual model at small starts and
// the ascending jump tail from the descending-side convolution against the
// exact jump tail, with an independent large-increment estimate kept as a
// consistency residual.
LadderData estimate_ladder(const LevyModel& model, const EstimateLadderConfig& cfg);

}  // namespace levylab
