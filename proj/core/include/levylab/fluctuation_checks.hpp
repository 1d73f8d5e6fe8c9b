#pragma once

#include <cstdint>
#include <vector>

#include "levylab/ladder.hpp"
#include "levylab/levy_model.hpp"
#include "levylab/rho.hpp"

namespace levylab {

// ---------------------------------------------------------------------------
// Potential factorization check: Monte Carlo occupation density of the killed
// process against the two-sided renewal convolution.
// ---------------------------------------------------------------------------
struct SilversteinConfig {
    double x_ref = 1.0;
    double y_lo = 0.1;
    double y_hi = 3.0;
    int y_bins = 30;
    long n_paths = 100000;
    double horizon = 30.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    int workers = 0;
};

struct SilversteinReport {
    std::vector<double> y;
    std::vector<double> mc_density;    // occupation estimate + survivor remainder
    std::vector<double> conv_density;  // renewal convolution
    double sup_rel_error = 0.0;
    double survivor_fraction = 0.0;
};

SilversteinReport silverstein_check(const LevyModel& model, const LadderData& ladder,
                                    const SilversteinConfig& cfg);

// ---------------------------------------------------------------------------
// Semigroup duality check: the conditioned semigroup weighted by the duality
// measure against the transposed killed dual semigroup.
// ---------------------------------------------------------------------------
struct DualityConfig {
    double t = 0.5;
    double x_max = 2.0;
    int bins = 10;            // equal duality-measure mass per bin
    long n_total = 1000000;   // total paths across both sides
    double dt = 1e-3;
    long count_floor = 200;   // cells with fewer raw hits on either side are reported, not scored
    std::uint64_t seed = 1;
    int workers = 0;
    double zero_start_eps = 0.02;
};

struct DualityReport {
    std::vector<double> edges;
    std::vector<double> A;  // row-major [start bin][end bin]
    std::vector<double> B;
    std::vector<long> countA, countB;
    double max_rel_asym = 0.0;   // over scored cells
    double mean_rel_asym = 0.0;
    long scored_cells = 0;
    long excluded_cells = 0;
    double closed_form_asym = -1.0;  // Brownian cross-check; -1 when unavailable
};

DualityReport green_duality_check(const LevyModel& model, const LadderData& ladder,
                                  const DualityConfig& cfg);

// ---------------------------------------------------------------------------
// Duality-measure representation check: occupation of the conditioned process
// started from the stationary undershoot law recovers the duality measure.
// ---------------------------------------------------------------------------
struct PotentialConfig {
    double x_max = 2.0;
    double x_lo = 0.2;        // scored window starts here
    int bins = 24;
    double delta_factor = 5.0;  // stop level = x_max * (1 + delta_factor)
    long n_paths = 20000;
    double horizon = 400.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    int workers = 0;
    double zero_start_eps = 0.02;
};

struct PotentialReport {
    std::vector<double> x;
    std::vector<double> ratio;  // EH * occupation density / U_-
    double min_ratio = 0.0, max_ratio = 0.0;
    double stop_level = 0.0;
    double passage_miss_fraction = 0.0;  // paths that never reached the stop level
    double correction_magnitude = 0.0;   // share of mass added by the after-passage remainder
    double analytic_identity_error = 0.0;  // sup |U_-(y)u_+(y) - reference| where closed form known
};

PotentialReport potential_identity_check(const LevyModel& model, const LadderData& ladder,
                                         const RhoLaw& rho, const PotentialConfig& cfg);

// ---------------------------------------------------------------------------
// Creeping probability: continuous first exits of the dual model from x.
// ---------------------------------------------------------------------------
struct CrossingProbConfig {
    double x = 1.0;
    long n_paths = 50000;
    double horizon = 200.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    int workers = 0;
};

struct CrossingProbReport {
    double estimate = 0.0;
    double stderr_ = 0.0;
    double analytic = 0.0;    // a_+ u_+(x)
    double limit = 0.0;       // a_+ / EH
    double undetected_fraction = 0.0;
    long n_detected = 0;
};

CrossingProbReport continuous_crossing_prob(const LevyModel& model, const LadderData& ladder,
                                            const CrossingProbConfig& cfg);

// ---------------------------------------------------------------------------
// Weak limit of the entrance under/overshoot pair toward rho.
// ---------------------------------------------------------------------------
struct OvershootLimitConfig {
    std::vector<double> z_list = {2.0, 5.0, 10.0};
    long n_paths = 100000;
    double horizon = 2500.0;
    double dt = 1e-2;
    std::uint64_t seed = 1;
    int workers = 0;
};

struct OvershootLevelReport {
    double z = 0.0;
    long n_detected = 0;
    double undetected_fraction = 0.0;
    double ks_joint = 0.0;
    double ks_rho1 = 0.0;  // undershoot marginal
    double ks_rho2 = 0.0;  // overshoot marginal
    double ks_overshoot_exp = -1.0;  // conditional-on-positive law; -1 if not applicable
};

struct OvershootLimitReport {
    std::vector<OvershootLevelReport> levels;
    // positive overshoots pooled across levels (memorylessness holds at every
    // level, pooling only adds power); -1 when not applicable
    double ks_overshoot_exp_pooled = -1.0;
};

OvershootLimitReport overshoot_limit_check(const LevyModel& model, const RhoLaw& rho,
                                           const OvershootLimitConfig& cfg);

}  // namespace levylab
