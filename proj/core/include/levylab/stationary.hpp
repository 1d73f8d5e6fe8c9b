#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "levylab/conditioned.hpp"
#include "levylab/ladder.hpp"
#include "levylab/levy_model.hpp"
#include "levylab/path.hpp"
#include "levylab/rho.hpp"
#include "levylab/stats.hpp"

namespace levylab {

// One realization of the two-sided spatially stationary process: the crossing
// pair (x, y) is drawn from rho, the backward part (time reversed, sign
// flipped) runs under the conditioned-to-stay-positive law from x, the
// forward part is a plain model path from y, independent given (x, y).
struct TwoSidedPath {
    PathSkeleton backward;  // s -> -xi((-s)-), strictly positive after 0
    PathSkeleton forward;   // xi on [0, horizon_fwd]
    double under = 0.0;     // x = -xi(0-)
    double over = 0.0;      // y = xi(0)
    double weight = 1.0;    // importance weight of the backward part

    double value_at(double t) const {
        if (t >= 0.0) return forward.value_at(t);
        return -backward.left_limit_at(-t);
    }
    bool invariants_ok() const;
};

struct StationaryConfig {
    double horizon_back = 3.0;
    double horizon_fwd = 6.0;
    double dt = 1e-3;
    long n_paths = 20000;
    std::uint64_t seed = 1;
    int workers = 0;
    double zero_start_eps = 0.02;
    SmcOptions smc;
};

// single materialized sample
TwoSidedPath sample_stationary(const LevyModel& model, const LadderData& ladder, const RhoLaw& rho,
                               const StationaryConfig& cfg);

// Ensemble summary: crossing pairs, weights, and the backward part tabulated
// on a shared coarse grid (forward parts are re-walked on demand from
// per-path derived seeds).
struct StationaryEnsemble {
    LevyModel model;
    StationaryConfig cfg;
    std::vector<double> under, over, weight;
    std::vector<double> back_grid;               // s >= 0
    std::vector<std::vector<double>> back_vals;  // [path][grid]
    double ess = 0.0;
    bool weight_degenerate = false;

    std::uint64_t forward_seed(long i) const;
    // value of the two-sided path at time t (t < 0 reads the backward grid)
    double backward_value(long i, double t_neg) const;
};

StationaryEnsemble make_stationary_ensemble(const LevyModel& model, const LadderData& ladder,
                                            const RhoLaw& rho, const StationaryConfig& cfg,
                                            double back_span = 1.0, int back_points = 64);

// ---------------------------------------------------------------------------
// Theorem-level checks
// ---------------------------------------------------------------------------

struct CrossingStationarityReport {
    double z = 0.0;
    long n_used = 0;
    double undetected_fraction = 0.0;
    double ks_under = 0.0;
    double ks_over = 0.0;
    double ks_joint = 0.0;
};

CrossingStationarityReport crossing_stationarity_check(const StationaryEnsemble& ens,
                                                       const RhoLaw& rho, double z);

struct ConditionalIndependenceReport {
    bool degenerate = false;       // continuous-crossing models
    std::vector<double> bin_edges; // undershoot bins (jump crossings only)
    std::vector<double> p_values;
    std::vector<long> bin_counts;
    double frac_below_05 = 0.0;
    double ks_overshoot_memoryless = -1.0;  // overshoot law per undershoot bin vs Exp
};

struct ConditionalIndependenceConfig {
    int bins = 5;
    long min_bin = 200;
    long max_per_bin = 600;  // distance correlation is quadratic in the bin size
    int n_perm = 199;
    double window = 1.0;     // pre-crossing functional: sup over this window
};

ConditionalIndependenceReport conditional_independence_check(
    const StationaryEnsemble& ens, double z, const ConditionalIndependenceConfig& cfg);

struct ReversalReport {
    struct Bin {
        double x_lo = 0.0, x_hi = 0.0, x_mean = 0.0;
        long n_reversed = 0, n_oracle = 0;
        std::vector<double> probe_ks;  // one per probe time
    };
    double z = 0.0;
    std::vector<double> probes;
    std::vector<Bin> bins;
    double max_ks = 0.0;
    double oracle_not_settled_fraction = 0.0;
};

struct ReversalConfig {
    int undershoot_bins = 5;   // quantile bins; collapses to one for continuous models
    std::vector<double> probes = {0.1, 0.3};
    double oracle_horizon = 7.5;  // settled window then ends at the reversed side's horizon
    long oracle_paths = 20000;
};

ReversalReport reversal_check(const StationaryEnsemble& ens, const LadderData& ladder,
                              const RhoLaw& rho, double z, const ReversalConfig& cfg);

struct WilliamsReport {
    double x = 0.0;
    double ks_duration = 0.0;       // last-exit law against reversed first-exit law
    long n_a = 0, n_b = 0;
    std::vector<double> probes;
    std::vector<double> probe_ks;
    double not_settled_fraction = 0.0;
    double undetected_fraction = 0.0;
    double continuity_accept_a = 1.0;  // conditioning acceptance rates
    double continuity_accept_b = 1.0;
};

struct WilliamsConfig {
    double x = 1.0;
    long n_paths = 100000;
    double horizon = 20.0;
    double dt = 1e-4;
    std::vector<double> probes = {0.1, 0.3};
    std::uint64_t seed = 1;
    int workers = 0;
    double zero_start_eps = 0.02;
};

WilliamsReport williams_check(const LevyModel& model, const LadderData& ladder,
                              const WilliamsConfig& cfg);

struct DuquesneReport {
    double x = 0.0;
    long n_a = 0, n_b = 0;
    double ks_duration = 0.0;  // last-exit time vs last-maximum-attainment time
    double ks_terminal = 0.0;  // value at the last exit vs pre-passage maximum
    double ks_sup = 0.0;
    double not_settled_fraction = 0.0;
};

struct DuquesneConfig {
    double x = 1.0;
    long n_paths = 50000;
    double horizon = 20.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    int workers = 0;
    double zero_start_eps = 0.02;
};

DuquesneReport duquesne_check(const LevyModel& model, const LadderData& ladder,
                              const DuquesneConfig& cfg);

struct SpatialStationarityReport {
    double x = 0.0;
    std::vector<double> probes;
    std::vector<double> probe_ks;
    double coverage_shortfall = 0.0;
};

SpatialStationarityReport spatial_stationarity_check(const StationaryEnsemble& shifted_source,
                                                     const StationaryEnsemble& fresh, double x,
                                                     const std::vector<double>& probes);

struct ConvergenceReport {
    struct PerStart {
        double x0 = 0.0;
        double no_entrance_fraction = 0.0;
        std::vector<double> probe_ks;  // against the stationary ensemble
    };
    std::vector<double> probes;
    std::vector<PerStart> starts;
    bool nonincreasing_probe0 = true;
};

struct ConvergenceConfig {
    std::vector<double> x_list = {-2.0, -5.0, -10.0};
    double b = -1.0;
    std::vector<double> probes = {0.0, -0.5, 0.5};
    long n_paths = 100000;
    double horizon = 2500.0;
    double dt = 1e-2;
    std::uint64_t seed = 1;
    int workers = 0;
};

ConvergenceReport convergence_from_minus_infinity(const LevyModel& model,
                                                  const StationaryEnsemble& target,
                                                  const ConvergenceConfig& cfg);

}  // namespace levylab
