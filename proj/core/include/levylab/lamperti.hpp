#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "levylab/ladder.hpp"
#include "levylab/levy_model.hpp"
#include "levylab/rho.hpp"
#include "levylab/stationary.hpp"

namespace levylab {

// Time-change clock f and state map g.  The defaults are the exponential
// pair; f(y) = exp(rate*y) keeps the tail conditions checkable analytically.
struct ClockSpec {
    std::function<double(double)> f;
    std::function<double(double)> g;
    bool f_is_exponential = true;
    double f_rate = 1.0;

    static ClockSpec exponential(double rate = 1.0);

    // integral of |y| f(y) over (-inf, 0) must be finite for the entrance
    // construction; exact for exponential f
    bool integrable_near_minus_infinity() const;
};

struct ExpFunctionalResult {
    double value = 0.0;
    double tail_estimate = 0.0;  // estimated mass beyond the backward horizon
    bool tail_ok = true;         // tail within the configured ratio of the value
};

// I(t) = integral of f(xi_s) ds from the backward horizon up to t, trapezoid
// on the skeleton with exact handling at jump times.
ExpFunctionalResult exp_functional(const TwoSidedPath& path, double t, const ClockSpec& clock,
                                   double reject_ratio = 1e-3);

struct PssmpSample {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<char> censored;  // clock coverage ran out before this probe
};

// X_t = g(xi_{sigma(t)}) under the two-sided construction, with sigma the
// monotone inverse of the clock (bisection to one grid step, linear
// refinement inside the step).
PssmpSample time_change(const TwoSidedPath& path, const ClockSpec& clock,
                        const std::vector<double>& t_grid);

// classical construction from a positive start x = g(y)
PssmpSample pssmp_from_positive(const LevyModel& model, double x,
                                const std::vector<double>& t_grid, double dt, double horizon,
                                std::uint64_t seed, const ClockSpec& clock = ClockSpec::exponential());

// CSV dump (t, X_t, replica, censored_flag)
void write_pssmp_csv(const std::vector<PssmpSample>& samples, const std::string& file);

// ---------------------------------------------------------------------------
// ensemble checks (exact backward sampling: Brownian family)
// ---------------------------------------------------------------------------

struct ClockMassConfig {
    long n_paths = 20000;
    double horizon_back = 50.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    int workers = 0;
};

struct ClockMassReport {
    double mean = 0.0;
    double stderr_ = 0.0;
    double expected = 2.0;
    long n = 0;
};

// Mean initial clock mass E I(0) for the standard Brownian construction.
// The backward tail beyond the horizon is replaced by its exact conditional
// mean under the Bessel-3 transition (the truncated estimator alone would be
// biased low by order horizon^{-1/2}).
ClockMassReport brownian_initial_clock_mass(const ClockMassConfig& cfg);

struct EntranceConfig {
    std::vector<double> x_list = {0.5, 0.1, 0.02};
    std::vector<double> t_probes = {1.0};
    long n_paths = 100000;
    double dt = 1e-3;
    double horizon_back_fine = 50.0;
    double horizon_back = 400.0;
    double coarse_factor = 25.0;   // dt multiplier past the fine backward span
    double horizon_fwd = 30.0;
    double clock_rate = 1.0;
    std::uint64_t seed = 1;
    int workers = 0;
};

struct EntranceReport {
    std::vector<double> x_list;
    std::vector<double> t_probes;
    std::vector<std::vector<double>> ks;  // [x][probe]
    double construction_censor_fraction = 0.0;
    bool decreasing_in_x = true;
};

// Marginals of the positive-start construction against the two-sided
// construction as the start tends to 0.
EntranceReport entrance_convergence_check(const LevyModel& model, const EntranceConfig& cfg);

struct ScalingReport {
    double c = 2.0;
    std::vector<double> probes;
    std::vector<double> probe_ks;
};

// self-similarity of the entrance construction: c X_{t/c^rate} against X
ScalingReport construction_scaling_check(const LevyModel& model, double c,
                                         const std::vector<double>& probes,
                                         const EntranceConfig& cfg);

// self-similarity of the positive-start process: (c X_{t/c}) under P_x vs P_cx
ScalingReport pssmp_scaling_check(const LevyModel& model, double x, double c,
                                  const std::vector<double>& probes, long n_paths, double dt,
                                  double horizon, std::uint64_t seed, int workers = 0,
                                  const ClockSpec& clock = ClockSpec::exponential());

struct RegenerationReport {
    double level = 0.0;
    double delta = 0.0;
    double ks = 0.0;
    long n = 0;
};

// Markov regeneration of the entrance construction at its first passage over
// a level: the post-passage marginal matches a fresh positive start.
RegenerationReport markov_regeneration_check(const LevyModel& model, double level, double delta,
                                             const EntranceConfig& cfg);

}  // namespace levylab
