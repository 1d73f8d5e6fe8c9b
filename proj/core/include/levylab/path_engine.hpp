#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "levylab/levy_model.hpp"
#include "levylab/path.hpp"
#include "levylab/rng.hpp"

namespace levylab {

inline constexpr long kDefaultJumpCap = 1L << 24;

// Event-driven path walker.  Emits maximal continuous segments (exact
// endpoints, jumps never inside a segment) and jump events in time order;
// cell_end fires at every grid time and may stop the walk early.
//
// Visitor requirements:
//   void segment(double t0, double v0, double t1, double v1);
//   void jump(double t, double left, double size);
//   bool cell_end(long k, double value);   // return false to stop
template <class Visitor>
void walk_model(const LevyModel& model, double x0, double dt, long n_cells, Rng& rng,
                Visitor& vis, long jump_cap = kDefaultJumpCap) {
    const double sigma = model.sigma();
    const double b = model.drift();
    const double lambda = model.jump_rate();

    double t = 0.0;
    double v = x0;
    double next_jump = lambda > 0.0 ? rng.exponential(lambda)
                                    : std::numeric_limits<double>::infinity();
    long jumps_seen = 0;

    for (long k = 1; k <= n_cells; ++k) {
        const double cell_end_t = dt * static_cast<double>(k);
        while (next_jump <= cell_end_t) {
            const double gap = next_jump - t;
            double w = v + b * gap;
            if (sigma > 0.0 && gap > 0.0) w += sigma * std::sqrt(gap) * rng.gaussian();
            vis.segment(t, v, next_jump, w);
            const double size = model.sample_jump(rng);
            vis.jump(next_jump, w, size);
            t = next_jump;
            v = w + size;
            next_jump = t + rng.exponential(lambda);
            if (++jumps_seen > jump_cap)
                throw BudgetExceededError("jump count exceeded cap of " + std::to_string(jump_cap));
        }
        const double gap = cell_end_t - t;
        double w = v + b * gap;
        if (sigma > 0.0 && gap > 0.0) w += sigma * std::sqrt(gap) * rng.gaussian();
        vis.segment(t, v, cell_end_t, w);
        t = cell_end_t;
        v = w;
        if (!vis.cell_end(k, v)) return;
    }
}

// Simulates a path of the model: exact Poisson jump clock, Gaussian
// increments between events.  Identical (model, x0, horizon, dt, seed) give a
// bit-identical skeleton.
PathSkeleton simulate(const LevyModel& model, double x0, double horizon, double dt,
                      std::uint64_t seed, long jump_cap = kDefaultJumpCap);

// Replays the exact segment/jump sequence of a materialized skeleton.
template <class Visitor>
void replay(const PathSkeleton& path, Visitor& vis) {
    const auto& jumps = path.jump_ledger();
    std::size_t ji = 0;
    double t = 0.0;
    double v = path.start_value();
    const long n = static_cast<long>(path.n_cells());
    for (long k = 1; k <= n; ++k) {
        const double cell_t = path.dt() * static_cast<double>(k);
        while (ji < jumps.size() && jumps[ji].time <= cell_t) {
            vis.segment(t, v, jumps[ji].time, jumps[ji].left_limit);
            vis.jump(jumps[ji].time, jumps[ji].left_limit, jumps[ji].size);
            t = jumps[ji].time;
            v = jumps[ji].left_limit + jumps[ji].size;
            ++ji;
        }
        const double w = path.grid_values()[static_cast<std::size_t>(k)];
        vis.segment(t, v, cell_t, w);
        t = cell_t;
        v = w;
        if (!vis.cell_end(k, v)) return;
    }
}

// Sub-grid crossing resolution for the continuous part.  With the correction
// on, a Brownian bridge test detects crossings between exact endpoints; plain
// grid detection systematically underestimates them.
struct BarrierDetector {
    double level;
    bool downward;           // true: first time value <= level
    double sigma;
    bool bridge_correction;
    Rng* bridge_rng = nullptr;

    PassageRecord record;

    // segment with exact endpoints; returns true when crossing found
    bool on_segment(double t0, double v0, double t1, double v1);
    bool on_jump(double t, double left, double size);
};

// First time the path leaves (0, infinity) (value <= 0).  Path must start
// positive.  The seed drives only the bridge tests.
PassageRecord first_exit_nonpositive(const PathSkeleton& path, bool bridge_correction,
                                     std::uint64_t seed);

// First time the path exceeds level z.
PassageRecord first_passage_above(const PathSkeleton& path, double z, bool bridge_correction,
                                  std::uint64_t seed);

struct LastExit {
    bool settled = false;
    double time = 0.0;            // last time strictly below the level
    double trailing_min = 0.0;
};

// Last time the path is below z, certified by a trailing window on which the
// path stays at or above z + margin; NotSettled (settled=false) otherwise.
LastExit last_exit_below(const PathSkeleton& path, double z, bool bridge_correction,
                         std::uint64_t seed, double window_frac = 0.2, double margin = 0.0);

// Time reversal at t: s -> left limit of the path at (t - s), on [0, t].
// Jumps map to jumps with negated sign and mirrored position.
PathSkeleton reverse_at(const PathSkeleton& path, double t);

// Path shifted so that time 0 sits at the first entrance into (0, infinity).
struct ShiftedPath {
    double entrance_time = 0.0;  // in the original clock
    PathSkeleton base;

    double value_at(double t) const { return base.value_at(entrance_time + t); }
    double left_limit_at(double t) const { return base.left_limit_at(entrance_time + t); }
    double min_time() const { return -entrance_time; }
    double max_time() const { return base.horizon() - entrance_time; }
};
std::optional<ShiftedPath> shift_at_entrance(const PathSkeleton& path, bool bridge_correction,
                                             std::uint64_t seed);

// CSV dump, one row per grid point and jump: time,value,is_jump,jump_size
void write_path_csv(const PathSkeleton& path, const std::string& file);

}  // namespace levylab
