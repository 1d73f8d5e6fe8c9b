#pragma once

// Internal streaming Monte Carlo kernels shared by the estimation and check
// translation units.  Not installed.

#include <algorithm>
#include <cmath>
#include <vector>

#include "levylab/parallel.hpp"
#include "levylab/path_engine.hpp"

namespace levylab::kernels {

struct OccupationResult {
    std::vector<double> time_in_bin;
    double survivors = 0.0;
    double n_paths = 0.0;

    void merge(const OccupationResult& o) {
        if (time_in_bin.size() < o.time_in_bin.size()) time_in_bin.resize(o.time_in_bin.size());
        for (std::size_t i = 0; i < o.time_in_bin.size(); ++i) time_in_bin[i] += o.time_in_bin[i];
        survivors += o.survivors;
        n_paths += o.n_paths;
    }
};

struct OccupationVisitor {
    OccupationResult* res;
    BarrierDetector* kill;
    double dt;
    double hy;
    bool alive = true;

    void segment(double t0, double v0, double t1, double v1) {
        if (alive && kill->on_segment(t0, v0, t1, v1)) alive = false;
    }
    void jump(double t, double left, double size) {
        if (alive && kill->on_jump(t, left, size)) alive = false;
    }
    bool cell_end(long, double v) {
        if (!alive) return false;
        const long b = static_cast<long>(std::floor(v / hy));
        if (b >= 0 && static_cast<std::size_t>(b) < res->time_in_bin.size())
            res->time_in_bin[static_cast<std::size_t>(b)] += dt;
        return true;
    }
};

// time the killed process spends per value bin, started from x_ref
inline OccupationResult run_occupation(const LevyModel& model, double x_ref, double horizon,
                                       double dt, double hy, std::size_t n_bins, long n_paths,
                                       std::uint64_t seed, int workers) {
    const long n_cells = static_cast<long>(std::floor(horizon / dt + 1e-9));
    const long chunk = std::max<long>(1, n_paths / (8 * workers) + 1);
    auto partials = parallel_chunks<OccupationResult>(
        n_paths, chunk, workers, [&](long, long lo, long hi) {
            OccupationResult local;
            local.time_in_bin.assign(n_bins, 0.0);
            for (long i = lo; i < hi; ++i) {
                Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), 0x0CC));
                Rng kill_rng(derive_seed(seed, static_cast<std::uint64_t>(i), 0x0CD));
                BarrierDetector kill{0.0, true, model.sigma(), true, &kill_rng, {}};
                OccupationVisitor vis{&local, &kill, dt, hy, true};
                walk_model(model, x_ref, dt, n_cells, rng, vis);
                if (vis.alive) local.survivors += 1.0;
                local.n_paths += 1.0;
            }
            return local;
        });
    OccupationResult total;
    total.time_in_bin.assign(n_bins, 0.0);
    for (const auto& p : partials) total.merge(p);
    return total;
}

struct ExitProbeResult {
    double continuous = 0.0;
    double jump = 0.0;
    double undetected = 0.0;
    void merge(const ExitProbeResult& o) {
        continuous += o.continuous;
        jump += o.jump;
        undetected += o.undetected;
    }
};

// classification of the first exit from (0, infinity) of `model` started at x
inline ExitProbeResult exit_kind_fractions(const LevyModel& model, double x, double horizon,
                                           double dt, long n_paths, std::uint64_t seed,
                                           int workers) {
    const long n_cells = static_cast<long>(std::floor(horizon / dt + 1e-9));
    const long chunk = std::max<long>(1, n_paths / (8 * workers) + 1);
    auto partials = parallel_chunks<ExitProbeResult>(
        n_paths, chunk, workers, [&](long, long lo, long hi) {
            ExitProbeResult local;
            for (long i = lo; i < hi; ++i) {
                Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), 0xE817));
                Rng kill_rng(derive_seed(seed, static_cast<std::uint64_t>(i), 0xE818));
                BarrierDetector det{0.0, true, model.sigma(), true, &kill_rng, {}};
                struct V {
                    BarrierDetector* det;
                    bool done = false;
                    void segment(double t0, double v0, double t1, double v1) {
                        if (!done && det->on_segment(t0, v0, t1, v1)) done = true;
                    }
                    void jump(double t, double l, double s) {
                        if (!done && det->on_jump(t, l, s)) done = true;
                    }
                    bool cell_end(long, double) { return !done; }
                } vis{&det, false};
                walk_model(model, x, dt, n_cells, rng, vis);
                if (!vis.done) {
                    local.undetected += 1.0;
                } else if (det.record.crossed_by_jump) {
                    local.jump += 1.0;
                } else {
                    local.continuous += 1.0;
                }
            }
            return local;
        });
    ExitProbeResult total;
    for (const auto& p : partials) total.merge(p);
    return total;
}

struct EntrancePair {
    bool detected = false;
    double undershoot = 0.0;
    double overshoot = 0.0;
    bool by_jump = false;
    double time = 0.0;
};

// first entrance into (0, infinity) from a negative start
inline EntrancePair first_entrance_pair(const LevyModel& model, double x0, double horizon,
                                        double dt, std::uint64_t path_seed) {
    const long n_cells = static_cast<long>(std::floor(horizon / dt + 1e-9));
    Rng rng(path_seed);
    Rng kill_rng(splitmix64(path_seed + 0xBB));
    BarrierDetector det{0.0, false, model.sigma(), true, &kill_rng, {}};
    struct V {
        BarrierDetector* det;
        bool done = false;
        void segment(double t0, double v0, double t1, double v1) {
            if (!done && det->on_segment(t0, v0, t1, v1)) done = true;
        }
        void jump(double t, double l, double s) {
            if (!done && det->on_jump(t, l, s)) done = true;
        }
        bool cell_end(long, double) { return !done; }
    } vis{&det, false};
    walk_model(model, x0, dt, n_cells, rng, vis);
    EntrancePair out;
    if (!vis.done) return out;
    out.detected = true;
    out.undershoot = det.record.undershoot;
    out.overshoot = det.record.overshoot;
    out.by_jump = det.record.crossed_by_jump;
    out.time = det.record.time;
    return out;
}

}  // namespace levylab::kernels
