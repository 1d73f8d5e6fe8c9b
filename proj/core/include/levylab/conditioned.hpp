#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "levylab/ladder.hpp"
#include "levylab/parallel.hpp"
#include "levylab/path_engine.hpp"

namespace levylab {

// ---------------------------------------------------------------------------
// Per-particle state concept
//
// States consume the particle's path incrementally and must be copyable
// (resampling duplicates them):
//   void segment(double t0, double v0, double t1, double v1);
//   void jump(double t, double left, double size);
// ---------------------------------------------------------------------------

// Records right-continuous values at fixed, grid-aligned probe times.
struct ProbeRecorder {
    std::vector<double> times;  // sorted
    std::vector<double> vals;
    std::size_t next = 0;
    double last_t = 0.0, last_v = 0.0;

    explicit ProbeRecorder(std::vector<double> probe_times = {}) : times(std::move(probe_times)) {
        vals.reserve(times.size());
    }

    void segment(double t0, double v0, double t1, double v1) {
        constexpr double eps = 1e-12;
        while (next < times.size() && times[next] <= t0 + eps) {
            vals.push_back(v0);
            ++next;
        }
        while (next < times.size() && times[next] < t1 - eps) {
            const double w = (times[next] - t0) / (t1 - t0);
            vals.push_back(v0 + w * (v1 - v0));
            ++next;
        }
        last_t = t1;
        last_v = v1;
    }
    void jump(double, double, double) {}
    void finalize() {
        while (next < times.size() && times[next] <= last_t + 1e-9) {
            vals.push_back(last_v);
            ++next;
        }
    }
    bool complete() const { return next >= times.size() || vals.size() == times.size(); }
};

// ---------------------------------------------------------------------------
// Exact three-dimensional-norm sampler for standard Brownian motion
// conditioned to stay positive (valid from x = 0 as well).
// ---------------------------------------------------------------------------
template <class State>
void walk_bessel3(double x, double dt, long n_cells, Rng& rng, State& st) {
    const double s = std::sqrt(dt);
    double t = 0.0;
    double r = x;
    for (long k = 1; k <= n_cells; ++k) {
        const double a = r + s * rng.gaussian();
        const double b = s * rng.gaussian();
        const double c = s * rng.gaussian();
        const double r1 = std::sqrt(a * a + b * b + c * c);
        const double t1 = dt * static_cast<double>(k);
        st.segment(t, r, t1, r1);
        t = t1;
        r = r1;
    }
}

// ---------------------------------------------------------------------------
// Weighted conditioned ensembles for general models
// ---------------------------------------------------------------------------

struct SmcOptions {
    long window_cells = 64;
    bool allow_resample = true;
    double resample_frac = 0.3;   // resample when ESS drops below this * n
    double ess_warn_frac = 0.1;   // WeightDegeneracy floor
    bool bridge_correction = true;
    int workers = 0;              // 0 = hardware default
    long jump_cap = kDefaultJumpCap;
    // particles whose value reaches this level stop evolving (their weight is
    // frozen by optional stopping); +inf disables absorption
    double absorb_above = std::numeric_limits<double>::infinity();
};

template <class State>
struct ConditionedEnsemble {
    std::vector<State> states;
    std::vector<double> weights;   // 0 for killed particles
    std::vector<double> final_values;
    std::vector<char> absorbed;
    double ess = 0.0;
    double mass = 0.0;             // survival-mass bookkeeping; 1 in expectation
    bool weight_degenerate = false;
    int resample_rounds = 0;
};

namespace detail {

struct SmcParticle {
    double value = 0.0;
    bool alive = true;
    bool absorbed = false;
};

template <class State>
struct WindowVisitor {
    State* state;
    BarrierDetector* kill;
    double t_base;
    double absorb_above;
    bool alive;
    bool absorbed = false;
    double value;

    void segment(double t0, double v0, double t1, double v1) {
        if (!alive || absorbed) return;
        if (kill->on_segment(t_base + t0, v0, t_base + t1, v1)) {
            alive = false;
            return;
        }
        state->segment(t_base + t0, v0, t_base + t1, v1);
        value = v1;
        if (value >= absorb_above) absorbed = true;
    }
    void jump(double t, double left, double size) {
        if (!alive || absorbed) return;
        if (kill->on_jump(t_base + t, left, size)) {
            alive = false;
            return;
        }
        state->jump(t_base + t, left, size);
        value = left + size;
        if (value >= absorb_above) absorbed = true;
    }
    bool cell_end(long, double) { return alive && !absorbed; }
};

// Deterministic systematic resampling: returns ancestor index per slot.
std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, double total,
                                             double u01);

}  // namespace detail

// Runs n particles of the process conditioned to stay positive, started from
// starts[i], by killing at the boundary and reweighting with the harmonic
// ratio Uminus(current)/Uminus(start).  Weights telescope window by window so
// adaptive systematic resampling can keep the effective sample size up; with
// resampling off this is plain importance sampling with final weights
// Uminus(end)/Uminus(start) on survival.
template <class State, class MakeState>
ConditionedEnsemble<State> run_conditioned_ensemble(
    const LevyModel& model, const std::function<double(double)>& Uminus,
    const std::vector<double>& starts, double dt, long n_cells, std::uint64_t seed,
    const SmcOptions& opt, MakeState make_state) {
    const long n = static_cast<long>(starts.size());
    ConditionedEnsemble<State> out;
    out.states.reserve(starts.size());
    out.weights.assign(starts.size(), 1.0);

    std::vector<detail::SmcParticle> parts(starts.size());
    std::vector<Rng> rngs;
    std::vector<Rng> kill_rngs;
    rngs.reserve(starts.size());
    kill_rngs.reserve(starts.size());
    for (long i = 0; i < n; ++i) {
        parts[static_cast<std::size_t>(i)].value = starts[static_cast<std::size_t>(i)];
        out.states.push_back(make_state(i));
        rngs.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
        kill_rngs.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(i), 0xC1A11));
    }

    Rng resample_rng(derive_seed(seed, 0xFFFFFFFF, 0x5EED));
    const int workers = opt.workers > 0 ? opt.workers : default_workers();
    const long chunk = std::max<long>(1, n / (4 * workers) + 1);

    double log_mass = 0.0;
    long done = 0;
    int window_idx = 0;
    while (done < n_cells) {
        const long W = std::min(opt.window_cells, n_cells - done);
        const double t_base = dt * static_cast<double>(done);

        parallel_chunks<int>(n, chunk, workers, [&](long, long lo, long hi) {
            for (long i = lo; i < hi; ++i) {
                auto& p = parts[static_cast<std::size_t>(i)];
                if (!p.alive || p.absorbed || out.weights[static_cast<std::size_t>(i)] <= 0.0)
                    continue;
                const double v_before = p.value;
                BarrierDetector kill{0.0, true, model.sigma(), opt.bridge_correction,
                                     &kill_rngs[static_cast<std::size_t>(i)], {}};
                detail::WindowVisitor<State> vis{&out.states[static_cast<std::size_t>(i)], &kill,
                                                 t_base, opt.absorb_above, true, false, p.value};
                walk_model(model, p.value, dt, W, rngs[static_cast<std::size_t>(i)], vis,
                           opt.jump_cap);
                p.alive = vis.alive;
                p.absorbed = vis.absorbed;
                p.value = vis.value;
                auto& w = out.weights[static_cast<std::size_t>(i)];
                if (!p.alive) {
                    w = 0.0;
                } else {
                    w *= Uminus(p.value) / Uminus(std::max(v_before, 1e-300));
                }
            }
            return 0;
        });
        done += W;
        ++window_idx;

        double total = 0.0, total2 = 0.0;
        for (double w : out.weights) {
            total += w;
            total2 += w * w;
        }
        if (total <= 0.0) break;
        const double ess = total * total / total2;
        if (opt.allow_resample && done < n_cells && ess < opt.resample_frac * n) {
            const auto anc = detail::systematic_resample(out.weights, total, resample_rng.uniform());
            std::vector<detail::SmcParticle> new_parts(parts.size());
            std::vector<State> new_states;
            new_states.reserve(parts.size());
            for (std::size_t s = 0; s < anc.size(); ++s) {
                new_parts[s] = parts[anc[s]];
                new_states.push_back(out.states[anc[s]]);
            }
            parts.swap(new_parts);
            out.states.swap(new_states);
            const double wbar = total / static_cast<double>(n);
            std::fill(out.weights.begin(), out.weights.end(), 1.0);
            log_mass += std::log(wbar);
            ++out.resample_rounds;
        }
    }

    double total = 0.0, total2 = 0.0;
    for (double w : out.weights) {
        total += w;
        total2 += w * w;
    }
    out.ess = total2 > 0.0 ? total * total / total2 : 0.0;
    out.mass = std::exp(log_mass) * total / static_cast<double>(n);
    out.weight_degenerate = out.ess < opt.ess_warn_frac * static_cast<double>(n);
    out.final_values.resize(parts.size());
    out.absorbed.resize(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        out.final_values[i] = parts[i].value;
        out.absorbed[i] = parts[i].absorbed ? 1 : 0;
    }
    return out;
}

// Bessel-3 ensembles presented through the same interface (weights = 1).
template <class State, class MakeState>
ConditionedEnsemble<State> run_bessel3_ensemble(const std::vector<double>& starts, double dt,
                                                long n_cells, std::uint64_t seed, int workers,
                                                MakeState make_state) {
    const long n = static_cast<long>(starts.size());
    ConditionedEnsemble<State> out;
    out.states.reserve(starts.size());
    for (long i = 0; i < n; ++i) out.states.push_back(make_state(i));
    out.weights.assign(starts.size(), 1.0);
    const int w = workers > 0 ? workers : default_workers();
    const long chunk = std::max<long>(1, n / (4 * w) + 1);
    parallel_chunks<int>(n, chunk, w, [&](long, long lo, long hi) {
        for (long i = lo; i < hi; ++i) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            walk_bessel3(starts[static_cast<std::size_t>(i)], dt, n_cells, rng,
                         out.states[static_cast<std::size_t>(i)]);
        }
        return 0;
    });
    out.ess = static_cast<double>(n);
    out.mass = 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Materialized ensembles (the module-level operation; moderate n only)
// ---------------------------------------------------------------------------
struct ConditionedPathEnsemble {
    std::vector<PathSkeleton> paths;
    std::vector<double> weights;
    double ess = 0.0;
    double mass = 0.0;
    bool weight_degenerate = false;
    bool approximate_zero_start = false;
};

struct ConditionedOptions {
    SmcOptions smc;
    double zero_start_eps = 0.02;  // surrogate start for x = 0 on jump models
    long max_materialized = 200000;
};

// Ensemble of paths conditioned to stay positive, started from x (x = 0 is
// exact for BrownianStandard, refused for jump models unless a surrogate
// start is allowed by opts).
ConditionedPathEnsemble sample_conditioned(const LevyModel& model, const LadderData& ladder,
                                           double x, double horizon, double dt, long n_paths,
                                           std::uint64_t seed, const ConditionedOptions& opts = {});

}  // namespace levylab
