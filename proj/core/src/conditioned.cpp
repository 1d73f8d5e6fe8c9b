#include "levylab/conditioned.hpp"

#include <algorithm>
#include <cmath>

namespace levylab {

namespace detail {

std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, double total,
                                             double u01) {
    const std::size_t n = weights.size();
    std::vector<std::size_t> anc(n);
    const double step = total / static_cast<double>(n);
    double pos = u01 * step;
    double cum = 0.0;
    std::size_t j = 0;
    for (std::size_t s = 0; s < n; ++s) {
        while (j < n && cum + weights[j] < pos) {
            cum += weights[j];
            ++j;
        }
        anc[s] = std::min(j, n - 1);
        pos += step;
    }
    return anc;
}

}  // namespace detail

namespace {

// materializes a particle's own history; resampling copies the whole vector
struct SkeletonState {
    double dt = 0.0;
    std::vector<double> grid;
    std::vector<JumpEvent> jumps;

    void segment(double, double v0, double t1, double v1) {
        if (grid.empty()) grid.push_back(v0);
        // grid nodes are exactly the segment ends that land on multiples of dt
        const double k = t1 / dt;
        if (std::abs(k - std::round(k)) < 1e-9) grid.push_back(v1);
    }
    void jump(double t, double left, double size) { jumps.push_back({t, left, size}); }
};

}  // namespace

ConditionedPathEnsemble sample_conditioned(const LevyModel& model, const LadderData& ladder,
                                           double x, double horizon, double dt, long n_paths,
                                           std::uint64_t seed, const ConditionedOptions& opts) {
    if (n_paths > opts.max_materialized)
        throw DomainError("sample_conditioned: ensemble too large to materialize; "
                          "use the streaming interface");
    if (x < 0.0) throw DomainError("sample_conditioned: x must be >= 0");
    const long n_cells = static_cast<long>(std::floor(horizon / dt + 1e-9));

    ConditionedPathEnsemble out;
    out.paths.reserve(static_cast<std::size_t>(n_paths));

    if (model.family() == Family::BrownianStandard) {
        std::vector<double> starts(static_cast<std::size_t>(n_paths), x);
        auto ens = run_bessel3_ensemble<SkeletonState>(
            starts, dt, n_cells, seed, opts.smc.workers,
            [&](long) { return SkeletonState{dt, {}, {}}; });
        for (auto& st : ens.states) {
            const double start_v = st.grid.front();
            out.paths.emplace_back(start_v, dt, std::move(st.grid), std::move(st.jumps), 1.0);
        }
        out.weights.assign(static_cast<std::size_t>(n_paths), 1.0);
        out.ess = static_cast<double>(n_paths);
        out.mass = 1.0;
        return out;
    }

    double start = x;
    if (x == 0.0) {
        if (model.sigma() <= 0.0)
            throw DomainError("sample_conditioned: start 0 requires 0 regular upwards");
        start = opts.zero_start_eps;
        out.approximate_zero_start = true;
    }

    auto Um = [&](double v) { return ladder.Uminus(v); };
    std::vector<double> starts(static_cast<std::size_t>(n_paths), start);
    auto ens = run_conditioned_ensemble<SkeletonState>(
        model, Um, starts, dt, n_cells, seed, opts.smc,
        [&](long) { return SkeletonState{dt, {}, {}}; });

    for (std::size_t i = 0; i < ens.states.size(); ++i) {
        auto& st = ens.states[i];
        if (ens.weights[i] <= 0.0 || st.grid.size() != static_cast<std::size_t>(n_cells) + 1)
            continue;
        const double start_v = st.grid.front();
        out.paths.emplace_back(start_v, dt, std::move(st.grid), std::move(st.jumps),
                               model.sigma());
        out.weights.push_back(ens.weights[i]);
    }
    out.ess = ens.ess;
    out.mass = ens.mass;
    out.weight_degenerate = ens.weight_degenerate;
    return out;
}

}  // namespace levylab
