#include "levylab/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mc_kernels.hpp"

namespace levylab {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// rolling buffer of cell-end values; entry for cell m holds the value at m*dt
struct GridRing {
    std::vector<double> buf;
    long count = 0;  // cells pushed so far (cells are 1-based)

    explicit GridRing(std::size_t size) : buf(std::max<std::size_t>(size, 2), 0.0) {}
    void push(double v) {
        buf[static_cast<std::size_t>(count % static_cast<long>(buf.size()))] = v;
        ++count;
    }
    double at_cell(long m) const {  // value at time m*dt
        if (m < 1 || m > count || m <= count - static_cast<long>(buf.size())) return kNaN;
        return buf[static_cast<std::size_t>((m - 1) % static_cast<long>(buf.size()))];
    }
};

// One-pass scan: detect the first passage over (or exit under) a level, keep a
// lookback ring of pre-passage values and record a fixed number of
// post-passage cells.
struct PassageWindowScan {
    BarrierDetector det;
    GridRing ring;
    double dt;
    double start = 0.0;
    long post_cells = 0;

    bool done = false;
    long tau_cell = 0;          // cells completed before the passage
    long first_post_cell = 0;
    std::vector<double> post_vals;

    PassageWindowScan(BarrierDetector d, std::size_t ring_size, double dt_, long post)
        : det(d), ring(ring_size), dt(dt_), post_cells(post) {}

    void segment(double t0, double v0, double t1, double v1) {
        if (!done && det.on_segment(t0, v0, t1, v1)) {
            done = true;
            tau_cell = ring.count;
        }
    }
    void jump(double t, double l, double s) {
        if (!done && det.on_jump(t, l, s)) {
            done = true;
            tau_cell = ring.count;
        }
    }
    bool cell_end(long k, double v) {
        if (!done) {
            ring.push(v);
            return true;
        }
        if (post_vals.empty()) first_post_cell = k;
        post_vals.push_back(v);
        return static_cast<long>(post_vals.size()) < post_cells;
    }

    // grid value at absolute time t >= 0 (nearest cell at or after t)
    double value_at(double t) const {
        if (t <= 0.0) return start;
        const long m = static_cast<long>(std::ceil(t / dt - 1e-9));
        if (m < 1) return start;
        if (m <= tau_cell) return ring.at_cell(m);
        const long j = m - first_post_cell;
        if (j >= 0 && j < static_cast<long>(post_vals.size()))
            return post_vals[static_cast<std::size_t>(j)];
        return kNaN;
    }
};

// backward-part state: start level plus values on a fixed probe grid
struct BackState {
    double x0 = 0.0;
    double logical_x = 0.0;
    ProbeRecorder probes;

    void segment(double t0, double v0, double t1, double v1) { probes.segment(t0, v0, t1, v1); }
    void jump(double t, double l, double s) { probes.jump(t, l, s); }
};

struct SkeletonState {
    double dt = 0.0;
    std::vector<double> grid;
    std::vector<JumpEvent> jumps;

    void segment(double, double v0, double t1, double v1) {
        if (grid.empty()) grid.push_back(v0);
        const double k = t1 / dt;
        if (std::abs(k - std::round(k)) < 1e-9) grid.push_back(v1);
    }
    void jump(double t, double left, double size) { jumps.push_back({t, left, size}); }
};

// records the first N cell-end values, then stops the walk
struct FirstCellsRecorder {
    std::vector<double> vals;
    std::size_t want = 0;

    void segment(double, double, double, double) {}
    void jump(double, double, double) {}
    bool cell_end(long, double v) {
        vals.push_back(v);
        return vals.size() < want;
    }
    // value at time m*dt
    double at_cell(long m) const {
        if (m < 1 || static_cast<std::size_t>(m) > vals.size()) return kNaN;
        return vals[static_cast<std::size_t>(m - 1)];
    }
};

FirstCellsRecorder record_first_cells(const LevyModel& model, double y, double horizon, double dt,
                                      std::uint64_t seed, std::size_t n_cells_wanted) {
    FirstCellsRecorder rec;
    rec.want = n_cells_wanted;
    Rng rng(seed);
    const long n_cells = static_cast<long>(std::floor(horizon / dt + 1e-9));
    walk_model(model, y, dt, n_cells, rng, rec);
    return rec;
}

PassageWindowScan scan_forward(const LevyModel& model, double y, double level, double horizon,
                               double dt, std::uint64_t seed, std::size_t ring_size,
                               long post_cells, Rng& kill_rng) {
    PassageWindowScan scan(BarrierDetector{level, false, model.sigma(), true, &kill_rng, {}},
                           ring_size, dt, post_cells);
    scan.start = y;
    Rng rng(seed);
    const long n_cells = static_cast<long>(std::floor(horizon / dt + 1e-9));
    walk_model(model, y, dt, n_cells, rng, scan);
    return scan;
}

}  // namespace

bool TwoSidedPath::invariants_ok() const {
    if (under < 0.0 || over < 0.0) return false;
    const auto& g = backward.grid_values();
    for (std::size_t k = 1; k < g.size(); ++k)
        if (!(g[k] > 0.0)) return false;
    if (std::abs(forward.start_value() - over) > 1e-12) return false;
    return true;
}

std::uint64_t StationaryEnsemble::forward_seed(long i) const {
    return derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xF0F0);
}

double StationaryEnsemble::backward_value(long i, double t_neg) const {
    const double s = -t_neg;
    if (s < 0.0 || back_grid.empty() || s > back_grid.back()) return kNaN;
    const auto& bv = back_vals[static_cast<std::size_t>(i)];
    if (bv.size() != back_grid.size()) return kNaN;
    auto it = std::upper_bound(back_grid.begin(), back_grid.end(), s);
    if (it == back_grid.begin()) return -bv.front();
    const std::size_t hi = static_cast<std::size_t>(it - back_grid.begin());
    if (hi >= back_grid.size()) return -bv.back();
    const std::size_t lo = hi - 1;
    const double w = (s - back_grid[lo]) / (back_grid[hi] - back_grid[lo]);
    return -(bv[lo] + w * (bv[hi] - bv[lo]));
}

StationaryEnsemble make_stationary_ensemble(const LevyModel& model, const LadderData& ladder,
                                            const RhoLaw& rho, const StationaryConfig& cfg,
                                            double back_span, int back_points) {
    StationaryEnsemble ens;
    ens.model = model;
    ens.cfg = cfg;
    const long n = cfg.n_paths;

    back_span = std::min(back_span, cfg.horizon_back);
    ens.back_grid.clear();
    for (int k = 0; k <= back_points; ++k) {
        double s = back_span * static_cast<double>(k) / back_points;
        s = std::round(s / cfg.dt) * cfg.dt;
        if (ens.back_grid.empty() || s > ens.back_grid.back()) ens.back_grid.push_back(s);
    }

    Rng pair_rng(derive_seed(cfg.seed, 0, 0xA1B2));
    std::vector<double> starts(static_cast<std::size_t>(n));
    std::vector<double> logical(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        const double x = rho.sample(pair_rng).first;
        logical[static_cast<std::size_t>(i)] = x;
        starts[static_cast<std::size_t>(i)] =
            (x == 0.0 && model.family() != Family::BrownianStandard && model.has_jumps())
                ? cfg.zero_start_eps
                : x;
    }

    const long n_cells = static_cast<long>(std::floor(cfg.horizon_back / cfg.dt + 1e-9));
    auto mk = [&](long i) {
        BackState st;
        st.x0 = starts[static_cast<std::size_t>(i)];
        st.logical_x = logical[static_cast<std::size_t>(i)];
        st.probes = ProbeRecorder(ens.back_grid);
        return st;
    };

    std::vector<BackState> states;
    std::vector<double> weights;
    if (model.family() == Family::BrownianStandard) {
        auto run =
            run_bessel3_ensemble<BackState>(starts, cfg.dt, n_cells, cfg.seed, cfg.workers, mk);
        states = std::move(run.states);
        weights = std::move(run.weights);
        ens.ess = run.ess;
    } else {
        auto Um = [&](double v) { return ladder.Uminus(v); };
        SmcOptions smc = cfg.smc;
        smc.workers = cfg.workers;
        auto run = run_conditioned_ensemble<BackState>(model, Um, starts, cfg.dt, n_cells,
                                                       cfg.seed, smc, mk);
        states = std::move(run.states);
        weights = std::move(run.weights);
        ens.ess = run.ess;
        ens.weight_degenerate = run.weight_degenerate;
    }

    // the overshoot is drawn conditionally on the (possibly resampled)
    // undershoot; resampling is mass-neutral per start, so the pair law is
    // preserved
    ens.under.resize(states.size());
    ens.over.resize(states.size());
    ens.weight = std::move(weights);
    ens.back_vals.resize(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        states[i].probes.finalize();
        ens.under[i] = states[i].logical_x;
        Rng yrng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0x0E0E));
        ens.over[i] = rho.sample_overshoot_given(states[i].logical_x, yrng);
        ens.back_vals[i] = std::move(states[i].probes.vals);
    }
    return ens;
}

TwoSidedPath sample_stationary(const LevyModel& model, const LadderData& ladder, const RhoLaw& rho,
                               const StationaryConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, 0, 0x7512));
    auto [x, y] = rho.sample(rng);
    TwoSidedPath out;
    out.under = x;
    out.over = y;

    const long n_back = static_cast<long>(std::floor(cfg.horizon_back / cfg.dt + 1e-9));
    if (model.family() == Family::BrownianStandard) {
        SkeletonState st{cfg.dt, {}, {}};
        Rng brng(derive_seed(cfg.seed, 1, 0x7513));
        walk_bessel3(x, cfg.dt, n_back, brng, st);
        const double start_v = st.grid.front();
        out.backward =
            PathSkeleton(start_v, cfg.dt, std::move(st.grid), std::move(st.jumps), 1.0);
        out.weight = 1.0;
    } else {
        const double start = (x == 0.0 && model.has_jumps()) ? cfg.zero_start_eps : x;
        auto Um = [&](double v) { return ladder.Uminus(v); };
        SmcOptions smc = cfg.smc;
        smc.allow_resample = false;
        smc.workers = cfg.workers;
        const long n_try = 256;
        std::vector<double> starts(n_try, start);
        auto run = run_conditioned_ensemble<SkeletonState>(
            model, Um, starts, cfg.dt, n_back, derive_seed(cfg.seed, 2, 0x7514), smc,
            [&](long) { return SkeletonState{cfg.dt, {}, {}}; });
        double total = 0.0;
        for (double w : run.weights) total += w;
        if (total <= 0.0) throw CoverageError("sample_stationary: no surviving backward path");
        double pick = rng.uniform() * total;
        std::size_t chosen = 0;
        for (std::size_t i = 0; i < run.weights.size(); ++i) {
            if (pick < run.weights[i]) {
                chosen = i;
                break;
            }
            pick -= run.weights[i];
        }
        auto& st = run.states[chosen];
        const double start_v = st.grid.front();
        out.backward = PathSkeleton(start_v, cfg.dt, std::move(st.grid),
                                    std::move(st.jumps), model.sigma());
        out.weight = 1.0;  // selection proportional to weight
    }
    out.forward = simulate(model, y, cfg.horizon_fwd, cfg.dt, derive_seed(cfg.seed, 3, 0x7515));
    return out;
}

// ---------------------------------------------------------------------------
// crossing stationarity at level z
// ---------------------------------------------------------------------------

CrossingStationarityReport crossing_stationarity_check(const StationaryEnsemble& ens,
                                                       const RhoLaw& rho, double z) {
    CrossingStationarityReport rep;
    rep.z = z;
    WeightedSample under, over;
    std::vector<double> ju, jo, jw;
    double missed = 0.0, total = 0.0;
    for (std::size_t i = 0; i < ens.under.size(); ++i) {
        const double w = ens.weight[i];
        if (w <= 0.0) continue;
        total += 1.0;
        double u, o;
        if (ens.over[i] > z) {
            u = z + ens.under[i];
            o = ens.over[i] - z;
        } else {
            Rng krng(splitmix64(ens.forward_seed(static_cast<long>(i)) + 0x9F));
            auto scan = scan_forward(ens.model, ens.over[i], z, ens.cfg.horizon_fwd, ens.cfg.dt,
                                     ens.forward_seed(static_cast<long>(i)), 2, 0, krng);
            if (!scan.done) {
                missed += 1.0;
                continue;
            }
            u = scan.det.record.undershoot;
            o = scan.det.record.overshoot;
        }
        under.values.push_back(u);
        under.weights.push_back(w);
        over.values.push_back(o);
        over.weights.push_back(w);
        ju.push_back(u);
        jo.push_back(o);
        jw.push_back(w);
    }
    rep.n_used = static_cast<long>(under.values.size());
    rep.undetected_fraction = total > 0.0 ? missed / total : 0.0;
    if (rep.n_used == 0) return rep;
    rep.ks_under = ks_one_sample(under, [&](double v) { return rho.rho1_cdf(v); }).statistic;
    rep.ks_over = ks_one_sample(over, [&](double v) { return rho.rho2_cdf(v); }).statistic;
    rep.ks_joint = ks2d_vs_cdf(ju, jo, jw, [&](double a, double b) { return rho.joint_cdf(a, b); });
    return rep;
}

// ---------------------------------------------------------------------------
// conditional independence of the pre-passage path and the overshoot
// ---------------------------------------------------------------------------

ConditionalIndependenceReport conditional_independence_check(
    const StationaryEnsemble& ens, double z, const ConditionalIndependenceConfig& cfg) {
    ConditionalIndependenceReport rep;
    if (!ens.model.has_positive_jumps()) {
        rep.degenerate = true;
        return rep;
    }
    const double dt = ens.cfg.dt;
    const std::size_t ring_cells = static_cast<std::size_t>(std::ceil(cfg.window / dt)) + 2;

    struct Row {
        double u, f, o;
    };
    std::vector<Row> rows;

    for (std::size_t i = 0; i < ens.under.size(); ++i) {
        if (ens.weight[i] <= 0.0) continue;
        if (ens.over[i] > z) continue;  // instantaneous crossing carries no window
        Rng krng(splitmix64(ens.forward_seed(static_cast<long>(i)) + 0x9F));
        auto scan = scan_forward(ens.model, ens.over[i], z, ens.cfg.horizon_fwd, ens.cfg.dt,
                                 ens.forward_seed(static_cast<long>(i)), ring_cells, 0, krng);
        if (!scan.done || !scan.det.record.crossed_by_jump) continue;
        if (scan.det.record.undershoot <= 0.0) continue;
        const double tau = scan.det.record.time;
        const long lo_cell = std::max<long>(1, static_cast<long>(std::ceil((tau - cfg.window) / dt)));
        double sup = ens.over[i];
        for (long m = lo_cell; m <= scan.tau_cell; ++m) {
            const double v = scan.ring.at_cell(m);
            if (!std::isnan(v)) sup = std::max(sup, v);
        }
        rows.push_back({scan.det.record.undershoot, sup, scan.det.record.overshoot});
    }

    if (rows.size() < static_cast<std::size_t>(cfg.min_bin)) {
        rep.degenerate = true;
        return rep;
    }

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.u < b.u; });
    const std::size_t per = rows.size() / static_cast<std::size_t>(cfg.bins);
    const auto pos = ens.model.positive_exp_tails();
    double ks_mem = -1.0;

    for (int b = 0; b < cfg.bins; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * per;
        const std::size_t hi = (b + 1 == cfg.bins) ? rows.size() : lo + per;
        if (hi - lo < static_cast<std::size_t>(cfg.min_bin)) continue;
        rep.bin_edges.push_back(rows[lo].u);
        std::vector<double> f, o;
        const std::size_t take = std::min(hi - lo, static_cast<std::size_t>(cfg.max_per_bin));
        for (std::size_t k = lo; k < lo + take; ++k) {
            f.push_back(rows[k].f);
            o.push_back(rows[k].o);
        }
        const auto dc = distance_correlation_test(
            f, o, cfg.n_perm, derive_seed(ens.cfg.seed, static_cast<std::uint64_t>(b), 0xDC));
        rep.p_values.push_back(dc.p_value);
        rep.bin_counts.push_back(static_cast<long>(hi - lo));

        if (pos.size() == 1) {
            WeightedSample os;
            for (std::size_t k = lo; k < hi; ++k) os.values.push_back(rows[k].o);
            const double alpha = pos.front().alpha;
            const double ks = ks_one_sample(os, [&](double y) {
                                  return y <= 0.0 ? 0.0 : 1.0 - std::exp(-alpha * y);
                              }).statistic;
            ks_mem = std::max(ks_mem, ks);
        }
    }
    rep.ks_overshoot_memoryless = ks_mem;
    long below = 0;
    for (double p : rep.p_values)
        if (p < 0.05) ++below;
    rep.frac_below_05 =
        rep.p_values.empty() ? 0.0 : static_cast<double>(below) / rep.p_values.size();
    return rep;
}

// ---------------------------------------------------------------------------
// time reversal at the first passage over z
// ---------------------------------------------------------------------------

namespace {

// conditioned path with last-exit tracking, settlement window and probes
struct OracleState {
    double z = 0.0;
    double sigma = 1.0;
    Rng dip_rng{1};
    ProbeRecorder probes;
    double last_below = 0.0;
    bool seen_below = false;
    bool last_cross_by_jump = false;
    double value_at_last_below = 0.0;
    double window_start = 0.0;
    double window_min = std::numeric_limits<double>::infinity();
    double final_value = 0.0;

    void segment(double t0, double v0, double t1, double v1) {
        probes.segment(t0, v0, t1, v1);
        if (v0 < z || v1 < z) {
            seen_below = true;
            last_cross_by_jump = false;
            if (v1 < z) {
                last_below = t1;
                value_at_last_below = v1;
            } else {
                last_below = (v1 > v0) ? t0 + (t1 - t0) * (z - v0) / (v1 - v0) : t1;
                value_at_last_below = z;
            }
        } else if (sigma > 0.0 && t1 > t0) {
            const double p = std::exp(-2.0 * (v0 - z) * (v1 - z) / (sigma * sigma * (t1 - t0)));
            if (dip_rng.uniform() < p) {
                seen_below = true;
                last_below = 0.5 * (t0 + t1);
                value_at_last_below = z;
                last_cross_by_jump = false;
            }
        }
        if (t1 >= window_start) window_min = std::min(window_min, std::min(v0, v1));
        final_value = v1;
    }
    void jump(double t, double l, double s) {
        probes.jump(t, l, s);
        if (l < z && l + s >= z) {
            seen_below = true;
            last_below = t;
            value_at_last_below = l;
            last_cross_by_jump = true;
        }
        if (t >= window_start) window_min = std::min(window_min, std::min(l, l + s));
        final_value = l + s;
    }

    // Settled paths can still dip below z beyond the horizon, in which case
    // the recorded last exit is premature.  Under the conditioned law the
    // future-dip probability from level r is exactly Uminus(z)/Uminus(r), so
    // reweighting by its complement removes the contamination.
    double no_future_dip_weight(const LadderData& lad) const {
        if (final_value <= z) return 0.0;
        return std::max(0.0, 1.0 - lad.Uminus(z) / lad.Uminus(final_value));
    }
};

}  // namespace

ReversalReport reversal_check(const StationaryEnsemble& ens, const LadderData& ladder,
                              const RhoLaw& rho, double z, const ReversalConfig& cfg) {
    (void)rho;
    ReversalReport rep;
    rep.z = z;
    rep.probes = cfg.probes;
    const double dt = ens.cfg.dt;
    const double max_probe = *std::max_element(cfg.probes.begin(), cfg.probes.end());
    const std::size_t ring_cells = static_cast<std::size_t>(std::ceil(max_probe / dt)) + 4;

    struct Sample {
        double u;
        double tau;
        std::vector<double> rv;
        double w;
    };
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < ens.under.size(); ++i) {
        if (ens.weight[i] <= 0.0) continue;
        Sample s;
        s.w = ens.weight[i];
        if (ens.over[i] > z) {
            s.tau = 0.0;
            s.u = z + ens.under[i];
            s.rv.assign(cfg.probes.size(), kNaN);  // empty pre-passage path
        } else {
            Rng krng(splitmix64(ens.forward_seed(static_cast<long>(i)) + 0x9F));
            auto scan = scan_forward(ens.model, ens.over[i], z, ens.cfg.horizon_fwd, ens.cfg.dt,
                                     ens.forward_seed(static_cast<long>(i)), ring_cells, 0, krng);
            if (!scan.done) continue;
            s.tau = scan.det.record.time;
            s.u = scan.det.record.undershoot;
            for (double p : cfg.probes) {
                if (p >= s.tau) {
                    s.rv.push_back(kNaN);
                    continue;
                }
                // left limit at tau - p, read from the grid ring
                const long m = static_cast<long>(std::floor((s.tau - p) / dt));
                const double v = m < 1 ? ens.over[i] : scan.ring.at_cell(m);
                s.rv.push_back(std::isnan(v) ? kNaN : z - v);
            }
        }
        samples.push_back(std::move(s));
    }

    if (samples.empty()) return rep;

    std::vector<double> us;
    for (const auto& s : samples) us.push_back(s.u);
    std::sort(us.begin(), us.end());
    const bool continuous_only = us.back() <= 1e-12;
    const int n_bins = continuous_only ? 1 : cfg.undershoot_bins;
    std::vector<double> edges;
    edges.push_back(0.0);
    for (int b = 1; b < n_bins; ++b)
        edges.push_back(us[us.size() * static_cast<std::size_t>(b) / n_bins]);
    edges.push_back(us.back() + 1.0);

    double not_settled = 0.0, oracle_total = 0.0;
    for (int b = 0; b < n_bins; ++b) {
        ReversalReport::Bin bin;
        bin.x_lo = edges[static_cast<std::size_t>(b)];
        bin.x_hi = edges[static_cast<std::size_t>(b) + 1];

        std::vector<const Sample*> members;
        double xsum = 0.0;
        for (const auto& s : samples)
            if (s.u >= bin.x_lo && s.u < bin.x_hi) {
                members.push_back(&s);
                xsum += s.u;
            }
        if (members.empty()) continue;
        bin.x_mean = xsum / static_cast<double>(members.size());
        bin.n_reversed = static_cast<long>(members.size());

        Rng pick(derive_seed(ens.cfg.seed, static_cast<std::uint64_t>(b), 0x0B1B));
        std::vector<double> starts(static_cast<std::size_t>(cfg.oracle_paths));
        for (auto& st : starts) {
            const auto* m = members[pick.below(members.size())];
            st = (m->u == 0.0 && ens.model.has_jumps() &&
                  ens.model.family() != Family::BrownianStandard)
                     ? ens.cfg.zero_start_eps
                     : m->u;
        }
        const long n_cells = static_cast<long>(std::floor(cfg.oracle_horizon / dt + 1e-9));
        auto mk = [&](long i) {
            OracleState st;
            st.z = z;
            st.sigma = std::max(ens.model.sigma(), 1e-12);
            st.dip_rng = Rng(derive_seed(ens.cfg.seed, static_cast<std::uint64_t>(i), 0xD1B));
            st.probes = ProbeRecorder(cfg.probes);
            st.window_start = 0.8 * cfg.oracle_horizon;
            return st;
        };
        std::vector<OracleState> ostates;
        std::vector<double> oweights;
        if (ens.model.family() == Family::BrownianStandard) {
            auto run = run_bessel3_ensemble<OracleState>(
                starts, dt, n_cells, derive_seed(ens.cfg.seed, 77 + b), ens.cfg.workers, mk);
            ostates = std::move(run.states);
            oweights = std::move(run.weights);
        } else {
            auto Um = [&](double v) { return ladder.Uminus(v); };
            SmcOptions smc = ens.cfg.smc;
            smc.workers = ens.cfg.workers;
            auto run = run_conditioned_ensemble<OracleState>(
                ens.model, Um, starts, dt, n_cells, derive_seed(ens.cfg.seed, 77 + b), smc, mk);
            ostates = std::move(run.states);
            oweights = std::move(run.weights);
        }
        for (auto& st : ostates) st.probes.finalize();

        for (std::size_t k = 0; k < ostates.size(); ++k) {
            if (oweights[k] <= 0.0) continue;
            oracle_total += 1.0;
            if (!ostates[k].seen_below || ostates[k].window_min < z) not_settled += 1.0;
        }

        for (std::size_t pi = 0; pi < cfg.probes.size(); ++pi) {
            WeightedSample rev, ora;
            for (const auto* m : members)
                if (!std::isnan(m->rv[pi])) {
                    rev.values.push_back(m->rv[pi]);
                    rev.weights.push_back(m->w);
                }
            for (std::size_t k = 0; k < ostates.size(); ++k) {
                if (oweights[k] <= 0.0) continue;
                const auto& st = ostates[k];
                if (!st.seen_below || st.window_min < z) continue;
                const double wfd = st.no_future_dip_weight(ladder);
                if (wfd <= 0.0) continue;
                if (cfg.probes[pi] < st.last_below && pi < st.probes.vals.size()) {
                    ora.values.push_back(st.probes.vals[pi]);
                    ora.weights.push_back(oweights[k] * wfd);
                }
            }
            if (rev.values.empty() || ora.values.empty()) {
                bin.probe_ks.push_back(-1.0);
                continue;
            }
            const double ks = ks_two_sample(rev, ora).statistic;
            bin.probe_ks.push_back(ks);
            rep.max_ks = std::max(rep.max_ks, ks);
        }
        bin.n_oracle = static_cast<long>(ostates.size());
        rep.bins.push_back(std::move(bin));
    }
    rep.oracle_not_settled_fraction = oracle_total > 0.0 ? not_settled / oracle_total : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// classical time reversal at the first exit (Williams form)
// ---------------------------------------------------------------------------

WilliamsReport williams_check(const LevyModel& model, const LadderData& ladder,
                              const WilliamsConfig& cfg) {
    WilliamsReport rep;
    rep.x = cfg.x;
    rep.probes = cfg.probes;
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    const long n_cells = static_cast<long>(std::floor(cfg.horizon / cfg.dt + 1e-9));

    // Side A: conditioned from the boundary, killed notionally at the last
    // exit below x; conditioned on a continuous last exit for jump models
    WeightedSample dur_a;
    std::vector<WeightedSample> probe_a(cfg.probes.size());
    double not_settled = 0.0, a_total = 0.0, a_cont = 0.0;
    {
        std::vector<double> starts(
            static_cast<std::size_t>(cfg.n_paths),
            model.family() == Family::BrownianStandard ? 0.0 : cfg.zero_start_eps);
        auto mk = [&](long i) {
            OracleState st;
            st.z = cfg.x;
            st.sigma = std::max(model.sigma(), 1e-12);
            st.dip_rng = Rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xA3));
            st.probes = ProbeRecorder(cfg.probes);
            st.window_start = 0.8 * cfg.horizon;
            return st;
        };
        std::vector<OracleState> st;
        std::vector<double> w;
        if (model.family() == Family::BrownianStandard) {
            auto run = run_bessel3_ensemble<OracleState>(starts, cfg.dt, n_cells,
                                                         derive_seed(cfg.seed, 5), workers, mk);
            st = std::move(run.states);
            w = std::move(run.weights);
        } else {
            auto Um = [&](double v) { return ladder.Uminus(v); };
            SmcOptions smc;
            smc.workers = workers;
            auto run = run_conditioned_ensemble<OracleState>(model, Um, starts, cfg.dt, n_cells,
                                                             derive_seed(cfg.seed, 5), smc, mk);
            st = std::move(run.states);
            w = std::move(run.weights);
        }
        for (std::size_t i = 0; i < st.size(); ++i) {
            if (w[i] <= 0.0) continue;
            a_total += 1.0;
            st[i].probes.finalize();
            if (!st[i].seen_below || st[i].window_min < cfg.x) {
                not_settled += 1.0;
                continue;
            }
            if (st[i].last_cross_by_jump) continue;  // continuity conditioning
            a_cont += 1.0;
            const double wi = w[i] * st[i].no_future_dip_weight(ladder);
            if (wi <= 0.0) continue;
            dur_a.values.push_back(st[i].last_below);
            dur_a.weights.push_back(wi);
            for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
                if (cfg.probes[p] < st[i].last_below) {
                    probe_a[p].values.push_back(st[i].probes.vals[p]);
                    probe_a[p].weights.push_back(wi);
                }
            }
        }
    }
    rep.not_settled_fraction = a_total > 0.0 ? not_settled / a_total : 0.0;
    rep.continuity_accept_a =
        a_total - not_settled > 0.0 ? a_cont / (a_total - not_settled) : 0.0;
    rep.n_a = static_cast<long>(dur_a.values.size());

    // Side B: dual model from x, reversed at its first exit from the positive
    // half-line, conditioned on a continuous exit
    const LevyModel dual = negate(model);
    WeightedSample dur_b;
    std::vector<WeightedSample> probe_b(cfg.probes.size());
    double undetected = 0.0, b_total = 0.0, b_cont = 0.0;
    {
        const double max_probe = *std::max_element(cfg.probes.begin(), cfg.probes.end());
        const std::size_t ring_cells =
            static_cast<std::size_t>(std::ceil(max_probe / cfg.dt)) + 4;
        const long chunk = std::max<long>(1, cfg.n_paths / (8 * workers) + 1);
        struct Partial {
            std::vector<double> dur;
            std::vector<std::vector<double>> probes;
            double undetected = 0.0, total = 0.0, cont = 0.0;
        };
        auto partials = parallel_chunks<Partial>(
            cfg.n_paths, chunk, workers, [&](long, long lo, long hi) {
                Partial local;
                local.probes.resize(cfg.probes.size());
                for (long i = lo; i < hi; ++i) {
                    Rng krng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xB1));
                    PassageWindowScan scan(
                        BarrierDetector{0.0, true, dual.sigma(), true, &krng, {}}, ring_cells,
                        cfg.dt, 0);
                    scan.start = cfg.x;
                    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xB0));
                    walk_model(dual, cfg.x, cfg.dt, n_cells, rng, scan);
                    local.total += 1.0;
                    if (!scan.done) {
                        local.undetected += 1.0;
                        continue;
                    }
                    if (scan.det.record.crossed_by_jump) continue;
                    local.cont += 1.0;
                    const double T = scan.det.record.time;
                    // cutoff aligned with the settled window of the other side
                    if (T > 0.8 * cfg.horizon) continue;
                    local.dur.push_back(T);
                    for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
                        const double tp = cfg.probes[p];
                        if (tp >= T) continue;
                        const long m = static_cast<long>(std::floor((T - tp) / cfg.dt));
                        const double v = m < 1 ? cfg.x : scan.ring.at_cell(m);
                        if (!std::isnan(v)) local.probes[p].push_back(v);
                    }
                }
                return local;
            });
        for (const auto& p : partials) {
            dur_b.values.insert(dur_b.values.end(), p.dur.begin(), p.dur.end());
            for (std::size_t k = 0; k < cfg.probes.size(); ++k)
                probe_b[k].values.insert(probe_b[k].values.end(), p.probes[k].begin(),
                                         p.probes[k].end());
            undetected += p.undetected;
            b_total += p.total;
            b_cont += p.cont;
        }
    }
    rep.undetected_fraction = b_total > 0.0 ? undetected / b_total : 0.0;
    rep.continuity_accept_b = b_total - undetected > 0.0 ? b_cont / (b_total - undetected) : 0.0;
    rep.n_b = static_cast<long>(dur_b.values.size());

    if (!dur_a.values.empty() && !dur_b.values.empty()) {
        rep.ks_duration = ks_two_sample(dur_a, dur_b).statistic;
        for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
            if (probe_a[p].values.empty() || probe_b[p].values.empty()) {
                rep.probe_ks.push_back(-1.0);
                continue;
            }
            rep.probe_ks.push_back(ks_two_sample(probe_a[p], probe_b[p]).statistic);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// increment reversal at the last exit (Duquesne form)
// ---------------------------------------------------------------------------

DuquesneReport duquesne_check(const LevyModel& model, const LadderData& ladder,
                              const DuquesneConfig& cfg) {
    DuquesneReport rep;
    rep.x = cfg.x;
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    const long n_cells = static_cast<long>(std::floor(cfg.horizon / cfg.dt + 1e-9));

    // Side A: conditioned from the boundary; for the increment-reversed path
    // the duration is the last exit below x, the terminal value and the
    // running supremum both reduce to the value at the last exit
    WeightedSample dur_a, term_a;
    double not_settled = 0.0, a_total = 0.0;
    {
        std::vector<double> starts(
            static_cast<std::size_t>(cfg.n_paths),
            model.family() == Family::BrownianStandard ? 0.0 : cfg.zero_start_eps);
        auto mk = [&](long i) {
            OracleState st;
            st.z = cfg.x;
            st.sigma = std::max(model.sigma(), 1e-12);
            st.dip_rng = Rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xD2));
            st.probes = ProbeRecorder(std::vector<double>{});
            st.window_start = 0.8 * cfg.horizon;
            return st;
        };
        std::vector<OracleState> st;
        std::vector<double> w;
        if (model.family() == Family::BrownianStandard) {
            auto run = run_bessel3_ensemble<OracleState>(starts, cfg.dt, n_cells,
                                                         derive_seed(cfg.seed, 21), workers, mk);
            st = std::move(run.states);
            w = std::move(run.weights);
        } else {
            auto Um = [&](double v) { return ladder.Uminus(v); };
            SmcOptions smc;
            smc.workers = workers;
            auto run = run_conditioned_ensemble<OracleState>(model, Um, starts, cfg.dt, n_cells,
                                                             derive_seed(cfg.seed, 21), smc, mk);
            st = std::move(run.states);
            w = std::move(run.weights);
        }
        for (std::size_t i = 0; i < st.size(); ++i) {
            if (w[i] <= 0.0) continue;
            a_total += 1.0;
            if (!st[i].seen_below || st[i].window_min < cfg.x) {
                not_settled += 1.0;
                continue;
            }
            const double wi = w[i] * st[i].no_future_dip_weight(ladder);
            if (wi <= 0.0) continue;
            dur_a.values.push_back(st[i].last_below);
            dur_a.weights.push_back(wi);
            term_a.values.push_back(st[i].value_at_last_below);
            term_a.weights.push_back(wi);
        }
    }
    rep.not_settled_fraction = a_total > 0.0 ? not_settled / a_total : 0.0;
    rep.n_a = static_cast<long>(dur_a.values.size());

    // Side B: plain path from 0 until its first passage above x; duration is
    // the last time the running maximum was attained, terminal that maximum
    WeightedSample dur_b, term_b;
    {
        const long chunk = std::max<long>(1, cfg.n_paths / (8 * workers) + 1);
        struct Partial {
            std::vector<double> dur, term;
        };
        auto partials = parallel_chunks<Partial>(
            cfg.n_paths, chunk, workers, [&](long, long lo, long hi) {
                Partial local;
                for (long i = lo; i < hi; ++i) {
                    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xD3));
                    Rng krng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xD4));
                    BarrierDetector det{cfg.x, false, model.sigma(), true, &krng, {}};
                    struct V {
                        BarrierDetector* det;
                        double vmax = 0.0;
                        double g = 0.0;
                        bool done = false;
                        void segment(double t0, double v0, double t1, double v1) {
                            if (done) return;
                            if (det->on_segment(t0, v0, t1, v1)) {
                                done = true;
                                return;
                            }
                            if (v1 > vmax) {
                                vmax = v1;
                                g = t1;
                            }
                        }
                        void jump(double t, double l, double s) {
                            if (done) return;
                            if (l > vmax) {
                                vmax = l;
                                g = t;
                            }
                            if (det->on_jump(t, l, s)) {
                                done = true;
                                return;
                            }
                            if (l + s > vmax) {
                                vmax = l + s;
                                g = t;
                            }
                        }
                        bool cell_end(long, double) { return !done; }
                    } vis{&det, 0.0, 0.0, false};
                    walk_model(model, 0.0, cfg.dt, n_cells, rng, vis);
                    if (!vis.done) continue;
                    if (vis.g > 0.8 * cfg.horizon) continue;  // cutoff aligned with side A
                    local.dur.push_back(vis.g);
                    local.term.push_back(vis.vmax);
                }
                return local;
            });
        for (const auto& p : partials) {
            dur_b.values.insert(dur_b.values.end(), p.dur.begin(), p.dur.end());
            term_b.values.insert(term_b.values.end(), p.term.begin(), p.term.end());
        }
    }
    rep.n_b = static_cast<long>(dur_b.values.size());
    if (rep.n_a > 0 && rep.n_b > 0) {
        rep.ks_duration = ks_two_sample(dur_a, dur_b).statistic;
        rep.ks_terminal = ks_two_sample(term_a, term_b).statistic;
        rep.ks_sup = rep.ks_terminal;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// spatial stationarity: shift at the first passage over x
// ---------------------------------------------------------------------------

SpatialStationarityReport spatial_stationarity_check(const StationaryEnsemble& shifted_source,
                                                     const StationaryEnsemble& fresh, double x,
                                                     const std::vector<double>& probes) {
    SpatialStationarityReport rep;
    rep.x = x;
    rep.probes = probes;
    const double dt = shifted_source.cfg.dt;
    const double min_probe = *std::min_element(probes.begin(), probes.end());
    const double max_probe = std::max(*std::max_element(probes.begin(), probes.end()), 0.0);
    const std::size_t ring_cells =
        min_probe < 0.0 ? static_cast<std::size_t>(std::ceil(-min_probe / dt)) + 4 : 4;
    const long post_cells = static_cast<long>(std::ceil(max_probe / dt)) + 4;

    double covered = 0.0, total = 0.0;
    std::vector<WeightedSample> shifted(probes.size()), base(probes.size());

    for (std::size_t i = 0; i < shifted_source.under.size(); ++i) {
        const double w = shifted_source.weight[i];
        if (w <= 0.0) continue;
        total += 1.0;

        double tau = 0.0;
        bool ok = true;
        PassageWindowScan scan(BarrierDetector{}, 2, dt, 0);
        const bool immediate = shifted_source.over[i] > x;
        if (!immediate) {
            Rng krng(splitmix64(shifted_source.forward_seed(static_cast<long>(i)) + 0x9F));
            scan = scan_forward(shifted_source.model, shifted_source.over[i], x,
                                shifted_source.cfg.horizon_fwd, dt,
                                shifted_source.forward_seed(static_cast<long>(i)), ring_cells,
                                post_cells, krng);
            if (!scan.done) {
                ok = false;
            } else {
                tau = scan.det.record.time;
            }
        }
        if (!ok) continue;

        std::vector<double> vals(probes.size(), kNaN);
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const double t_abs = tau + probes[p];
            double v;
            if (t_abs >= 0.0) {
                if (immediate) {
                    // value along the same forward path
                    const auto rec = record_first_cells(
                        shifted_source.model, shifted_source.over[i],
                        shifted_source.cfg.horizon_fwd, dt,
                        shifted_source.forward_seed(static_cast<long>(i)),
                        static_cast<std::size_t>(std::ceil((t_abs + dt) / dt)) + 2);
                    const long m = static_cast<long>(std::ceil(t_abs / dt - 1e-9));
                    v = m < 1 ? shifted_source.over[i] : rec.at_cell(m);
                } else {
                    v = scan.value_at(t_abs);
                }
            } else {
                v = shifted_source.backward_value(static_cast<long>(i), t_abs);
            }
            if (std::isnan(v)) {
                ok = false;
                break;
            }
            vals[p] = v - x;
        }
        if (!ok) continue;
        covered += 1.0;
        for (std::size_t p = 0; p < probes.size(); ++p) {
            shifted[p].values.push_back(vals[p]);
            shifted[p].weights.push_back(w);
        }
    }

    for (std::size_t i = 0; i < fresh.under.size(); ++i) {
        const double w = fresh.weight[i];
        if (w <= 0.0) continue;
        const std::size_t need =
            static_cast<std::size_t>(std::ceil((max_probe + fresh.cfg.dt) / fresh.cfg.dt)) + 2;
        const auto rec = record_first_cells(fresh.model, fresh.over[i], fresh.cfg.horizon_fwd,
                                            fresh.cfg.dt, fresh.forward_seed(static_cast<long>(i)),
                                            need);
        for (std::size_t p = 0; p < probes.size(); ++p) {
            double v;
            if (probes[p] > 0.0) {
                const long m = static_cast<long>(std::ceil(probes[p] / fresh.cfg.dt - 1e-9));
                v = rec.at_cell(m);
            } else if (probes[p] == 0.0) {
                v = fresh.over[i];
            } else {
                v = fresh.backward_value(static_cast<long>(i), probes[p]);
            }
            if (std::isnan(v)) continue;
            base[p].values.push_back(v);
            base[p].weights.push_back(w);
        }
    }

    rep.coverage_shortfall = total > 0.0 ? 1.0 - covered / total : 1.0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        if (shifted[p].values.empty() || base[p].values.empty()) {
            rep.probe_ks.push_back(-1.0);
            continue;
        }
        rep.probe_ks.push_back(ks_two_sample(shifted[p], base[p]).statistic);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// weak convergence of the shifted deep-start process
// ---------------------------------------------------------------------------

ConvergenceReport convergence_from_minus_infinity(const LevyModel& model,
                                                  const StationaryEnsemble& target,
                                                  const ConvergenceConfig& cfg) {
    ConvergenceReport rep;
    rep.probes = cfg.probes;
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    const double dt = cfg.dt;

    // target-side marginals
    std::vector<WeightedSample> tgt(cfg.probes.size());
    {
        double max_pos = 0.0;
        for (double p : cfg.probes) max_pos = std::max(max_pos, p);
        const std::size_t need =
            static_cast<std::size_t>(std::ceil((max_pos + target.cfg.dt) / target.cfg.dt)) + 2;
        for (std::size_t i = 0; i < target.under.size(); ++i) {
            const double w = target.weight[i];
            if (w <= 0.0) continue;
            const auto rec = record_first_cells(target.model, target.over[i],
                                                target.cfg.horizon_fwd, target.cfg.dt,
                                                target.forward_seed(static_cast<long>(i)), need);
            for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
                const double tp = cfg.probes[p];
                double v;
                if (tp > 0.0) {
                    const long m = static_cast<long>(std::ceil(tp / target.cfg.dt - 1e-9));
                    v = rec.at_cell(m);
                } else if (tp == 0.0) {
                    v = target.over[i];
                } else {
                    v = target.backward_value(static_cast<long>(i), tp);
                }
                if (std::isnan(v)) continue;
                tgt[p].values.push_back(v);
                tgt[p].weights.push_back(w);
            }
        }
    }

    double max_pos_probe = 0.0, min_probe = 0.0;
    for (double p : cfg.probes) {
        max_pos_probe = std::max(max_pos_probe, p);
        min_probe = std::min(min_probe, p);
    }
    const std::size_t ring_cells = static_cast<std::size_t>(std::ceil(-cfg.b / dt)) + 4;
    const long post_cells = static_cast<long>(std::ceil(max_pos_probe / dt)) + 4;
    const long n_cells = static_cast<long>(std::floor(cfg.horizon / dt + 1e-9));

    double prev_probe0 = -1.0;
    for (std::size_t xi = 0; xi < cfg.x_list.size(); ++xi) {
        const double x0 = cfg.x_list[xi];
        ConvergenceReport::PerStart per;
        per.x0 = x0;

        const long chunk = std::max<long>(1, cfg.n_paths / (8 * workers) + 1);
        struct Partial {
            std::vector<std::vector<double>> vals;
            double no_entrance = 0.0, total = 0.0;
        };
        auto partials = parallel_chunks<Partial>(
            cfg.n_paths, chunk, workers, [&](long, long lo, long hi) {
                Partial local;
                local.vals.resize(cfg.probes.size());
                for (long i = lo; i < hi; ++i) {
                    const std::uint64_t pseed = derive_seed(
                        cfg.seed, static_cast<std::uint64_t>(i), 500 + static_cast<std::uint64_t>(xi));
                    Rng krng(splitmix64(pseed + 0x77));
                    PassageWindowScan scan(
                        BarrierDetector{0.0, false, model.sigma(), true, &krng, {}}, ring_cells,
                        dt, post_cells);
                    scan.start = x0;
                    Rng rng(pseed);
                    walk_model(model, x0, dt, n_cells, rng, scan);
                    local.total += 1.0;
                    if (!scan.done) {
                        local.no_entrance += 1.0;
                        continue;
                    }
                    const double That = scan.det.record.time;
                    for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
                        const double tp = cfg.probes[p];
                        if (tp == 0.0) {
                            local.vals[p].push_back(scan.det.record.overshoot);
                            continue;
                        }
                        const double t_abs = That + tp;
                        if (t_abs < 0.0) continue;
                        const double v = scan.value_at(t_abs);
                        if (!std::isnan(v)) local.vals[p].push_back(v);
                    }
                }
                return local;
            });

        std::vector<WeightedSample> got(cfg.probes.size());
        double no_ent = 0.0, total = 0.0;
        for (const auto& p : partials) {
            for (std::size_t k = 0; k < cfg.probes.size(); ++k)
                got[k].values.insert(got[k].values.end(), p.vals[k].begin(), p.vals[k].end());
            no_ent += p.no_entrance;
            total += p.total;
        }
        per.no_entrance_fraction = total > 0.0 ? no_ent / total : 0.0;
        for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
            if (got[p].values.empty() || tgt[p].values.empty()) {
                per.probe_ks.push_back(-1.0);
                continue;
            }
            per.probe_ks.push_back(ks_two_sample(got[p], tgt[p]).statistic);
        }
        if (!per.probe_ks.empty() && per.probe_ks.front() >= 0.0) {
            if (prev_probe0 >= 0.0 && per.probe_ks.front() > prev_probe0 + 0.01)
                rep.nonincreasing_probe0 = false;
            prev_probe0 = per.probe_ks.front();
        }
        rep.starts.push_back(std::move(per));
    }
    return rep;
}

}  // namespace levylab
