#include "levylab/lamperti.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "levylab/parallel.hpp"
#include "levylab/path_engine.hpp"

namespace levylab {

ClockSpec ClockSpec::exponential(double rate) {
    ClockSpec c;
    c.f = [rate](double y) { return std::exp(rate * y); };
    c.g = [](double y) { return std::exp(y); };
    c.f_is_exponential = true;
    c.f_rate = rate;
    return c;
}

bool ClockSpec::integrable_near_minus_infinity() const {
    if (f_is_exponential) return f_rate > 0.0;
    // numeric probe of the left tail
    double acc = 0.0;
    for (double y = -0.5; y > -200.0; y -= 1.0) acc += std::abs(y) * f(y);
    return std::isfinite(acc);
}

namespace {

// trapezoid accumulation of f along skeleton segments
struct ClockIntegrator {
    const std::function<double(double)>* f;
    double upto = std::numeric_limits<double>::infinity();
    double acc = 0.0;
    double last_t = 0.0, last_v = 0.0;

    void segment(double t0, double v0, double t1, double v1) {
        if (t0 >= upto) return;
        double tt1 = t1, vv1 = v1;
        if (t1 > upto) {
            const double w = (upto - t0) / (t1 - t0);
            tt1 = upto;
            vv1 = v0 + w * (v1 - v0);
        }
        acc += 0.5 * ((*f)(v0) + (*f)(vv1)) * (tt1 - t0);
        last_t = tt1;
        last_v = vv1;
    }
    void jump(double, double, double) {}
    bool cell_end(long, double) { return last_t < upto; }
};

}  // namespace

ExpFunctionalResult exp_functional(const TwoSidedPath& path, double t, const ClockSpec& clock,
                                   double reject_ratio) {
    ExpFunctionalResult out;
    const double hb = path.backward.horizon();

    // backward portion: u in [max(0,-t), hb], integrand f(-B(u))
    {
        auto fb = [&](double b) { return clock.f(-b); };
        std::function<double(double)> fwrap = fb;
        ClockIntegrator integ{&fwrap, hb, 0.0, 0.0, 0.0};
        replay(path.backward, integ);
        out.value += integ.acc;
        if (t < 0.0) {
            // remove the part closer to 0 than |t|
            ClockIntegrator head{&fwrap, -t, 0.0, 0.0, 0.0};
            replay(path.backward, head);
            out.value -= head.acc;
        }
    }
    // forward portion
    if (t > 0.0) {
        std::function<double(double)> ff = clock.f;
        ClockIntegrator integ{&ff, std::min(t, path.forward.horizon()), 0.0, 0.0, 0.0};
        replay(path.forward, integ);
        out.value += integ.acc;
    }

    // tail beyond the backward horizon from the realized growth envelope
    {
        const auto& g = path.backward.grid_values();
        const std::size_t n = g.size();
        double tail_min = g.back();
        for (std::size_t k = n - n / 5; k < n; ++k) tail_min = std::min(tail_min, g[k]);
        const double mid = g[n / 2];
        double slope = (g.back() - mid) / (0.5 * hb);
        slope = std::max(slope, 1e-3);
        if (clock.f_is_exponential) {
            out.tail_estimate =
                std::exp(-clock.f_rate * std::max(tail_min, 0.0)) / (clock.f_rate * slope);
        } else {
            double acc = 0.0;
            const double step = 0.1 / slope;
            for (int k = 0; k < 100000; ++k) {
                const double val = clock.f(-(tail_min + slope * (k + 0.5) * step));
                acc += val * step;
                if (val < 1e-16) break;
            }
            out.tail_estimate = acc;
        }
    }
    out.tail_ok = out.tail_estimate <= reject_ratio * std::max(out.value, 1e-300);
    return out;
}

PssmpSample time_change(const TwoSidedPath& path, const ClockSpec& clock,
                        const std::vector<double>& t_grid) {
    // assemble breakpoints (time, value) over the whole line
    struct Collect {
        std::vector<std::pair<double, double>> pts;
        void segment(double t0, double v0, double t1, double v1) {
            if (pts.empty()) pts.push_back({t0, v0});
            pts.push_back({t1, v1});
        }
        void jump(double, double, double) {}
        bool cell_end(long, double) { return true; }
    };
    Collect back, fwd;
    replay(path.backward, back);
    replay(path.forward, fwd);

    std::vector<std::pair<double, double>> pts;
    pts.reserve(back.pts.size() + fwd.pts.size());
    for (auto it = back.pts.rbegin(); it != back.pts.rend(); ++it)
        pts.push_back({-it->first, -it->second});
    for (const auto& p : fwd.pts)
        if (p.first > 0.0 || pts.empty()) pts.push_back(p);

    std::vector<double> cum(pts.size(), 0.0);
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const double seg = 0.5 * (clock.f(pts[k - 1].second) + clock.f(pts[k].second)) *
                           (pts[k].first - pts[k - 1].first);
        cum[k] = cum[k - 1] + std::max(seg, 0.0);
    }

    PssmpSample out;
    out.t = t_grid;
    for (double t : t_grid) {
        if (t <= 0.0 || t > cum.back()) {
            out.x.push_back(0.0);
            out.censored.push_back(1);
            continue;
        }
        auto it = std::lower_bound(cum.begin(), cum.end(), t);
        std::size_t hi = static_cast<std::size_t>(it - cum.begin());
        if (hi == 0) hi = 1;
        const std::size_t lo = hi - 1;
        // locally constant integrand refinement inside the step
        const double need = t - cum[lo];
        const double f0 = std::max(clock.f(pts[lo].second), 1e-300);
        double sigma = pts[lo].first + need / f0;
        sigma = std::min(sigma, pts[hi].first);
        const double w = (sigma - pts[lo].first) /
                         std::max(pts[hi].first - pts[lo].first, 1e-300);
        const double xi = pts[lo].second + w * (pts[hi].second - pts[lo].second);
        out.x.push_back(clock.g(xi));
        out.censored.push_back(0);
    }
    return out;
}

namespace {

// streaming clock inversion along a forward walk
struct ForwardClockProbes {
    const std::function<double(double)>* f;
    const std::function<double(double)>* g;
    std::vector<double> targets;  // sorted clock times
    std::size_t next = 0;
    double clock = 0.0;
    std::vector<double> xvals;
    std::vector<char> censored;

    explicit ForwardClockProbes(const ClockSpec& c, std::vector<double> tg, double clock0 = 0.0)
        : f(&c.f), g(&c.g), targets(std::move(tg)), clock(clock0) {
        xvals.assign(targets.size(), 0.0);
        censored.assign(targets.size(), 1);
    }

    void segment(double t0, double v0, double t1, double v1) {
        const double fa = (*f)(v0), fb = (*f)(v1);
        const double seg = 0.5 * (fa + fb) * (t1 - t0);
        while (next < targets.size() && clock + seg >= targets[next]) {
            const double need = targets[next] - clock;
            const double frac = seg > 0.0 ? std::min(need / std::max(fa, 1e-300) / (t1 - t0), 1.0)
                                          : 1.0;
            const double xi = v0 + frac * (v1 - v0);
            xvals[next] = (*g)(xi);
            censored[next] = 0;
            ++next;
        }
        clock += seg;
    }
    void jump(double, double, double) {}
    bool cell_end(long, double) { return next < targets.size(); }
};

constexpr double kBesselRemSafe = 1e-6;

// exact conditional mean of the remaining clock mass for the standard
// Brownian construction, given the backward part sits at level r:
// integral of (y/r) 2 (r ^ y) e^{-y} dy = 4/r - e^{-r} (2 + 4/r)
double bessel_clock_remainder(double r) {
    r = std::max(r, kBesselRemSafe);
    return 4.0 / r - std::exp(-r) * (2.0 + 4.0 / r);
}

}  // namespace

PssmpSample pssmp_from_positive(const LevyModel& model, double x,
                                const std::vector<double>& t_grid, double dt, double horizon,
                                std::uint64_t seed, const ClockSpec& clock) {
    if (x <= 0.0) throw DomainError("pssmp_from_positive: start must be positive");
    // invert g numerically for the start (exact for the exponential pair)
    double y;
    if (clock.f_is_exponential) {
        y = std::log(x);
    } else {
        double lo = -50.0, hi = 50.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (clock.g(mid) < x ? lo : hi) = mid;
        }
        y = 0.5 * (lo + hi);
    }
    std::vector<double> targets = t_grid;
    std::sort(targets.begin(), targets.end());
    ForwardClockProbes probes(clock, targets);
    Rng rng(seed);
    const long n_cells = static_cast<long>(std::floor(horizon / dt + 1e-9));
    walk_model(model, y, dt, n_cells, rng, probes);

    // map back to the caller's order
    PssmpSample out;
    out.t = t_grid;
    out.x.assign(t_grid.size(), 0.0);
    out.censored.assign(t_grid.size(), 1);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const auto it = std::lower_bound(targets.begin(), targets.end(), t_grid[i]);
        const std::size_t k = static_cast<std::size_t>(it - targets.begin());
        out.x[i] = probes.xvals[k];
        out.censored[i] = probes.censored[k];
    }
    return out;
}

void write_pssmp_csv(const std::vector<PssmpSample>& samples, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw Error("cannot open " + file);
    os << "t,X_t,replica,censored_flag\n";
    for (std::size_t r = 0; r < samples.size(); ++r)
        for (std::size_t k = 0; k < samples[r].t.size(); ++k)
            os << samples[r].t[k] << ',' << samples[r].x[k] << ',' << r << ','
               << int(samples[r].censored[k]) << '\n';
}

ClockMassReport brownian_initial_clock_mass(const ClockMassConfig& cfg) {
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    const long n_cells = static_cast<long>(std::floor(cfg.horizon_back / cfg.dt + 1e-9));
    const long chunk = std::max<long>(1, cfg.n_paths / (8 * workers) + 1);

    struct Partial {
        std::vector<double> vals;
    };
    auto partials = parallel_chunks<Partial>(
        cfg.n_paths, chunk, workers, [&](long, long lo, long hi) {
            Partial local;
            for (long i = lo; i < hi; ++i) {
                Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
                const double s = std::sqrt(cfg.dt);
                double r = 0.0;
                double acc = 0.0;
                for (long k = 0; k < n_cells; ++k) {
                    const double a = r + s * rng.gaussian();
                    const double b = s * rng.gaussian();
                    const double c = s * rng.gaussian();
                    const double r1 = std::sqrt(a * a + b * b + c * c);
                    acc += 0.5 * (std::exp(-r) + std::exp(-r1)) * cfg.dt;
                    r = r1;
                }
                local.vals.push_back(acc + bessel_clock_remainder(r));
            }
            return local;
        });

    std::vector<double> vals;
    for (auto& p : partials) vals.insert(vals.end(), p.vals.begin(), p.vals.end());
    const auto ms = mean_stderr(vals);
    ClockMassReport rep;
    rep.mean = ms.mean;
    rep.stderr_ = ms.stderr_;
    rep.expected = 2.0;
    rep.n = static_cast<long>(vals.size());
    return rep;
}

namespace {

// X values at the requested clock times under the Brownian two-sided
// construction.  The backward pass runs twice with the same seed: first to
// learn the accumulated backward clock mass, then to locate the backward
// clock inversions; the forward pass finishes the remaining probes.
struct BrownianConstructionParams {
    double dt;
    double hb_fine;
    double hb;
    double coarse_factor;
    double horizon_fwd;
    double clock_rate;
};

void brownian_construction_X(const BrownianConstructionParams& P,
                             const std::vector<double>& probes_sorted, std::uint64_t seed,
                             std::vector<double>& xvals, std::vector<char>& censored) {
    xvals.assign(probes_sorted.size(), 0.0);
    censored.assign(probes_sorted.size(), 1);
    const std::uint64_t seed_b = splitmix64(seed + 0xB);
    const std::uint64_t seed_f = splitmix64(seed + 0xF);

    // the backward horizon is cheap to cover: the exact transition allows a
    // coarser step once the fine near-zero span is behind us
    auto backward_pass = [&](auto&& on_cell) {
        Rng rng(seed_b);
        double r = 0.0;
        double u = 0.0;
        while (u < P.hb - 1e-12) {
            const double step = u < P.hb_fine ? P.dt : P.dt * P.coarse_factor;
            const double s = std::sqrt(step);
            const double a = r + s * rng.gaussian();
            const double b = s * rng.gaussian();
            const double c = s * rng.gaussian();
            const double r1 = std::sqrt(a * a + b * b + c * c);
            on_cell(u, r, u + step, r1);
            u += step;
            r = r1;
        }
    };

    // pass 1: total backward clock mass
    double ctot = 0.0;
    backward_pass([&](double u0, double r0, double u1, double r1) {
        ctot += 0.5 * (std::exp(-P.clock_rate * r0) + std::exp(-P.clock_rate * r1)) * (u1 - u0);
    });

    // split probes into backward and forward parts
    std::vector<double> back_targets;  // in backward accumulation order
    std::size_t n_back = 0;
    for (double t : probes_sorted)
        if (t <= ctot) ++n_back;
    for (std::size_t k = n_back; k-- > 0;) back_targets.push_back(ctot - probes_sorted[k]);

    // pass 2 (same seed, identical path): locate the backward inversions
    if (!back_targets.empty()) {
        std::size_t next = 0;
        double acc = 0.0;
        backward_pass([&](double u0, double r0, double u1, double r1) {
            if (next >= back_targets.size()) return;
            const double f0 = std::exp(-P.clock_rate * r0);
            const double f1 = std::exp(-P.clock_rate * r1);
            const double seg = 0.5 * (f0 + f1) * (u1 - u0);
            while (next < back_targets.size() && acc + seg >= back_targets[next]) {
                const double need = back_targets[next] - acc;
                const double frac = std::min(need / std::max(f0, 1e-300) / (u1 - u0), 1.0);
                const double b_at = r0 + frac * (r1 - r0);
                const std::size_t probe_idx = n_back - 1 - next;
                xvals[probe_idx] = std::exp(-b_at);
                censored[probe_idx] = 0;
                ++next;
            }
            acc += seg;
        });
    }

    // forward pass for the remaining probes
    if (n_back < probes_sorted.size()) {
        std::vector<double> fwd_targets(probes_sorted.begin() + static_cast<long>(n_back),
                                        probes_sorted.end());
        ClockSpec clock = ClockSpec::exponential(P.clock_rate);
        ForwardClockProbes fp(clock, fwd_targets, ctot);
        Rng rng(seed_f);
        const long n_cells = static_cast<long>(std::floor(P.horizon_fwd / P.dt + 1e-9));
        LevyModel bm = make_brownian_standard();
        walk_model(bm, 0.0, P.dt, n_cells, rng, fp);
        for (std::size_t k = 0; k < fwd_targets.size(); ++k) {
            xvals[n_back + k] = fp.xvals[k];
            censored[n_back + k] = fp.censored[k];
        }
    }
}

std::vector<std::vector<double>> construction_samples(const LevyModel& model,
                                                      const EntranceConfig& cfg,
                                                      const std::vector<double>& probes,
                                                      std::uint64_t seed, double* censor_frac) {
    if (model.family() != Family::BrownianStandard)
        throw UnsupportedFamilyError(
            "two-sided construction ensembles are exact only for BrownianStandard");
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    std::vector<double> sorted = probes;
    std::sort(sorted.begin(), sorted.end());

    BrownianConstructionParams P{cfg.dt,          cfg.horizon_back_fine, cfg.horizon_back,
                                 cfg.coarse_factor, cfg.horizon_fwd,     cfg.clock_rate};
    const long chunk = std::max<long>(1, cfg.n_paths / (8 * workers) + 1);
    struct Partial {
        std::vector<std::vector<double>> vals;
        double censored = 0.0, total = 0.0;
    };
    auto partials = parallel_chunks<Partial>(
        cfg.n_paths, chunk, workers, [&](long, long lo, long hi) {
            Partial local;
            local.vals.resize(sorted.size());
            std::vector<double> xv;
            std::vector<char> cs;
            for (long i = lo; i < hi; ++i) {
                brownian_construction_X(P, sorted, derive_seed(seed, static_cast<std::uint64_t>(i)),
                                        xv, cs);
                local.total += 1.0;
                for (std::size_t k = 0; k < sorted.size(); ++k) {
                    if (cs[k]) {
                        local.censored += 1.0;
                    } else {
                        local.vals[k].push_back(xv[k]);
                    }
                }
            }
            return local;
        });
    std::vector<std::vector<double>> out(sorted.size());
    double censored = 0.0, total = 0.0;
    for (auto& p : partials) {
        for (std::size_t k = 0; k < sorted.size(); ++k)
            out[k].insert(out[k].end(), p.vals[k].begin(), p.vals[k].end());
        censored += p.censored;
        total += p.total;
    }
    if (censor_frac)
        *censor_frac = total > 0.0 ? censored / (total * static_cast<double>(sorted.size())) : 0.0;
    // map back to the caller's probe order
    std::vector<std::vector<double>> reordered(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), probes[i]);
        reordered[i] = out[static_cast<std::size_t>(it - sorted.begin())];
    }
    return reordered;
}

}  // namespace

EntranceReport entrance_convergence_check(const LevyModel& model, const EntranceConfig& cfg) {
    EntranceReport rep;
    rep.x_list = cfg.x_list;
    rep.t_probes = cfg.t_probes;

    const auto target = construction_samples(model, cfg, cfg.t_probes,
                                             derive_seed(cfg.seed, 0xE0),
                                             &rep.construction_censor_fraction);
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    const ClockSpec clock = ClockSpec::exponential(cfg.clock_rate);

    double prev_first = -1.0;
    for (std::size_t xi = 0; xi < cfg.x_list.size(); ++xi) {
        const double x = cfg.x_list[xi];
        const long chunk = std::max<long>(1, cfg.n_paths / (8 * workers) + 1);
        struct Partial {
            std::vector<std::vector<double>> vals;
        };
        auto partials = parallel_chunks<Partial>(
            cfg.n_paths, chunk, workers, [&](long, long lo, long hi) {
                Partial local;
                local.vals.resize(cfg.t_probes.size());
                for (long i = lo; i < hi; ++i) {
                    const auto s = pssmp_from_positive(
                        model, x, cfg.t_probes, cfg.dt, cfg.horizon_fwd,
                        derive_seed(cfg.seed, static_cast<std::uint64_t>(i),
                                    0xE1 + static_cast<std::uint64_t>(xi)),
                        clock);
                    for (std::size_t k = 0; k < cfg.t_probes.size(); ++k)
                        if (!s.censored[k]) local.vals[k].push_back(s.x[k]);
                }
                return local;
            });
        std::vector<double> ks_row;
        for (std::size_t k = 0; k < cfg.t_probes.size(); ++k) {
            WeightedSample a, b;
            for (auto& p : partials)
                a.values.insert(a.values.end(), p.vals[k].begin(), p.vals[k].end());
            b.values = target[k];
            ks_row.push_back(ks_two_sample(a, b).statistic);
        }
        if (!ks_row.empty()) {
            if (prev_first >= 0.0 && ks_row.front() > prev_first + 0.01)
                rep.decreasing_in_x = false;
            prev_first = ks_row.front();
        }
        rep.ks.push_back(std::move(ks_row));
    }
    return rep;
}

ScalingReport construction_scaling_check(const LevyModel& model, double c,
                                         const std::vector<double>& probes,
                                         const EntranceConfig& cfg) {
    ScalingReport rep;
    rep.c = c;
    rep.probes = probes;
    const double gamma = cfg.clock_rate;

    const auto base =
        construction_samples(model, cfg, probes, derive_seed(cfg.seed, 0xA0), nullptr);
    std::vector<double> scaled_probes;
    for (double t : probes) scaled_probes.push_back(t / std::pow(c, gamma));
    const auto scaled =
        construction_samples(model, cfg, scaled_probes, derive_seed(cfg.seed, 0xA1), nullptr);

    for (std::size_t k = 0; k < probes.size(); ++k) {
        WeightedSample a, b;
        a.values = base[k];
        for (double v : scaled[k]) b.values.push_back(c * v);
        rep.probe_ks.push_back(ks_two_sample(a, b).statistic);
    }
    return rep;
}

ScalingReport pssmp_scaling_check(const LevyModel& model, double x, double c,
                                  const std::vector<double>& probes, long n_paths, double dt,
                                  double horizon, std::uint64_t seed, int workers,
                                  const ClockSpec& clock) {
    ScalingReport rep;
    rep.c = c;
    rep.probes = probes;
    const int w = workers > 0 ? workers : default_workers();
    const double gamma = clock.f_rate;

    std::vector<double> scaled_probes;
    for (double t : probes) scaled_probes.push_back(t / std::pow(c, gamma));

    auto run = [&](double start, const std::vector<double>& tg, std::uint64_t s) {
        const long chunk = std::max<long>(1, n_paths / (8 * w) + 1);
        struct Partial {
            std::vector<std::vector<double>> vals;
        };
        auto partials = parallel_chunks<Partial>(n_paths, chunk, w, [&](long, long lo, long hi) {
            Partial local;
            local.vals.resize(tg.size());
            for (long i = lo; i < hi; ++i) {
                const auto smp = pssmp_from_positive(model, start, tg, dt, horizon,
                                                     derive_seed(s, static_cast<std::uint64_t>(i)),
                                                     clock);
                for (std::size_t k = 0; k < tg.size(); ++k)
                    if (!smp.censored[k]) local.vals[k].push_back(smp.x[k]);
            }
            return local;
        });
        std::vector<std::vector<double>> out(tg.size());
        for (auto& p : partials)
            for (std::size_t k = 0; k < tg.size(); ++k)
                out[k].insert(out[k].end(), p.vals[k].begin(), p.vals[k].end());
        return out;
    };

    const auto side_a = run(x, scaled_probes, derive_seed(seed, 1));    // c X_{t/c^gamma} under P_x
    const auto side_b = run(c * x, probes, derive_seed(seed, 2));       // X_t under P_cx

    for (std::size_t k = 0; k < probes.size(); ++k) {
        WeightedSample a, b;
        for (double v : side_a[k]) a.values.push_back(c * v);
        b.values = side_b[k];
        rep.probe_ks.push_back(ks_two_sample(a, b).statistic);
    }
    return rep;
}

RegenerationReport markov_regeneration_check(const LevyModel& model, double level, double delta,
                                             const EntranceConfig& cfg) {
    if (model.family() != Family::BrownianStandard)
        throw UnsupportedFamilyError("regeneration check requires the Brownian construction");
    if (level <= 1.0) throw DomainError("pick a level above 1 so the passage is forward in time");
    RegenerationReport rep;
    rep.level = level;
    rep.delta = delta;

    const double y_level = std::log(level);
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    const long n_cells = static_cast<long>(std::floor(cfg.horizon_fwd / cfg.dt + 1e-9));
    const long chunk = std::max<long>(1, cfg.n_paths / (8 * workers) + 1);
    const ClockSpec clock = ClockSpec::exponential(cfg.clock_rate);

    struct Partial {
        std::vector<double> after;
    };
    auto partials = parallel_chunks<Partial>(
        cfg.n_paths, chunk, workers, [&](long, long lo, long hi) {
            Partial local;
            for (long i = lo; i < hi; ++i) {
                // forward part only: the passage above log(level) > 0 happens
                // after time 0 in the xi clock
                Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0x4E));
                Rng krng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0x4F));
                BarrierDetector det{y_level, false, model.sigma(), true, &krng, {}};
                struct V {
                    BarrierDetector* det;
                    const ClockSpec* clock;
                    bool passed = false;
                    double clock_after = 0.0;
                    double target;
                    double xval = 0.0;
                    bool got = false;
                    void segment(double t0, double v0, double t1, double v1) {
                        if (got) return;
                        if (!passed) {
                            if (det->on_segment(t0, v0, t1, v1)) {
                                passed = true;
                                // remaining part of the segment contributes
                                const double tc = det->record.time;
                                if (tc < t1) {
                                    const double w = (tc - t0) / (t1 - t0);
                                    const double vc = v0 + w * (v1 - v0);
                                    add(tc, vc, t1, v1);
                                }
                            }
                            return;
                        }
                        add(t0, v0, t1, v1);
                    }
                    void add(double t0, double v0, double t1, double v1) {
                        const double fa = clock->f(v0), fb = clock->f(v1);
                        const double seg = 0.5 * (fa + fb) * (t1 - t0);
                        if (clock_after + seg >= target) {
                            const double need = target - clock_after;
                            const double frac =
                                std::min(need / std::max(fa, 1e-300) / (t1 - t0), 1.0);
                            xval = clock->g(v0 + frac * (v1 - v0));
                            got = true;
                        }
                        clock_after += seg;
                    }
                    void jump(double, double, double) {}
                    bool cell_end(long, double) { return !got; }
                } vis{&det, &clock, false, 0.0, delta, 0.0, false};
                walk_model(model, 0.0, cfg.dt, n_cells, rng, vis);
                if (vis.got) local.after.push_back(vis.xval);
            }
            return local;
        });

    WeightedSample after;
    for (auto& p : partials)
        after.values.insert(after.values.end(), p.after.begin(), p.after.end());
    rep.n = static_cast<long>(after.values.size());
    if (rep.n == 0) return rep;

    // fresh side: the construction from the passage value (continuous passage
    // means the value is exactly the level)
    WeightedSample fresh;
    {
        const long n_fresh = static_cast<long>(after.values.size());
        const long chunk2 = std::max<long>(1, n_fresh / (8 * workers) + 1);
        auto p2 = parallel_chunks<Partial>(n_fresh, chunk2, workers, [&](long, long lo, long hi) {
            Partial local;
            for (long i = lo; i < hi; ++i) {
                const auto s = pssmp_from_positive(
                    model, level, {delta}, cfg.dt, cfg.horizon_fwd,
                    derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0x50), clock);
                if (!s.censored[0]) local.after.push_back(s.x[0]);
            }
            return local;
        });
        for (auto& p : p2)
            fresh.values.insert(fresh.values.end(), p.after.begin(), p.after.end());
    }
    rep.ks = ks_two_sample(after, fresh).statistic;
    return rep;
}

}  // namespace levylab
