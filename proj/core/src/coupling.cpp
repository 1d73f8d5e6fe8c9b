#include "levylab/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "levylab/parallel.hpp"
#include "levylab/path_engine.hpp"
#include "levylab/stats.hpp"

namespace levylab {

namespace {

long poisson_knuth(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    const double L = std::exp(-mean);
    long k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.uniform();
    } while (p > L);
    return k - 1;
}

// one grid increment of the model (exact in law at grid resolution)
double grid_increment(const LevyModel& m, double dt, Rng& rng) {
    double inc = m.drift() * dt;
    if (m.sigma() > 0.0) inc += m.sigma() * std::sqrt(dt) * rng.gaussian();
    const double lam = m.jump_rate();
    if (lam > 0.0) {
        const long nj = poisson_knuth(rng, lam * dt);
        for (long j = 0; j < nj; ++j) inc += m.sample_jump(rng);
    }
    return inc;
}

}  // namespace

CouplingEpsilonReport coupling_epsilon(const LevyModel& model, const RhoLaw& rho,
                                       const CouplingEpsilonConfig& cfg) {
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    const long n_cells = static_cast<long>(std::floor(cfg.horizon / cfg.dt + 1e-9));
    const long chunk = std::max<long>(1, cfg.n_samples / (4 * workers) + 1);

    struct Partial {
        std::vector<double> tau, gamma, post_inc;
        double coupled = 0.0, total = 0.0;
    };
    auto partials = parallel_chunks<Partial>(
        cfg.n_samples, chunk, workers, [&](long, long lo, long hi) {
            Partial local;
            for (long i = lo; i < hi; ++i) {
                Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xC4));
                Rng yrng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xC5));
                double xi1 = 0.0;                    // fresh path
                double xi2 = rho.sample(yrng).second;  // start from the stationary overshoot law
                local.total += 1.0;
                bool hit = false;
                double tau = 0.0, gamma = 0.0;
                for (long k = 1; k <= n_cells; ++k) {
                    xi1 += grid_increment(model, cfg.dt, rng);
                    xi2 += grid_increment(model, cfg.dt, rng);
                    const double d = xi2 - xi1;
                    if (d >= 0.0 && d <= cfg.epsilon) {
                        hit = true;
                        tau = cfg.dt * static_cast<double>(k);
                        gamma = d;
                        break;
                    }
                }
                if (!hit) continue;
                local.coupled += 1.0;
                local.tau.push_back(tau);
                local.gamma.push_back(gamma);
                // materialize xi' = xi'' - gamma past tau and record its
                // unit-lag increments
                double prev = xi2 - gamma;
                const long post_cells = static_cast<long>(cfg.post_window / cfg.dt);
                const long lag = std::max<long>(1, static_cast<long>(1.0 / cfg.dt));
                double at_lag_start = prev;
                for (long k = 1; k <= post_cells; ++k) {
                    xi2 += grid_increment(model, cfg.dt, rng);
                    if (k % lag == 0) {
                        const double cur = xi2 - gamma;
                        local.post_inc.push_back(cur - at_lag_start);
                        at_lag_start = cur;
                    }
                }
            }
            return local;
        });

    CouplingEpsilonReport rep;
    WeightedSample post, ref;
    for (const auto& p : partials) {
        rep.tau.insert(rep.tau.end(), p.tau.begin(), p.tau.end());
        rep.gamma.insert(rep.gamma.end(), p.gamma.begin(), p.gamma.end());
        post.values.insert(post.values.end(), p.post_inc.begin(), p.post_inc.end());
        rep.coupled += static_cast<long>(p.coupled);
        rep.n += static_cast<long>(p.total);
    }
    rep.success_fraction = rep.n > 0 ? static_cast<double>(rep.coupled) / rep.n : 0.0;
    for (double g : rep.gamma) rep.max_gamma = std::max(rep.max_gamma, g);

    // reference sample of unit-lag increments
    {
        Rng rng(derive_seed(cfg.seed, 0, 0xC6));
        const std::size_t m = std::max<std::size_t>(post.values.size(), 1000);
        const long lag = std::max<long>(1, static_cast<long>(1.0 / cfg.dt));
        for (std::size_t i = 0; i < m; ++i) {
            double v = 0.0;
            for (long k = 0; k < lag; ++k) v += grid_increment(model, cfg.dt, rng);
            ref.values.push_back(v);
        }
    }
    rep.ks_post_increments =
        post.values.empty() ? 0.0 : ks_two_sample(post, ref).statistic;
    return rep;
}

CouplingExactReport coupling_exact(const LevyModel& model, const RhoLaw& rho,
                                   const CouplingExactConfig& cfg) {
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    const long chunk = std::max<long>(1, cfg.n_samples / (4 * workers) + 1);
    const long leg_cells = static_cast<long>(std::floor(cfg.leg_horizon / cfg.dt + 1e-9));

    struct Partial {
        std::vector<int> rounds;
        std::vector<double> tau1, tau2;
        long capped = 0;
    };
    auto partials = parallel_chunks<Partial>(
        cfg.n_samples, chunk, workers, [&](long, long lo, long hi) {
            Partial local;
            for (long i = lo; i < hi; ++i) {
                Rng yrng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xCE));
                const double y = rho.sample(yrng).second;

                double v1 = 0.0, v2 = y;      // chaser values
                double t1 = 0.0, t2 = 0.0;    // elapsed times
                double target = v2;           // first leg: path 1 chases level y
                bool chasing_first = true;
                int rounds = 0;
                bool coupled = false;

                // degenerate start: both at the same level
                if (std::abs(v1 - target) <= cfg.tol) coupled = true;

                while (!coupled && rounds < cfg.round_cap) {
                    ++rounds;
                    double& v = chasing_first ? v1 : v2;
                    double& tt = chasing_first ? t1 : t2;
                    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i),
                                        0x100 + static_cast<std::uint64_t>(rounds)));
                    Rng krng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i),
                                         0x200 + static_cast<std::uint64_t>(rounds)));
                    BarrierDetector det{target, false, model.sigma(), true, &krng, {}};
                    struct V {
                        BarrierDetector* det;
                        bool done = false;
                        void segment(double a, double b, double c, double d) {
                            if (!done && det->on_segment(a, b, c, d)) done = true;
                        }
                        void jump(double t, double l, double s) {
                            if (!done && det->on_jump(t, l, s)) done = true;
                        }
                        bool cell_end(long, double) { return !done; }
                    } vis{&det, false};
                    walk_model(model, v, cfg.dt, leg_cells, rng, vis);
                    if (!vis.done) break;  // leg horizon exhausted
                    tt += det.record.time;
                    const double reached = target + det.record.overshoot;
                    if (det.record.overshoot <= cfg.tol) {
                        v = target;  // crept onto the level
                        coupled = true;
                    } else {
                        v = reached;
                        target = reached;
                        chasing_first = !chasing_first;
                    }
                }
                if (!coupled) {
                    ++local.capped;
                    continue;
                }
                local.rounds.push_back(std::max(rounds, 1));
                local.tau1.push_back(t1);
                local.tau2.push_back(t2);
            }
            return local;
        });

    CouplingExactReport rep;
    for (const auto& p : partials) {
        rep.rounds.insert(rep.rounds.end(), p.rounds.begin(), p.rounds.end());
        rep.tau1.insert(rep.tau1.end(), p.tau1.begin(), p.tau1.end());
        rep.tau2.insert(rep.tau2.end(), p.tau2.begin(), p.tau2.end());
        rep.cap_exceeded += p.capped;
    }
    rep.n = static_cast<long>(rep.rounds.size()) + rep.cap_exceeded;
    if (rep.rounds.empty()) return rep;

    double mean = 0.0;
    int max_r = 1;
    for (int r : rep.rounds) {
        mean += r;
        max_r = std::max(max_r, r);
    }
    rep.mean_rounds = mean / static_cast<double>(rep.rounds.size());

    // log-survival linearity of the round counts (geometric tail)
    std::vector<double> xs, ys;
    const double n_tot = static_cast<double>(rep.rounds.size());
    for (int r = 1; r <= max_r; ++r) {
        double surv = 0.0;
        for (int v : rep.rounds)
            if (v >= r) surv += 1.0;
        if (surv < 5.0) break;
        xs.push_back(static_cast<double>(r));
        ys.push_back(std::log(surv / n_tot));
    }
    rep.r2_log_survival = xs.size() >= 3 ? linear_fit_r2(xs, ys) : 1.0;
    return rep;
}

}  // namespace levylab
