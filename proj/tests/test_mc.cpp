#include <doctest.h>

#include <cmath>
#include <map>

#include "levylab/conditioned.hpp"
#include "levylab/estimate_ladder.hpp"
#include "levylab/fluctuation_checks.hpp"
#include "levylab/parallel.hpp"
#include "levylab/path_engine.hpp"
#include "levylab/stats.hpp"

using namespace levylab;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("terminal law of the simulated Brownian path") {
    const auto bm = make_brownian_standard();
    const long n = 100000;
    WeightedSample s;
    s.values.resize(n);
    const int workers = default_workers();
    parallel_chunks<int>(n, n / (4 * workers) + 1, workers, [&](long, long lo, long hi) {
        for (long i = lo; i < hi; ++i) {
            const auto p = simulate(bm, 0.0, 1.0, 1e-3, derive_seed(777, i));
            s.values[static_cast<std::size_t>(i)] = p.terminal();
        }
        return 0;
    });
    CHECK(ks_one_sample(s, normal_cdf).statistic < 0.01);
}

TEST_CASE("jump counts follow the Poisson clock") {
    const auto kou = make_kou(1.0, 0.0, 2.0, 0.5, 2.0, 2.0);
    const double horizon = 1.5;
    const double mean = 2.0 * horizon;
    const long n = 20000;
    std::map<long, long> counts;
    for (long i = 0; i < n; ++i) {
        const auto p = simulate(kou, 0.0, horizon, 5e-3, derive_seed(31, i));
        counts[static_cast<long>(p.jump_ledger().size())]++;
    }
    // chi-square against the Poisson pmf, tail lumped
    double stat = 0.0;
    int dof = -1;
    double tail_expected = n;
    for (long k = 0; k <= 12; ++k) {
        const double pk = std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
        const double expect = n * pk;
        tail_expected -= expect;
        if (expect < 8.0) continue;
        const double got = counts.count(k) ? counts[k] : 0;
        stat += (got - expect) * (got - expect) / expect;
        ++dof;
    }
    double tail_got = 0.0;
    for (const auto& [k, c] : counts)
        if (k > 12) tail_got += c;
    if (tail_expected > 8.0) {
        stat += (tail_got - tail_expected) * (tail_got - tail_expected) / tail_expected;
        ++dof;
    }
    CHECK(chi_square_tail(stat, std::max(dof, 1)) > 0.01);
}

TEST_CASE("first-exit probability matches the reflection principle") {
    // P(T <= 1) from 1 equals 2(1 - Phi(1)) for the standard Brownian path
    const auto bm = make_brownian_standard();
    const long n = 100000;
    const double dt = 1e-4;
    const int workers = default_workers();
    struct Partial {
        long hits = 0;
    };
    auto partials = parallel_chunks<Partial>(n, n / (4 * workers) + 1, workers,
                                             [&](long, long lo, long hi) {
                                                 Partial local;
                                                 for (long i = lo; i < hi; ++i) {
                                                     Rng rng(derive_seed(555, i));
                                                     Rng krng(derive_seed(555, i, 0xB));
                                                     BarrierDetector det{0.0, true, 1.0, true,
                                                                         &krng, {}};
                                                     struct V {
                                                         BarrierDetector* det;
                                                         bool done = false;
                                                         void segment(double a, double b, double c,
                                                                      double d) {
                                                             if (!done &&
                                                                 det->on_segment(a, b, c, d))
                                                                 done = true;
                                                         }
                                                         void jump(double, double, double) {}
                                                         bool cell_end(long, double) {
                                                             return !done;
                                                         }
                                                     } vis{&det, false};
                                                     walk_model(bm, 1.0, dt, 10000, rng, vis);
                                                     if (vis.done) ++local.hits;
                                                 }
                                                 return local;
                                             });
    long hits = 0;
    for (const auto& p : partials) hits += p.hits;
    const double est = static_cast<double>(hits) / n;
    const double expect = 2.0 * (1.0 - normal_cdf(1.0));
    CHECK(std::abs(est - expect) < 0.01);
}

TEST_CASE("grid refinement: bridge-corrected passage estimates are stable") {
    const auto bm = make_brownian_standard();
    auto passage_prob = [&](double dt, std::uint64_t base) {
        const long n = 50000;
        long hits = 0;
        const long cells = static_cast<long>(1.0 / dt);
        for (long i = 0; i < n; ++i) {
            Rng rng(derive_seed(base, i));
            Rng krng(derive_seed(base, i, 0xB));
            BarrierDetector det{0.0, true, 1.0, true, &krng, {}};
            struct V {
                BarrierDetector* det;
                bool done = false;
                void segment(double a, double b, double c, double d) {
                    if (!done && det->on_segment(a, b, c, d)) done = true;
                }
                void jump(double, double, double) {}
                bool cell_end(long, double) { return !done; }
            } vis{&det, false};
            walk_model(bm, 1.0, dt, cells, rng, vis);
            if (vis.done) ++hits;
        }
        return static_cast<double>(hits) / n;
    };
    const double coarse = passage_prob(2e-3, 900);
    const double fine = passage_prob(1e-3, 901);
    // statistical error at n = 5e4 is about 0.0021 per estimate
    CHECK(std::abs(coarse - fine) < 0.008);
    CHECK(std::abs(fine - 2.0 * (1.0 - normal_cdf(1.0))) < 0.008);
}

TEST_CASE("upward overshoot of the two-sided jump model is memoryless") {
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    WeightedSample over;
    for (long i = 0; i < 40000 && over.values.size() < 20000; ++i) {
        Rng rng(derive_seed(212, i));
        Rng krng(derive_seed(212, i, 0xB));
        BarrierDetector det{5.0, false, 1.0, true, &krng, {}};
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
        walk_model(kou, 0.0, 1e-3, 200000, rng, vis);
        if (vis.done && det.record.crossed_by_jump) over.values.push_back(det.record.overshoot);
    }
    REQUIRE(over.values.size() > 5000);
    const auto ks = ks_one_sample(
        over, [](double y) { return y <= 0.0 ? 0.0 : 1.0 - std::exp(-2.0 * y); });
    CHECK(ks.statistic < 0.02);
}

TEST_CASE("exact conditioned sampler reproduces the h-transformed kernel from x = 1") {
    // transition density at t = 1 from 1: (y/x)(phi(y-x) - phi(y+x))
    const long n = 50000;
    std::vector<double> term(n);
    const int workers = default_workers();
    parallel_chunks<int>(n, n / (4 * workers) + 1, workers, [&](long, long lo, long hi) {
        struct T {
            double last = 0.0;
            void segment(double, double, double, double v) { last = v; }
            void jump(double, double, double) {}
        };
        for (long i = lo; i < hi; ++i) {
            T t;
            Rng rng(derive_seed(404, i));
            walk_bessel3(1.0, 1e-3, 1000, rng, t);
            term[static_cast<std::size_t>(i)] = t.last;
        }
        return 0;
    });
    // numeric cdf of the target density
    auto density = [](double y) {
        if (y <= 0.0) return 0.0;
        const double phi_m = std::exp(-0.5 * (y - 1.0) * (y - 1.0)) / std::sqrt(2.0 * M_PI);
        const double phi_p = std::exp(-0.5 * (y + 1.0) * (y + 1.0)) / std::sqrt(2.0 * M_PI);
        return y * (phi_m - phi_p);
    };
    std::vector<double> ygrid, ycdf;
    double acc = 0.0;
    const double h = 1e-3;
    for (double y = 0.0; y < 8.0; y += h) {
        acc += 0.5 * (density(y) + density(y + h)) * h;
        ygrid.push_back(y + h);
        ycdf.push_back(acc);
    }
    for (auto& v : ycdf) v /= acc;
    auto cdf = [&](double y) {
        if (y <= ygrid.front()) return 0.0;
        if (y >= ygrid.back()) return 1.0;
        const auto it = std::lower_bound(ygrid.begin(), ygrid.end(), y);
        return ycdf[static_cast<std::size_t>(it - ygrid.begin())];
    };
    WeightedSample s;
    s.values = term;
    CHECK(ks_one_sample(s, cdf).statistic < 0.015);
}

TEST_CASE("last exit is stable under horizon doubling") {
    const double z = 0.1, H = 300.0, dt = 2e-3;
    const long seeds = 500;
    long settled = 0, stable = 0;
    for (long i = 0; i < seeds; ++i) {
        struct Track {
            double z;
            double last_below = 0.0;
            bool seen = false;
            void segment(double, double v0, double t1, double v1) {
                if (v0 < z || v1 < z) {
                    seen = true;
                    last_below = t1;
                }
            }
            void jump(double, double, double) {}
        };
        Track a{z, 0.0, false}, b{z, 0.0, false};
        Rng r1(derive_seed(606, i));
        walk_bessel3(0.0, dt, static_cast<long>(H / dt), r1, a);
        Rng r2(derive_seed(606, i));
        walk_bessel3(0.0, dt, static_cast<long>(2.0 * H / dt), r2, b);
        if (!a.seen) continue;
        ++settled;
        if (std::abs(a.last_below - b.last_below) < 1e-12) ++stable;
    }
    REQUIRE(settled > 400);
    CHECK(static_cast<double>(stable) / settled >= 0.985);
}

TEST_CASE("calibrated ladder estimation at reduced size") {
    const auto bm = make_brownian_standard();
    EstimateLadderConfig ec;
    ec.n_paths = 20000;
    ec.horizon = 5.0;
    ec.dt = 1e-3;
    ec.occupation_paths = 20000;
    ec.drift_probe_paths = 8000;
    ec.seed = 2027;
    const auto lad = estimate_ladder(bm, ec);
    const double sqrt2 = std::sqrt(2.0);
    for (double x = 0.5; x <= 2.5; x += 0.5)
        CHECK(lad.Uplus(x) / (sqrt2 * x) == doctest::Approx(1.0).epsilon(0.06));
    CHECK(lad.EH == doctest::Approx(1.0 / sqrt2).epsilon(0.06));
    CHECK(lad.prov.scale_q / ec.dt == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("estimated ascending tail of the jump family decays at the jump rate") {
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    EstimateLadderConfig ec;
    ec.n_paths = 20000;
    ec.horizon = 5.0;
    ec.dt = 1e-3;
    ec.occupation_paths = 20000;
    ec.drift_probe_paths = 8000;
    ec.seed = 2028;
    const auto lad = estimate_ladder(kou, ec);
    // log-linear fit of the tail over [0.2, 1.6]
    std::vector<double> xs, ys;
    for (double y = 0.2; y <= 1.6; y += 0.1) {
        xs.push_back(y);
        ys.push_back(std::log(std::max(lad.mu_plus(y), 1e-300)));
    }
    CHECK(linear_fit_r2(xs, ys) > 0.99);
    const double slope = (ys.back() - ys.front()) / (xs.back() - xs.front());
    CHECK(slope == doctest::Approx(-2.0).epsilon(0.08));

    // closed-form cross-check of the whole object
    const auto ref = closed_form_ladder(kou);
    for (double x = 0.5; x <= 2.5; x += 0.5)
        CHECK(lad.Uplus(x) / ref.Uplus(x) == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("duality matrix concentrates on the diagonal as t -> 0") {
    const auto bm = make_brownian_standard();
    const auto lad = closed_form_ladder(bm);
    DualityConfig dc;
    dc.t = 0.01;
    dc.n_total = 40000;
    dc.dt = 1e-3;
    dc.seed = 3;
    dc.count_floor = 10;
    const auto rep = green_duality_check(bm, lad, dc);
    double diag = 0.0, total = 0.0;
    for (int i = 0; i < dc.bins; ++i)
        for (int j = 0; j < dc.bins; ++j) {
            total += rep.A[static_cast<std::size_t>(i) * dc.bins + j];
            if (std::abs(i - j) <= 1) diag += rep.A[static_cast<std::size_t>(i) * dc.bins + j];
        }
    CHECK(diag / total > 0.9);
}
