#include <doctest.h>

#include <cmath>

#include "levylab/coupling.hpp"
#include "levylab/stationary.hpp"

using namespace levylab;

TEST_CASE("two-sided samples satisfy the type invariants") {
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    const auto lad = closed_form_ladder(kou);
    const auto rho = build_rho(kou, lad);
    StationaryConfig sc;
    sc.n_paths = 10;
    sc.horizon_back = 1.0;
    sc.horizon_fwd = 1.0;
    sc.dt = 1e-3;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        sc.seed = seed;
        const auto p = sample_stationary(kou, lad, rho, sc);
        CHECK(p.invariants_ok());
        CHECK(p.forward.start_value() == doctest::Approx(p.over));
        // negative-time values are strictly negative
        for (double t : {-0.1, -0.5, -0.9}) CHECK(p.value_at(t) < 0.0);
    }
}

TEST_CASE("brownian two-sided samples start at the origin pair") {
    const auto bm = make_brownian_standard();
    const auto lad = closed_form_ladder(bm);
    const auto rho = build_rho(bm, lad);
    StationaryConfig sc;
    sc.n_paths = 4;
    sc.horizon_back = 0.5;
    sc.horizon_fwd = 0.5;
    sc.dt = 1e-3;
    sc.seed = 77;
    const auto p = sample_stationary(bm, lad, rho, sc);
    CHECK(p.under == 0.0);
    CHECK(p.over == 0.0);
    CHECK(p.weight == 1.0);
}

TEST_CASE("forward part of the stationary ensemble carries model increments") {
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    const auto lad = closed_form_ladder(kou);
    const auto rho = build_rho(kou, lad);
    StationaryConfig sc;
    sc.n_paths = 4000;
    sc.horizon_back = 0.2;
    sc.horizon_fwd = 1.5;
    sc.dt = 1e-3;
    sc.seed = 31;
    const auto ens = make_stationary_ensemble(kou, lad, rho, sc, 0.2, 8);

    // increment of the forward part over [0.5, 1.5] vs fresh model increments
    WeightedSample inc, ref;
    for (std::size_t i = 0; i < ens.under.size(); ++i) {
        if (ens.weight[i] <= 0.0) continue;
        const auto path = simulate(kou, ens.over[i], 1.5, 1e-3, ens.forward_seed(static_cast<long>(i)));
        inc.values.push_back(path.value_at(1.5) - path.value_at(0.5));
        inc.weights.push_back(ens.weight[i]);
    }
    Rng rng(8);
    for (int i = 0; i < 4000; ++i) {
        const auto p = simulate(kou, 0.0, 1.0, 1e-3, derive_seed(1234, i));
        ref.values.push_back(p.terminal());
    }
    CHECK(ks_two_sample(inc, ref).statistic < 0.04);
}

TEST_CASE("passage-shift composition is exact pathwise") {
    // shifting at tau(x) and then at the remaining level equals shifting at
    // tau(y) on the same path
    const auto kou = make_kou(1.0, 0.2, 1.0, 0.5, 2.0, 2.0);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto p = simulate(kou, 0.0, 20.0, 1e-3, seed);
        const auto at_y = first_passage_above(p, 1.0, false, seed);
        const auto at_x = first_passage_above(p, 0.4, false, seed);
        if (!at_y.detected || !at_x.detected) continue;
        REQUIRE(at_x.time <= at_y.time);
        // the first passage over 1.0 after tau(0.4) is tau(1.0) itself
        bool found = false;
        const double dt = p.dt();
        const long k0 = static_cast<long>(std::ceil(at_x.time / dt));
        for (long k = k0; k <= static_cast<long>(p.n_cells()); ++k) {
            const double t = k * dt;
            if (p.value_at(t) > 1.0) {
                CHECK(std::abs(t - at_y.time) <= 3.0 * dt + 1e-12);
                found = true;
                break;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("epsilon coupling: offsets live in the window and splice keeps the law") {
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    const auto rho = build_rho(kou, closed_form_ladder(kou));
    CouplingEpsilonConfig cc;
    cc.epsilon = 0.1;
    cc.horizon = 200.0;
    cc.dt = 1e-2;
    cc.n_samples = 400;
    cc.seed = 12;
    const auto rep = coupling_epsilon(kou, rho, cc);
    CHECK(rep.success_fraction > 0.95);
    CHECK(rep.max_gamma <= cc.epsilon + 1e-12);
    for (double g : rep.gamma) CHECK(g >= 0.0);
    CHECK(rep.ks_post_increments < 0.05);
}

TEST_CASE("exact coupling: jumpless chases creep in one leg") {
    const auto bm = make_brownian_standard();
    const auto rho = build_rho(bm, closed_form_ladder(bm));
    CouplingExactConfig cc;
    cc.n_samples = 50;
    cc.dt = 1e-3;
    cc.seed = 4;
    const auto rep = coupling_exact(bm, rho, cc);
    CHECK(rep.cap_exceeded == 0);
    for (int r : rep.rounds) CHECK(r == 1);
}
