#include <doctest.h>

#include <cmath>

#include "levylab/conditioned.hpp"
#include "levylab/fluctuation_checks.hpp"
#include "levylab/ladder.hpp"
#include "levylab/rho.hpp"
#include "levylab/stats.hpp"

using namespace levylab;

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

TEST_CASE("rho for continuous-crossing families is the origin atom") {
    const auto bm = make_brownian_standard();
    const auto rho = build_rho(bm, closed_form_ladder(bm));
    CHECK(rho.atom_mass() == doctest::Approx(1.0).epsilon(1e-12));
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto [x, y] = rho.sample(rng);
        CHECK(x == 0.0);
        CHECK(y == 0.0);
    }

    const auto sn = make_spectrally_negative(1.0, 0.5, 1.0, 2.0);
    const auto rho_sn = build_rho(sn, closed_form_ladder(sn));
    CHECK(rho_sn.atom_mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rho mass and marginals for the two-sided jump family") {
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    const auto lad = closed_form_ladder(kou);
    const auto rho = build_rho(kou, lad);
    CHECK(rho.total_mass_error() < 1e-8);
    CHECK(rho.atom_mass() == doctest::Approx(lad.a_plus / lad.EH).epsilon(1e-12));
    CHECK(rho.rho1_cdf(1e9) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rho.rho2_cdf(1e9) == doctest::Approx(1.0).epsilon(1e-6));

    // overshoot marginal density equals the ascending jump tail over EH
    for (double y : {0.1, 0.7, 2.0})
        CHECK(rho.rho2_density(y) == doctest::Approx(lad.mu_plus(y) / lad.EH).epsilon(1e-12));

    // conditional overshoot given a positive undershoot is memoryless
    Rng rng(3);
    WeightedSample over;
    for (int i = 0; i < 40000; ++i) {
        const auto [x, y] = rho.sample(rng);
        if (x > 0.0) over.values.push_back(y);
    }
    const auto ks = ks_one_sample(over, [](double y) {
        return y <= 0.0 ? 0.0 : 1.0 - std::exp(-2.0 * y);
    });
    CHECK(ks.statistic < 0.017);
}

TEST_CASE("rho is invariant under the normalization gauge") {
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    const auto lad = closed_form_ladder(kou);
    const auto rho = build_rho(kou, lad);

    // rescale the two sides in opposite directions and recompute
    for (double k : {0.5, 2.0, 7.0}) {
        LadderData scaled = lad;
        scaled.a_plus = lad.a_plus * k;
        scaled.a_minus = lad.a_minus / k;
        scaled.EH = lad.EH * k;
        auto scale_exp = [](const ExpSumFn& f, double c) {
            ExpSumFn g = f;
            g.lin *= c;
            g.cst *= c;
            for (auto& [coef, rate] : g.exps) coef *= c;
            return g;
        };
        scaled.U_minus_exact = scale_exp(*lad.U_minus_exact, k);
        scaled.u_minus_exact = scale_exp(*lad.u_minus_exact, k);
        scaled.U_plus_exact = scale_exp(*lad.U_plus_exact, 1.0 / k);
        scaled.u_plus_exact = scale_exp(*lad.u_plus_exact, 1.0 / k);
        scaled.mu_plus_exact = scale_exp(*lad.mu_plus_exact, k);
        const auto rho2 = build_rho(kou, scaled);
        CHECK(rho2.atom_mass() == doctest::Approx(rho.atom_mass()).epsilon(1e-10));
        for (double x : {0.2, 0.8, 1.7}) {
            CHECK(rho2.rho1_density(x) == doctest::Approx(rho.rho1_density(x)).epsilon(1e-8));
            CHECK(rho2.rho2_density(x) == doctest::Approx(rho.rho2_density(x)).epsilon(1e-8));
            CHECK(rho2.rho1_cdf(x) == doctest::Approx(rho.rho1_cdf(x)).epsilon(1e-8));
        }
    }
}

TEST_CASE("descending renewal function is subadditive on a grid") {
    for (const auto& m : {make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0), make_brownian_drift(0.5)}) {
        const auto lad = closed_form_ladder(m);
        for (double x = 0.2; x <= 3.0; x += 0.4)
            for (double y = 0.2; y <= 3.0; y += 0.4)
                CHECK(lad.Uminus(x + y) <= lad.Uminus(x) + lad.Uminus(y) + 1e-10);
    }
}

TEST_CASE("ladder JSON round trip") {
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    auto lad = closed_form_ladder(kou);
    lad.prov.seed = 42;
    lad.prov.n_paths = 1234;
    const auto text = ladder_to_json(lad);
    const auto back = ladder_from_json(text);
    CHECK(back.a_plus == doctest::Approx(lad.a_plus).epsilon(1e-15));
    CHECK(back.EH == doctest::Approx(lad.EH).epsilon(1e-15));
    CHECK(back.prov.seed == 42);
    for (double x : {0.3, 1.1, 2.9})
        CHECK(back.U_minus(x) == doctest::Approx(lad.U_minus(x)).epsilon(1e-12));
}

TEST_CASE("conditioned ensemble keeps paths positive and conserves mass") {
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    const auto lad = closed_form_ladder(kou);
    ConditionedOptions opts;
    opts.smc.allow_resample = false;  // plain importance sampling
    const auto ens = sample_conditioned(kou, lad, 1.0, 1.0, 1e-3, 2000, 17, opts);
    REQUIRE(!ens.paths.empty());
    for (const auto& p : ens.paths)
        for (double v : p.grid_values()) CHECK(v > 0.0);
    // h-transform martingale: total weighted mass stays near 1
    CHECK(ens.mass == doctest::Approx(1.0).epsilon(0.1));
    CHECK(ens.ess > 100.0);
}

TEST_CASE("conditioned Brownian ensemble from the boundary matches the entrance law") {
    // marginal at t = 1 from start 0: density sqrt(2/pi) y^2 exp(-y^2/2)
    const auto bm = make_brownian_standard();
    const auto lad = closed_form_ladder(bm);
    const auto ens = sample_conditioned(bm, lad, 0.0, 1.0, 1e-3, 20000, 23);
    WeightedSample s;
    for (const auto& p : ens.paths) s.values.push_back(p.terminal());
    auto cdf = [](double y) {
        if (y <= 0.0) return 0.0;
        return std::erf(y / kSqrt2) - std::sqrt(2.0 / M_PI) * y * std::exp(-0.5 * y * y);
    };
    CHECK(ks_one_sample(s, cdf).statistic < 0.02);
}

TEST_CASE("continuous crossing probability: jumpless means creeping is certain") {
    const auto bm = make_brownian_standard();
    const auto lad = closed_form_ladder(bm);
    CrossingProbConfig cc;
    cc.x = 0.7;
    cc.n_paths = 2000;
    cc.horizon = 50.0;
    cc.seed = 5;
    const auto rep = continuous_crossing_prob(bm, lad, cc);
    CHECK(rep.estimate == doctest::Approx(1.0));
    CHECK(rep.analytic == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.limit == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectrally one-sided models have degenerate overshoot laws") {
    const auto sn = make_spectrally_negative(1.0, 0.5, 1.0, 2.0);
    const auto rho = build_rho(sn, closed_form_ladder(sn));
    Rng rng(9);
    for (int i = 0; i < 20; ++i) {
        const auto [x, y] = rho.sample(rng);
        CHECK(x == 0.0);
        CHECK(y == 0.0);
    }
}
