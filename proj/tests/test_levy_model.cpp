#include <doctest.h>

#include <cmath>

#include "levylab/errors.hpp"
#include "levylab/ladder.hpp"
#include "levylab/levy_model.hpp"

using namespace levylab;

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

TEST_CASE("model construction and the compound-Poisson guard") {
    CHECK_NOTHROW(make_brownian_standard());
    CHECK_NOTHROW(make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0));

    MixtureJumps mix;
    mix.intensity = 1.0;
    mix.components = {{1.0, 1.0, true}};
    CHECK_THROWS_AS(make_custom_mixture(0.0, 0.0, mix), CompoundPoissonError);
    CHECK_NOTHROW(make_custom_mixture(0.0, 0.5, mix));  // drift rescues it

    CHECK_THROWS_AS(make_kou(0.0, 0.0, 1.0, 0.5, 2.0, 2.0), ParamError);
    MixtureJumps bad;
    bad.intensity = 1.0;
    bad.components = {{0.7, -1.0, true}, {0.3, 1.0, false}};
    CHECK_THROWS_AS(make_custom_mixture(1.0, 0.0, bad), ParamError);
}

TEST_CASE("jump tails") {
    const auto bm = make_brownian_standard();
    CHECK(levy_tail(bm, 1.0) == 0.0);
    CHECK_THROWS_AS(levy_tail(bm, 0.0), DomainError);

    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    CHECK(levy_tail(kou, 1.0) == doctest::Approx(0.5 * std::exp(-2.0)).epsilon(1e-14));

    const auto sn = make_spectrally_negative(0.5, 1.0, 1.0, 1.0);
    CHECK(levy_tail(sn, 0.3) == 0.0);
    CHECK(sn.lower_tail(0.3) == doctest::Approx(std::exp(-0.3)).epsilon(1e-14));

    // monotone, vanishing at infinity, over a spread of models
    for (double lam : {0.5, 1.0, 3.0}) {
        const auto m = make_kou(1.0, 0.2, lam, 0.3, 1.5, 2.5);
        double prev = levy_tail(m, 1e-6);
        for (double x = 0.1; x < 20.0; x += 0.1) {
            const double t = levy_tail(m, x);
            CHECK(t <= prev + 1e-15);
            prev = t;
        }
        CHECK(prev < 1e-8);
    }
}

TEST_CASE("negate reflects the jump law and drift") {
    const auto bm = make_brownian_standard();
    const auto nbm = negate(bm);
    CHECK(nbm.family() == Family::BrownianStandard);
    CHECK(nbm.drift() == 0.0);

    const auto kou = make_kou(1.0, 0.3, 1.0, 0.7, 2.0, 3.0);
    const auto dual = negate(kou);
    CHECK(dual.drift() == -0.3);
    CHECK(dual.upper_tail(1.0) == doctest::Approx(kou.lower_tail(1.0)).epsilon(1e-14));
    const auto back = negate(dual);
    CHECK(back.drift() == kou.drift());
    CHECK(back.upper_tail(0.7) == doctest::Approx(kou.upper_tail(0.7)).epsilon(1e-14));

    const auto sn = make_spectrally_negative(0.0, 1.0, 1.0, 2.0);
    const auto sp = negate(sn);
    CHECK(sp.drift() == -1.0);
    CHECK(sp.upper_tail(0.5) > 0.0);
    CHECK(sp.lower_tail(0.5) == 0.0);
    CHECK(sp.family() == Family::Custom);
}

TEST_CASE("mean increment") {
    CHECK(mean_increment(make_brownian_standard()).value == 0.0);
    CHECK(mean_increment(make_brownian_drift(1.0)).value == doctest::Approx(1.0));
    CHECK(mean_increment(make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0)).value ==
          doctest::Approx(0.0).epsilon(1e-14));
    CHECK(mean_increment(make_kou(1.0, 0.1, 2.0, 0.6, 2.0, 4.0)).value ==
          doctest::Approx(0.1 + 2.0 * (0.6 / 2.0 - 0.4 / 4.0)));

    TruncatedSpectralJumps heavy;
    heavy.alpha = 0.8;  // no first moment
    heavy.upward = true;
    const auto m = make_truncated_spectral(0.0, -1.0, heavy);
    CHECK_FALSE(mean_increment(m).finite);
}

TEST_CASE("ladder-mean classification") {
    CHECK(classify_ladder_mean(make_brownian_drift(1.0)) == LadderMeanClass::FiniteMeanLadder);
    CHECK(classify_ladder_mean(make_brownian_drift(0.1)) == LadderMeanClass::FiniteMeanLadder);
    CHECK(classify_ladder_mean(make_brownian_drift(-0.1)) == LadderMeanClass::InfiniteMeanLadder);
    CHECK(classify_ladder_mean(make_brownian_drift(-1.0)) == LadderMeanClass::InfiniteMeanLadder);
    CHECK(classify_ladder_mean(make_brownian_standard()) == LadderMeanClass::FiniteMeanLadder);
    // centered two-sided exponential jumps: the tail-ratio integral converges
    CHECK(classify_ladder_mean(make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0)) ==
          LadderMeanClass::FiniteMeanLadder);
    CHECK(classify_ladder_mean(make_kou(1.0, 0.0, 2.0, 0.5, 1.0, 3.0)) ==
          LadderMeanClass::FiniteMeanLadder);
}

TEST_CASE("closed-form ladder: Brownian") {
    const auto lad = closed_form_ladder(make_brownian_standard());
    CHECK(lad.a_plus == doctest::Approx(1.0 / kSqrt2).epsilon(1e-14));
    CHECK(lad.a_minus == doctest::Approx(1.0 / kSqrt2).epsilon(1e-14));
    CHECK(lad.EH == doctest::Approx(1.0 / kSqrt2).epsilon(1e-14));
    for (double x : {0.1, 0.5, 1.0, 2.5}) {
        CHECK(lad.Uplus(x) == doctest::Approx(kSqrt2 * x).epsilon(1e-14));
        CHECK(lad.Uminus(x) == doctest::Approx(kSqrt2 * x).epsilon(1e-14));
        CHECK(lad.uplus(x) == doctest::Approx(kSqrt2).epsilon(1e-14));
        CHECK(lad.mu_plus(x) == 0.0);
    }
    // oracle: Green density of the killed path is 2 (x ^ y); the two-sided
    // factorization must reproduce it exactly
    for (double x : {0.5, 1.0, 2.0})
        for (double y = 0.2; y <= 3.0; y += 0.2) {
            const double conv = factorized_potential_density(lad, x, y);
            CHECK(conv == doctest::Approx(2.0 * std::min(x, y)).epsilon(1e-10));
        }
    // mass of the boundary measure coincides with the mean ladder height
    CHECK(mass_of_m(make_brownian_standard(), lad) == doctest::Approx(lad.EH).epsilon(1e-12));
}

TEST_CASE("closed-form ladder: Brownian with drift") {
    const double b = 0.7;
    const auto lad = closed_form_ladder(make_brownian_drift(b));
    CHECK(lad.a_plus == doctest::Approx(1.0 / kSqrt2));
    CHECK(lad.kill_minus == doctest::Approx(kSqrt2 * b));
    // U_-(x) = (1 - e^{-2bx}) / (sqrt2 b)
    for (double x : {0.2, 1.0, 3.0})
        CHECK(lad.Uminus(x) ==
              doctest::Approx((1.0 - std::exp(-2.0 * b * x)) / (kSqrt2 * b)).epsilon(1e-12));
    // factorization against the scale-function potential of the killed path
    auto exact = [&](double x, double y) {
        return (1.0 - std::exp(-2.0 * b * std::min(x, y))) *
               std::exp(-2.0 * b * (std::max(x, y) - y)) / b;
    };
    for (double x : {0.5, 1.5})
        for (double y = 0.25; y <= 2.5; y += 0.25) {
            const double conv = factorized_potential_density(lad, x, y);
            CHECK(conv == doctest::Approx(exact(x, y)).epsilon(1e-9));
        }
    CHECK_THROWS_AS(closed_form_ladder(make_brownian_drift(-1.0)), InfiniteMeanLadderError);
}

TEST_CASE("closed-form ladder: symmetric Kou matches the factorization roots") {
    const double sigma = 1.0, lam = 1.0, alpha = 2.0;
    const auto kou = make_kou(sigma, 0.0, lam, 0.5, alpha, alpha);
    const auto lad = closed_form_ladder(kou);

    const double beta = std::sqrt(alpha * alpha + 2.0 * lam / (sigma * sigma));
    const double c = sigma / kSqrt2;
    CHECK(lad.a_plus == doctest::Approx(c).epsilon(1e-12));
    CHECK(lad.EH == doctest::Approx(c * beta / alpha).epsilon(1e-10));
    // ascending jump tail coefficient c (beta - alpha) e^{-alpha y}
    for (double y : {0.1, 0.5, 1.5})
        CHECK(lad.mu_plus(y) ==
              doctest::Approx(c * (beta - alpha) * std::exp(-alpha * y)).epsilon(1e-10));
    // renewal density at the origin equals 1/drift
    CHECK(lad.uplus(0.0) == doctest::Approx(1.0 / lad.a_plus).epsilon(1e-10));

    // Lemma-level consistency: the boundary-measure mass equals EH, computed
    // by an independent quadrature of tail * U_-
    double quad = lad.a_plus;
    const double h = 1e-4;
    for (double x = h / 2; x < 40.0; x += h) quad += kou.upper_tail(x) * lad.Uminus(x) * h;
    CHECK(quad == doctest::Approx(lad.EH).epsilon(1e-6));
    CHECK(mass_of_m(kou, lad) == doctest::Approx(lad.EH).epsilon(1e-10));
}

TEST_CASE("closed-form ladder: asymmetric Kou and positive-mean handling") {
    const auto kou = make_kou(1.0, 0.30, 1.5, 0.4, 2.5, 1.8);
    REQUIRE(mean_increment(kou).value > 0.0);
    const auto lad = closed_form_ladder(kou);
    CHECK(lad.kill_minus > 0.0);          // drifts up: descending ladder defective
    CHECK(lad.EH > 0.0);
    CHECK(lad.monotone_ok());
    CHECK(mass_of_m(kou, lad) == doctest::Approx(lad.EH).epsilon(1e-8));

    const auto down = make_kou(1.0, -0.5, 1.0, 0.3, 2.0, 2.0);
    REQUIRE(mean_increment(down).value < 0.0);
    CHECK_THROWS_AS(closed_form_ladder(down), InfiniteMeanLadderError);
}

TEST_CASE("closed-form ladder: spectrally negative") {
    const auto sn = make_spectrally_negative(0.0, 1.0, 1.0, 2.0);  // mean 1 - 1/2 > 0
    const auto lad = closed_form_ladder(sn);
    CHECK(lad.a_plus == doctest::Approx(1.0));
    CHECK(lad.EH == doctest::Approx(1.0));
    for (double y : {0.1, 1.0}) CHECK(lad.mu_plus(y) == 0.0);  // pure-drift ascending ladder
    CHECK(lad.atom_minus == doctest::Approx(1.0 / 1.0));       // a_plus / drift
    CHECK(mass_of_m(sn, lad) == doctest::Approx(lad.EH).epsilon(1e-12));

    const auto sn2 = make_spectrally_negative(1.0, 1.0, 1.0, 2.0);
    const auto lad2 = closed_form_ladder(sn2);
    CHECK(lad2.a_plus == doctest::Approx(1.0 / kSqrt2));
    CHECK(lad2.a_minus == doctest::Approx(1.0 / kSqrt2).epsilon(1e-12));
    CHECK(lad2.monotone_ok());
}

TEST_CASE("truncated spectral bookkeeping") {
    TruncatedSpectralJumps spec;
    spec.upward = true;
    spec.c = 1.0;
    spec.alpha = 0.5;
    spec.eps = 1e-3;
    const auto m = make_truncated_spectral(0.0, -1.0, spec);
    CHECK(m.jump_rate() == doctest::Approx(std::pow(1e-3, -0.5) / 0.5));
    CHECK(spec.discarded_variance() == doctest::Approx(std::pow(1e-3, 1.5) / 1.5));
    CHECK(levy_tail(m, 2.0) == doctest::Approx(std::pow(2.0, -0.5) / 0.5));
    CHECK_THROWS_AS(closed_form_ladder(m), UnsupportedFamilyError);
}
