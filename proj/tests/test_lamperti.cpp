#include <doctest.h>

#include <cmath>

#include "levylab/lamperti.hpp"

using namespace levylab;

namespace {

// deterministic two-sided path: backward slope up (xi_s = s for s < 0),
// forward constant at level v
TwoSidedPath make_deterministic(double v_forward, double hb, double hf, double dt) {
    const long nb = static_cast<long>(hb / dt);
    const long nf = static_cast<long>(hf / dt);
    std::vector<double> bg(static_cast<std::size_t>(nb) + 1);
    for (long k = 0; k <= nb; ++k) bg[static_cast<std::size_t>(k)] = k * dt;  // B(s) = s
    std::vector<double> fg(static_cast<std::size_t>(nf) + 1, v_forward);
    TwoSidedPath p;
    p.backward = PathSkeleton(0.0, dt, std::move(bg), {}, 0.0);
    p.forward = PathSkeleton(v_forward, dt, std::move(fg), {}, 0.0);
    p.under = 0.0;
    p.over = v_forward;
    return p;
}

}  // namespace

TEST_CASE("exponential functional of the deterministic ramp") {
    // xi_s = s for s < 0, xi = 0 forward: I(0) = int e^s ds over (-inf, 0) = 1
    const auto p = make_deterministic(0.0, 40.0, 1.0, 1e-3);
    const auto clock = ClockSpec::exponential();
    const auto r = exp_functional(p, 0.0, clock);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.tail_estimate < 1e-10);
    CHECK(r.tail_ok);
    // I(t) = 1 + t on the flat forward part
    CHECK(exp_functional(p, 0.75, clock).value == doctest::Approx(1.75).epsilon(1e-4));
}

TEST_CASE("clock additivity and monotonicity") {
    const auto p = make_deterministic(0.0, 40.0, 2.0, 1e-3);
    const auto clock = ClockSpec::exponential();
    const double i1 = exp_functional(p, 0.5, clock).value;
    const double i2 = exp_functional(p, 1.5, clock).value;
    CHECK(i2 > i1);
    // additivity: I(t2) - I(t1) equals the forward integral over [t1, t2]
    CHECK(i2 - i1 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("time change of the constant path is constant") {
    const auto p = make_deterministic(0.0, 40.0, 2.0, 1e-3);
    const auto clock = ClockSpec::exponential();
    const auto s = time_change(p, clock, {1.2, 1.5, 2.0});
    for (std::size_t k = 0; k < s.t.size(); ++k) {
        if (s.censored[k]) continue;
        CHECK(s.x[k] == doctest::Approx(1.0).epsilon(1e-6));
    }
    // coverage: probes beyond I(horizon_fwd) are censored, not invented
    const auto far = time_change(p, clock, {100.0});
    CHECK(far.censored[0] == 1);
}

TEST_CASE("inverse pair property on a random two-sided path") {
    const auto bm = make_brownian_standard();
    const auto lad = closed_form_ladder(bm);
    const auto rho = build_rho(bm, lad);
    StationaryConfig sc;
    sc.n_paths = 1;
    sc.horizon_back = 4.0;
    sc.horizon_fwd = 4.0;
    sc.dt = 1e-3;
    sc.seed = 5;
    const auto p = sample_stationary(bm, lad, rho, sc);
    const auto clock = ClockSpec::exponential();
    for (double t : {0.3, 0.9}) {
        const double i_t = exp_functional(p, t, clock).value;
        const auto s = time_change(p, clock, {i_t});
        REQUIRE(s.censored[0] == 0);
        // g(xi_{sigma(I(t))}) = g(xi_t) up to one grid step
        const double direct = std::exp(p.value_at(t));
        CHECK(s.x[0] == doctest::Approx(direct).epsilon(0.05));
    }
}

TEST_CASE("positive-start construction: deterministic drift gives linear growth") {
    // sigma = 0, unit drift, exponential clock: X_t = x + t
    const auto m = make_custom_mixture(0.0, 1.0, {});
    const auto s = pssmp_from_positive(m, 0.7, {0.1, 0.5, 1.0, 2.0}, 1e-4, 10.0, 3);
    for (std::size_t k = 0; k < s.t.size(); ++k) {
        REQUIRE(s.censored[k] == 0);
        CHECK(s.x[k] == doctest::Approx(0.7 + s.t[k]).epsilon(1e-3));
    }
}

TEST_CASE("positive-start construction never touches zero and censors on coverage") {
    const auto bm = make_brownian_standard();
    const auto s = pssmp_from_positive(bm, 0.5, {0.2, 1.0, 5.0}, 1e-3, 2.0, 9);
    for (std::size_t k = 0; k < s.t.size(); ++k)
        if (!s.censored[k]) CHECK(s.x[k] > 0.0);
}

TEST_CASE("clock integrability report") {
    CHECK(ClockSpec::exponential(1.0).integrable_near_minus_infinity());
    CHECK(ClockSpec::exponential(2.0).integrable_near_minus_infinity());
}
