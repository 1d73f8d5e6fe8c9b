#include <doctest.h>

#include <cmath>

#include "levylab/rng.hpp"
#include "levylab/stats.hpp"

using namespace levylab;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("splittable seeding is a pure function of (base, index)") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(1, 0, 7) != derive_seed(1, 0, 8));
    // growing the replica count never reshuffles earlier streams
    std::vector<std::uint64_t> first;
    for (int i = 0; i < 10; ++i) first.push_back(derive_seed(5, i));
    for (int i = 0; i < 10; ++i) CHECK(derive_seed(5, i) == first[static_cast<std::size_t>(i)]);
}

TEST_CASE("KS basics") {
    WeightedSample a, b;
    for (int i = 0; i < 200; ++i) {
        a.values.push_back(i);
        b.values.push_back(i);
    }
    CHECK(ks_two_sample(a, b).statistic == 0.0);

    WeightedSample c;
    for (int i = 0; i < 200; ++i) c.values.push_back(i + 1e6);
    CHECK(ks_two_sample(a, c).statistic == doctest::Approx(1.0));
    CHECK_THROWS_AS(ks_two_sample(WeightedSample{}, a), EmptySampleError);
}

TEST_CASE("one-sample KS against the normal law at scale") {
    Rng rng(2024);
    WeightedSample s;
    const int n = 100000;
    for (int i = 0; i < n; ++i) s.values.push_back(rng.gaussian());
    const auto r = ks_one_sample(s, normal_cdf);
    CHECK(r.statistic < 0.01);
    CHECK(r.p_value > 1e-4);
}

TEST_CASE("one-sample KS with an atom in the reference law") {
    // mixed law: mass 0.3 at 0, Exp(1) beyond
    auto cdf = [](double x) { return x < 0.0 ? 0.0 : 0.3 + 0.7 * (1.0 - std::exp(-x)); };
    Rng rng(7);
    WeightedSample s;
    for (int i = 0; i < 20000; ++i)
        s.values.push_back(rng.uniform() < 0.3 ? 0.0 : rng.exponential(1.0));
    CHECK(ks_one_sample(s, cdf).statistic < 0.02);
}

TEST_CASE("weighted KS reduces to unweighted for constant weights") {
    Rng rng(3);
    WeightedSample a, b, bw;
    for (int i = 0; i < 3000; ++i) {
        a.values.push_back(rng.gaussian());
        const double v = rng.gaussian();
        b.values.push_back(v);
        bw.values.push_back(v);
        bw.weights.push_back(2.5);
    }
    CHECK(ks_two_sample(a, b).statistic == doctest::Approx(ks_two_sample(a, bw).statistic));
}

TEST_CASE("null calibration of the KS p-value") {
    // under the null the 5%-level rejection rate sits near 5%
    Rng rng(99);
    const int reps = 400, n = 400;
    int rejections = 0;
    for (int r = 0; r < reps; ++r) {
        WeightedSample a, b;
        for (int i = 0; i < n; ++i) {
            a.values.push_back(rng.gaussian());
            b.values.push_back(rng.gaussian());
        }
        if (ks_two_sample(a, b).p_value < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / reps;
    CHECK(rate > 0.02);
    CHECK(rate < 0.09);
}

TEST_CASE("Wasserstein-1") {
    WeightedSample a, b;
    a.values = {0.0};
    b.values = {2.0};
    CHECK(w1_distance(a, b) == doctest::Approx(2.0));

    Rng rng(5);
    WeightedSample u, us;
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.uniform();
        u.values.push_back(v);
        us.values.push_back(rng.uniform() + 0.5);
    }
    CHECK(w1_distance(u, us) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(w1_distance(u, u) == doctest::Approx(0.0));
}

TEST_CASE("distance correlation flags dependence and passes independence") {
    Rng rng(11);
    std::vector<double> x, y_dep, y_ind;
    for (int i = 0; i < 300; ++i) {
        const double v = rng.gaussian();
        x.push_back(v);
        y_dep.push_back(v * v + 0.1 * rng.gaussian());
        y_ind.push_back(rng.gaussian());
    }
    CHECK(distance_correlation_test(x, y_dep, 199, 1).p_value < 0.02);
    CHECK(distance_correlation_test(x, y_ind, 199, 1).p_value > 0.05);
}

TEST_CASE("chi-square tail") {
    CHECK(chi_square_tail(0.0, 4) == doctest::Approx(1.0));
    // median of chi2(2) is 2 ln 2
    CHECK(chi_square_tail(2.0 * std::log(2.0), 2) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(chi_square_tail(100.0, 4) < 1e-15);
}

TEST_CASE("linear fit R^2") {
    std::vector<double> x, y_lin, y_rand;
    Rng rng(13);
    for (int i = 0; i < 50; ++i) {
        x.push_back(i);
        y_lin.push_back(3.0 - 0.7 * i);
        y_rand.push_back(rng.gaussian());
    }
    CHECK(linear_fit_r2(x, y_lin) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(linear_fit_r2(x, y_rand) < 0.4);
}

TEST_CASE("compensated accumulation") {
    KahanSum s;
    for (int i = 0; i < 1000000; ++i) s.add(0.1);
    CHECK(s.value() == doctest::Approx(100000.0).epsilon(1e-12));
    KahanSum big;
    big.add(1e16);
    big.add(1.0);
    big.add(-1e16);
    CHECK(big.value() == doctest::Approx(1.0));
}

TEST_CASE("effective sample size") {
    WeightedSample s;
    s.values = {1.0, 2.0, 3.0, 4.0};
    CHECK(s.effective_size() == doctest::Approx(4.0));
    s.weights = {1.0, 1.0, 0.0, 0.0};
    CHECK(s.effective_size() == doctest::Approx(2.0));
}
