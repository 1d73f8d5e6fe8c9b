#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "levylab/levy_model.hpp"
#include "levylab/path_engine.hpp"

using namespace levylab;

TEST_CASE("simulation is bit-reproducible") {
    const auto kou = make_kou(1.0, 0.1, 2.0, 0.5, 2.0, 3.0);
    const auto a = simulate(kou, 0.3, 2.0, 1e-3, 99);
    const auto b = simulate(kou, 0.3, 2.0, 1e-3, 99);
    REQUIRE(a.grid_values().size() == b.grid_values().size());
    for (std::size_t k = 0; k < a.grid_values().size(); ++k)
        CHECK(a.grid_values()[k] == b.grid_values()[k]);
    REQUIRE(a.jump_ledger().size() == b.jump_ledger().size());
    for (std::size_t k = 0; k < a.jump_ledger().size(); ++k) {
        CHECK(a.jump_ledger()[k].time == b.jump_ledger()[k].time);
        CHECK(a.jump_ledger()[k].size == b.jump_ledger()[k].size);
    }
    const auto c = simulate(kou, 0.3, 2.0, 1e-3, 100);
    CHECK(a.terminal() != c.terminal());
}

TEST_CASE("skeleton invariants and reconstruction") {
    const auto kou = make_kou(0.5, -0.2, 3.0, 0.5, 1.0, 1.0);
    const auto p = simulate(kou, 0.0, 1.0, 1e-2, 4);
    CHECK(p.grid_values().size() == static_cast<std::size_t>(std::floor(1.0 / 1e-2)) + 1);
    for (const auto& j : p.jump_ledger()) {
        CHECK(j.time > 0.0);
        CHECK(j.time <= p.horizon());
        // value at the jump time equals left limit + size
        CHECK(p.value_at(j.time) == doctest::Approx(j.left_limit + j.size).epsilon(1e-12));
        CHECK(p.left_limit_at(j.time) == doctest::Approx(j.left_limit).epsilon(1e-12));
    }
    // grid values reproduced by reconstruction
    for (std::size_t k = 0; k < p.grid_values().size(); ++k)
        CHECK(p.value_at(k * p.dt()) == doctest::Approx(p.grid_values()[k]).epsilon(1e-12));
}

TEST_CASE("deterministic line: exit facts") {
    const auto line_down = simulate(make_custom_mixture(0.0, -1.0, {}), 1.0, 2.0, 1e-3, 1);
    for (std::size_t k = 0; k < line_down.grid_values().size(); ++k)
        CHECK(line_down.grid_values()[k] ==
              doctest::Approx(1.0 - k * line_down.dt()).epsilon(1e-9));
    const auto rec = first_exit_nonpositive(line_down, false, 1);
    CHECK(rec.detected);
    CHECK(rec.time == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(rec.crossed_by_jump);
    CHECK(rec.undershoot == 0.0);
    CHECK(rec.overshoot == 0.0);

    const auto line_up = simulate(make_custom_mixture(0.0, 1.0, {}), 0.0, 2.0, 1e-3, 1);
    const auto up = first_passage_above(line_up, 0.5, false, 1);
    CHECK(up.detected);
    CHECK(up.time == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_FALSE(up.crossed_by_jump);
}

TEST_CASE("jump crossing records exact under/overshoot") {
    // drift keeps the path flat at 0.5; a negative jump mixture guarantees a
    // down-crossing eventually
    MixtureJumps mix;
    mix.intensity = 5.0;
    mix.components = {{1.0, 1.2, false}};
    const auto m = make_custom_mixture(0.0, 0.05, mix);
    const auto p = simulate(m, 0.5, 50.0, 1e-3, 21);
    const auto rec = first_exit_nonpositive(p, false, 21);
    REQUIRE(rec.detected);
    if (rec.crossed_by_jump) {
        CHECK(rec.undershoot > 0.0);
        CHECK(rec.overshoot > 0.0);
        // locate the ledger jump at the crossing time
        bool found = false;
        for (const auto& j : p.jump_ledger())
            if (j.time == rec.time) {
                CHECK(j.left_limit == doctest::Approx(rec.undershoot).epsilon(1e-12));
                CHECK(-(j.left_limit + j.size) == doctest::Approx(rec.overshoot).epsilon(1e-12));
                found = true;
            }
        CHECK(found);
    }
}

TEST_CASE("reversal is an involution and preserves the jump multiset") {
    const auto kou = make_kou(1.0, 0.0, 4.0, 0.5, 2.0, 2.0);
    const auto p = simulate(kou, 0.0, 2.0, 1e-2, 8);
    const auto r = reverse_at(p, 2.0);
    CHECK(r.start_value() == doctest::Approx(p.left_limit_at(2.0)).epsilon(1e-12));
    CHECK(r.jump_total_variation() == doctest::Approx(p.jump_total_variation()).epsilon(1e-12));

    std::multiset<double> orig, flipped;
    for (const auto& j : p.jump_ledger()) orig.insert(j.size);
    for (const auto& j : r.jump_ledger()) flipped.insert(-j.size);
    CHECK(orig == flipped);

    const auto rr = reverse_at(r, 2.0);
    // double reversal restores values on the grid away from jump times
    for (std::size_t k = 0; k < p.grid_values().size(); ++k) {
        const double t = k * p.dt();
        CHECK(rr.value_at(t) == doctest::Approx(p.left_limit_at(2.0 - (2.0 - t))).epsilon(1e-9));
    }

    const auto line = simulate(make_custom_mixture(0.0, 1.0, {}), 0.0, 1.0, 1e-3, 2);
    const auto rl = reverse_at(line, 1.0);
    CHECK(rl.start_value() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rl.terminal() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS_AS(reverse_at(line, 2.0), DomainError);
}

TEST_CASE("shift at entrance") {
    const auto line = simulate(make_custom_mixture(0.0, 1.0, {}), -1.0, 3.0, 1e-3, 3);
    const auto s = shift_at_entrance(line, false, 3);
    REQUIRE(s.has_value());
    CHECK(s->entrance_time == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s->value_at(0.0) == doctest::Approx(0.0).epsilon(1e-3));
    CHECK(s->value_at(-0.5) == doctest::Approx(-0.5).epsilon(1e-3));
    CHECK(s->min_time() == doctest::Approx(-s->entrance_time));

    const auto stuck = simulate(make_custom_mixture(0.0, -1.0, {}), -1.0, 2.0, 1e-3, 3);
    CHECK_FALSE(shift_at_entrance(stuck, false, 3).has_value());

    // increments preserved by the shift
    for (double t : {-0.4, 0.2, 0.8}) {
        const double inc = s->value_at(t + 0.1) - s->value_at(t);
        CHECK(inc == doctest::Approx(0.1).epsilon(1e-6));
    }
}

TEST_CASE("last exit below a level with settlement") {
    const auto line = simulate(make_custom_mixture(0.0, 1.0, {}), 0.0, 5.0, 1e-3, 5);
    const auto le = last_exit_below(line, 0.5, false, 5);
    CHECK(le.settled);
    CHECK(le.time == doctest::Approx(0.5).epsilon(1e-6));

    const auto below = simulate(make_custom_mixture(0.0, -0.1, {}), 0.0, 5.0, 1e-3, 5);
    CHECK_FALSE(last_exit_below(below, 0.5, false, 5).settled);
}

TEST_CASE("spectrally negative paths cross levels upward continuously") {
    const auto sn = make_spectrally_negative(1.0, 1.0, 1.0, 2.0);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto p = simulate(sn, 0.0, 10.0, 1e-3, seed);
        const auto rec = first_passage_above(p, 1.0, true, seed);
        if (rec.detected) {
            CHECK_FALSE(rec.crossed_by_jump);
            CHECK(rec.overshoot == 0.0);
        }
    }
}

TEST_CASE("path CSV dump") {
    const auto p = simulate(make_kou(1.0, 0.0, 2.0, 0.5, 2.0, 2.0), 0.0, 0.5, 1e-2, 10);
    write_path_csv(p, "/tmp/levylab_test_path.csv");
    std::ifstream is("/tmp/levylab_test_path.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "time,value,is_jump,jump_size");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == p.grid_values().size() + p.jump_ledger().size());
}
