#include <cmath>

#include "doctest.h"
#include "iscap/scenario.hpp"

using namespace iscap;
using namespace iscap::scenario;

namespace {
ScenarioConfig desk_config() {
    ScenarioConfig cfg;
    cfg.n_tx = 4;
    cfg.n_rx = 8;
    cfg.n_symbols = 8;
    cfg.n_subcarriers = 4;
    cfg.n_slots = 4;
    cfg.n_grid = 24;
    return cfg;
}
}  // namespace

TEST_CASE("steering vector basics") {
    auto v = steering_vector(0.0, 4);
    for (int m = 0; m < 4; ++m) CHECK(std::abs(v(m) - cxd(1, 0)) < 1e-14);

    v = steering_vector(kPi / 2, 4, 0.5);
    for (int m = 0; m < 4; ++m) CHECK(std::abs(v(m) - cxd(m % 2 ? -1 : 1, 0)) < 1e-12);

    v = steering_vector(deg2rad(30.0), 2, 0.5);
    CHECK(std::abs(v(0) - cxd(1, 0)) < 1e-14);
    CHECK(std::abs(v(1) - cxd(0, 1)) < 1e-12);  // sin 30 deg = 0.5 -> e^{j pi/2}
}

TEST_CASE("steering vector properties") {
    for (double deg : {-72.0, -13.5, 4.0, 38.0, 89.0}) {
        auto v = steering_vector(deg2rad(deg), 6);
        for (int m = 0; m < 6; ++m) CHECK(std::abs(std::abs(v(m)) - 1.0) < 1e-12);
        auto vm = steering_vector(-deg2rad(deg), 6);
        CHECK((vm - v.conjugate()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("angular grid") {
    auto g3 = make_angular_grid(3);
    CHECK(g3.angles[0] == doctest::Approx(-kPi / 2));
    CHECK(g3.angles[1] == doctest::Approx(0.0));
    CHECK(g3.angles[2] == doctest::Approx(kPi / 2));

    auto g48 = make_angular_grid(48);
    CHECK(rad2deg(g48.angles[1] - g48.angles[0]) == doctest::Approx(180.0 / 47));
    for (int m = 1; m < 48; ++m) CHECK(g48.angles[m] > g48.angles[m - 1]);

    auto g2 = make_angular_grid(2);
    CHECK(g2.angles[0] == doctest::Approx(-kPi / 2));
    CHECK(g2.angles[1] == doctest::Approx(kPi / 2));

    CHECK_THROWS_AS(make_angular_grid(1), ConfigError);
}

TEST_CASE("slot partition") {
    auto s = slot_partition(256, 4);
    REQUIRE(s.size() == 4);
    for (int q = 0; q < 4; ++q) {
        CHECK(s[q].first == q * 64);
        CHECK(s[q].second == (q + 1) * 64);
    }
    auto single = slot_partition(4, 4);
    for (int q = 0; q < 4; ++q) CHECK(single[q].second - single[q].first == 1);
    auto pairs = slot_partition(8, 4);
    CHECK(pairs[3].first == 6);
    CHECK_THROWS_AS(slot_partition(10, 4), ConfigError);
}

TEST_CASE("schedule partitions every symbol exactly once") {
    auto cfg = desk_config();
    auto grid = make_angular_grid(cfg.n_grid);
    auto sched = make_schedule(cfg, grid, {deg2rad(-45), deg2rad(-15), deg2rad(15), deg2rad(45)},
                               deg2rad(30));
    std::vector<int> owner(cfg.n_symbols, 0);
    for (int l = 0; l < cfg.n_symbols; ++l) {
        const int q = sched.slot_of_symbol(l);
        CHECK(q >= 0);
        CHECK(q < 4);
        owner[l] += 1;
    }
    for (int c : owner) CHECK(c == 1);
}

TEST_CASE("desired beampattern bands") {
    auto cfg = desk_config();
    auto grid = make_angular_grid(cfg.n_grid);
    auto sched = make_schedule(cfg, grid, {deg2rad(-45), deg2rad(-15), deg2rad(15), deg2rad(45)},
                               deg2rad(30));
    auto gains = desired_beampattern(grid, {deg2rad(-45), deg2rad(-15), deg2rad(15), deg2rad(45)},
                                     deg2rad(30), sched);
    // entries are exactly 0 or 1; bands do not overlap
    for (int m = 0; m < grid.size(); ++m) {
        int hits = 0;
        for (int q = 0; q < 4; ++q) {
            CHECK((gains[q][m] == 0.0 || gains[q][m] == 1.0));
            hits += gains[q][m] > 0.5;
        }
        CHECK(hits <= 1);
    }
    // full-width band covers everything
    auto all = desired_beampattern(grid, {0.0, 0.0001, 0.0002, 0.0003}, kPi + 0.01, sched);
    for (int m = 0; m < grid.size(); ++m) CHECK(all[0][m] == 1.0);
    // zero width is nonzero only at exact grid hits
    auto exact = desired_beampattern(grid, {grid.angles[3], 0.1, 0.2, 0.3}, 0.0, sched);
    for (int m = 0; m < grid.size(); ++m) CHECK(exact[0][m] == (m == 3 ? 1.0 : 0.0));

    CHECK_THROWS_AS(desired_beampattern(grid, {0.0}, 1.0, sched), ConfigError);
}

TEST_CASE("channel generation determinism and LoS limit") {
    auto cfg = desk_config();
    cfg.rng_seed = 42;
    UserGeometry geo;
    geo.ir_angles = {deg2rad(-15), deg2rad(15)};
    geo.ir_distances = {40, 50};
    geo.er_angles = {deg2rad(-45)};
    geo.er_distances = {6};

    auto a = generate_channels(cfg, geo);
    auto b = generate_channels(cfg, geo);
    for (int k = 0; k < a.n_ir(); ++k)
        CHECK((a.ir_channels[k] - b.ir_channels[k]).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < a.n_er(); ++i)
        CHECK((a.er_channels[i] - b.er_channels[i]).cwiseAbs().maxCoeff() == 0.0);

    // kappa -> infinity collapses onto the conjugated steering vector
    ScenarioConfig los = cfg;
    los.rician_factor = 1e9;
    UserGeometry close;
    close.ir_angles = {deg2rad(20)};
    close.ir_distances = {1.0};
    close.er_angles = {0.0};
    close.er_distances = {1.0};
    auto ch = generate_channels(los, close);
    const CVec expect = std::sqrt(1e-3) * steering_vector(deg2rad(20), los.n_tx).conjugate();
    for (int n = 0; n < los.n_subcarriers; ++n) {
        CHECK((ch.ir(n, 0) - expect).norm() < 1e-5);
        CHECK(ch.ir(n, 0).squaredNorm() == doctest::Approx(1e-3 * los.n_tx).epsilon(1e-4));
    }

    UserGeometry bad = geo;
    bad.ir_distances[0] = 0.0;
    CHECK_THROWS_AS(generate_channels(cfg, bad), ConfigError);
}

TEST_CASE("channel norm matches path loss on average") {
    // Monte-Carlo oracle: E||h||^2 = n_tx / L_p
    auto cfg = desk_config();
    UserGeometry geo;
    geo.ir_angles = {deg2rad(10)};
    geo.ir_distances = {30};
    geo.er_angles = {0.0};
    geo.er_distances = {5};
    const double lp = path_loss(cfg, 30);
    double acc = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        cfg.rng_seed = 1000 + t;
        auto ch = generate_channels(cfg, geo);
        for (int n = 0; n < cfg.n_subcarriers; ++n) acc += ch.ir(n, 0).squaredNorm();
    }
    acc /= trials * cfg.n_subcarriers;
    CHECK(acc == doctest::Approx(cfg.n_tx / lp).epsilon(0.02));
}

TEST_CASE("config validation") {
    auto cfg = desk_config();
    cfg.n_rx = 2;  // fewer receive than transmit antennas
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = desk_config();
    cfg.n_slots = 3;  // does not divide 8
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = desk_config();
    cfg.tx_power = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
