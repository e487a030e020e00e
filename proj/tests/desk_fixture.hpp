#pragma once

// Shared small-scale scenario used across the test suites: 4 TX / 8 RX
// antennas, 8 symbols over 4 slots, 4 subcarriers, 24 grid angles, two IRs
// and one ER near the scanned sectors.

#include "iscap/joint_optimizer.hpp"
#include "iscap/scenario.hpp"

namespace desk {

inline iscap::scenario::Instance instance(std::uint64_t seed) {
    using namespace iscap;
    scenario::ScenarioConfig cfg;  // defaults are the desk dimensions
    cfg.rng_seed = seed;
    scenario::UserGeometry geo;
    geo.ir_angles = {deg2rad(-15.0), deg2rad(15.0)};
    geo.ir_distances = {40.0, 50.0};
    geo.er_angles = {deg2rad(-45.0)};
    geo.er_distances = {6.0};
    const std::vector<double> centers = {deg2rad(-45.0), deg2rad(-15.0), deg2rad(15.0),
                                         deg2rad(45.0)};
    return scenario::make_instance(cfg, geo, centers, deg2rad(30.0));
}

inline iscap::optimizer::Requirements req(double rate_bps_hz, double er_uw) {
    return {rate_bps_hz, er_uw * 1e-6};
}

}  // namespace desk
