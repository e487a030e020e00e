#pragma once

/// Physical-world construction: array steering, slot schedules, desired
/// scan beampatterns, and Rician downlink channels with distance path loss.

#include <cstdint>

#include "iscap/types.hpp"

namespace iscap::scenario {

/// All dimensional and physical parameters of one experiment instance.
/// Internal units are linear: watts, hertz, seconds, radians.
struct ScenarioConfig {
    int n_tx = 4;              // transmit antennas
    int n_rx = 8;              // receive antennas (>= n_tx)
    int n_symbols = 8;         // OFDM symbols per frame
    int n_subcarriers = 4;     // subcarriers per symbol
    int n_cp = 4;              // cyclic-prefix samples
    int n_slots = 4;           // scan slots (divides n_symbols)
    int n_grid = 24;           // angular grid size
    double carrier_freq = 28e9;
    double subcarrier_spacing = 120e3;
    double symbol_duration = 8.333e-6;
    double spacing_ratio = 0.5;           // antenna spacing over wavelength
    double tx_power = 1.0;                // watts
    double noise_power_comm = 1e-10;      // receiver noise at IRs, watts
    double noise_power_sense = 1e-10;     // receiver noise at the sensing array, watts
    double rician_factor = 20.0;
    double pathloss_ref_db = 30.0;        // loss at reference distance, dB
    double pathloss_ref_dist = 1.0;       // meters
    double pathloss_exponent = 3.0;
    double rate_requirement = 0.0;        // bps/Hz
    double power_requirement = 0.0;       // watts
    std::uint64_t rng_seed = 0;

    double bandwidth() const { return n_subcarriers * subcarrier_spacing; }
    void validate() const;  // throws ConfigError on violated invariants
};

/// Angular placement of information and energy receivers.
struct UserGeometry {
    std::vector<double> ir_angles;     // radians
    std::vector<double> ir_distances;  // meters
    std::vector<double> er_angles;
    std::vector<double> er_distances;

    int n_ir() const { return static_cast<int>(ir_angles.size()); }
    int n_er() const { return static_cast<int>(er_angles.size()); }
    void validate() const;
};

/// Strictly increasing angles spanning [-pi/2, pi/2].
struct AngularGrid {
    std::vector<double> angles;
    int size() const { return static_cast<int>(angles.size()); }
};

/// Partition of the symbol index range into equal contiguous slots, plus
/// the per-slot interest masks over the angular grid.
struct SlotSchedule {
    std::vector<std::pair<int, int>> slot_symbols;  // [begin, end) per slot
    std::vector<std::vector<bool>> interest_masks;  // [slot][grid index]

    int n_slots() const { return static_cast<int>(slot_symbols.size()); }
    int slot_of_symbol(int l) const;
    int symbols_per_slot() const { return slot_symbols.empty() ? 0 : slot_symbols[0].second - slot_symbols[0].first; }
};

/// Per-subcarrier complex channel vectors, one per user.
struct ChannelSet {
    // ir_channels[k] is n_subcarriers x n_tx; row n is h_{n,k}^T.
    std::vector<CMat> ir_channels;
    std::vector<CMat> er_channels;

    int n_ir() const { return static_cast<int>(ir_channels.size()); }
    int n_er() const { return static_cast<int>(er_channels.size()); }
    CVec ir(int n, int k) const { return ir_channels[k].row(n).transpose(); }
    CVec er(int n, int i) const { return er_channels[i].row(n).transpose(); }
};

/// ULA steering vector: entry m is exp(j*2*pi*spacing_ratio*m*sin(theta)).
CVec steering_vector(double theta, int count, double spacing_ratio = 0.5);

/// m uniformly spaced angles over [-pi/2, pi/2], both endpoints included.
AngularGrid make_angular_grid(int m);

/// Split symbols {0..l-1} into q equal contiguous blocks.
std::vector<std::pair<int, int>> slot_partition(int l, int q);

/// Rectangular desired gains: entry (q, m) is 1 iff |theta_m - center_q| <= width/2.
/// Band edges count as inside.
std::vector<std::vector<double>> desired_beampattern(const AngularGrid& grid,
                                                     const std::vector<double>& centers,
                                                     double width,
                                                     const SlotSchedule& schedule);

/// Build a full schedule (partition + interest masks from the rectangular bands).
SlotSchedule make_schedule(const ScenarioConfig& cfg, const AngularGrid& grid,
                           const std::vector<double>& centers, double width);

/// Rician fading with distance path loss, deterministic in cfg.rng_seed.
/// LoS component is the conjugated transmit steering vector at the user angle,
/// scattering is i.i.d. CSCG per subcarrier.
ChannelSet generate_channels(const ScenarioConfig& cfg, const UserGeometry& geometry);

/// Linear path loss K_ref * (D / D_ref)^eta.
double path_loss(const ScenarioConfig& cfg, double distance);

/// One fully constructed experiment instance.
struct Instance {
    ScenarioConfig cfg;
    UserGeometry geometry;
    AngularGrid grid;
    SlotSchedule schedule;
    std::vector<std::vector<double>> desired;  // [slot][grid index]
    ChannelSet channels;
};

/// Build grid, schedule, desired pattern, and channels for a configuration.
Instance make_instance(const ScenarioConfig& cfg, const UserGeometry& geometry,
                       const std::vector<double>& scan_centers, double scan_width);

}  // namespace iscap::scenario
