#pragma once

/// Monostatic echo synthesis under a transmit design, subspace DoA
/// estimation, delay/Doppler recovery via a two-dimensional likelihood
/// grid, and angle-MSE scoring against ground truth.

#include <cstdint>

#include "iscap/metrics.hpp"
#include "iscap/scenario.hpp"

namespace iscap::sensing {

struct TargetSet {
    std::vector<double> angles;      // radians
    std::vector<cxd> amplitudes;     // complex b_k
    std::vector<double> delays;      // seconds, within one symbol
    std::vector<double> dopplers;    // normalized 2 v / c
    std::vector<std::vector<int>> slot_membership;  // targets expected per slot

    int size() const { return static_cast<int>(angles.size()); }
    void validate(const scenario::ScenarioConfig& cfg) const;
};

/// Targets spread uniformly over a span, with amplitudes from a two-way
/// path-loss law and seeded uniform phases.
TargetSet make_uniform_targets(const scenario::ScenarioConfig& cfg, int count, double span_begin,
                               double span_end, double distance, std::uint64_t seed);

struct EchoFrame {
    // received[n][l] is an n_rx vector; transmit[n][l] the realization sent.
    std::vector<std::vector<CVec>> received;
    std::vector<std::vector<CVec>> transmit;
};

/// Simulate one frame of echoes. Information streams must be rank one
/// (run the extraction first); the dedicated stream draws Gaussian vectors
/// with its covariance.
EchoFrame synthesize_echo(const metrics::BeamformingSolution& solution, const TargetSet& targets,
                          const scenario::ScenarioConfig& cfg, std::uint64_t rng_seed);

/// Subspace DoA estimates on one slot: grid angles of the strongest local
/// maxima of the pseudo-spectrum. Throws EstimationError (carrying partial
/// results in the message) when fewer maxima exist than requested.
std::vector<double> music_doa(const EchoFrame& frame, int slot, int expected_targets,
                              const scenario::AngularGrid& grid,
                              const scenario::SlotSchedule& schedule,
                              const scenario::ScenarioConfig& cfg);

/// MUSIC pseudo-spectrum over the grid (exposed for diagnostics/tests).
std::vector<double> music_spectrum(const EchoFrame& frame, int slot,
                                   int expected_targets, const scenario::AngularGrid& grid,
                                   const scenario::SlotSchedule& schedule,
                                   const scenario::ScenarioConfig& cfg);

/// Delay and normalized Doppler of one target at the estimated angle via the
/// peak of the 2-D likelihood grid. Doppler indices above L/2 wrap negative.
std::pair<double, double> estimate_delay_doppler(const EchoFrame& frame,
                                                 const metrics::BeamformingSolution& solution,
                                                 double theta_hat,
                                                 const scenario::ScenarioConfig& cfg);

struct EstimationReport {
    std::vector<double> truth_angles, est_angles;
    std::vector<double> truth_delays, est_delays;
    std::vector<double> truth_dopplers, est_dopplers;
    double angle_mse = 0.0;  // radians^2 over matched pairs
    bool count_mismatch = false;

    std::string to_csv() const;
};

/// Greedy nearest-neighbor matching, then mean squared angle error.
double angle_mse(const std::vector<double>& truth, const std::vector<double>& estimates,
                 bool* mismatch = nullptr);

/// Full pipeline: per-slot DoAs, then delay/Doppler per detected target.
EstimationReport evaluate_estimation(const metrics::BeamformingSolution& solution,
                                     const TargetSet& targets, const scenario::Instance& inst,
                                     std::uint64_t rng_seed);

}  // namespace iscap::sensing
