#pragma once

/// Performance functionals evaluated on a candidate beamforming design:
/// beampattern gain, matching error, per-user SINR/rate, harvested power,
/// and the per-symbol power-budget residual.

#include "iscap/scenario.hpp"
#include "iscap/types.hpp"

namespace iscap::metrics {

/// Indexed family of transmit covariance matrices plus the pattern scale.
/// Stream 0 is the dedicated sensing/energy covariance; streams 1..K_IR are
/// the information beams.
struct BeamformingSolution {
    // covariances[n][l][k], each n_tx x n_tx Hermitian PSD
    std::vector<std::vector<std::vector<CMat>>> covariances;
    double zeta = 0.0;

    int n_subcarriers() const { return static_cast<int>(covariances.size()); }
    int n_symbols() const { return covariances.empty() ? 0 : static_cast<int>(covariances[0].size()); }
    int n_streams() const {
        return n_symbols() == 0 ? 0 : static_cast<int>(covariances[0][0].size());
    }
    const CMat& w(int n, int l, int k) const { return covariances[n][l][k]; }
    CMat& w(int n, int l, int k) { return covariances[n][l][k]; }

    static BeamformingSolution zeros(int n_subcarriers, int n_symbols, int n_streams, int n_tx);

    /// Symmetrize every covariance in place (solver round-off repair).
    void hermitize();

    /// Validation per the solution invariants: Hermitian within 1e-10,
    /// eigenvalues >= -1e-8 * trace, per-symbol total trace within
    /// 1e-6 * budget. Throws ConfigError on violation.
    void validate(double power_budget) const;
};

struct PerformanceReport {
    double matching_error = 0.0;            // raw squared error
    double normalized_error = 0.0;          // error / (L * M * zeta^2)
    std::vector<double> per_ir_rate;        // bps/Hz
    std::vector<double> per_er_power;       // watts
    std::vector<double> per_symbol_power_residual;
    std::vector<std::vector<double>> gain;  // [slot][grid angle]
    double zeta = 0.0;
};

double beampattern_gain(const BeamformingSolution& sol, int symbol, double theta,
                        double spacing_ratio = 0.5);

/// Raw matching error sum_l sum_m |G_l(theta_m) - zeta * P_l(theta_m)|^2.
double matching_error(const BeamformingSolution& sol, const std::vector<std::vector<double>>& desired,
                      const scenario::AngularGrid& grid, const scenario::SlotSchedule& schedule,
                      double spacing_ratio = 0.5);

/// error / (L * M * zeta^2); throws ConfigError when zeta == 0.
double normalized_matching_error(double error, int n_symbols, int n_grid, double zeta);

double sinr(const BeamformingSolution& sol, const scenario::ChannelSet& channels, int subcarrier,
            int symbol, int ir, double noise_power);

double average_rate(const BeamformingSolution& sol, const scenario::ChannelSet& channels, int ir,
                    double noise_power);

double harvested_power(const BeamformingSolution& sol, const scenario::ChannelSet& channels, int er);

std::vector<double> power_residual(const BeamformingSolution& sol, double power_budget);

PerformanceReport evaluate(const BeamformingSolution& sol, const scenario::ScenarioConfig& cfg,
                           const scenario::ChannelSet& channels, const scenario::AngularGrid& grid,
                           const scenario::SlotSchedule& schedule,
                           const std::vector<std::vector<double>>& desired);

/// CSV serialization: per-(slot, angle) gain table then per-entity metrics.
std::string report_to_csv(const PerformanceReport& report, const scenario::AngularGrid& grid,
                          const std::vector<std::vector<double>>& desired);

}  // namespace iscap::metrics
