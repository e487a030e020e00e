#pragma once

/// Conversion of a relaxed covariance solution into an equivalent solution
/// whose information streams are rank one, plus the numeric verification of
/// every preserved quantity (objective, SINRs, harvested power, budget).

#include "iscap/metrics.hpp"
#include "iscap/scenario.hpp"

namespace iscap::rank1 {

/// Rank-one extraction. For each information stream with nonzero received
/// signal the beam direction is W h scaled to preserve h^H W h; streams with
/// h^H W h below 1e-12 * P0 / N are zeroed and folded into stream 0. The
/// per-(n, l) covariance sum is preserved exactly.
metrics::BeamformingSolution extract(const metrics::BeamformingSolution& relaxed,
                                     const scenario::ChannelSet& channels);

struct EquivalenceReport {
    bool pass = true;
    double max_sum_residual = 0.0;           // per-(n,l) covariance-sum deviation
    double max_signal_residual = 0.0;        // per-IR received signal deviation
    double max_interference_residual = 0.0;  // per-IR interference deviation
    double min_w0_eig_over_trace = 0.0;      // most negative eigenvalue ratio of stream 0
    double max_rank_ratio = 0.0;             // second/first eigenvalue over info streams
    double objective_rel_err = 0.0;
    double rate_rel_err = 0.0;
    double er_power_rel_err = 0.0;
    double budget_rel_err = 0.0;
    std::vector<std::string> violations;

    std::string to_string() const;
};

EquivalenceReport verify_equivalence(const metrics::BeamformingSolution& relaxed,
                                     const metrics::BeamformingSolution& extracted,
                                     const scenario::ScenarioConfig& cfg,
                                     const scenario::ChannelSet& channels,
                                     const scenario::AngularGrid& grid,
                                     const scenario::SlotSchedule& schedule,
                                     const std::vector<std::vector<double>>& desired);

}  // namespace iscap::rank1
