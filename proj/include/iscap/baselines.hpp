#pragma once

/// Heuristic benchmark designs: zero-forcing beamforming with power
/// allocation, round-robin user scheduling, and three-phase time switching.

#include <string>

#include "iscap/conic.hpp"
#include "iscap/metrics.hpp"
#include "iscap/scenario.hpp"

namespace iscap::optimizer {
struct Requirements;  // defined in joint_optimizer.hpp
}

namespace iscap::baselines {

using optimizer::Requirements;

enum class BaselineStatus { ok, requirements_infeasible, numerical_failure };

struct BaselineResult {
    BaselineStatus status = BaselineStatus::numerical_failure;
    metrics::BeamformingSolution solution;
    std::string message;
};

/// Zero-forcing directions, the co-channel null-space basis, and the derived
/// gain coefficients used by the power-allocation problem.
struct ZfBasis {
    std::vector<std::vector<CVec>> directions;       // [n][k] unit beam directions
    std::vector<CMat> null_basis;                    // [n] n_tx x (n_tx - K) orthonormal
    std::vector<std::vector<double>> lambda;         // [n][k] |h_k^H w~_k|
    std::vector<std::vector<std::vector<double>>> delta;  // [m][n][k] |v^T w~|
    std::vector<std::vector<CVec>> delta0;           // [m][n] U0^H v*
    std::vector<std::vector<std::vector<double>>> rho;    // [n][i][k] |g^H w~|
    std::vector<std::vector<CVec>> rho0;             // [n][i] U0^H g
};

/// Pseudo-inverse beam directions plus the null space of the stacked IR
/// channels; throws DegenerateChannelError when K_IR >= n_tx or the channel
/// matrix is rank deficient.
ZfBasis zf_build_basis(const scenario::Instance& inst);

BaselineResult zf_solve(const scenario::Instance& inst, const Requirements& req);

/// Scheduled IR for (subcarrier n, 1-based symbol l): the unique k in
/// {1..K} with mod(k, K) = mod(n + (l-1) N, K). 1-based indexing follows
/// the modulo convention of the scheduling rule.
int round_robin_index(int n, int l_one_based, int n_subcarriers, int n_ir);

BaselineResult round_robin_solve(const scenario::Instance& inst, const Requirements& req);

/// Tightness probe: minimizes the dedicated-stream power over the optimal
/// face of the relaxed round-robin problem. Returns the attained
/// sum over (n, l) of tr(W_0); the claim is that it vanishes.
double round_robin_w0_probe(const scenario::Instance& inst, const Requirements& req);

struct TimeSwitchDesign {
    metrics::BeamformingSolution phase[3];          // sensing / communication / powering
    std::vector<std::vector<double>> phase_gain[3]; // [slot][grid angle]
    std::vector<double> phase_rate[3];              // per IR
    std::vector<double> phase_er[3];                // per ER
    double t[3] = {0, 0, 0};
    double zeta = 0.0;
    double matching_error = 0.0;  // of the time-weighted mixture

    /// Covariance mixture sum_j t_j W^(j); its beampattern equals the
    /// time-averaged gain and its harvested power the time-averaged power.
    metrics::BeamformingSolution mixture_solution() const;

    double min_rate() const;      // t_2 * min_k rate of the communication phase
    double min_er_power() const;  // min_i sum_j t_j * phase power
};

struct TimeSwitchResult {
    BaselineStatus status = BaselineStatus::numerical_failure;
    TimeSwitchDesign design;
    std::string message;
};

TimeSwitchResult time_switch_solve(const scenario::Instance& inst, const Requirements& req);

/// Sensing-only matching-error minimizer (phase 1 of time switching);
/// also the error lower bound used by the experiment reports.
BaselineResult sensing_only_solve(const scenario::Instance& inst);

}  // namespace iscap::baselines
