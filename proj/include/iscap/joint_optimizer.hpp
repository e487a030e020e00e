#pragma once

/// Iterative solution of the relaxed joint-beamforming problem by two
/// interchangeable schemes: successive convex approximation of the rate
/// constraints, and fractional programming with closed-form auxiliary
/// updates. Both drive the same conic backend and produce monotone
/// matching-error traces.

#include <string>

#include "iscap/conic.hpp"
#include "iscap/metrics.hpp"
#include "iscap/scenario.hpp"

namespace iscap::optimizer {

enum class Method { SCA, FP };
enum class InitialPointSource { ZF, round_robin, uniform_isotropic };
enum class TerminationReason { converged, max_iterations, subproblem_failure };
enum class OptimizeStatus { ok, requirements_infeasible, numerical_failure };

struct Requirements {
    double rate_bps_hz = 0.0;  // per IR
    double er_power_w = 0.0;   // per ER

    static Requirements from_config(const scenario::ScenarioConfig& cfg) {
        return {cfg.rate_requirement, cfg.power_requirement};
    }
};

struct OptimizerSettings {
    Method method = Method::SCA;
    int max_iterations = 50;
    double convergence_rel_tol = 1e-3;
    InitialPointSource initial_point_source = InitialPointSource::ZF;
    bool slot_collapse = true;
    conic::SolveTolerances subproblem_tol = {1e-9, 1e-9, 200, 60, 1e-7};
};

struct IterationTrace {
    std::vector<double> objective;  // matching error after each iteration
    std::vector<double> seconds;    // wall time per iteration
    TerminationReason termination = TerminationReason::max_iterations;

    std::string to_csv() const;  // columns: iteration, objective, seconds
};

/// Closed-form auxiliaries of the fractional-programming scheme,
/// indexed [subcarrier][symbol][ir].
struct FpAuxiliaries {
    std::vector<std::vector<std::vector<double>>> alpha;
    std::vector<std::vector<std::vector<double>>> beta;
};

struct OptimizeResult {
    OptimizeStatus status = OptimizeStatus::numerical_failure;
    metrics::BeamformingSolution solution;
    IterationTrace trace;
    std::string message;
};

/// Power-feasible starting point. The ZF source falls back to a
/// requirement-free ZF design when the requested requirements make the ZF
/// restriction infeasible (the main loop then restores feasibility).
metrics::BeamformingSolution initial_point(const OptimizerSettings& settings,
                                           const scenario::Instance& inst,
                                           const Requirements& req);

/// Convex subproblem with rate constraints linearized at the local point;
/// the leading concave log stays exact. layout_out receives the variable ids.
struct SubproblemLayout {
    std::vector<std::vector<std::vector<conic::VarId>>> w;  // [n][block][stream]
    conic::VarId zeta = -1;
    conic::VarId slack = -1;  // feasibility-phase / epigraph variable
    bool collapsed = false;
};

conic::ConicProgram sca_build_subproblem(const scenario::Instance& inst, const Requirements& req,
                                         const metrics::BeamformingSolution& local_point,
                                         bool slot_collapse, SubproblemLayout& layout_out);

/// alpha* equals the per-index SINR of the current solution.
FpAuxiliaries fp_update_alpha(const metrics::BeamformingSolution& sol,
                              const scenario::ChannelSet& channels, double noise_power);

/// beta* = sqrt(1+alpha) sqrt(signal) / (total received + noise); the
/// denominator includes the stream's own signal.
FpAuxiliaries fp_update_beta(const metrics::BeamformingSolution& sol,
                             const scenario::ChannelSet& channels, const FpAuxiliaries& alpha,
                             double noise_power);

conic::ConicProgram fp_build_subproblem(const scenario::Instance& inst, const Requirements& req,
                                        const FpAuxiliaries& aux, bool slot_collapse,
                                        SubproblemLayout& layout_out);

OptimizeResult optimize(const OptimizerSettings& settings, const scenario::Instance& inst,
                        const Requirements& req);

/// Replace every covariance by its average over the symbols of its slot.
/// Power equality is preserved; the matching error cannot increase and the
/// rate constraints cannot tighten.
metrics::BeamformingSolution symmetrize_over_slot(const metrics::BeamformingSolution& sol,
                                                  const scenario::SlotSchedule& schedule);

/// Max-min rate design over information beams only (no dedicated stream),
/// solved by the epigraph form of the same SCA linearization. Returns the
/// solution and the achieved minimum average rate.
struct MaxMinRateResult {
    OptimizeStatus status = OptimizeStatus::numerical_failure;
    metrics::BeamformingSolution solution;
    double min_rate = 0.0;
};
MaxMinRateResult solve_max_min_rate(const scenario::Instance& inst,
                                    const OptimizerSettings& settings);

/// Necessary-condition screen: a rate requirement above the single-user
/// capacity bound is infeasible outright.
bool rate_requirement_screen_fails(const scenario::Instance& inst, const Requirements& req);

}  // namespace iscap::optimizer
