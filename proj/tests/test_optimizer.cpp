#include <cmath>

#include "desk_fixture.hpp"
#include "doctest.h"
#include "iscap/baselines.hpp"
#include "iscap/joint_optimizer.hpp"
#include "iscap/metrics.hpp"
#include "iscap/rank1_extraction.hpp"

using namespace iscap;
using namespace iscap::optimizer;

namespace {

// 1-D maximization oracles for the closed-form auxiliaries, by bisection on
// the stationarity condition (well-conditioned where golden section is not).
double alpha_oracle(double sig, double inter, double noise) {
    auto deriv = [&](double a) {
        return 1.0 / (1.0 + a) - 1.0 + (sig / (sig + inter + noise));
    };
    double lo = 0.0, hi = 1.0;
    while (deriv(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double beta_oracle(double alpha, double sig, double tot, double noise) {
    auto deriv = [&](double b) {
        return 2.0 * std::sqrt(1.0 + alpha) * std::sqrt(sig) - 2.0 * b * (tot + noise);
    };
    double lo = 0.0, hi = 1.0;
    while (deriv(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("fp auxiliaries match 1-D maximization oracles") {
    auto inst = desk::instance(3);
    auto sol = initial_point(OptimizerSettings{.initial_point_source =
                                                   InitialPointSource::uniform_isotropic},
                             inst, desk::req(0, 0));
    // overlay a couple of beams so signals are nonzero
    for (int n = 0; n < inst.cfg.n_subcarriers; ++n)
        for (int l = 0; l < inst.cfg.n_symbols; ++l)
            for (int k = 1; k <= 2; ++k) {
                const CVec h = inst.channels.ir(n, k - 1);
                const CVec beam = std::sqrt(0.01) * h.conjugate().normalized();
                sol.w(n, l, k) = beam * beam.adjoint();
            }
    const double noise = inst.cfg.noise_power_comm;
    auto alpha = fp_update_alpha(sol, inst.channels, noise);
    auto aux = fp_update_beta(sol, inst.channels, alpha, noise);
    for (int n = 0; n < inst.cfg.n_subcarriers; ++n)
        for (int k = 0; k < 2; ++k) {
            const CVec h = inst.channels.ir(n, k);
            double sig = 0.0, tot = 0.0;
            for (int i = 0; i < sol.n_streams(); ++i) {
                const double p = (h.adjoint() * sol.w(n, 0, i) * h).value().real();
                tot += p;
                if (i == k + 1) sig = p;
            }
            const double a_star = alpha.alpha[n][0][k];
            const double a_ref = alpha_oracle(sig, tot - sig, noise);
            CHECK(a_star == doctest::Approx(a_ref).epsilon(1e-8));
            // alpha equals the SINR metric
            CHECK(a_star ==
                  doctest::Approx(metrics::sinr(sol, inst.channels, n, 0, k, noise)).epsilon(1e-12));
            const double b_ref = beta_oracle(a_star, sig, tot, noise);
            CHECK(aux.beta[n][0][k] == doctest::Approx(b_ref).epsilon(1e-8));
        }
    // closed-form spot values
    CHECK(alpha_oracle(0.0, 0.5, 1.0) == doctest::Approx(0.0).epsilon(1e-9));
    const double sc = 1e-10;
    CHECK(beta_oracle(1.0, sc, sc, sc) == doctest::Approx(std::sqrt(2.0) / (2.0 * std::sqrt(sc))));
}

TEST_CASE("sca linearization is exact at the expansion point") {
    auto inst = desk::instance(5);
    auto local = initial_point(OptimizerSettings{.initial_point_source =
                                                     InitialPointSource::uniform_isotropic},
                               inst, desk::req(0, 0));
    SubproblemLayout lay;
    auto pr = sca_build_subproblem(inst, desk::req(0.25, 0.0), local, true, lay);
    // Evaluate every log bound at the local point: LHS - RHS must equal
    // LN * (true rate - requirement).
    const auto& cfg = inst.cfg;
    std::vector<CMat> mat_vals;
    std::vector<double> scal_vals(pr.n_scalar_vars(), 0.0);
    mat_vals.reserve(pr.n_matrix_vars());
    for (int v = 0; v < pr.n_matrix_vars(); ++v) mat_vals.push_back(CMat::Zero(cfg.n_tx, cfg.n_tx));
    for (int n = 0; n < cfg.n_subcarriers; ++n)
        for (int b = 0; b < cfg.n_slots; ++b)
            for (int k = 0; k <= 2; ++k)
                mat_vals[lay.w[n][b][k]] = local.w(n, inst.schedule.slot_symbols[b].first, k);
    REQUIRE(pr.log_bounds_.size() == 2);
    for (int k = 0; k < 2; ++k) {
        const auto& lb = pr.log_bounds_[k];
        double lhs = 0.0;
        for (std::size_t j = 0; j < lb.args.size(); ++j)
            lhs += lb.coeffs[j] * std::log(conic::evaluate(lb.args[j], mat_vals, scal_vals));
        const double rhs = conic::evaluate(lb.rhs, mat_vals, scal_vals);
        const double rate = metrics::average_rate(local, inst.channels, k, cfg.noise_power_comm);
        const double ln_expect =
            static_cast<double>(cfg.n_symbols) * cfg.n_subcarriers * (rate - 0.25);
        CHECK(lhs - rhs == doctest::Approx(ln_expect).epsilon(1e-9));
    }
}

TEST_CASE("optimizer matches the sensing-only optimum when unconstrained") {
    auto inst = desk::instance(1);
    OptimizerSettings settings;
    settings.initial_point_source = InitialPointSource::uniform_isotropic;
    settings.convergence_rel_tol = 1e-6;
    auto res = optimize(settings, inst, desk::req(0, 0));
    REQUIRE(res.status == OptimizeStatus::ok);
    auto bound = baselines::sensing_only_solve(inst);
    REQUIRE(bound.status == baselines::BaselineStatus::ok);
    const double e_opt = metrics::matching_error(res.solution, inst.desired, inst.grid,
                                                 inst.schedule, inst.cfg.spacing_ratio);
    const double e_bound = metrics::matching_error(bound.solution, inst.desired, inst.grid,
                                                   inst.schedule, inst.cfg.spacing_ratio);
    CHECK(e_opt == doctest::Approx(e_bound).epsilon(1e-4));
    CHECK(e_opt >= e_bound - 1e-9 * std::max(1.0, e_bound));
}

TEST_CASE("sca run on the desk scenario: monotone, feasible, equivalent after extraction") {
    auto inst = desk::instance(0);
    const auto req = desk::req(0.5, 1.0);
    OptimizerSettings settings;  // SCA, ZF start, slot collapse
    auto res = optimize(settings, inst, req);
    REQUIRE(res.status == OptimizeStatus::ok);
    REQUIRE(res.trace.termination == TerminationReason::converged);
    for (std::size_t i = 1; i < res.trace.objective.size(); ++i)
        CHECK(res.trace.objective[i] <= res.trace.objective[i - 1] + 1e-7);

    res.solution.validate(inst.cfg.tx_power);
    for (int k = 0; k < 2; ++k)
        CHECK(metrics::average_rate(res.solution, inst.channels, k, inst.cfg.noise_power_comm) >=
              req.rate_bps_hz - 1e-6);
    CHECK(metrics::harvested_power(res.solution, inst.channels, 0) >=
          req.er_power_w * (1 - 1e-6));

    auto extracted = rank1::extract(res.solution, inst.channels);
    auto verdict = rank1::verify_equivalence(res.solution, extracted, inst.cfg, inst.channels,
                                             inst.grid, inst.schedule, inst.desired);
    INFO(verdict.to_string());
    CHECK(verdict.pass);
}

TEST_CASE("fp run agrees with sca") {
    auto inst = desk::instance(0);
    const auto req = desk::req(0.5, 1.0);
    OptimizerSettings sca;
    auto res_sca = optimize(sca, inst, req);
    OptimizerSettings fp;
    fp.method = Method::FP;
    auto res_fp = optimize(fp, inst, req);
    REQUIRE(res_sca.status == OptimizeStatus::ok);
    REQUIRE(res_fp.status == OptimizeStatus::ok);
    for (std::size_t i = 1; i < res_fp.trace.objective.size(); ++i)
        CHECK(res_fp.trace.objective[i] <= res_fp.trace.objective[i - 1] + 1e-7);
    const double a = res_sca.trace.objective.back();
    const double b = res_fp.trace.objective.back();
    CHECK(std::abs(a - b) / std::max(a, b) < 0.05);
}

TEST_CASE("slot symmetrization never hurts") {
    auto inst = desk::instance(2);
    // random-ish feasible point: isotropic plus per-symbol-varying beams
    OptimizerSettings settings;
    settings.initial_point_source = InitialPointSource::uniform_isotropic;
    auto sol = initial_point(settings, inst, desk::req(0, 0));
    for (int n = 0; n < inst.cfg.n_subcarriers; ++n)
        for (int l = 0; l < inst.cfg.n_symbols; ++l) {
            const double share = 0.3 * (l + 1) / inst.cfg.n_symbols;
            const CVec h = inst.channels.ir(n, 0);
            const CVec beam = h.conjugate().normalized();
            const double iso_total = inst.cfg.tx_power / inst.cfg.n_subcarriers;
            sol.w(n, l, 1) = share * iso_total * beam * beam.adjoint();
            sol.w(n, l, 0) *= (1.0 - share);
        }
    sol.zeta = 1.0;
    auto sym = symmetrize_over_slot(sol, inst.schedule);
    for (double r : metrics::power_residual(sym, inst.cfg.tx_power))
        CHECK(std::abs(r) < 1e-9 * inst.cfg.tx_power);
    const double e0 = metrics::matching_error(sol, inst.desired, inst.grid, inst.schedule,
                                              inst.cfg.spacing_ratio);
    const double e1 = metrics::matching_error(sym, inst.desired, inst.grid, inst.schedule,
                                              inst.cfg.spacing_ratio);
    CHECK(e1 <= e0 + 1e-9);
    for (int k = 0; k < 2; ++k)
        CHECK(metrics::average_rate(sym, inst.channels, k, inst.cfg.noise_power_comm) >=
              metrics::average_rate(sol, inst.channels, k, inst.cfg.noise_power_comm) - 1e-9);
    // idempotent on slot-constant input
    auto sym2 = symmetrize_over_slot(sym, inst.schedule);
    double diff = 0.0;
    for (int n = 0; n < sym.n_subcarriers(); ++n)
        for (int l = 0; l < sym.n_symbols(); ++l)
            for (int k = 0; k < sym.n_streams(); ++k)
                diff = std::max(diff, (sym2.w(n, l, k) - sym.w(n, l, k)).cwiseAbs().maxCoeff());
    CHECK(diff == 0.0);
}

TEST_CASE("infeasible requirements are reported") {
    auto inst = desk::instance(4);
    auto res = optimize(OptimizerSettings{}, inst, desk::req(50.0, 0.0));
    CHECK(res.status == OptimizeStatus::requirements_infeasible);  // capacity screen

    // harvested power beyond reach: certificate path
    auto res2 = optimize(OptimizerSettings{}, inst, desk::req(0.0, 1e5));
    CHECK(res2.status == OptimizeStatus::requirements_infeasible);
}

TEST_CASE("initial points are power feasible") {
    auto inst = desk::instance(6);
    for (auto src : {InitialPointSource::uniform_isotropic, InitialPointSource::ZF,
                     InitialPointSource::round_robin}) {
        OptimizerSettings settings;
        settings.initial_point_source = src;
        auto sol = initial_point(settings, inst, desk::req(0.25, 0.5));
        for (double r : metrics::power_residual(sol, inst.cfg.tx_power))
            CHECK(std::abs(r) <= 1e-6 * inst.cfg.tx_power);
    }
}
