#include "iscap/joint_optimizer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "iscap/baselines.hpp"

namespace iscap::optimizer {

using conic::AffineExpr;
using conic::ConicProgram;
using conic::LogBound;
using conic::SocConstraint;
using conic::VarId;
using metrics::BeamformingSolution;
using scenario::Instance;

namespace {

constexpr double kLn2 = 0.6931471805599453;

// Per-user channel normalization. Rate constraints are invariant under
// scaling one IR's channel and its noise power together, and ER constraints
// under scaling the channel and the requirement; normalizing keeps the conic
// data near unit magnitude instead of path-loss magnitude.
struct Ctx {
    const Instance& inst;
    Requirements req;
    bool collapse;
    bool stream0;
    bool include_er;
    int blocks;
    double wb;  // symbols represented by each block
    int K;
    std::vector<CMat> h_norm;        // [k], rows are normalized h per subcarrier
    std::vector<double> rho2_ir;     // squared normalization per IR
    std::vector<double> sigma2_ir;   // normalized noise power per IR
    std::vector<CMat> g_norm;
    std::vector<double> rho2_er;

    Ctx(const Instance& i, const Requirements& r, bool coll, bool s0, bool er)
        : inst(i), req(r), collapse(coll), stream0(s0), include_er(er) {
        const auto& cfg = inst.cfg;
        blocks = collapse ? cfg.n_slots : cfg.n_symbols;
        wb = collapse ? static_cast<double>(cfg.n_symbols) / cfg.n_slots : 1.0;
        K = inst.channels.n_ir();
        for (int k = 0; k < K; ++k) {
            const CMat& h = inst.channels.ir_channels[k];
            const double rho2 = h.squaredNorm() / cfg.n_subcarriers;
            rho2_ir.push_back(rho2);
            h_norm.push_back(h / std::sqrt(rho2));
            sigma2_ir.push_back(cfg.noise_power_comm / rho2);
        }
        for (int i2 = 0; i2 < inst.channels.n_er(); ++i2) {
            const CMat& g = inst.channels.er_channels[i2];
            const double rho2 = g.squaredNorm() / cfg.n_subcarriers;
            rho2_er.push_back(rho2);
            g_norm.push_back(g / std::sqrt(rho2));
        }
    }

    int rep_symbol(int b) const {
        return collapse ? inst.schedule.slot_symbols[b].first : b;
    }
    int slot_of_block(int b) const {
        return collapse ? b : inst.schedule.slot_of_symbol(b);
    }
    CVec hn(int n, int k) const { return h_norm[k].row(n).transpose(); }
    CVec gn(int n, int i) const { return g_norm[i].row(n).transpose(); }
};

// Declare covariance variables, PSD cones, per-block power equality, and
// (optionally) the ER constraints shared by every subproblem family.
SubproblemLayout declare_core(ConicProgram& pr, const Ctx& ctx) {
    const auto& cfg = ctx.inst.cfg;
    SubproblemLayout lay;
    lay.collapsed = ctx.collapse;
    lay.w.assign(cfg.n_subcarriers,
                 std::vector<std::vector<VarId>>(ctx.blocks, std::vector<VarId>(ctx.K + 1, -1)));
    for (int n = 0; n < cfg.n_subcarriers; ++n)
        for (int b = 0; b < ctx.blocks; ++b)
            for (int k = 0; k <= ctx.K; ++k) {
                if (k == 0 && !ctx.stream0) continue;
                std::ostringstream name;
                name << "W_n" << n << "_b" << b << "_k" << k;
                lay.w[n][b][k] = pr.add_hermitian_var(name.str(), cfg.n_tx);
                pr.add_psd(lay.w[n][b][k]);
            }
    lay.zeta = pr.add_scalar_var("zeta");

    const CMat eye = CMat::Identity(cfg.n_tx, cfg.n_tx);
    for (int b = 0; b < ctx.blocks; ++b) {
        AffineExpr power;
        for (int n = 0; n < cfg.n_subcarriers; ++n)
            for (int k = 0; k <= ctx.K; ++k)
                if (lay.w[n][b][k] >= 0) power.add_matrix(lay.w[n][b][k], eye);
        power += -cfg.tx_power;
        pr.add_eq(power);
    }

    if (ctx.include_er) {
        for (int i = 0; i < ctx.inst.channels.n_er(); ++i) {
            AffineExpr er;
            for (int b = 0; b < ctx.blocks; ++b)
                for (int n = 0; n < cfg.n_subcarriers; ++n) {
                    const CVec g = ctx.gn(n, i);
                    const CMat coeff = (ctx.wb / cfg.n_symbols) * (g * g.adjoint());
                    for (int k = 0; k <= ctx.K; ++k)
                        if (lay.w[n][b][k] >= 0) er.add_matrix(lay.w[n][b][k], coeff);
                }
            er += -ctx.req.er_power_w / ctx.rho2_er[i];
            pr.add_ineq(er);
        }
    }
    return lay;
}

// Matching-error objective as weighted squared residuals per (block, angle).
void add_matching_objective(ConicProgram& pr, const Ctx& ctx, const SubproblemLayout& lay) {
    const auto& cfg = ctx.inst.cfg;
    const double rt_wb = std::sqrt(ctx.wb);
    for (int b = 0; b < ctx.blocks; ++b) {
        const int q = ctx.slot_of_block(b);
        for (int m = 0; m < ctx.inst.grid.size(); ++m) {
            const CVec c = scenario::steering_vector(ctx.inst.grid.angles[m], cfg.n_tx,
                                                     cfg.spacing_ratio)
                               .conjugate();
            const CMat coeff = c * c.adjoint();
            AffineExpr resid;
            for (int n = 0; n < cfg.n_subcarriers; ++n)
                for (int k = 0; k <= ctx.K; ++k)
                    if (lay.w[n][b][k] >= 0) resid.add_matrix(lay.w[n][b][k], coeff);
            resid.add(lay.zeta, -ctx.inst.desired[q][m]);
            for (auto& [id, mat] : resid.matrix_terms) mat *= rt_wb;
            for (auto& [id, cf] : resid.scalar_terms) cf *= rt_wb;
            pr.add_square_term(std::move(resid));
        }
    }
}

// Received-power pieces of one IR at the local point (normalized units).
struct LocalPowers {
    RMat tot;    // [n][b] total received over present streams
    RMat inter;  // [n][b] interference seen by this IR
};

LocalPowers local_powers(const Ctx& ctx, const BeamformingSolution& local, int k) {
    const auto& cfg = ctx.inst.cfg;
    LocalPowers lp;
    lp.tot.setZero(cfg.n_subcarriers, ctx.blocks);
    lp.inter.setZero(cfg.n_subcarriers, ctx.blocks);
    for (int n = 0; n < cfg.n_subcarriers; ++n) {
        const CVec h = ctx.hn(n, k);
        for (int b = 0; b < ctx.blocks; ++b) {
            const int l = ctx.rep_symbol(b);
            for (int i = 0; i <= ctx.K; ++i) {
                if (i == 0 && !ctx.stream0) continue;
                const double p = (h.adjoint() * local.w(n, l, i) * h).value().real();
                lp.tot(n, b) += p;
                if (i != k + 1) lp.inter(n, b) += p;
            }
        }
    }
    return lp;
}

// Rate constraint of one IR with the interference log linearized at the
// local point and the leading log kept exact:
//   sum (wb/ln2) log(tot + sigma2) >= rhs_base + LN * slack + tangent terms.
void add_sca_rate_constraint(ConicProgram& pr, const Ctx& ctx, const SubproblemLayout& lay,
                             const BeamformingSolution& local, int k, double gamma,
                             VarId slack_var) {
    const auto& cfg = ctx.inst.cfg;
    const double LN = static_cast<double>(cfg.n_symbols) * cfg.n_subcarriers;
    const double sigma2 = ctx.sigma2_ir[k];
    const LocalPowers lp = local_powers(ctx, local, k);

    LogBound lb;
    lb.rhs += LN * gamma;
    if (slack_var >= 0) lb.rhs.add(slack_var, LN);
    for (int b = 0; b < ctx.blocks; ++b)
        for (int n = 0; n < cfg.n_subcarriers; ++n) {
            const CVec h = ctx.hn(n, k);
            const CMat hh = h * h.adjoint();
            AffineExpr tot;
            for (int i = 0; i <= ctx.K; ++i)
                if (lay.w[n][b][i] >= 0) tot.add_matrix(lay.w[n][b][i], hh);
            tot += sigma2;
            lb.coeffs.push_back(ctx.wb / kLn2);
            lb.args.push_back(std::move(tot));
            lb.expansion_hints.push_back(lp.tot(n, b) + sigma2);

            const double den = lp.inter(n, b) + sigma2;
            lb.rhs += ctx.wb * (std::log2(den) - lp.inter(n, b) / (den * kLn2));
            const CMat tangent = (ctx.wb / (den * kLn2)) * hh;
            for (int i = 0; i <= ctx.K; ++i) {
                if (i == k + 1 || lay.w[n][b][i] < 0) continue;
                lb.rhs.add_matrix(lay.w[n][b][i], tangent);
            }
        }
    pr.add_log_bound(std::move(lb));
}

BeamformingSolution expand_solution(const Ctx& ctx, const SubproblemLayout& lay,
                                    const conic::SolveResult& res) {
    const auto& cfg = ctx.inst.cfg;
    BeamformingSolution sol = BeamformingSolution::zeros(cfg.n_subcarriers, cfg.n_symbols,
                                                         ctx.K + 1, cfg.n_tx);
    for (int n = 0; n < cfg.n_subcarriers; ++n)
        for (int l = 0; l < cfg.n_symbols; ++l) {
            const int b = ctx.collapse ? ctx.inst.schedule.slot_of_symbol(l) : l;
            for (int k = 0; k <= ctx.K; ++k)
                if (lay.w[n][b][k] >= 0) sol.w(n, l, k) = res.matrix_values[lay.w[n][b][k]];
        }
    sol.zeta = res.scalar_values[lay.zeta];
    sol.hermitize();
    return sol;
}

double true_rate(const Ctx& ctx, const BeamformingSolution& sol, int k) {
    return metrics::average_rate(sol, ctx.inst.channels, k, ctx.inst.cfg.noise_power_comm);
}

}  // namespace

conic::ConicProgram sca_build_subproblem(const Instance& inst, const Requirements& req,
                                         const BeamformingSolution& local_point,
                                         bool slot_collapse, SubproblemLayout& layout_out) {
    Ctx ctx(inst, req, slot_collapse, true, true);
    ConicProgram pr;
    layout_out = declare_core(pr, ctx);
    add_matching_objective(pr, ctx, layout_out);
    for (int k = 0; k < ctx.K; ++k)
        add_sca_rate_constraint(pr, ctx, layout_out, local_point, k, req.rate_bps_hz, -1);
    return pr;
}

FpAuxiliaries fp_update_alpha(const BeamformingSolution& sol, const scenario::ChannelSet& channels,
                              double noise_power) {
    FpAuxiliaries aux;
    const int N = sol.n_subcarriers(), L = sol.n_symbols(), K = channels.n_ir();
    aux.alpha.assign(N, std::vector<std::vector<double>>(L, std::vector<double>(K, 0.0)));
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k) {
                const CVec h = channels.ir(n, k);
                double sig = 0.0, inter = 0.0;
                for (int i = 0; i < sol.n_streams(); ++i) {
                    const double pwr = (h.adjoint() * sol.w(n, l, i) * h).value().real();
                    if (i == k + 1)
                        sig = pwr;
                    else
                        inter += pwr;
                }
                aux.alpha[n][l][k] = std::max(sig, 0.0) / (std::max(inter, 0.0) + noise_power);
            }
    return aux;
}

FpAuxiliaries fp_update_beta(const BeamformingSolution& sol, const scenario::ChannelSet& channels,
                             const FpAuxiliaries& alpha, double noise_power) {
    FpAuxiliaries aux = alpha;
    const int N = sol.n_subcarriers(), L = sol.n_symbols(), K = channels.n_ir();
    aux.beta.assign(N, std::vector<std::vector<double>>(L, std::vector<double>(K, 0.0)));
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k) {
                const CVec h = channels.ir(n, k);
                double sig = 0.0, tot = 0.0;
                for (int i = 0; i < sol.n_streams(); ++i) {
                    const double pwr =
                        std::max((h.adjoint() * sol.w(n, l, i) * h).value().real(), 0.0);
                    tot += pwr;
                    if (i == k + 1) sig = pwr;
                }
                aux.beta[n][l][k] = std::sqrt(1.0 + alpha.alpha[n][l][k]) * std::sqrt(sig) /
                                    (tot + noise_power);
            }
    return aux;
}

conic::ConicProgram fp_build_subproblem(const Instance& inst, const Requirements& req,
                                        const FpAuxiliaries& aux, bool slot_collapse,
                                        SubproblemLayout& layout_out) {
    Ctx ctx(inst, req, slot_collapse, true, true);
    ConicProgram pr;
    layout_out = declare_core(pr, ctx);
    add_matching_objective(pr, ctx, layout_out);
    const auto& cfg = inst.cfg;
    const double LN = static_cast<double>(cfg.n_symbols) * cfg.n_subcarriers;

    for (int k = 0; k < ctx.K; ++k) {
        // Quadratic-transform lower bound minus the requirement. The dual
        // transform is exact in natural logarithms (that is what makes the
        // closed-form alpha the 1-D maximizer), so the bps/Hz requirement is
        // scaled by ln 2 here.
        AffineExpr rate;
        rate += -req.rate_bps_hz * kLn2;
        const double sigma2 = ctx.sigma2_ir[k];
        for (int b = 0; b < ctx.blocks; ++b) {
            const int l = ctx.rep_symbol(b);
            for (int n = 0; n < cfg.n_subcarriers; ++n) {
                const double a = aux.alpha[n][l][k];
                // beta in raw units; the normalized-channel equivalent scales
                // by the channel normalization.
                const double beta = aux.beta[n][l][k] * std::sqrt(ctx.rho2_ir[k]);
                const double scale = ctx.wb / LN;
                rate += scale * (std::log(1.0 + a) - a);
                const CVec h = ctx.hn(n, k);
                const CMat hh = h * h.adjoint();

                if (beta > 0.0) {
                    std::ostringstream name;
                    name << "u_n" << n << "_b" << b << "_k" << k;
                    const VarId u = pr.add_scalar_var(name.str());
                    rate.add(u, scale * 2.0 * std::sqrt(1.0 + a) * beta);
                    // u^2 <= h^H W_k h  (second-order-cone epigraph)
                    AffineExpr own;
                    own.add_matrix(layout_out.w[n][b][k + 1], hh);
                    SocConstraint soc;
                    soc.bound = own;
                    soc.bound *= 0.5;
                    soc.bound += 0.5;
                    AffineExpr half_minus = own;
                    half_minus *= 0.5;
                    half_minus += -0.5;
                    AffineExpr uu;
                    uu.add(u, 1.0);
                    soc.terms = {uu, half_minus};
                    pr.add_soc(std::move(soc));
                }
                const double b2 = scale * beta * beta;
                rate += -b2 * sigma2;
                for (int i = 0; i <= ctx.K; ++i)
                    if (layout_out.w[n][b][i] >= 0)
                        rate.add_matrix(layout_out.w[n][b][i], -b2 * hh);
            }
        }
        pr.add_ineq(std::move(rate));
    }
    return pr;
}

metrics::BeamformingSolution initial_point(const OptimizerSettings& settings, const Instance& inst,
                                           const Requirements& req) {
    const auto& cfg = inst.cfg;
    const int K = inst.channels.n_ir();
    switch (settings.initial_point_source) {
        case InitialPointSource::uniform_isotropic: {
            auto sol = BeamformingSolution::zeros(cfg.n_subcarriers, cfg.n_symbols, K + 1, cfg.n_tx);
            const CMat iso =
                (cfg.tx_power / (cfg.n_subcarriers * cfg.n_tx)) * CMat::Identity(cfg.n_tx, cfg.n_tx);
            for (int n = 0; n < cfg.n_subcarriers; ++n)
                for (int l = 0; l < cfg.n_symbols; ++l) sol.w(n, l, 0) = iso;
            sol.zeta = cfg.tx_power;
            return sol;
        }
        case InitialPointSource::ZF: {
            auto zf = baselines::zf_solve(inst, req);
            if (zf.status == baselines::BaselineStatus::ok) return zf.solution;
            // Requirements unreachable under the ZF restriction; fall back to
            // the requirement-free ZF point and let the feasibility phase of
            // the main loop restore the rate constraints.
            auto relaxed = baselines::zf_solve(inst, Requirements{0.0, 0.0});
            if (relaxed.status != baselines::BaselineStatus::ok)
                throw DegenerateChannelError("ZF initial point unavailable");
            return relaxed.solution;
        }
        case InitialPointSource::round_robin: {
            auto rr = baselines::round_robin_solve(inst, req);
            if (rr.status == baselines::BaselineStatus::ok) return rr.solution;
            auto relaxed = baselines::round_robin_solve(inst, Requirements{0.0, 0.0});
            if (relaxed.status != baselines::BaselineStatus::ok)
                throw DegenerateChannelError("round-robin initial point unavailable");
            return relaxed.solution;
        }
    }
    throw std::logic_error("unknown initial point source");
}

bool rate_requirement_screen_fails(const Instance& inst, const Requirements& req) {
    if (req.rate_bps_hz <= 0.0) return false;
    for (int k = 0; k < inst.channels.n_ir(); ++k) {
        double best = 0.0;
        for (int n = 0; n < inst.cfg.n_subcarriers; ++n)
            best = std::max(best, inst.channels.ir(n, k).squaredNorm());
        const double cap = std::log2(1.0 + inst.cfg.tx_power * best / inst.cfg.noise_power_comm);
        if (req.rate_bps_hz > cap) return true;
    }
    return false;
}

namespace {

// Restore rate feasibility by maximizing the minimum linearized rate slack
// under the same SCA surrogate; stops as soon as the slack is nonnegative.
OptimizeStatus feasibility_phase(const OptimizerSettings& settings, const Instance& inst,
                                 const Requirements& req, BeamformingSolution& point,
                                 std::string& message) {
    Ctx ctx(inst, req, settings.slot_collapse, true, true);
    double prev_slack = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < settings.max_iterations; ++it) {
        ConicProgram pr;
        SubproblemLayout lay = declare_core(pr, ctx);
        const VarId slack = pr.add_scalar_var("rate_slack");
        lay.slack = slack;
        for (int k = 0; k < ctx.K; ++k)
            add_sca_rate_constraint(pr, ctx, lay, point, k, req.rate_bps_hz, slack);
        AffineExpr cost;
        cost.add(slack, -1.0);
        pr.add_linear_cost(cost);
        // keep zeta harmlessly pinned; the error objective is absent here
        AffineExpr zeta_pin;
        zeta_pin.add(lay.zeta, 1.0);
        pr.add_eq(zeta_pin);

        auto res = conic::solve(pr, settings.subproblem_tol);
        if (res.status == conic::SolveStatus::infeasible) {
            message = "power/harvest constraint set is empty";
            return OptimizeStatus::requirements_infeasible;
        }
        if (res.status != conic::SolveStatus::optimal) {
            message = "feasibility phase: " + res.message;
            return OptimizeStatus::numerical_failure;
        }
        const double slack_val = res.scalar_values[slack];
        point = expand_solution(ctx, lay, res);
        point.zeta = 1.0;
        if (slack_val >= 0.0) return OptimizeStatus::ok;
        if (slack_val - prev_slack < 1e-7 * std::max(1.0, std::abs(slack_val))) {
            message = "rate requirement unreachable (max-min slack stalled below zero)";
            return OptimizeStatus::requirements_infeasible;
        }
        prev_slack = slack_val;
    }
    message = "rate requirement unreachable within the feasibility-phase budget";
    return OptimizeStatus::requirements_infeasible;
}

}  // namespace

OptimizeResult optimize(const OptimizerSettings& settings, const Instance& inst,
                        const Requirements& req) {
    using clock = std::chrono::steady_clock;
    OptimizeResult out;
    if (req.rate_bps_hz < 0.0 || req.er_power_w < 0.0)
        throw ConfigError("requirements must be nonnegative");
    if (rate_requirement_screen_fails(inst, req)) {
        out.status = OptimizeStatus::requirements_infeasible;
        out.message = "rate requirement exceeds the single-user capacity bound";
        return out;
    }

    auto t0 = clock::now();
    BeamformingSolution current = initial_point(settings, inst, req);

    Ctx ctx(inst, req, settings.slot_collapse, true, true);
    bool needs_repair = false;
    for (int k = 0; k < ctx.K; ++k)
        if (true_rate(ctx, current, k) < req.rate_bps_hz - 1e-9) needs_repair = true;
    if (needs_repair) {
        const auto st = feasibility_phase(settings, inst, req, current, out.message);
        if (st != OptimizeStatus::ok) {
            out.status = st;
            return out;
        }
    }

    auto record = [&](double objective) {
        out.trace.objective.push_back(objective);
        out.trace.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        t0 = clock::now();
    };
    record(metrics::matching_error(current, inst.desired, inst.grid, inst.schedule,
                                   inst.cfg.spacing_ratio));

    double prev_obj = out.trace.objective.back();
    out.trace.termination = TerminationReason::max_iterations;
    for (int it = 0; it < settings.max_iterations; ++it) {
        SubproblemLayout lay;
        ConicProgram pr;
        if (settings.method == Method::SCA) {
            pr = sca_build_subproblem(inst, req, current, settings.slot_collapse, lay);
        } else {
            auto alpha = fp_update_alpha(current, inst.channels, inst.cfg.noise_power_comm);
            auto aux = fp_update_beta(current, inst.channels, alpha, inst.cfg.noise_power_comm);
            pr = fp_build_subproblem(inst, req, aux, settings.slot_collapse, lay);
        }
        auto res = conic::solve(pr, settings.subproblem_tol);
        if (res.status == conic::SolveStatus::infeasible) {
            if (it == 0) {
                out.status = OptimizeStatus::requirements_infeasible;
                out.message = "first subproblem infeasible";
            } else {
                out.status = OptimizeStatus::numerical_failure;
                out.trace.termination = TerminationReason::subproblem_failure;
                out.message = "subproblem became infeasible mid-run";
            }
            return out;
        }
        if (res.status != conic::SolveStatus::optimal) {
            out.status = OptimizeStatus::numerical_failure;
            out.trace.termination = TerminationReason::subproblem_failure;
            out.message = res.message;
            out.solution = current;
            return out;
        }
        current = expand_solution(ctx, lay, res);
        const double obj = metrics::matching_error(current, inst.desired, inst.grid, inst.schedule,
                                                   inst.cfg.spacing_ratio);
        record(obj);
        if (std::abs(prev_obj - obj) / std::max(prev_obj, 1e-12) < settings.convergence_rel_tol) {
            out.trace.termination = TerminationReason::converged;
            break;
        }
        prev_obj = obj;
    }
    out.solution = current;
    out.status = OptimizeStatus::ok;
    return out;
}

metrics::BeamformingSolution symmetrize_over_slot(const BeamformingSolution& sol,
                                                  const scenario::SlotSchedule& schedule) {
    BeamformingSolution out = sol;
    for (int n = 0; n < sol.n_subcarriers(); ++n)
        for (int q = 0; q < schedule.n_slots(); ++q) {
            const auto [begin, end] = schedule.slot_symbols[q];
            for (int k = 0; k < sol.n_streams(); ++k) {
                CMat avg = CMat::Zero(sol.w(0, 0, 0).rows(), sol.w(0, 0, 0).cols());
                for (int l = begin; l < end; ++l) avg += sol.w(n, l, k);
                avg /= static_cast<double>(end - begin);
                for (int l = begin; l < end; ++l) out.w(n, l, k) = avg;
            }
        }
    return out;
}

MaxMinRateResult solve_max_min_rate(const Instance& inst, const OptimizerSettings& settings) {
    MaxMinRateResult out;
    Ctx ctx(inst, Requirements{0.0, 0.0}, settings.slot_collapse, false, false);
    const auto& cfg = inst.cfg;
    const int K = ctx.K;

    auto current = BeamformingSolution::zeros(cfg.n_subcarriers, cfg.n_symbols, K + 1, cfg.n_tx);
    const CMat iso = (cfg.tx_power / (cfg.n_subcarriers * K * cfg.n_tx)) *
                     CMat::Identity(cfg.n_tx, cfg.n_tx);
    for (int n = 0; n < cfg.n_subcarriers; ++n)
        for (int l = 0; l < cfg.n_symbols; ++l)
            for (int k = 1; k <= K; ++k) current.w(n, l, k) = iso;

    double prev = -1.0;
    for (int it = 0; it < settings.max_iterations; ++it) {
        ConicProgram pr;
        SubproblemLayout lay = declare_core(pr, ctx);
        const VarId r = pr.add_scalar_var("min_rate");
        lay.slack = r;
        for (int k = 0; k < K; ++k) add_sca_rate_constraint(pr, ctx, lay, current, k, 0.0, r);
        AffineExpr cost;
        cost.add(r, -1.0);
        pr.add_linear_cost(cost);
        AffineExpr zeta_pin;
        zeta_pin.add(lay.zeta, 1.0);
        pr.add_eq(zeta_pin);

        auto res = conic::solve(pr, settings.subproblem_tol);
        if (res.status != conic::SolveStatus::optimal) {
            out.status = OptimizeStatus::numerical_failure;
            return out;
        }
        current = expand_solution(ctx, lay, res);
        current.zeta = 1.0;
        double min_rate = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) min_rate = std::min(min_rate, true_rate(ctx, current, k));
        out.min_rate = min_rate;
        if (it > 0 && std::abs(min_rate - prev) / std::max(prev, 1e-12) <
                          settings.convergence_rel_tol)
            break;
        prev = min_rate;
    }
    out.solution = current;
    out.status = OptimizeStatus::ok;
    return out;
}

std::string IterationTrace::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "iteration,objective,seconds\n";
    for (std::size_t i = 0; i < objective.size(); ++i)
        os << i << "," << objective[i] << "," << seconds[i] << "\n";
    return os.str();
}

}  // namespace iscap::optimizer
