#include "iscap/baselines.hpp"

#include <cmath>
#include <sstream>

#include "iscap/joint_optimizer.hpp"
#include "iscap/rank1_extraction.hpp"

namespace iscap::baselines {

using conic::AffineExpr;
using conic::ConicProgram;
using conic::LogBound;
using conic::SocConstraint;
using conic::VarId;
using metrics::BeamformingSolution;
using scenario::Instance;

namespace {
constexpr double kLn2 = 0.6931471805599453;

BaselineStatus map_status(conic::SolveStatus s) {
    switch (s) {
        case conic::SolveStatus::optimal: return BaselineStatus::ok;
        case conic::SolveStatus::infeasible: return BaselineStatus::requirements_infeasible;
        default: return BaselineStatus::numerical_failure;
    }
}
}  // namespace

ZfBasis zf_build_basis(const Instance& inst) {
    const auto& cfg = inst.cfg;
    const int K = inst.channels.n_ir();
    const int N = cfg.n_subcarriers;
    if (K >= cfg.n_tx)
        throw DegenerateChannelError("zero forcing needs fewer IRs than transmit antennas");

    ZfBasis basis;
    basis.directions.resize(N);
    basis.null_basis.resize(N);
    basis.lambda.assign(N, std::vector<double>(K, 0.0));
    basis.delta.assign(inst.grid.size(),
                       std::vector<std::vector<double>>(N, std::vector<double>(K, 0.0)));
    basis.delta0.assign(inst.grid.size(), std::vector<CVec>(N));
    const int n_er = inst.channels.n_er();
    basis.rho.assign(N, std::vector<std::vector<double>>(n_er, std::vector<double>(K, 0.0)));
    basis.rho0.assign(N, std::vector<CVec>(n_er));

    for (int n = 0; n < N; ++n) {
        CMat H(cfg.n_tx, K);
        for (int k = 0; k < K; ++k) H.col(k) = inst.channels.ir(n, k);
        const CMat gram = H.adjoint() * H;
        Eigen::SelfAdjointEigenSolver<CMat> gram_eig(gram, Eigen::EigenvaluesOnly);
        if (gram_eig.eigenvalues().minCoeff() <= 1e-12 * gram_eig.eigenvalues().maxCoeff())
            throw DegenerateChannelError("IR channel matrix is rank deficient");
        const CMat pinv = H * gram.inverse();
        basis.directions[n].resize(K);
        for (int k = 0; k < K; ++k) {
            basis.directions[n][k] = pinv.col(k) / pinv.col(k).norm();
            basis.lambda[n][k] =
                std::abs((inst.channels.ir(n, k).adjoint() * basis.directions[n][k]).value());
        }
        Eigen::SelfAdjointEigenSolver<CMat> eig(H * H.adjoint());
        basis.null_basis[n] = eig.eigenvectors().leftCols(cfg.n_tx - K);

        for (int m = 0; m < inst.grid.size(); ++m) {
            const CVec vconj =
                scenario::steering_vector(inst.grid.angles[m], cfg.n_tx, cfg.spacing_ratio)
                    .conjugate();
            for (int k = 0; k < K; ++k)
                basis.delta[m][n][k] = std::abs((vconj.adjoint() * basis.directions[n][k]).value());
            basis.delta0[m][n] = basis.null_basis[n].adjoint() * vconj;
        }
        for (int i = 0; i < n_er; ++i) {
            const CVec g = inst.channels.er(n, i);
            for (int k = 0; k < K; ++k)
                basis.rho[n][i][k] = std::abs((g.adjoint() * basis.directions[n][k]).value());
            basis.rho0[n][i] = basis.null_basis[n].adjoint() * g;
        }
    }
    return basis;
}

BaselineResult zf_solve(const Instance& inst, const Requirements& req) {
    BaselineResult out;
    const auto& cfg = inst.cfg;
    const int K = inst.channels.n_ir();
    const int N = cfg.n_subcarriers;
    const int Q = cfg.n_slots;
    const double wb = static_cast<double>(cfg.n_symbols) / Q;  // slot-constant design
    const int null_dim = cfg.n_tx - K;
    const ZfBasis basis = zf_build_basis(inst);

    ConicProgram pr;
    // power variables p[n][q][k] and null-space covariances P0[n][q]
    std::vector<std::vector<std::vector<VarId>>> p(
        N, std::vector<std::vector<VarId>>(Q, std::vector<VarId>(K)));
    std::vector<std::vector<VarId>> p0(N, std::vector<VarId>(Q));
    for (int n = 0; n < N; ++n)
        for (int q = 0; q < Q; ++q) {
            for (int k = 0; k < K; ++k) {
                std::ostringstream name;
                name << "p_n" << n << "_q" << q << "_k" << k + 1;
                p[n][q][k] = pr.add_scalar_var(name.str());
                AffineExpr nonneg;
                nonneg.add(p[n][q][k], 1.0);
                pr.add_ineq(nonneg);
            }
            std::ostringstream name;
            name << "P0_n" << n << "_q" << q;
            p0[n][q] = pr.add_hermitian_var(name.str(), null_dim);
            pr.add_psd(p0[n][q]);
        }
    const VarId zeta = pr.add_scalar_var("zeta");

    for (int q = 0; q < Q; ++q) {
        AffineExpr power;
        for (int n = 0; n < N; ++n) {
            for (int k = 0; k < K; ++k) power.add(p[n][q][k], 1.0);
            power.add_matrix(p0[n][q], CMat::Identity(null_dim, null_dim));
        }
        power += -cfg.tx_power;
        pr.add_eq(power);
    }

    const double rt_wb = std::sqrt(wb);
    for (int q = 0; q < Q; ++q)
        for (int m = 0; m < inst.grid.size(); ++m) {
            AffineExpr resid;
            for (int n = 0; n < N; ++n) {
                for (int k = 0; k < K; ++k) {
                    const double d = basis.delta[m][n][k];
                    resid.add(p[n][q][k], rt_wb * d * d);
                }
                resid.add_matrix(p0[n][q],
                                 rt_wb * (basis.delta0[m][n] * basis.delta0[m][n].adjoint()));
            }
            resid.add(zeta, -rt_wb * inst.desired[q][m]);
            pr.add_square_term(std::move(resid));
        }

    for (int k = 0; k < K; ++k) {
        LogBound lb;
        lb.rhs += static_cast<double>(cfg.n_symbols) * N * req.rate_bps_hz;
        for (int q = 0; q < Q; ++q)
            for (int n = 0; n < N; ++n) {
                const double snr_per_watt =
                    basis.lambda[n][k] * basis.lambda[n][k] / cfg.noise_power_comm;
                AffineExpr arg;
                arg.add(p[n][q][k], snr_per_watt);
                arg += 1.0;
                lb.coeffs.push_back(wb / kLn2);
                lb.args.push_back(std::move(arg));
                lb.expansion_hints.push_back(1.0 +
                                             snr_per_watt * cfg.tx_power / (N * (K + 1.0)));
            }
        pr.add_log_bound(std::move(lb));
    }

    for (int i = 0; i < inst.channels.n_er(); ++i) {
        AffineExpr er;
        for (int q = 0; q < Q; ++q)
            for (int n = 0; n < N; ++n) {
                for (int k = 0; k < K; ++k)
                    er.add(p[n][q][k], (wb / cfg.n_symbols) * basis.rho[n][i][k] *
                                           basis.rho[n][i][k]);
                er.add_matrix(p0[n][q], (wb / cfg.n_symbols) *
                                            (basis.rho0[n][i] * basis.rho0[n][i].adjoint()));
            }
        er += -req.er_power_w;
        pr.add_ineq(er);
    }

    auto res = conic::solve(pr);
    out.status = map_status(res.status);
    out.message = res.message;
    if (out.status != BaselineStatus::ok) return out;

    auto sol = BeamformingSolution::zeros(N, cfg.n_symbols, K + 1, cfg.n_tx);
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < cfg.n_symbols; ++l) {
            const int q = inst.schedule.slot_of_symbol(l);
            sol.w(n, l, 0) = basis.null_basis[n] * res.matrix_values[p0[n][q]] *
                             basis.null_basis[n].adjoint();
            for (int k = 0; k < K; ++k) {
                const double pw = std::max(res.scalar_values[p[n][q][k]], 0.0);
                sol.w(n, l, k + 1) =
                    pw * basis.directions[n][k] * basis.directions[n][k].adjoint();
            }
        }
    sol.zeta = std::max(res.scalar_values[zeta], 0.0);
    sol.hermitize();
    out.solution = std::move(sol);
    return out;
}

int round_robin_index(int n, int l_one_based, int n_subcarriers, int n_ir) {
    const int r = (n + (l_one_based - 1) * n_subcarriers) % n_ir;
    return r == 0 ? n_ir : r;
}

namespace {

struct RrBuild {
    ConicProgram pr;
    std::vector<std::vector<VarId>> w;   // scheduled stream per (n, l)
    std::vector<std::vector<VarId>> w0;  // dedicated stream, probe mode only
    VarId zeta = -1;
};

// Common constraint set of the relaxed round-robin problem. With the
// dedicated stream absent the rate constraints are exact; with it present
// they are linearized at W0 = 0, which under-estimates the true rate and so
// never admits an infeasible point.
RrBuild rr_build(const Instance& inst, const Requirements& req, bool with_w0,
                 const BeamformingSolution* hint) {
    const auto& cfg = inst.cfg;
    const int K = inst.channels.n_ir();
    const int N = cfg.n_subcarriers;
    const int L = cfg.n_symbols;
    RrBuild b;
    b.w.assign(N, std::vector<VarId>(L, -1));
    if (with_w0) b.w0.assign(N, std::vector<VarId>(L, -1));
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < L; ++l) {
            std::ostringstream name;
            name << "W_n" << n << "_l" << l;
            b.w[n][l] = b.pr.add_hermitian_var(name.str(), cfg.n_tx);
            b.pr.add_psd(b.w[n][l]);
            if (with_w0) {
                std::ostringstream n0;
                n0 << "W0_n" << n << "_l" << l;
                b.w0[n][l] = b.pr.add_hermitian_var(n0.str(), cfg.n_tx);
                b.pr.add_psd(b.w0[n][l]);
            }
            AffineExpr tr;
            tr.add_matrix(b.w[n][l], CMat::Identity(cfg.n_tx, cfg.n_tx));
            if (with_w0) tr.add_matrix(b.w0[n][l], CMat::Identity(cfg.n_tx, cfg.n_tx));
            tr += -cfg.tx_power / N;
            b.pr.add_eq(tr);
        }
    b.zeta = b.pr.add_scalar_var("zeta");

    for (int k = 1; k <= K; ++k) {
        LogBound lb;
        lb.rhs += static_cast<double>(L) * N * req.rate_bps_hz;
        for (int l = 0; l < L; ++l)
            for (int n = 0; n < N; ++n) {
                if (round_robin_index(n, l + 1, N, K) != k) continue;
                const CVec h = inst.channels.ir(n, k - 1);
                const CMat snr_coeff = (h * h.adjoint()) / cfg.noise_power_comm;
                AffineExpr arg;
                arg.add_matrix(b.w[n][l], snr_coeff);
                if (with_w0) arg.add_matrix(b.w0[n][l], snr_coeff);
                arg += 1.0;
                lb.coeffs.push_back(1.0 / kLn2);
                double hint_val = 1.0 + h.squaredNorm() * cfg.tx_power /
                                            (N * cfg.noise_power_comm);
                if (hint) {
                    hint_val = 1.0;
                    for (int i = 0; i < hint->n_streams(); ++i)
                        hint_val += (h.adjoint() * hint->w(n, l, i) * h).value().real() /
                                    cfg.noise_power_comm;
                }
                lb.args.push_back(std::move(arg));
                lb.expansion_hints.push_back(hint_val);
                if (with_w0) {
                    // tangent of -log2(h^H W0 h + sigma^2) at W0 = 0
                    lb.rhs.add_matrix(b.w0[n][l], (h * h.adjoint()) /
                                                      (cfg.noise_power_comm * kLn2));
                }
            }
        b.pr.add_log_bound(std::move(lb));
    }

    for (int i = 0; i < inst.channels.n_er(); ++i) {
        AffineExpr er;
        for (int l = 0; l < L; ++l)
            for (int n = 0; n < N; ++n) {
                const CVec g = inst.channels.er(n, i);
                const CMat coeff = (g * g.adjoint()) / static_cast<double>(L);
                er.add_matrix(b.w[n][l], coeff);
                if (with_w0) er.add_matrix(b.w0[n][l], coeff);
            }
        er += -req.er_power_w;
        b.pr.add_ineq(er);
    }
    return b;
}

AffineExpr rr_gain_residual(const Instance& inst, const RrBuild& b, int l, int m, bool with_w0) {
    const auto& cfg = inst.cfg;
    const CVec c = scenario::steering_vector(inst.grid.angles[m], cfg.n_tx, cfg.spacing_ratio)
                       .conjugate();
    const CMat coeff = c * c.adjoint();
    AffineExpr resid;
    for (int n = 0; n < cfg.n_subcarriers; ++n) {
        resid.add_matrix(b.w[n][l], coeff);
        if (with_w0) resid.add_matrix(b.w0[n][l], coeff);
    }
    const int q = inst.schedule.slot_of_symbol(l);
    resid.add(b.zeta, -inst.desired[q][m]);
    return resid;
}

BeamformingSolution rr_collect(const Instance& inst, const RrBuild& b,
                               const conic::SolveResult& res, bool with_w0) {
    const auto& cfg = inst.cfg;
    const int K = inst.channels.n_ir();
    auto sol = BeamformingSolution::zeros(cfg.n_subcarriers, cfg.n_symbols, K + 1, cfg.n_tx);
    for (int n = 0; n < cfg.n_subcarriers; ++n)
        for (int l = 0; l < cfg.n_symbols; ++l) {
            const int k = round_robin_index(n, l + 1, cfg.n_subcarriers, K);
            sol.w(n, l, k) = res.matrix_values[b.w[n][l]];
            if (with_w0) sol.w(n, l, 0) = res.matrix_values[b.w0[n][l]];
        }
    sol.zeta = std::max(res.scalar_values[b.zeta], 0.0);
    sol.hermitize();
    return sol;
}

}  // namespace

BaselineResult round_robin_solve(const Instance& inst, const Requirements& req) {
    BaselineResult out;
    RrBuild b = rr_build(inst, req, /*with_w0=*/false, nullptr);
    for (int l = 0; l < inst.cfg.n_symbols; ++l)
        for (int m = 0; m < inst.grid.size(); ++m)
            b.pr.add_square_term(rr_gain_residual(inst, b, l, m, false));
    auto res = conic::solve(b.pr);
    out.status = map_status(res.status);
    out.message = res.message;
    if (out.status != BaselineStatus::ok) return out;
    // The relaxed solution may be high rank; project onto beams.
    out.solution = rank1::extract(rr_collect(inst, b, res, false), inst.channels);
    return out;
}

double round_robin_w0_probe(const Instance& inst, const Requirements& req) {
    RrBuild stage1 = rr_build(inst, req, false, nullptr);
    for (int l = 0; l < inst.cfg.n_symbols; ++l)
        for (int m = 0; m < inst.grid.size(); ++m)
            stage1.pr.add_square_term(rr_gain_residual(inst, stage1, l, m, false));
    auto res1 = conic::solve(stage1.pr);
    if (res1.status != conic::SolveStatus::optimal)
        throw ConfigError("round-robin probe: stage-1 solve failed");
    const double best_err = res1.objective_value;
    const BeamformingSolution ref = rr_collect(inst, stage1, res1, false);

    RrBuild b = rr_build(inst, req, /*with_w0=*/true, &ref);
    // hold the matching error on the optimal face and minimize the
    // dedicated-stream power
    SocConstraint face;
    face.bound += std::sqrt(best_err * (1.0 + 1e-9));
    for (int l = 0; l < inst.cfg.n_symbols; ++l)
        for (int m = 0; m < inst.grid.size(); ++m)
            face.terms.push_back(rr_gain_residual(inst, b, l, m, true));
    b.pr.add_soc(std::move(face));
    AffineExpr cost;
    for (int n = 0; n < inst.cfg.n_subcarriers; ++n)
        for (int l = 0; l < inst.cfg.n_symbols; ++l)
            cost.add_matrix(b.w0[n][l], CMat::Identity(inst.cfg.n_tx, inst.cfg.n_tx));
    b.pr.add_linear_cost(cost);
    auto res = conic::solve(b.pr);
    if (res.status != conic::SolveStatus::optimal)
        throw ConfigError("round-robin probe: stage-2 solve failed");
    double total_w0 = 0.0;
    for (int n = 0; n < inst.cfg.n_subcarriers; ++n)
        for (int l = 0; l < inst.cfg.n_symbols; ++l)
            total_w0 += res.matrix_values[b.w0[n][l]].trace().real();
    return total_w0;
}

namespace {

// Sensing/powering phases share the dedicated-stream-only structure.
struct Stream0Build {
    ConicProgram pr;
    std::vector<std::vector<VarId>> w0;  // [n][slot]
    VarId zeta = -1;
};

Stream0Build stream0_build(const Instance& inst) {
    const auto& cfg = inst.cfg;
    Stream0Build b;
    b.w0.assign(cfg.n_subcarriers, std::vector<VarId>(cfg.n_slots, -1));
    for (int n = 0; n < cfg.n_subcarriers; ++n)
        for (int q = 0; q < cfg.n_slots; ++q) {
            std::ostringstream name;
            name << "W0_n" << n << "_q" << q;
            b.w0[n][q] = b.pr.add_hermitian_var(name.str(), cfg.n_tx);
            b.pr.add_psd(b.w0[n][q]);
        }
    for (int q = 0; q < cfg.n_slots; ++q) {
        AffineExpr power;
        for (int n = 0; n < cfg.n_subcarriers; ++n)
            power.add_matrix(b.w0[n][q], CMat::Identity(cfg.n_tx, cfg.n_tx));
        power += -cfg.tx_power;
        b.pr.add_eq(power);
    }
    return b;
}

BeamformingSolution stream0_collect(const Instance& inst, const Stream0Build& b,
                                    const conic::SolveResult& res, int n_streams) {
    const auto& cfg = inst.cfg;
    auto sol = BeamformingSolution::zeros(cfg.n_subcarriers, cfg.n_symbols, n_streams, cfg.n_tx);
    for (int n = 0; n < cfg.n_subcarriers; ++n)
        for (int l = 0; l < cfg.n_symbols; ++l)
            sol.w(n, l, 0) = res.matrix_values[b.w0[n][inst.schedule.slot_of_symbol(l)]];
    sol.zeta = b.zeta >= 0 ? std::max(res.scalar_values[b.zeta], 0.0) : 0.0;
    sol.hermitize();
    return sol;
}

}  // namespace

BaselineResult sensing_only_solve(const Instance& inst) {
    BaselineResult out;
    const auto& cfg = inst.cfg;
    Stream0Build b = stream0_build(inst);
    b.zeta = b.pr.add_scalar_var("zeta");
    const double rt_wb = std::sqrt(static_cast<double>(cfg.n_symbols) / cfg.n_slots);
    for (int q = 0; q < cfg.n_slots; ++q)
        for (int m = 0; m < inst.grid.size(); ++m) {
            const CVec c = scenario::steering_vector(inst.grid.angles[m], cfg.n_tx,
                                                     cfg.spacing_ratio)
                               .conjugate();
            AffineExpr resid;
            for (int n = 0; n < cfg.n_subcarriers; ++n)
                resid.add_matrix(b.w0[n][q], rt_wb * (c * c.adjoint()));
            resid.add(b.zeta, -rt_wb * inst.desired[q][m]);
            b.pr.add_square_term(std::move(resid));
        }
    auto res = conic::solve(b.pr);
    out.status = map_status(res.status);
    out.message = res.message;
    if (out.status != BaselineStatus::ok) return out;
    const int K = inst.channels.n_ir();
    out.solution = stream0_collect(inst, b, res, K + 1);
    return out;
}

metrics::BeamformingSolution TimeSwitchDesign::mixture_solution() const {
    BeamformingSolution mix = phase[0];
    for (int n = 0; n < mix.n_subcarriers(); ++n)
        for (int l = 0; l < mix.n_symbols(); ++l)
            for (int k = 0; k < mix.n_streams(); ++k)
                mix.w(n, l, k) = t[0] * phase[0].w(n, l, k) + t[1] * phase[1].w(n, l, k) +
                                 t[2] * phase[2].w(n, l, k);
    mix.zeta = zeta;
    return mix;
}

double TimeSwitchDesign::min_rate() const {
    double mn = std::numeric_limits<double>::infinity();
    for (double r : phase_rate[1]) mn = std::min(mn, r);
    return t[1] * mn;
}

double TimeSwitchDesign::min_er_power() const {
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < phase_er[0].size(); ++i)
        mn = std::min(mn, t[0] * phase_er[0][i] + t[1] * phase_er[1][i] + t[2] * phase_er[2][i]);
    return mn;
}

TimeSwitchResult time_switch_solve(const Instance& inst, const Requirements& req) {
    TimeSwitchResult out;
    const auto& cfg = inst.cfg;
    const int K = inst.channels.n_ir();
    const int n_er = inst.channels.n_er();

    // Phase 1: sensing-only matching.
    auto p1 = sensing_only_solve(inst);
    if (p1.status != BaselineStatus::ok) {
        out.status = p1.status;
        out.message = "sensing phase: " + p1.message;
        return out;
    }
    // Phase 2: max-min rate over information beams.
    optimizer::OptimizerSettings mm;
    mm.max_iterations = 30;
    mm.convergence_rel_tol = 1e-4;
    auto p2 = optimizer::solve_max_min_rate(inst, mm);
    if (p2.status != optimizer::OptimizeStatus::ok) {
        out.status = BaselineStatus::numerical_failure;
        out.message = "communication phase failed";
        return out;
    }
    // Phase 3: max-min harvested power.
    Stream0Build b3 = stream0_build(inst);
    const VarId s = b3.pr.add_scalar_var("min_power");
    for (int i = 0; i < n_er; ++i) {
        AffineExpr er;
        for (int q = 0; q < cfg.n_slots; ++q)
            for (int n = 0; n < cfg.n_subcarriers; ++n) {
                const CVec g = inst.channels.er(n, i);
                er.add_matrix(b3.w0[n][q],
                              (g * g.adjoint()) * (1.0 / cfg.n_slots));
            }
        er.add(s, -1.0);
        b3.pr.add_ineq(er);
    }
    AffineExpr cost3;
    cost3.add(s, -1.0);
    b3.pr.add_linear_cost(cost3);
    auto res3 = conic::solve(b3.pr);
    if (res3.status != conic::SolveStatus::optimal) {
        out.status = map_status(res3.status);
        out.message = "powering phase: " + res3.message;
        return out;
    }

    TimeSwitchDesign& d = out.design;
    d.phase[0] = p1.solution;
    d.phase[1] = p2.solution;
    d.phase[2] = stream0_collect(inst, b3, res3, K + 1);

    for (int j = 0; j < 3; ++j) {
        d.phase_gain[j].assign(cfg.n_slots, std::vector<double>(inst.grid.size(), 0.0));
        for (int q = 0; q < cfg.n_slots; ++q) {
            const int l = inst.schedule.slot_symbols[q].first;
            for (int m = 0; m < inst.grid.size(); ++m)
                d.phase_gain[j][q][m] = metrics::beampattern_gain(d.phase[j], l,
                                                                  inst.grid.angles[m],
                                                                  cfg.spacing_ratio);
        }
        for (int k = 0; k < K; ++k)
            d.phase_rate[j].push_back(
                metrics::average_rate(d.phase[j], inst.channels, k, cfg.noise_power_comm));
        for (int i = 0; i < n_er; ++i)
            d.phase_er[j].push_back(metrics::harvested_power(d.phase[j], inst.channels, i));
    }

    // Time allocation: convex in (t, zeta).
    ConicProgram alloc;
    VarId t_var[3];
    for (int j = 0; j < 3; ++j) {
        std::ostringstream name;
        name << "t" << j + 1;
        t_var[j] = alloc.add_scalar_var(name.str());
        AffineExpr nonneg;
        nonneg.add(t_var[j], 1.0);
        alloc.add_ineq(nonneg);
    }
    const VarId zeta = alloc.add_scalar_var("zeta");
    AffineExpr simplex;
    for (int j = 0; j < 3; ++j) simplex.add(t_var[j], 1.0);
    simplex += -1.0;
    alloc.add_eq(simplex);
    for (int k = 0; k < K; ++k) {
        AffineExpr rate;
        rate.add(t_var[1], d.phase_rate[1][k]);
        rate += -req.rate_bps_hz;
        alloc.add_ineq(rate);
    }
    for (int i = 0; i < n_er; ++i) {
        AffineExpr er;
        for (int j = 0; j < 3; ++j) er.add(t_var[j], d.phase_er[j][i]);
        er += -req.er_power_w;
        alloc.add_ineq(er);
    }
    const double rt_wb = std::sqrt(static_cast<double>(cfg.n_symbols) / cfg.n_slots);
    for (int q = 0; q < cfg.n_slots; ++q)
        for (int m = 0; m < inst.grid.size(); ++m) {
            AffineExpr resid;
            for (int j = 0; j < 3; ++j) resid.add(t_var[j], rt_wb * d.phase_gain[j][q][m]);
            resid.add(zeta, -rt_wb * inst.desired[q][m]);
            alloc.add_square_term(std::move(resid));
        }
    auto res = conic::solve(alloc);
    out.status = map_status(res.status);
    out.message = res.message;
    if (out.status != BaselineStatus::ok) return out;
    for (int j = 0; j < 3; ++j) d.t[j] = std::clamp(res.scalar_values[t_var[j]], 0.0, 1.0);
    d.zeta = std::max(res.scalar_values[zeta], 0.0);
    d.matching_error = res.objective_value;
    return out;
}

}  // namespace iscap::baselines
