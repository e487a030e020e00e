#include "iscap/conic.hpp"

#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <sstream>

#include "ipm.hpp"

namespace iscap::conic {

AffineExpr& AffineExpr::add(VarId scalar_var, double coeff) {
    scalar_terms.emplace_back(scalar_var, coeff);
    return *this;
}

AffineExpr& AffineExpr::add_matrix(VarId matrix_var, const CMat& coeff) {
    matrix_terms.emplace_back(matrix_var, CMat(0.5 * (coeff + coeff.adjoint())));
    return *this;
}

VarId ConicProgram::add_hermitian_var(const std::string& name, int dim) {
    if (dim < 1) throw ConfigError("hermitian variable needs dim >= 1");
    matrix_names_.push_back(name);
    matrix_dims_.push_back(dim);
    return static_cast<VarId>(matrix_dims_.size() - 1);
}

VarId ConicProgram::add_scalar_var(const std::string& name) {
    scalar_names_.push_back(name);
    return static_cast<VarId>(scalar_names_.size() - 1);
}

void ConicProgram::add_psd(VarId matrix_var) {
    if (matrix_var < 0 || matrix_var >= n_matrix_vars())
        throw ConfigError("add_psd: unknown matrix variable");
    psd_vars_.push_back(matrix_var);
}

RMat lift_hermitian(const CMat& w) {
    const int n = static_cast<int>(w.rows());
    RMat out(2 * n, 2 * n);
    const RMat a = w.real();
    const RMat b = w.imag();
    out.topLeftCorner(n, n) = a;
    out.bottomRightCorner(n, n) = a;
    out.topRightCorner(n, n) = -b;
    out.bottomLeftCorner(n, n) = b;
    return out;
}

CMat unlift_hermitian(const RMat& lifted) {
    const int n = static_cast<int>(lifted.rows()) / 2;
    CMat w(n, n);
    w.real() = lifted.topLeftCorner(n, n);
    w.imag() = lifted.bottomLeftCorner(n, n);
    return w;
}

double evaluate(const AffineExpr& expr, const std::vector<CMat>& matrix_values,
                const std::vector<double>& scalar_values) {
    double v = expr.constant;
    for (const auto& [id, coeff] : expr.scalar_terms) v += coeff * scalar_values[id];
    for (const auto& [id, coeff] : expr.matrix_terms)
        v += (coeff.adjoint() * matrix_values[id]).trace().real();
    return v;
}

namespace {

// ---------------------------------------------------------------------------
// Standard-form assembly
//
// Variable vector layout: [hermitian parameters per matrix var][user scalars]
// [objective epigraph u][one slack per log term]. Hermitian parameters per
// column j: Re W_jj, then (Re W_ij, Im W_ij) for i > j.
// ---------------------------------------------------------------------------

struct Assembly {
    std::vector<int> mat_offset;  // param offset per matrix var
    int n_params = 0;
    int scalar_offset = 0;
    int epigraph = -1;        // index of u, or -1
    int log_slack_offset = 0; // first log-term slack
    int n = 0;
    ipm::Problem prob;
};

int param_count(int dim) { return dim * dim; }

// Offset of the (i, j) lower-triangle parameter pair within a matrix block.
int diag_param(int dim, int j) {
    // start of column j's parameters
    int off = 0;
    for (int t = 0; t < j; ++t) off += 1 + 2 * (dim - 1 - t);
    return off;
}

void add_expr_terms(const ConicProgram& pr, const Assembly& as, const AffineExpr& e, int row,
                    std::vector<Eigen::Triplet<double>>& trips, double sign) {
    for (const auto& [id, coeff] : e.scalar_terms)
        trips.emplace_back(row, as.scalar_offset + id, sign * coeff);
    for (const auto& [id, c] : e.matrix_terms) {
        const int dim = pr.matrix_dim(id);
        const int base = as.mat_offset[id];
        for (int j = 0; j < dim; ++j) {
            const int dp = base + diag_param(dim, j);
            const double cd = c(j, j).real();
            if (cd != 0.0) trips.emplace_back(row, dp, sign * cd);
            for (int i = j + 1; i < dim; ++i) {
                const int re_p = dp + 1 + 2 * (i - j - 1);
                const double cre = 2.0 * c(i, j).real();
                const double cim = 2.0 * c(i, j).imag();
                if (cre != 0.0) trips.emplace_back(row, re_p, sign * cre);
                if (cim != 0.0) trips.emplace_back(row, re_p + 1, sign * cim);
            }
        }
    }
}

Assembly assemble(const ConicProgram& pr, const std::vector<std::vector<double>>& expansions) {
    Assembly as;
    as.mat_offset.resize(pr.n_matrix_vars());
    int off = 0;
    for (int v = 0; v < pr.n_matrix_vars(); ++v) {
        as.mat_offset[v] = off;
        off += param_count(pr.matrix_dim(v));
    }
    as.n_params = off;
    as.scalar_offset = off;
    off += pr.n_scalar_vars();
    if (!pr.squares_.empty()) as.epigraph = off++;
    as.log_slack_offset = off;
    int n_log_terms = 0;
    for (const auto& lb : pr.log_bounds_) n_log_terms += static_cast<int>(lb.args.size());
    off += n_log_terms;
    as.n = off;

    ipm::Problem& P = as.prob;
    P.c = RVec::Zero(as.n);
    for (const auto& e : pr.linear_cost_) {
        for (const auto& [id, coeff] : e.scalar_terms) P.c(as.scalar_offset + id) += coeff;
        for (const auto& [id, c] : e.matrix_terms) {
            const int dim = pr.matrix_dim(id);
            const int base = as.mat_offset[id];
            for (int j = 0; j < dim; ++j) {
                const int dp = base + diag_param(dim, j);
                P.c(dp) += c(j, j).real();
                for (int i = j + 1; i < dim; ++i) {
                    const int re_p = dp + 1 + 2 * (i - j - 1);
                    P.c(re_p) += 2.0 * c(i, j).real();
                    P.c(re_p + 1) += 2.0 * c(i, j).imag();
                }
            }
        }
    }
    if (as.epigraph >= 0) P.c(as.epigraph) += 1.0;

    std::vector<Eigen::Triplet<double>> gt, at;
    std::vector<double> hval, bval;

    // --- nonneg rows: user inequalities, then log-bound surrogate rows ---
    int row = 0;
    for (const auto& e : pr.inequalities_) {
        add_expr_terms(pr, as, e, row, gt, -1.0);
        hval.push_back(e.constant);
        ++row;
    }
    int slack = as.log_slack_offset;
    for (std::size_t li = 0; li < pr.log_bounds_.size(); ++li) {
        const auto& lb = pr.log_bounds_[li];
        // sum_j c_j (log xhat_j + 1 - t_j) - rhs >= 0
        double cst = -lb.rhs.constant;
        AffineExpr neg_rhs;
        neg_rhs.scalar_terms = lb.rhs.scalar_terms;
        neg_rhs.matrix_terms = lb.rhs.matrix_terms;
        add_expr_terms(pr, as, neg_rhs, row, gt, 1.0);  // -(-rhs) = +rhs on G, sign folds below
        for (std::size_t j = 0; j < lb.args.size(); ++j) {
            const double xhat = expansions[li][j];
            cst += lb.coeffs[j] * (std::log(xhat) + 1.0);
            gt.emplace_back(row, slack + static_cast<int>(j), lb.coeffs[j]);
        }
        hval.push_back(cst);
        slack += static_cast<int>(lb.args.size());
        ++row;
    }
    const int n_nonneg = row;

    ipm::ConeDims cones;
    cones.nonneg = n_nonneg;

    // --- SOC blocks ---
    auto add_soc_row = [&](const AffineExpr& e, double sign) {
        add_expr_terms(pr, as, e, row, gt, -sign);
        hval.push_back(sign * e.constant);
        ++row;
    };
    for (const auto& soc : pr.socs_) {
        add_soc_row(soc.bound, 1.0);
        for (const auto& t : soc.terms) add_soc_row(t, 1.0);
        cones.soc.push_back(1 + static_cast<int>(soc.terms.size()));
    }
    if (as.epigraph >= 0) {
        // || (terms, (1-u)/2) || <= (1+u)/2
        gt.emplace_back(row, as.epigraph, -0.5);
        hval.push_back(0.5);
        ++row;
        for (const auto& e : pr.squares_) add_soc_row(e, 1.0);
        gt.emplace_back(row, as.epigraph, 0.5);
        hval.push_back(0.5);
        ++row;
        cones.soc.push_back(2 + static_cast<int>(pr.squares_.size()));
    }
    slack = as.log_slack_offset;
    for (std::size_t li = 0; li < pr.log_bounds_.size(); ++li) {
        const auto& lb = pr.log_bounds_[li];
        for (std::size_t j = 0; j < lb.args.size(); ++j) {
            const double xhat = expansions[li][j];
            // || (2 sqrt(xhat), a_j - t_j) || <= a_j + t_j   <=>  a_j t_j >= xhat
            add_expr_terms(pr, as, lb.args[j], row, gt, -1.0);
            gt.emplace_back(row, slack, -1.0);
            hval.push_back(lb.args[j].constant);
            ++row;
            hval.push_back(2.0 * std::sqrt(xhat));
            ++row;
            add_expr_terms(pr, as, lb.args[j], row, gt, -1.0);
            gt.emplace_back(row, slack, 1.0);
            hval.push_back(lb.args[j].constant);
            ++row;
            cones.soc.push_back(3);
            ++slack;
        }
    }

    // --- PSD blocks (lifted Hermitian) ---
    const double rt2 = std::sqrt(2.0);
    for (VarId v : pr.psd_vars_) {
        const int dim = pr.matrix_dim(v);
        const int base = as.mat_offset[v];
        const int D = 2 * dim;
        auto svec_index = [D](int i, int j) {  // i >= j
            return j * D - j * (j - 1) / 2 + (i - j);
        };
        for (int j = 0; j < dim; ++j) {
            const int dp = base + diag_param(dim, j);
            gt.emplace_back(row + svec_index(j, j), dp, -1.0);
            gt.emplace_back(row + svec_index(dim + j, dim + j), dp, -1.0);
            for (int i = j + 1; i < dim; ++i) {
                const int re_p = dp + 1 + 2 * (i - j - 1);
                gt.emplace_back(row + svec_index(i, j), re_p, -rt2);
                gt.emplace_back(row + svec_index(dim + i, dim + j), re_p, -rt2);
                gt.emplace_back(row + svec_index(dim + i, j), re_p + 1, -rt2);
                gt.emplace_back(row + svec_index(dim + j, i), re_p + 1, rt2);
            }
        }
        const int L = ipm::svec_len(D);
        for (int r = 0; r < L; ++r) hval.push_back(0.0);
        row += L;
        cones.psd.push_back(D);
    }

    // --- equalities ---
    int erow = 0;
    for (const auto& e : pr.equalities_) {
        add_expr_terms(pr, as, e, erow, at, 1.0);
        bval.push_back(-e.constant);
        ++erow;
    }

    P.G.resize(row, as.n);
    P.G.setFromTriplets(gt.begin(), gt.end());
    P.h = Eigen::Map<RVec>(hval.data(), static_cast<int>(hval.size()));
    P.A.resize(erow, as.n);
    P.A.setFromTriplets(at.begin(), at.end());
    P.b = erow ? Eigen::Map<RVec>(bval.data(), erow) : RVec(0);
    P.cones = cones;
    return as;
}

void extract_values(const ConicProgram& pr, const Assembly& as, const RVec& x, SolveResult& out) {
    out.matrix_values.clear();
    out.scalar_values.clear();
    for (int v = 0; v < pr.n_matrix_vars(); ++v) {
        const int dim = pr.matrix_dim(v);
        const int base = as.mat_offset[v];
        CMat w(dim, dim);
        for (int j = 0; j < dim; ++j) {
            const int dp = base + diag_param(dim, j);
            w(j, j) = x(dp);
            for (int i = j + 1; i < dim; ++i) {
                const int re_p = dp + 1 + 2 * (i - j - 1);
                w(i, j) = cxd(x(re_p), x(re_p + 1));
                w(j, i) = std::conj(w(i, j));
            }
        }
        out.matrix_values.push_back(std::move(w));
    }
    for (int sv = 0; sv < pr.n_scalar_vars(); ++sv)
        out.scalar_values.push_back(x(as.scalar_offset + sv));
}

double true_objective(const ConicProgram& pr, const SolveResult& r) {
    double obj = 0.0;
    for (const auto& e : pr.squares_) {
        const double v = evaluate(e, r.matrix_values, r.scalar_values);
        obj += v * v;
    }
    for (const auto& e : pr.linear_cost_) obj += evaluate(e, r.matrix_values, r.scalar_values);
    return obj;
}

}  // namespace

SolveResult solve(const ConicProgram& program, const SolveTolerances& tol) {
    SolveResult out;

    // Expansion points for the sequential inner approximation of log bounds.
    std::vector<std::vector<double>> expansions(program.log_bounds_.size());
    for (std::size_t li = 0; li < program.log_bounds_.size(); ++li) {
        const auto& lb = program.log_bounds_[li];
        if (lb.coeffs.size() != lb.args.size())
            throw ConfigError("log bound: coefficient/argument count mismatch");
        for (double c : lb.coeffs)
            if (c <= 0.0) throw ConfigError("log bound: coefficients must be positive");
        expansions[li] = lb.expansion_hints;
        expansions[li].resize(lb.args.size(), 1.0);
        for (double& v : expansions[li]) v = std::max(v, 1e-12);
    }
    const bool has_logs = !program.log_bounds_.empty();

    ipm::Options iopts;
    iopts.verbose = std::getenv("ISCAP_IPM_VERBOSE") != nullptr;
    iopts.feas_tol = tol.feasibility;
    iopts.rel_gap_tol = tol.rel_gap;
    iopts.max_iter = tol.max_iterations;

    double prev_obj = std::numeric_limits<double>::infinity();
    double last_move = 0.0;
    int grow_retries = 0;
    const int max_passes = has_logs ? tol.max_log_passes : 1;

    for (int pass = 0; pass < max_passes; ++pass) {
        Assembly as = assemble(program, expansions);
        ipm::Result ir = ipm::solve(as.prob, iopts);
        out.solver_iterations += ir.iterations;

        if (ir.status == ipm::IpmStatus::primal_infeasible) {
            // The inner approximation can be infeasible even when the true
            // program is not; widening the expansion points raises the log
            // surrogates toward the true constraint.
            if (has_logs && grow_retries < 8) {
                ++grow_retries;
                for (auto& exp : expansions)
                    for (double& v : exp) v *= 32.0;
                continue;
            }
            out.status = SolveStatus::infeasible;
            out.message = "primal infeasibility certificate";
            return out;
        }
        if (ir.status == ipm::IpmStatus::dual_infeasible) {
            out.status = SolveStatus::numerical_failure;
            out.message = "objective unbounded below (dual infeasibility certificate)";
            return out;
        }
        if (ir.status != ipm::IpmStatus::optimal) {
            out.status = SolveStatus::numerical_failure;
            out.message = "interior-point iteration failed to certify a result";
            return out;
        }

        extract_values(program, as, ir.x, out);
        out.objective_value = true_objective(program, out);
        out.status = SolveStatus::optimal;

        if (!has_logs) return out;

        // Refine expansion points at the solution; stop when they are fixed.
        double move = 0.0;
        for (std::size_t li = 0; li < program.log_bounds_.size(); ++li) {
            const auto& lb = program.log_bounds_[li];
            for (std::size_t j = 0; j < lb.args.size(); ++j) {
                const double a = evaluate(lb.args[j], out.matrix_values, out.scalar_values);
                const double xhat = expansions[li][j];
                const double target = std::max(a, 1e-30);
                move = std::max(move, std::abs(target - xhat) / std::max(xhat, 1e-30));
                expansions[li][j] = std::clamp(target, xhat * 1e-3, xhat * 1e3);
            }
        }
        const double obj_move =
            std::abs(out.objective_value - prev_obj) / std::max(1.0, std::abs(out.objective_value));
        prev_obj = out.objective_value;
        last_move = move;
        if (move <= tol.log_refine_tol && obj_move <= 10.0 * tol.rel_gap) return out;
    }

    if (out.status != SolveStatus::optimal || last_move > 1e-3) {
        out.status = SolveStatus::numerical_failure;
        out.message = "log-bound refinement did not converge";
    } else {
        out.message = "log-bound refinement reached pass limit";
    }
    return out;
}

std::string ConicProgram::dump() const {
    std::ostringstream os;
    os << "hermitian variables:\n";
    for (int v = 0; v < n_matrix_vars(); ++v)
        os << "  M" << v << " " << matrix_names_[v] << " dim " << matrix_dims_[v] << "\n";
    os << "scalar variables:\n";
    for (int sv = 0; sv < n_scalar_vars(); ++sv) os << "  s" << sv << " " << scalar_names_[sv] << "\n";
    auto put_expr = [&](const AffineExpr& e) {
        os << e.constant;
        for (const auto& [id, c] : e.scalar_terms) os << " + " << c << "*s" << id;
        for (const auto& [id, c] : e.matrix_terms)
            os << " + tr(C" << id << "^H M" << id << ") with ||C||=" << c.norm();
        os << "\n";
    };
    os << "squares (" << squares_.size() << "):\n";
    for (const auto& e : squares_) {
        os << "  ";
        put_expr(e);
    }
    os << "linear cost (" << linear_cost_.size() << "):\n";
    for (const auto& e : linear_cost_) {
        os << "  ";
        put_expr(e);
    }
    os << "equalities (" << equalities_.size() << "):\n";
    for (const auto& e : equalities_) {
        os << "  0 = ";
        put_expr(e);
    }
    os << "inequalities (" << inequalities_.size() << "):\n";
    for (const auto& e : inequalities_) {
        os << "  0 <= ";
        put_expr(e);
    }
    os << "soc (" << socs_.size() << "), log bounds (" << log_bounds_.size() << "), psd ("
       << psd_vars_.size() << ")\n";
    return os.str();
}

}  // namespace iscap::conic
