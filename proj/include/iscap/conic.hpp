#pragma once

/// Declarative convex conic programs over Hermitian matrix and real scalar
/// variables, and the solver contract used by every subproblem in this
/// project. Complex PSD variables are posed over the real symmetric cone
/// through the 2n x 2n embedding (see lift_hermitian).

#include <optional>
#include <string>
#include <vector>

#include "iscap/types.hpp"

namespace iscap::conic {

using VarId = int;

/// Real affine expression: constant + scalar terms + real(tr(C^H W)) terms.
/// Matrix coefficients are Hermitianized on insertion, which loses nothing
/// against Hermitian variables.
struct AffineExpr {
    double constant = 0.0;
    std::vector<std::pair<VarId, double>> scalar_terms;
    std::vector<std::pair<VarId, CMat>> matrix_terms;

    AffineExpr& add(VarId scalar_var, double coeff);
    AffineExpr& add_matrix(VarId matrix_var, const CMat& coeff);
    AffineExpr& operator+=(double c) { constant += c; return *this; }
    AffineExpr& operator*=(double a) {
        constant *= a;
        for (auto& [id, c] : scalar_terms) c *= a;
        for (auto& [id, m] : matrix_terms) m *= a;
        return *this;
    }
};

/// Sum_j coeffs[j] * log(args[j]) >= rhs, with natural logarithms and
/// coeffs[j] > 0. expansion_hints seed the inner conic approximation;
/// when absent the solver starts from 1 and refines.
struct LogBound {
    std::vector<double> coeffs;
    std::vector<AffineExpr> args;
    AffineExpr rhs;
    std::vector<double> expansion_hints;
};

struct SocConstraint {
    AffineExpr bound;               // ||terms|| <= bound
    std::vector<AffineExpr> terms;
};

struct ConicProgram {
    VarId add_hermitian_var(const std::string& name, int dim);
    VarId add_scalar_var(const std::string& name);

    /// Objective: minimize sum of squared affine terms plus a linear part.
    void add_square_term(AffineExpr expr) { squares_.push_back(std::move(expr)); }
    void add_linear_cost(AffineExpr expr) { linear_cost_.push_back(std::move(expr)); }

    void add_eq(AffineExpr expr) { equalities_.push_back(std::move(expr)); }       // expr = 0
    void add_ineq(AffineExpr expr) { inequalities_.push_back(std::move(expr)); }   // expr >= 0
    void add_psd(VarId matrix_var);
    void add_soc(SocConstraint soc) { socs_.push_back(std::move(soc)); }
    void add_log_bound(LogBound bound) { log_bounds_.push_back(std::move(bound)); }

    int matrix_dim(VarId v) const { return matrix_dims_[v]; }
    int n_matrix_vars() const { return static_cast<int>(matrix_dims_.size()); }
    int n_scalar_vars() const { return static_cast<int>(scalar_names_.size()); }

    /// Plain-text dump (variable table + constraint triplets) for external
    /// cross-checking.
    std::string dump() const;

    // Accessible to the solver front-end.
    std::vector<std::string> matrix_names_;
    std::vector<int> matrix_dims_;
    std::vector<std::string> scalar_names_;
    std::vector<AffineExpr> squares_;
    std::vector<AffineExpr> linear_cost_;
    std::vector<AffineExpr> equalities_;
    std::vector<AffineExpr> inequalities_;
    std::vector<SocConstraint> socs_;
    std::vector<LogBound> log_bounds_;
    std::vector<VarId> psd_vars_;
};

enum class SolveStatus { optimal, infeasible, numerical_failure };

struct SolveTolerances {
    double feasibility = 1e-8;
    double rel_gap = 1e-8;
    int max_iterations = 200;
    int max_log_passes = 60;
    double log_refine_tol = 1e-7;  // relative movement of log expansion points
};

struct SolveResult {
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<CMat> matrix_values;    // indexed by matrix VarId
    std::vector<double> scalar_values;  // indexed by scalar VarId
    double objective_value = 0.0;
    int solver_iterations = 0;
    std::string message;
};

SolveResult solve(const ConicProgram& program, const SolveTolerances& tol = {});

/// Real symmetric embedding of a Hermitian matrix W = A + jB:
///   [[A, -B], [B, A]]  (PSD iff W is PSD).
/// Inner products satisfy <lift(C), lift(W)>_F = 2 Re tr(C^H W).
RMat lift_hermitian(const CMat& w);

/// Inverse of lift_hermitian: read A and B back out of the embedding.
CMat unlift_hermitian(const RMat& lifted);

/// Evaluate an affine expression against a candidate assignment.
double evaluate(const AffineExpr& expr, const std::vector<CMat>& matrix_values,
                const std::vector<double>& scalar_values);

}  // namespace iscap::conic
