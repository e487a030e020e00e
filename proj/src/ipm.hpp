#pragma once

/// Primal-dual interior-point solver for cone linear programs
///
///     minimize    c'x
///     subject to  G x + s = h,  s in K
///                 A x = b
///
/// with K a product of nonnegative, second-order, and (real symmetric,
/// svec-packed) semidefinite cones. Uses the homogeneous self-dual
/// embedding with Nesterov-Todd scaling and a Mehrotra predictor-corrector,
/// so primal/dual infeasibility is detected through certificates rather
/// than timeouts.

#include <vector>

#include <Eigen/Sparse>

#include "iscap/types.hpp"

namespace iscap::conic::ipm {

struct ConeDims {
    int nonneg = 0;
    std::vector<int> soc;  // cone dimensions (>= 1 each)
    std::vector<int> psd;  // matrix orders; block length is o(o+1)/2

    int rows() const;
    int degree() const;  // barrier degree: nonneg + #soc + sum of psd orders
};

struct Problem {
    Eigen::SparseMatrix<double> G;  // m x n
    RVec h;
    Eigen::SparseMatrix<double> A;  // p x n (p may be 0)
    RVec b;
    RVec c;
    ConeDims cones;
};

enum class IpmStatus { optimal, primal_infeasible, dual_infeasible, numerical_failure };

struct Options {
    double feas_tol = 1e-8;
    double rel_gap_tol = 1e-8;
    double abs_gap_tol = 1e-11;
    int max_iter = 200;
    bool equilibrate = true;
    bool verbose = false;  // per-iteration residual trace on stderr
};

struct Result {
    IpmStatus status = IpmStatus::numerical_failure;
    RVec x, s, z, y;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double gap = 0.0;
    double pres = 0.0;
    double dres = 0.0;
    int iterations = 0;
};

Result solve(const Problem& prob, const Options& opts = {});

// svec packing helpers (lower triangle, off-diagonals scaled by sqrt(2) so
// that inner products match the Frobenius inner product).
int svec_len(int order);
void svec_to_mat(const double* v, RMat& out);
void mat_to_svec(const RMat& m, double* v);

}  // namespace iscap::conic::ipm
