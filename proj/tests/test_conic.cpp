#include <cmath>
#include <random>

#include "doctest.h"
#include "iscap/conic.hpp"

using namespace iscap;
using namespace iscap::conic;

TEST_CASE("lift_hermitian embedding") {
    CMat w = CMat::Identity(2, 2);
    RMat lifted = lift_hermitian(w);
    CHECK((lifted - RMat::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

    w << cxd(1, 0), cxd(0, 1), cxd(0, -1), cxd(1, 0);
    lifted = lift_hermitian(w);
    CHECK(lifted(0, 1) == 0.0);
    CHECK(lifted(2, 1) == 1.0);  // B block
    CHECK(lifted(3, 0) == -1.0);
    Eigen::SelfAdjointEigenSolver<RMat> eig(lifted);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);  // PSD embedding of a PSD matrix

    CMat ws(1, 1);
    ws << cxd(3.5, 0);
    RMat ls = lift_hermitian(ws);
    CHECK(ls(0, 0) == 3.5);
    CHECK(ls(1, 1) == 3.5);
    CHECK(ls(0, 1) == 0.0);

    // round trip is exact
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd;
    CMat r(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = cxd(nd(gen), nd(gen));
    CMat herm = 0.5 * (r + r.adjoint());
    RMat l1 = lift_hermitian(herm);
    CMat back = unlift_hermitian(l1);
    CHECK((back - herm).cwiseAbs().maxCoeff() == 0.0);
    CHECK((lift_hermitian(back) - l1).cwiseAbs().maxCoeff() == 0.0);
    // inner product convention: <lift(C), lift(W)> = 2 Re tr(C^H W)
    CMat c2 = 0.5 * (CMat::Random(3, 3) + CMat::Random(3, 3).adjoint());
    c2 = 0.5 * (c2 + c2.adjoint()).eval();
    const double lhs = (lift_hermitian(c2).transpose() * l1).trace();
    const double rhs = 2.0 * (c2.adjoint() * herm).trace().real();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("linear program and infeasibility certificate") {
    {
        ConicProgram pr;
        VarId x = pr.add_scalar_var("x");
        AffineExpr cost;
        cost.add(x, 1.0);
        pr.add_linear_cost(cost);
        AffineExpr lo;  // x - 2 >= 0
        lo.add(x, 1.0);
        lo += -2.0;
        pr.add_ineq(lo);
        auto res = solve(pr);
        REQUIRE(res.status == SolveStatus::optimal);
        CHECK(res.scalar_values[x] == doctest::Approx(2.0).epsilon(1e-7));
    }
    {
        ConicProgram pr;
        VarId x = pr.add_scalar_var("x");
        AffineExpr lo;  // x >= 2
        lo.add(x, 1.0);
        lo += -2.0;
        pr.add_ineq(lo);
        AffineExpr hi;  // 1 - x >= 0
        hi.add(x, -1.0);
        hi += 1.0;
        pr.add_ineq(hi);
        AffineExpr cost;
        cost.add(x, 1.0);
        pr.add_linear_cost(cost);
        auto res = solve(pr);
        CHECK(res.status == SolveStatus::infeasible);
    }
}

TEST_CASE("sum of squares objective solves least squares") {
    // minimize (x-1)^2 + (x+y-3)^2 + (y-1)^2; stationarity gives x = y = 4/3
    ConicProgram pr;
    VarId x = pr.add_scalar_var("x");
    VarId y = pr.add_scalar_var("y");
    AffineExpr e1, e2, e3;
    e1.add(x, 1.0);
    e1 += -1.0;
    e2.add(x, 1.0).add(y, 1.0);
    e2 += -3.0;
    e3.add(y, 1.0);
    e3 += -1.0;
    pr.add_square_term(e1);
    pr.add_square_term(e2);
    pr.add_square_term(e3);
    auto res = solve(pr);
    REQUIRE(res.status == SolveStatus::optimal);
    CHECK(res.scalar_values[x] == doctest::Approx(4.0 / 3).epsilon(1e-6));
    CHECK(res.scalar_values[y] == doctest::Approx(4.0 / 3).epsilon(1e-6));
    CHECK(res.objective_value == doctest::Approx(1.0 / 3).epsilon(1e-6));
}

TEST_CASE("second-order cone projection") {
    // minimize t with ||(x-3, y-4)|| <= t and x = 0, y = 0 fixed by equalities
    ConicProgram pr;
    VarId x = pr.add_scalar_var("x");
    VarId y = pr.add_scalar_var("y");
    VarId t = pr.add_scalar_var("t");
    AffineExpr ex, ey;
    ex.add(x, 1.0);
    ey.add(y, 1.0);
    pr.add_eq(ex);
    pr.add_eq(ey);
    SocConstraint soc;
    soc.bound.add(t, 1.0);
    AffineExpr tx, ty;
    tx.add(x, 1.0);
    tx += -3.0;
    ty.add(y, 1.0);
    ty += -4.0;
    soc.terms = {tx, ty};
    pr.add_soc(std::move(soc));
    AffineExpr cost;
    cost.add(t, 1.0);
    pr.add_linear_cost(cost);
    auto res = solve(pr);
    REQUIRE(res.status == SolveStatus::optimal);
    CHECK(res.scalar_values[t] == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("rank-one SDP optimum (matched filter direction)") {
    // minimize tr(W) s.t. h^H W h >= 1, W >= 0 has optimum 1/||h||^2.
    auto run = [](const CVec& h) {
        ConicProgram pr;
        VarId w = pr.add_hermitian_var("W", static_cast<int>(h.size()));
        pr.add_psd(w);
        AffineExpr sig;  // h^H W h - 1 >= 0
        sig.add_matrix(w, h * h.adjoint());
        sig += -1.0;
        pr.add_ineq(sig);
        AffineExpr cost;
        cost.add_matrix(w, CMat::Identity(h.size(), h.size()));
        pr.add_linear_cost(cost);
        auto res = solve(pr);
        REQUIRE(res.status == SolveStatus::optimal);
        CHECK(res.objective_value == doctest::Approx(1.0 / h.squaredNorm()).epsilon(1e-6));
        return res;
    };
    CVec e1(2);
    e1 << cxd(1, 0), cxd(0, 0);
    auto res = run(e1);
    CHECK(std::abs(res.matrix_values[0](0, 0) - cxd(1, 0)) < 1e-6);
    CHECK(std::abs(res.matrix_values[0](1, 1)) < 1e-6);

    CVec h(3);
    h << cxd(0.3, -1.2), cxd(0.5, 0.8), cxd(-0.9, 0.1);
    run(h);
}

TEST_CASE("minimum eigenvalue SDP against direct eigensolver") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 4; ++trial) {
        const int dim = 3;
        CMat c(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) c(i, j) = cxd(nd(gen), nd(gen));
        c = 0.5 * (c + c.adjoint()).eval();
        ConicProgram pr;
        VarId w = pr.add_hermitian_var("W", dim);
        pr.add_psd(w);
        AffineExpr tr;
        tr.add_matrix(w, CMat::Identity(dim, dim));
        tr += -1.0;
        pr.add_eq(tr);
        AffineExpr cost;
        cost.add_matrix(w, c);
        pr.add_linear_cost(cost);
        auto res = solve(pr);
        REQUIRE(res.status == SolveStatus::optimal);
        Eigen::SelfAdjointEigenSolver<CMat> eig(c, Eigen::EigenvaluesOnly);
        CHECK(res.objective_value == doctest::Approx(eig.eigenvalues().minCoeff()).epsilon(1e-6));
    }
}

TEST_CASE("log bound refinement") {
    // maximize t subject to log(x) >= t and x <= e: optimum t = 1.
    ConicProgram pr;
    VarId x = pr.add_scalar_var("x");
    VarId t = pr.add_scalar_var("t");
    LogBound lb;
    lb.coeffs = {1.0};
    AffineExpr ax;
    ax.add(x, 1.0);
    lb.args = {ax};
    lb.rhs.add(t, 1.0);
    pr.add_log_bound(std::move(lb));
    AffineExpr cap;  // e - x >= 0
    cap.add(x, -1.0);
    cap += std::exp(1.0);
    pr.add_ineq(cap);
    AffineExpr cost;
    cost.add(t, -1.0);
    pr.add_linear_cost(cost);
    auto res = solve(pr);
    REQUIRE(res.status == SolveStatus::optimal);
    CHECK(res.scalar_values[t] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(res.scalar_values[x] == doctest::Approx(std::exp(1.0)).epsilon(1e-7));

    // weighted variant with affine right side: maximize r with
    // 2 log(x) + log(y) >= 3 r, x <= 2, y <= 5
    ConicProgram pr2;
    VarId x2 = pr2.add_scalar_var("x");
    VarId y2 = pr2.add_scalar_var("y");
    VarId r2 = pr2.add_scalar_var("r");
    LogBound lb2;
    lb2.coeffs = {2.0, 1.0};
    AffineExpr a1, a2;
    a1.add(x2, 1.0);
    a2.add(y2, 1.0);
    lb2.args = {a1, a2};
    lb2.rhs.add(r2, 3.0);
    pr2.add_log_bound(std::move(lb2));
    AffineExpr c1, c2;
    c1.add(x2, -1.0);
    c1 += 2.0;
    c2.add(y2, -1.0);
    c2 += 5.0;
    pr2.add_ineq(c1);
    pr2.add_ineq(c2);
    AffineExpr cost2;
    cost2.add(r2, -1.0);
    pr2.add_linear_cost(cost2);
    auto res2 = solve(pr2);
    REQUIRE(res2.status == SolveStatus::optimal);
    CHECK(res2.scalar_values[r2] ==
          doctest::Approx((2.0 * std::log(2.0) + std::log(5.0)) / 3.0).epsilon(1e-7));
}

TEST_CASE("returned solutions satisfy their own constraints") {
    // mixed program; verify PSD / equality / log residuals after solve
    ConicProgram pr;
    VarId w = pr.add_hermitian_var("W", 2);
    VarId z = pr.add_scalar_var("z");
    pr.add_psd(w);
    AffineExpr tr;
    tr.add_matrix(w, CMat::Identity(2, 2));
    tr += -2.0;
    pr.add_eq(tr);
    CVec h(2);
    h << cxd(0.8, 0.1), cxd(-0.4, 0.6);
    LogBound lb;
    lb.coeffs = {1.0};
    AffineExpr arg;
    arg.add_matrix(w, h * h.adjoint());
    arg += 0.1;
    lb.args = {arg};
    lb.rhs += 0.2;
    pr.add_log_bound(std::move(lb));
    AffineExpr sq;
    sq.add_matrix(w, h * h.adjoint());
    sq.add(z, -1.0);
    pr.add_square_term(sq);
    AffineExpr zc;
    zc.add(z, 0.01);
    pr.add_linear_cost(zc);
    auto res = solve(pr);
    REQUIRE(res.status == SolveStatus::optimal);

    const CMat& W = res.matrix_values[w];
    Eigen::SelfAdjointEigenSolver<CMat> eig(W, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * std::abs(W.trace().real()));
    CHECK(W.trace().real() == doctest::Approx(2.0).epsilon(1e-7));
    const double arg_val = (h.adjoint() * W * h).value().real() + 0.1;
    CHECK(std::log(arg_val) >= 0.2 - 1e-8);

    // objective re-evaluation matches reported value
    const double sq_val = (h.adjoint() * W * h).value().real() - res.scalar_values[z];
    const double expect = sq_val * sq_val + 0.01 * res.scalar_values[z];
    CHECK(res.objective_value == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("deterministic backend") {
    CVec h(3);
    h << cxd(0.3, -1.2), cxd(0.5, 0.8), cxd(-0.9, 0.1);
    ConicProgram pr;
    VarId w = pr.add_hermitian_var("W", 3);
    pr.add_psd(w);
    AffineExpr sig;
    sig.add_matrix(w, h * h.adjoint());
    sig += -1.0;
    pr.add_ineq(sig);
    AffineExpr cost;
    cost.add_matrix(w, CMat::Identity(3, 3));
    pr.add_linear_cost(cost);
    auto r1 = solve(pr);
    auto r2 = solve(pr);
    REQUIRE(r1.status == SolveStatus::optimal);
    REQUIRE(r2.status == SolveStatus::optimal);
    CHECK(r1.objective_value == r2.objective_value);  // bitwise repeatable
}

TEST_CASE("program dump lists variables") {
    ConicProgram pr;
    pr.add_hermitian_var("W", 2);
    pr.add_scalar_var("zeta");
    auto text = pr.dump();
    CHECK(text.find("W") != std::string::npos);
    CHECK(text.find("zeta") != std::string::npos);
}
