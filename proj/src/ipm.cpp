#include "ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace iscap::conic::ipm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int ConeDims::rows() const {
    int m = nonneg;
    for (int d : soc) m += d;
    for (int o : psd) m += svec_len(o);
    return m;
}

int ConeDims::degree() const {
    int deg = nonneg + static_cast<int>(soc.size());
    for (int o : psd) deg += o;
    return deg;
}

int svec_len(int order) { return order * (order + 1) / 2; }

void svec_to_mat(const double* v, RMat& out) {
    const int o = static_cast<int>(out.rows());
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    int idx = 0;
    for (int j = 0; j < o; ++j) {
        out(j, j) = v[idx++];
        for (int i = j + 1; i < o; ++i) {
            const double val = v[idx++] * inv_rt2;
            out(i, j) = val;
            out(j, i) = val;
        }
    }
}

void mat_to_svec(const RMat& m, double* v) {
    const int o = static_cast<int>(m.rows());
    const double rt2 = std::sqrt(2.0);
    int idx = 0;
    for (int j = 0; j < o; ++j) {
        v[idx++] = m(j, j);
        for (int i = j + 1; i < o; ++i) v[idx++] = 0.5 * (m(i, j) + m(j, i)) * rt2;
    }
}

namespace {

// ---------------------------------------------------------------------------
// Cone layout bookkeeping
// ---------------------------------------------------------------------------

struct Layout {
    int nonneg = 0;
    std::vector<std::pair<int, int>> soc;  // (row offset, dim)
    std::vector<std::pair<int, int>> psd;  // (row offset, order)
    int m = 0;

    explicit Layout(const ConeDims& dims) {
        nonneg = dims.nonneg;
        int off = nonneg;
        for (int d : dims.soc) {
            soc.emplace_back(off, d);
            off += d;
        }
        for (int o : dims.psd) {
            psd.emplace_back(off, o);
            off += svec_len(o);
        }
        m = off;
    }
};

// ---------------------------------------------------------------------------
// Nesterov-Todd scalings
// ---------------------------------------------------------------------------

struct SocScale {
    double eta = 1.0;
    RVec wbar;  // hyperbolic unit vector
};

struct PsdScale {
    RMat r;    // lambda = R' Z R = R^-1 S R^-T (diagonal)
    RMat rti;  // R^-T
};

struct Scaling {
    RVec w_nn;                   // sqrt(s/z)
    std::vector<SocScale> soc;
    std::vector<PsdScale> psd;
    RVec lambda;                 // scaled point, full length m

    static Scaling identity(const Layout& lay) {
        Scaling W;
        W.w_nn = RVec::Ones(lay.nonneg);
        for (const auto& [off, d] : lay.soc) {
            (void)off;
            SocScale sc;
            sc.eta = 1.0;
            sc.wbar = RVec::Zero(d);
            sc.wbar(0) = 1.0;
            W.soc.push_back(std::move(sc));
        }
        for (const auto& [off, o] : lay.psd) {
            (void)off;
            PsdScale ps;
            ps.r = RMat::Identity(o, o);
            ps.rti = RMat::Identity(o, o);
            W.psd.push_back(std::move(ps));
        }
        W.lambda = RVec::Zero(lay.m);
        return W;
    }
};

// Second-order cone residual s0^2 - ||s1||^2 (interior iff positive with s0 > 0).
double soc_resid(const double* s, int d) {
    double nrm2 = 0.0;
    for (int i = 1; i < d; ++i) nrm2 += s[i] * s[i];
    return s[0] * s[0] - nrm2;
}

// H(wbar) u, the symmetric square root of 2*wbar*wbar' - J applied to u.
void apply_hyperbolic(const RVec& wbar, const double* u, double* out, double sign1) {
    const int d = static_cast<int>(wbar.size());
    double dot = 0.0;
    for (int i = 1; i < d; ++i) dot += sign1 * wbar(i) * u[i];
    const double w0 = wbar(0);
    out[0] = w0 * u[0] + dot;
    const double coef = u[0] + dot / (1.0 + w0);
    for (int i = 1; i < d; ++i) out[i] = u[i] + coef * sign1 * wbar(i);
}

bool compute_scaling(const Layout& lay, const RVec& s, const RVec& z, Scaling& W) {
    W.w_nn.resize(lay.nonneg);
    W.soc.assign(lay.soc.size(), {});
    W.psd.assign(lay.psd.size(), {});
    W.lambda.resize(lay.m);

    for (int i = 0; i < lay.nonneg; ++i) {
        if (s(i) <= 0.0 || z(i) <= 0.0) return false;
        W.w_nn(i) = std::sqrt(s(i) / z(i));
        W.lambda(i) = std::sqrt(s(i) * z(i));
    }
    for (std::size_t ci = 0; ci < lay.soc.size(); ++ci) {
        const auto [off, d] = lay.soc[ci];
        const double sres = soc_resid(s.data() + off, d);
        const double zres = soc_resid(z.data() + off, d);
        if (sres <= 0.0 || zres <= 0.0 || s(off) <= 0.0 || z(off) <= 0.0) return false;
        const double snrm = std::sqrt(sres), znrm = std::sqrt(zres);
        SocScale& sc = W.soc[ci];
        sc.eta = std::sqrt(snrm / znrm);
        double dot = s(off) / snrm * z(off) / znrm;
        for (int i = 1; i < d; ++i) dot += (s(off + i) / snrm) * (z(off + i) / znrm);
        const double gamma = std::sqrt((1.0 + dot) / 2.0);
        sc.wbar.resize(d);
        sc.wbar(0) = (s(off) / snrm + z(off) / znrm) / (2.0 * gamma);
        for (int i = 1; i < d; ++i)
            sc.wbar(i) = (s(off + i) / snrm - z(off + i) / znrm) / (2.0 * gamma);
        // lambda = eta * H(wbar) z
        apply_hyperbolic(sc.wbar, z.data() + off, W.lambda.data() + off, 1.0);
        W.lambda.segment(off, d) *= sc.eta;
    }
    for (std::size_t ci = 0; ci < lay.psd.size(); ++ci) {
        const auto [off, o] = lay.psd[ci];
        RMat S(o, o), Z(o, o);
        svec_to_mat(s.data() + off, S);
        svec_to_mat(z.data() + off, Z);
        Eigen::LLT<RMat> lltS(S), lltZ(Z);
        if (lltS.info() != Eigen::Success || lltZ.info() != Eigen::Success) return false;
        const RMat Ls = lltS.matrixL();
        const RMat Lz = lltZ.matrixL();
        Eigen::JacobiSVD<RMat> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const RVec sig = svd.singularValues();
        if (sig.minCoeff() <= 0.0) return false;
        const RVec isqrt = sig.array().sqrt().inverse().matrix();
        PsdScale& ps = W.psd[ci];
        ps.r = Ls * svd.matrixV() * isqrt.asDiagonal();
        ps.rti = Lz * svd.matrixU() * isqrt.asDiagonal();
        RVec lam = RVec::Zero(svec_len(o));
        for (int j = 0, idx = 0; j < o; ++j) {
            lam(idx) = sig(j);
            idx += o - j;
        }
        W.lambda.segment(off, svec_len(o)) = lam;
    }
    return true;
}

enum class OpKind { W, WT, Winv, WtWinv };

// Apply the scaling (or its transpose / inverse / inverse Gram) blockwise.
void apply_scaling(const Layout& lay, const Scaling& W, OpKind kind, const RVec& u, RVec& out) {
    out.resize(lay.m);
    for (int i = 0; i < lay.nonneg; ++i) {
        const double w = W.w_nn(i);
        switch (kind) {
            case OpKind::W:
            case OpKind::WT: out(i) = w * u(i); break;
            case OpKind::Winv: out(i) = u(i) / w; break;
            case OpKind::WtWinv: out(i) = u(i) / (w * w); break;
        }
    }
    for (std::size_t ci = 0; ci < lay.soc.size(); ++ci) {
        const auto [off, d] = lay.soc[ci];
        const SocScale& sc = W.soc[ci];
        switch (kind) {
            case OpKind::W:
            case OpKind::WT:
                apply_hyperbolic(sc.wbar, u.data() + off, out.data() + off, 1.0);
                out.segment(off, d) *= sc.eta;
                break;
            case OpKind::Winv:
                apply_hyperbolic(sc.wbar, u.data() + off, out.data() + off, -1.0);
                out.segment(off, d) /= sc.eta;
                break;
            case OpKind::WtWinv: {
                // W^-2 = eta^-2 (2 (Jw)(Jw)' - J)
                double dot = sc.wbar(0) * u(off);
                for (int i = 1; i < d; ++i) dot -= sc.wbar(i) * u(off + i);
                out(off) = (2.0 * dot * sc.wbar(0) - u(off)) / (sc.eta * sc.eta);
                for (int i = 1; i < d; ++i)
                    out(off + i) = (-2.0 * dot * sc.wbar(i) + u(off + i)) / (sc.eta * sc.eta);
                break;
            }
        }
    }
    for (std::size_t ci = 0; ci < lay.psd.size(); ++ci) {
        const auto [off, o] = lay.psd[ci];
        const PsdScale& ps = W.psd[ci];
        RMat U(o, o), T(o, o);
        svec_to_mat(u.data() + off, U);
        switch (kind) {
            case OpKind::W: T = ps.r.transpose() * U * ps.r; break;
            case OpKind::WT: T = ps.r * U * ps.r.transpose(); break;
            case OpKind::Winv: T = ps.rti * U * ps.rti.transpose(); break;
            case OpKind::WtWinv: {
                const RMat inner = ps.rti.transpose() * U * ps.rti;
                T = ps.rti * inner * ps.rti.transpose();
                break;
            }
        }
        mat_to_svec(T, out.data() + off);
    }
}

// ---------------------------------------------------------------------------
// Jordan algebra helpers (in the scaled lambda space)
// ---------------------------------------------------------------------------

void jordan_prod(const Layout& lay, const RVec& u, const RVec& v, RVec& out) {
    out.resize(lay.m);
    for (int i = 0; i < lay.nonneg; ++i) out(i) = u(i) * v(i);
    for (const auto& [off, d] : lay.soc) {
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += u(off + i) * v(off + i);
        out(off) = dot;
        for (int i = 1; i < d; ++i) out(off + i) = u(off) * v(off + i) + v(off) * u(off + i);
    }
    for (const auto& [off, o] : lay.psd) {
        RMat U(o, o), V(o, o);
        svec_to_mat(u.data() + off, U);
        svec_to_mat(v.data() + off, V);
        const RMat T = U * V;
        const RMat sym = 0.5 * (T + T.transpose());
        mat_to_svec(sym, out.data() + off);
    }
}

// Solve lambda o q = r given the scaled point lambda (diagonal in psd blocks).
bool jordan_div(const Layout& lay, const RVec& lambda, const RVec& r, RVec& q) {
    q.resize(lay.m);
    for (int i = 0; i < lay.nonneg; ++i) {
        if (lambda(i) == 0.0) return false;
        q(i) = r(i) / lambda(i);
    }
    for (const auto& [off, d] : lay.soc) {
        const double l0 = lambda(off);
        double lnrm2 = 0.0, dot = 0.0;
        for (int i = 1; i < d; ++i) {
            lnrm2 += lambda(off + i) * lambda(off + i);
            dot += lambda(off + i) * r(off + i);
        }
        const double det = l0 * l0 - lnrm2;
        if (det <= 0.0 || l0 <= 0.0) return false;
        q(off) = (l0 * r(off) - dot) / det;
        for (int i = 1; i < d; ++i) q(off + i) = (r(off + i) - q(off) * lambda(off + i)) / l0;
    }
    for (const auto& [off, o] : lay.psd) {
        // lambda block is diagonal by construction of the NT scaling
        RVec diag(o);
        for (int j = 0, idx = 0; j < o; ++j) {
            diag(j) = lambda(off + idx);
            idx += o - j;
        }
        RMat R(o, o);
        svec_to_mat(r.data() + off, R);
        RMat Q(o, o);
        for (int i = 0; i < o; ++i)
            for (int j = 0; j < o; ++j) {
                const double den = diag(i) + diag(j);
                if (den <= 0.0) return false;
                Q(i, j) = 2.0 * R(i, j) / den;
            }
        const RMat sym = 0.5 * (Q + Q.transpose());
        mat_to_svec(sym, q.data() + off);
    }
    return true;
}

void cone_identity(const Layout& lay, RVec& e) {
    e = RVec::Zero(lay.m);
    for (int i = 0; i < lay.nonneg; ++i) e(i) = 1.0;
    for (const auto& [off, d] : lay.soc) {
        (void)d;
        e(off) = 1.0;
    }
    for (const auto& [off, o] : lay.psd)
        for (int j = 0, idx = 0; j < o; ++j) {
            e(off + idx) = 1.0;
            idx += o - j;
        }
}

// Smallest "eigenvalue" of a cone point (used for interior shifts).
double cone_min_eig(const Layout& lay, const RVec& s) {
    double mn = kInf;
    for (int i = 0; i < lay.nonneg; ++i) mn = std::min(mn, s(i));
    for (const auto& [off, d] : lay.soc) {
        double nrm = 0.0;
        for (int i = 1; i < d; ++i) nrm += s(off + i) * s(off + i);
        mn = std::min(mn, s(off) - std::sqrt(nrm));
    }
    for (const auto& [off, o] : lay.psd) {
        RMat S(o, o);
        svec_to_mat(s.data() + off, S);
        Eigen::SelfAdjointEigenSolver<RMat> eig(S, Eigen::EigenvaluesOnly);
        mn = std::min(mn, eig.eigenvalues().minCoeff());
    }
    return lay.m == 0 ? 0.0 : mn;
}

// Largest step alpha with point + alpha * dir staying in the cone.
double max_step(const Layout& lay, const RVec& point, const RVec& dir) {
    double alpha = kInf;
    for (int i = 0; i < lay.nonneg; ++i)
        if (dir(i) < 0.0) alpha = std::min(alpha, -point(i) / dir(i));
    for (const auto& [off, d] : lay.soc) {
        double a = 0.0, b = 0.0, c = 0.0;
        a = dir(off) * dir(off);
        b = 2.0 * point(off) * dir(off);
        c = point(off) * point(off);
        for (int i = 1; i < d; ++i) {
            a -= dir(off + i) * dir(off + i);
            b -= 2.0 * point(off + i) * dir(off + i);
            c -= point(off + i) * point(off + i);
        }
        // roots of a t^2 + b t + c = 0; first positive crossing leaves the cone
        double best = kInf;
        if (std::abs(a) < 1e-300) {
            if (b < 0.0) best = -c / b;
        } else {
            const double disc = b * b - 4.0 * a * c;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double r1 = (-b - sq) / (2.0 * a);
                const double r2 = (-b + sq) / (2.0 * a);
                for (double r : {std::min(r1, r2), std::max(r1, r2)})
                    if (r > 0.0) {
                        best = r;
                        break;
                    }
            }
        }
        alpha = std::min(alpha, best);
    }
    for (const auto& [off, o] : lay.psd) {
        RVec diag(o);
        for (int j = 0, idx = 0; j < o; ++j) {
            diag(j) = point(off + idx);
            idx += o - j;
        }
        RMat D(o, o);
        svec_to_mat(dir.data() + off, D);
        for (int i = 0; i < o; ++i)
            for (int j = 0; j < o; ++j) D(i, j) /= std::sqrt(diag(i) * diag(j));
        Eigen::SelfAdjointEigenSolver<RMat> eig(D, Eigen::EigenvaluesOnly);
        const double mn = eig.eigenvalues().minCoeff();
        if (mn < 0.0) alpha = std::min(alpha, -1.0 / mn);
    }
    return alpha;
}

// ---------------------------------------------------------------------------
// KKT solver: dense Schur complement over the cone scalings
// ---------------------------------------------------------------------------

class KktSolver {
  public:
    KktSolver(const Problem& P, const Layout& lay) : P_(P), lay_(lay), n_(static_cast<int>(P.c.size())) {
        rows_nn_.resize(lay.nonneg);
        for (int col = 0; col < P_.G.outerSize(); ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(P_.G, col); it; ++it)
                if (it.row() < lay.nonneg) rows_nn_[it.row()].emplace_back(col, it.value());

        auto gather_block = [&](int off, int len, std::vector<int>& cols, RMat& B) {
            std::vector<char> seen(n_, 0);
            for (int col = 0; col < P_.G.outerSize(); ++col)
                for (Eigen::SparseMatrix<double>::InnerIterator it(P_.G, col); it; ++it)
                    if (it.row() >= off && it.row() < off + len) seen[col] = 1;
            for (int col = 0; col < n_; ++col)
                if (seen[col]) cols.push_back(col);
            B = RMat::Zero(len, static_cast<int>(cols.size()));
            std::vector<int> local(n_, -1);
            for (std::size_t a = 0; a < cols.size(); ++a) local[cols[a]] = static_cast<int>(a);
            for (int col = 0; col < P_.G.outerSize(); ++col) {
                if (local[col] < 0) continue;
                for (Eigen::SparseMatrix<double>::InnerIterator it(P_.G, col); it; ++it)
                    if (it.row() >= off && it.row() < off + len)
                        B(it.row() - off, local[col]) = it.value();
            }
        };

        soc_blocks_.resize(lay.soc.size());
        for (std::size_t ci = 0; ci < lay.soc.size(); ++ci) {
            auto& blk = soc_blocks_[ci];
            gather_block(lay.soc[ci].first, lay.soc[ci].second, blk.cols, blk.B);
            // J-Gram is scaling independent: B' J B with J = diag(1, -1, ..., -1)
            const int na = static_cast<int>(blk.cols.size());
            blk.jgram = RMat::Zero(na, na);
            if (na > 0) {
                blk.jgram = blk.B.row(0).transpose() * blk.B.row(0);
                if (lay.soc[ci].second > 1)
                    blk.jgram -= blk.B.bottomRows(lay.soc[ci].second - 1).transpose() *
                                 blk.B.bottomRows(lay.soc[ci].second - 1);
            }
        }
        psd_blocks_.resize(lay.psd.size());
        for (std::size_t ci = 0; ci < lay.psd.size(); ++ci) {
            auto& blk = psd_blocks_[ci];
            gather_block(lay.psd[ci].first, svec_len(lay.psd[ci].second), blk.cols, blk.B);
        }
        Ad_ = RMat(P_.A);
    }

    bool factor(const Scaling& W, double delta) {
        S_.setZero(n_, n_);
        for (int i = 0; i < lay_.nonneg; ++i) {
            const double d = 1.0 / (W.w_nn(i) * W.w_nn(i));
            for (const auto& [ca, va] : rows_nn_[i])
                for (const auto& [cb, vb] : rows_nn_[i]) S_(ca, cb) += d * va * vb;
        }
        for (std::size_t ci = 0; ci < lay_.soc.size(); ++ci) {
            const auto& blk = soc_blocks_[ci];
            const int na = static_cast<int>(blk.cols.size());
            if (na == 0) continue;
            const SocScale& sc = W.soc[ci];
            const int d = lay_.soc[ci].second;
            RVec jw(d);
            jw(0) = sc.wbar(0);
            for (int i = 1; i < d; ++i) jw(i) = -sc.wbar(i);
            const RVec v = blk.B.transpose() * jw;
            const double inv_eta2 = 1.0 / (sc.eta * sc.eta);
            RMat local = inv_eta2 * (2.0 * v * v.transpose() - blk.jgram);
            for (int a = 0; a < na; ++a)
                for (int b = 0; b < na; ++b) S_(blk.cols[a], blk.cols[b]) += local(a, b);
        }
        for (std::size_t ci = 0; ci < lay_.psd.size(); ++ci) {
            const auto& blk = psd_blocks_[ci];
            const int na = static_cast<int>(blk.cols.size());
            if (na == 0) continue;
            const PsdScale& ps = W.psd[ci];
            const int o = lay_.psd[ci].second;
            const int L = svec_len(o);
            RMat Y(L, na);
            RMat U(o, o);
            for (int a = 0; a < na; ++a) {
                svec_to_mat(blk.B.col(a).data(), U);
                const RMat inner = ps.rti.transpose() * U * ps.rti;
                const RMat T = ps.rti * inner * ps.rti.transpose();
                mat_to_svec(T, Y.col(a).data());
            }
            const RMat local = blk.B.transpose() * Y;
            for (int a = 0; a < na; ++a)
                for (int b = 0; b < na; ++b) S_(blk.cols[a], blk.cols[b]) += local(a, b);
        }
        const double scale = std::max(1.0, S_.diagonal().maxCoeff());
        S_.diagonal().array() += delta * scale;
        Sllt_.compute(S_);
        if (Sllt_.info() != Eigen::Success) {
            S_.diagonal().array() += 1e-8 * scale;
            Sllt_.compute(S_);
            if (Sllt_.info() != Eigen::Success) return false;
        }
        const int p = static_cast<int>(P_.b.size());
        if (p > 0) {
            SinvAt_ = Sllt_.solve(Ad_.transpose());
            M_ = Ad_ * SinvAt_;
            M_.diagonal().array() += delta * std::max(1.0, M_.diagonal().maxCoeff());
            Mllt_.compute(M_);
            if (Mllt_.info() != Eigen::Success) return false;
        }
        return true;
    }

    // Solve [0 A' G'; A 0 0; G 0 -W'W] (dx,dy,dz) = (bx,by,bz).
    void solve3(const Scaling& W, const RVec& bx, const RVec& by, const RVec& bz,
                RVec& dx, RVec& dy, RVec& dz, int refine = 1) const {
        solve_once(W, bx, by, bz, dx, dy, dz);
        for (int r = 0; r < refine; ++r) {
            RVec e1 = bx - P_.A.transpose() * dy - P_.G.transpose() * dz;
            RVec e2 = by - P_.A * dx;
            RVec wtw;
            apply_scaling(lay_, W, OpKind::W, dz, wtw);
            RVec wtwdz;
            apply_scaling(lay_, W, OpKind::WT, wtw, wtwdz);
            RVec e3 = bz - P_.G * dx + wtwdz;
            RVec cx, cy, cz;
            solve_once(W, e1, e2, e3, cx, cy, cz);
            dx += cx;
            dy += cy;
            dz += cz;
        }
    }

  private:
    void solve_once(const Scaling& W, const RVec& bx, const RVec& by, const RVec& bz,
                    RVec& dx, RVec& dy, RVec& dz) const {
        RVec winv_bz;
        apply_scaling(lay_, W, OpKind::WtWinv, bz, winv_bz);
        RVec r1 = bx + P_.G.transpose() * winv_bz;
        const int p = static_cast<int>(P_.b.size());
        if (p > 0) {
            const RVec u = Sllt_.solve(r1);
            dy = Mllt_.solve(Ad_ * u - by);
            dx = Sllt_.solve(r1 - Ad_.transpose() * dy);
        } else {
            dy.resize(0);
            dx = Sllt_.solve(r1);
        }
        RVec t = P_.G * dx - bz;
        apply_scaling(lay_, W, OpKind::WtWinv, t, dz);
    }

    const Problem& P_;
    const Layout& lay_;
    int n_;
    std::vector<std::vector<std::pair<int, double>>> rows_nn_;
    struct Block {
        std::vector<int> cols;
        RMat B;
        RMat jgram;  // SOC only
    };
    std::vector<Block> soc_blocks_, psd_blocks_;
    RMat Ad_;
    mutable RMat S_, M_, SinvAt_;
    Eigen::LLT<RMat> Sllt_, Mllt_;
};

// ---------------------------------------------------------------------------
// Ruiz equilibration (cone-blocked rows, free columns) plus cost scaling
// ---------------------------------------------------------------------------

struct Equilibration {
    RVec row_g;   // per-row scale of G (constant within a cone block)
    RVec row_a;   // per-row scale of A
    RVec col;     // per-column scale
    double cost = 1.0;
    double rhs = 1.0;
};

Equilibration equilibrate(Problem& P, const Layout& lay) {
    const int m = static_cast<int>(P.h.size());
    const int p = static_cast<int>(P.b.size());
    const int n = static_cast<int>(P.c.size());
    Equilibration eq;
    eq.row_g = RVec::Ones(m);
    eq.row_a = RVec::Ones(p);
    eq.col = RVec::Ones(n);

    auto block_of_row = [&](int r) -> std::pair<int, int> {
        if (r < lay.nonneg) return {r, 1};
        for (const auto& [off, d] : lay.soc)
            if (r >= off && r < off + d) return {off, d};
        for (const auto& [off, o] : lay.psd)
            if (r >= off && r < off + svec_len(o)) return {off, svec_len(o)};
        return {r, 1};
    };

    for (int pass = 0; pass < 8; ++pass) {
        RVec rmax_g = RVec::Zero(m), rmax_a = RVec::Zero(p), cmax = RVec::Zero(n);
        for (int col = 0; col < P.G.outerSize(); ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(P.G, col); it; ++it) {
                const double a = std::abs(it.value());
                rmax_g(it.row()) = std::max(rmax_g(it.row()), a);
                cmax(col) = std::max(cmax(col), a);
            }
        for (int col = 0; col < P.A.outerSize(); ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(P.A, col); it; ++it) {
                const double a = std::abs(it.value());
                rmax_a(it.row()) = std::max(rmax_a(it.row()), a);
                cmax(col) = std::max(cmax(col), a);
            }
        // share one scale across each cone block
        RVec rscale = RVec::Ones(m);
        for (int r = 0; r < m;) {
            const auto [off, len] = block_of_row(r);
            double mx = 0.0;
            for (int i = 0; i < len; ++i) mx = std::max(mx, rmax_g(off + i));
            const double f = (mx > 0.0) ? 1.0 / std::sqrt(mx) : 1.0;
            for (int i = 0; i < len; ++i) rscale(off + i) = f;
            r = off + len;
        }
        RVec ascale = RVec::Ones(p);
        for (int r = 0; r < p; ++r) ascale(r) = (rmax_a(r) > 0.0) ? 1.0 / std::sqrt(rmax_a(r)) : 1.0;
        RVec cscale = RVec::Ones(n);
        for (int cidx = 0; cidx < n; ++cidx) cscale(cidx) = (cmax(cidx) > 0.0) ? 1.0 / std::sqrt(cmax(cidx)) : 1.0;

        P.G = rscale.asDiagonal() * P.G * cscale.asDiagonal();
        P.A = ascale.asDiagonal() * P.A * cscale.asDiagonal();
        eq.row_g.array() *= rscale.array();
        eq.row_a.array() *= ascale.array();
        eq.col.array() *= cscale.array();
    }
    P.h.array() *= eq.row_g.array();
    P.b.array() *= eq.row_a.array();
    P.c.array() *= eq.col.array();

    const double cmax = P.c.lpNorm<Eigen::Infinity>();
    eq.cost = (cmax > 1.0) ? 1.0 / cmax : 1.0;
    P.c *= eq.cost;
    double rmax = P.h.size() ? P.h.lpNorm<Eigen::Infinity>() : 0.0;
    if (P.b.size()) rmax = std::max(rmax, P.b.lpNorm<Eigen::Infinity>());
    eq.rhs = (rmax > 1.0) ? 1.0 / rmax : 1.0;
    P.h *= eq.rhs;
    P.b *= eq.rhs;
    return eq;
}

}  // namespace

// ---------------------------------------------------------------------------
// Main loop
// ---------------------------------------------------------------------------

Result solve(const Problem& prob, const Options& opts) {
    Result res;
    const int n = static_cast<int>(prob.c.size());
    const int p = static_cast<int>(prob.b.size());
    const Layout lay(prob.cones);
    const int m = lay.m;
    if (prob.G.rows() != m || prob.G.cols() != n || prob.h.size() != m ||
        (p > 0 && prob.A.cols() != n) || m == 0)
        throw std::invalid_argument("cone LP: inconsistent dimensions");

    Problem P = prob;  // scaled working copy
    Equilibration eq;
    if (opts.equilibrate) {
        eq = equilibrate(P, lay);
    } else {
        eq.row_g = RVec::Ones(m);
        eq.row_a = RVec::Ones(p);
        eq.col = RVec::Ones(n);
    }

    KktSolver kkt(P, lay);
    const double deg = static_cast<double>(prob.cones.degree());

    RVec e;
    cone_identity(lay, e);

    // Initial point: exact primal/dual equation residuals with W = I, shifted
    // into the cone interior.
    Scaling W = Scaling::identity(lay);
    RVec x, y, z, s;
    {
        if (!kkt.factor(W, 1e-10)) {
            res.status = IpmStatus::numerical_failure;
            return res;
        }
        RVec zx, zy, zz;
        kkt.solve3(W, RVec::Zero(n), P.b, P.h, x, y, zz);
        s = -zz;
        const double ds = cone_min_eig(lay, s);
        if (ds <= 1e-8) s += (1.0 - ds) * e;
        RVec xx;
        kkt.solve3(W, -P.c, RVec::Zero(p), RVec::Zero(m), xx, zy, z);
        const double dz = cone_min_eig(lay, z);
        if (dz <= 1e-8) z += (1.0 - dz) * e;
    }
    double tau = 1.0, kappa = 1.0;

    const double norm_b = 1.0 + prob.b.norm();
    const double norm_h = 1.0 + prob.h.norm();
    const double norm_c = 1.0 + prob.c.norm();

    auto unscaled = [&](const RVec& xs, const RVec& ys, const RVec& zs, const RVec& ss) {
        struct Pieces { RVec x, y, z, s; } u;
        u.x = (eq.col.array() * xs.array()).matrix() / eq.rhs;
        u.s = (ss.array() * eq.row_g.array().inverse()).matrix() / eq.rhs;
        u.z = (eq.row_g.array() * zs.array()).matrix() / eq.cost;
        u.y = p > 0 ? RVec((eq.row_a.array() * ys.array()).matrix() / eq.cost) : RVec(0);
        return u;
    };

    int iter = 0;
    double best_merit = kInf;
    Result best;
    int stall_count = 0;
    double mu_prev = kInf;

    for (iter = 0; iter <= opts.max_iter; ++iter) {
        // --- convergence bookkeeping on unscaled quantities ---
        auto u = unscaled(x, y, z, s);
        const double pcost = prob.c.dot(u.x) / tau;
        const double dcost = -(prob.h.dot(u.z) + (p ? prob.b.dot(u.y) : 0.0)) / tau;
        const double gap = u.s.dot(u.z) / (tau * tau);
        double relgap = kInf;
        if (pcost < 0.0)
            relgap = gap / (-pcost);
        else if (dcost > 0.0)
            relgap = gap / dcost;
        RVec rp1 = prob.G * u.x / tau + u.s / tau - prob.h;
        double pres = rp1.norm() / norm_h;
        if (p) pres = std::max(pres, (prob.A * u.x / tau - prob.b).norm() / norm_b);
        RVec rd = prob.G.transpose() * u.z / tau + prob.c;
        if (p) rd += prob.A.transpose() * u.y / tau;
        const double dres = rd.norm() / norm_c;

        if (opts.verbose)
            std::fprintf(stderr,
                         "ipm %3d: pcost %+.6e dcost %+.6e gap %.3e pres %.3e dres %.3e "
                         "tau %.3e kappa %.3e\n",
                         iter, pcost, dcost, gap, pres, dres, tau, kappa);
        const double merit = std::max({pres, dres, gap / std::max(1.0, std::abs(pcost))});
        if (merit < best_merit) {
            best_merit = merit;
            best.x = u.x / tau;
            best.s = u.s / tau;
            best.z = u.z / tau;
            best.y = p ? RVec(u.y / tau) : RVec(0);
            best.primal_obj = pcost;
            best.dual_obj = dcost;
            best.gap = gap;
            best.pres = pres;
            best.dres = dres;
            best.iterations = iter;
        }

        if (pres <= opts.feas_tol && dres <= opts.feas_tol &&
            (gap <= opts.abs_gap_tol || relgap <= opts.rel_gap_tol)) {
            res = best;
            res.status = IpmStatus::optimal;
            res.iterations = iter;
            return res;
        }
        // Infeasibility certificates
        const double hz_by = prob.h.dot(u.z) + (p ? prob.b.dot(u.y) : 0.0);
        if (hz_by < 0.0) {
            RVec cert = prob.G.transpose() * u.z;
            if (p) cert += prob.A.transpose() * u.y;
            if (cert.norm() / norm_c <= opts.feas_tol * (-hz_by)) {
                res = best;
                res.status = IpmStatus::primal_infeasible;
                res.iterations = iter;
                res.y = p ? RVec(u.y / (-hz_by)) : RVec(0);
                res.z = u.z / (-hz_by);
                return res;
            }
        }
        const double cx = prob.c.dot(u.x);
        if (cx < 0.0) {
            const double pr = (prob.G * u.x + u.s).norm() / norm_h;
            const double ar = p ? (prob.A * u.x).norm() / norm_b : 0.0;
            if (std::max(pr, ar) <= opts.feas_tol * (-cx)) {
                res = best;
                res.status = IpmStatus::dual_infeasible;
                res.iterations = iter;
                res.x = u.x / (-cx);
                res.s = u.s / (-cx);
                return res;
            }
        }
        if (iter == opts.max_iter) break;

        // --- scaling and directions (in the equilibrated space) ---
        if (!compute_scaling(lay, s, z, W)) break;
        const double mu = (s.dot(z) + tau * kappa) / (deg + 1.0);
        if (mu > 0.99 * mu_prev) {
            if (++stall_count >= 5) break;
        } else {
            stall_count = 0;
        }
        mu_prev = mu;

        if (!kkt.factor(W, 1e-11)) break;
        RVec vx, vy, vz;
        kkt.solve3(W, -P.c, P.b, P.h, vx, vy, vz);

        const RVec res_x = P.A.transpose() * y + P.G.transpose() * z + P.c * tau;
        const RVec res_y = P.A * x - P.b * tau;
        const RVec res_z = P.G * x + s - P.h * tau;
        const double res_t = P.c.dot(x) + (p ? P.b.dot(y) : 0.0) + P.h.dot(z) + kappa;

        RVec lam_lam;
        jordan_prod(lay, W.lambda, W.lambda, lam_lam);

        RVec dx, dy, dz, ds(m), dsc, dzc;
        double dtau = 0.0, dkappa = 0.0;

        auto direction = [&](double sigma, const RVec* corr, double corr_tk, RVec& ox, RVec& oy,
                             RVec& oz, RVec& os, double& otau, double& okappa) -> bool {
            RVec rhs_comp = -lam_lam;
            if (corr) rhs_comp -= *corr;
            rhs_comp += sigma * mu * e;
            RVec q;
            if (!jordan_div(lay, W.lambda, rhs_comp, q)) return false;
            const double rkappa = -tau * kappa - corr_tk + sigma * mu;

            RVec wtq;
            apply_scaling(lay, W, OpKind::WT, q, wtq);
            const double f = 1.0 - sigma;
            RVec ux, uy, uz;
            kkt.solve3(W, -f * res_x, -f * res_y, -f * res_z - wtq, ux, uy, uz);
            const double num = -f * res_t - rkappa / tau -
                               (P.c.dot(ux) + (p ? P.b.dot(uy) : 0.0) + P.h.dot(uz));
            const double den =
                P.c.dot(vx) + (p ? P.b.dot(vy) : 0.0) + P.h.dot(vz) - kappa / tau;
            if (den == 0.0) return false;
            otau = num / den;
            ox = ux + otau * vx;
            oy = p ? RVec(uy + otau * vy) : RVec(0);
            oz = uz + otau * vz;
            RVec wdz;
            apply_scaling(lay, W, OpKind::W, oz, wdz);
            RVec qmw = q - wdz;
            apply_scaling(lay, W, OpKind::WT, qmw, os);
            okappa = (rkappa - kappa * otau) / tau;
            // scaled direction components for step length / correction
            dzc = wdz;
            dsc = qmw;
            return true;
        };

        if (!direction(0.0, nullptr, 0.0, dx, dy, dz, ds, dtau, dkappa)) break;
        RVec dsc_aff = dsc, dzc_aff = dzc;
        double alpha = std::min(max_step(lay, W.lambda, dsc), max_step(lay, W.lambda, dzc));
        if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
        if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
        alpha = std::min(alpha, 1.0);
        const double sigma = std::pow(1.0 - alpha, 3);

        RVec corr;
        jordan_prod(lay, dsc_aff, dzc_aff, corr);
        const double corr_tk = dtau * dkappa;
        if (!direction(sigma, &corr, corr_tk, dx, dy, dz, ds, dtau, dkappa)) break;

        double step = std::min(max_step(lay, W.lambda, dsc), max_step(lay, W.lambda, dzc));
        if (dtau < 0.0) step = std::min(step, -tau / dtau);
        if (dkappa < 0.0) step = std::min(step, -kappa / dkappa);
        step = std::min(1.0, 0.99 * step);
        if (step <= 1e-10) break;

        x += step * dx;
        if (p) y += step * dy;
        z += step * dz;
        s += step * ds;
        tau += step * dtau;
        kappa += step * dkappa;
        if (tau <= 0.0 || kappa <= 0.0) break;
    }

    // Loop exhausted or stalled: classify the best iterate.
    res = best;
    res.iterations = iter;
    const double bgap_rel = best.gap / std::max(1.0, std::abs(best.primal_obj));
    if (best.pres <= opts.feas_tol && best.dres <= opts.feas_tol &&
        (best.gap <= opts.abs_gap_tol || bgap_rel <= opts.rel_gap_tol))
        res.status = IpmStatus::optimal;
    else
        res.status = IpmStatus::numerical_failure;
    return res;
}

}  // namespace iscap::conic::ipm
