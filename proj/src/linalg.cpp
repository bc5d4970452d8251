#include "mimo/linalg.hpp"

#include <cmath>
#include <string>

#include "mimo/errors.hpp"

namespace mimo {

HermitianFactor HermitianFactor::compute(const CMat& a) {
    if (a.rows() != a.cols())
        throw DimensionMismatch("HermitianFactor: matrix must be square, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    const int n = static_cast<int>(a.rows());
    CMat l = CMat::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double diag = a(j, j).real();
        for (int p = 0; p < j; ++p) diag -= std::norm(l(j, p));
        if (!(diag > 0.0) || !std::isfinite(diag))
            throw NotPositiveDefinite("HermitianFactor: pivot " + std::to_string(j) +
                                      " is " + std::to_string(diag));
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            cxd s = a(i, j);
            for (int p = 0; p < j; ++p) s -= l(i, p) * std::conj(l(j, p));
            l(i, j) = s / ljj;
        }
    }
    return HermitianFactor(std::move(l));
}

CVec HermitianFactor::solve_vec(const CVec& b) const {
    if (b.size() != lower_.rows())
        throw DimensionMismatch("HermitianFactor::solve_vec: rhs length " + std::to_string(b.size()) +
                                " vs dim " + std::to_string(lower_.rows()));
    CVec y = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.adjoint().triangularView<Eigen::Upper>().solve(y);
}

CMat HermitianFactor::solve_mat(const CMat& b) const {
    if (b.rows() != lower_.rows())
        throw DimensionMismatch("HermitianFactor::solve_mat: rhs rows " + std::to_string(b.rows()) +
                                " vs dim " + std::to_string(lower_.rows()));
    CMat y = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.adjoint().triangularView<Eigen::Upper>().solve(y);
}

CMat HermitianFactor::inverse() const {
    const CMat eye = CMat::Identity(lower_.rows(), lower_.cols());
    return solve(eye);
}

double HermitianFactor::log_det() const {
    double s = 0.0;
    for (int i = 0; i < lower_.rows(); ++i) s += std::log(lower_(i, i).real());
    return 2.0 * s;
}

CVec hermitian_solve(const CMat& a, const CVec& b) {
    return HermitianFactor::compute(a).solve(b);
}

CMat hermitian_solve(const CMat& a, const CMat& b) {
    return HermitianFactor::compute(a).solve(b);
}

CgResult cg_solve(const CMat& r, const CVec& q, const CVec& s0, int max_iters, double tol) {
    const auto n = r.rows();
    if (r.cols() != n) throw DimensionMismatch("cg_solve: matrix must be square");
    if (q.size() != n || s0.size() != n)
        throw DimensionMismatch("cg_solve: vector length does not match matrix dim");

    CVec s = s0;
    CVec res = q - r * s;
    CVec p = res;
    double rr = res.squaredNorm();
    const double qn = q.norm();
    const double stop = tol > 0.0 ? tol * qn : -1.0;

    int it = 0;
    while (it < max_iters) {
        if (std::sqrt(rr) <= stop) break;
        if (rr == 0.0) break; // already exact, avoids 0/0 below
        CVec rp = r * p;
        const double curv = std::real(p.dot(rp)); // p^H R p
        if (!(curv > 0.0) || !std::isfinite(curv))
            throw BreakdownError("cg_solve: non-positive curvature " + std::to_string(curv) +
                                 " at iteration " + std::to_string(it));
        const double tau = rr / curv;
        s += tau * p;
        res -= tau * rp;
        const double rr_new = res.squaredNorm();
        const double ups = rr_new / rr;
        p = res + ups * p;
        rr = rr_new;
        ++it;
    }
    const double rel = qn > 0.0 ? std::sqrt(rr) / qn : std::sqrt(rr);
    return {std::move(s), it, rel};
}

CMat block_contract(const CMat& mtx, const RMat& w, double scale) {
    const int m = static_cast<int>(w.rows());
    if (w.cols() != m) throw DimensionMismatch("block_contract: weight must be square");
    if (mtx.rows() != mtx.cols() || mtx.rows() % m != 0)
        throw DimensionMismatch("block_contract: matrix dim must be a multiple of weight dim");
    const int k = static_cast<int>(mtx.rows()) / m;
    CMat out(k, k);
    const CMat wc = w.cast<cxd>();
    for (int col = 0; col < k; ++col)
        for (int row = 0; row < k; ++row)
            out(row, col) = scale * (mtx.block(col * m, row * m, m, m).array() * wc.array()).sum();
    return out;
}

CVec block_contract_rows(const CMat& a, const RMat& w, double scale) {
    const int m = static_cast<int>(w.rows());
    if (w.cols() != m) throw DimensionMismatch("block_contract_rows: weight must be square");
    if (a.rows() != m || a.cols() % m != 0)
        throw DimensionMismatch("block_contract_rows: input must be M x MK");
    const int k = static_cast<int>(a.cols()) / m;
    CVec out(k);
    const CMat wc = w.cast<cxd>();
    for (int j = 0; j < k; ++j)
        out(j) = scale * (a.block(0, j * m, m, m).array() * wc.array()).sum();
    return out;
}

double spectral_upper_bound(const CMat& c) {
    if (c.rows() != c.cols()) throw DimensionMismatch("spectral_upper_bound: matrix must be square");
    const int n = static_cast<int>(c.rows());
    if (n == 0) return 0.0;
    // fixed, slightly uneven start so it cannot be orthogonal to the top
    // eigenvector of a permutation-symmetric matrix
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = cxd(1.0 + static_cast<double>(i) / n, 0.0);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 50; ++it) {
        CVec cv = c * v;
        const double nrm = cv.norm();
        if (nrm == 0.0) return 0.0;
        lambda = std::real(v.dot(cv)); // Rayleigh quotient, real for Hermitian c
        v = cv / nrm;
    }
    return 1.01 * std::max(lambda, 0.0);
}

double hermitian_defect(const CMat& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

} // namespace mimo
