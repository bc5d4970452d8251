#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>

namespace mimo {

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Cholesky factor A = L L^H of a Hermitian positive definite matrix.
// Throws NotPositiveDefinite when a pivot is not strictly positive.
class HermitianFactor {
public:
    static HermitianFactor compute(const CMat& a);

    const CMat& lower() const { return lower_; }
    int dim() const { return static_cast<int>(lower_.rows()); }

    CVec solve_vec(const CVec& b) const;
    CMat solve_mat(const CMat& b) const;

    // Dispatch on compile-time shape so Eigen expressions bind unambiguously.
    template <typename Derived>
    auto solve(const Eigen::MatrixBase<Derived>& b) const {
        if constexpr (Derived::ColsAtCompileTime == 1)
            return solve_vec(b);
        else
            return solve_mat(b);
    }

    CMat inverse() const;
    double log_det() const; // of the source matrix, real because it is PD

private:
    explicit HermitianFactor(CMat lower) : lower_(std::move(lower)) {}
    CMat lower_;
};

// One-shot solve A x = b for Hermitian PD A.
CVec hermitian_solve(const CMat& a, const CVec& b);
CMat hermitian_solve(const CMat& a, const CMat& b);

struct CgResult {
    CVec s;
    int iters;
    double rel_residual; // |q - R s| / |q| at exit
};

// Conjugate gradient for Hermitian PD systems R s = q, warm-started at s0.
// Stops at the first iterate whose residual satisfies |q - R s| <= tol*|q|,
// or after max_iters iterations. tol <= 0 disables the residual stop, giving
// a fixed iteration count (used by the unfolded detectors).
CgResult cg_solve(const CMat& r, const CVec& q, const CVec& s0, int max_iters, double tol);

// out[k,k'] = scale * sum_{m,m'} mtx[(k'-1)M+m, (k-1)M+m] * w[m,m'] with w real.
// With w = I this collects the transposed per-block traces of an MK x MK matrix
// laid out as K x K blocks of size M x M.
CMat block_contract(const CMat& mtx, const RMat& w, double scale);

// out[k] = scale * sum_{m',m} a[m', (k-1)M+m] * w[m',m] for an M x MK input.
CVec block_contract_rows(const CMat& a, const RMat& w, double scale);

// Upper bound on the largest eigenvalue of a Hermitian PSD matrix:
// 50 power iterations from a fixed start, then a 1.01 safety factor.
double spectral_upper_bound(const CMat& c);

// max |a - a^H| entry; cheap Hermitian-ness diagnostic
double hermitian_defect(const CMat& a);

inline CMat unvec(const CVec& v, int rows, int cols) {
    return Eigen::Map<const CMat>(v.data(), rows, cols);
}

inline CVec vec(const CMat& m) {
    return Eigen::Map<const CVec>(m.data(), m.size());
}

} // namespace mimo
