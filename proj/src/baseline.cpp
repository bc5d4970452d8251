#include "mimo/baseline.hpp"

#include <cmath>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mimo/errors.hpp"

namespace mimo {

namespace {

CVec linear_estimate(const CVec& y, const CsiBelief& belief, const CMat& effective_noise) {
    const CMat& h = belief.H_hat;
    const CMat gram = h * h.adjoint() + effective_noise;
    return h.adjoint() * hermitian_solve(gram, y);
}

} // namespace

CVec mismatched_mmse(const CVec& y, const CsiBelief& belief, double sigma2) {
    const int m = static_cast<int>(belief.H_hat.rows());
    return linear_estimate(y, belief, sigma2 * CMat::Identity(m, m));
}

CVec robust_mmse(const CVec& y, const CsiBelief& belief, double sigma2) {
    const int m = static_cast<int>(belief.H_hat.rows());
    return linear_estimate(y, belief, belief.Sigma_H + sigma2 * CMat::Identity(m, m));
}

RobustMlWork make_robust_ml_work(const CsiBelief& belief) {
    RobustMlWork w;
    const HermitianFactor f = HermitianFactor::compute(belief.Sigma_h);
    w.sigma_inv = f.inverse();
    w.sigma_inv = 0.5 * (w.sigma_inv + w.sigma_inv.adjoint());
    w.sigma_inv_h = w.sigma_inv * belief.h_hat;
    return w;
}

CMat assemble_r(const CVec& x, const RobustMlWork& work, double sigma2, int m) {
    const int k = static_cast<int>(x.size());
    CMat r = work.sigma_inv;
    // (x x^H)^T kron I_M touches only the M-strided diagonals of each block
    for (int bi = 0; bi < k; ++bi)
        for (int bj = 0; bj < k; ++bj) {
            const cxd v = std::conj(x(bi)) * x(bj) / sigma2;
            for (int d = 0; d < m; ++d) r(bi * m + d, bj * m + d) += v;
        }
    return r;
}

CVec assemble_q(const CVec& x, const CVec& y, const RobustMlWork& work, double sigma2) {
    const int k = static_cast<int>(x.size());
    const int m = static_cast<int>(y.size());
    CVec q = work.sigma_inv_h;
    for (int b = 0; b < k; ++b) q.segment(b * m, m) += std::conj(x(b)) / sigma2 * y;
    return q;
}

double robust_ml_objective(const CVec& x, const CVec& y, const RobustMlWork& work,
                           double sigma2, int m) {
    const CMat r = assemble_r(x, work, sigma2, m);
    const CVec q = assemble_q(x, y, work, sigma2);
    const HermitianFactor f = HermitianFactor::compute(r);
    return f.log_det() - std::real(q.dot(f.solve(q)));
}

namespace {

// candidate index -> symbol vector, user 1 in the highest digit
void fill_candidate(long long idx, int k, const Constellation& c, CVec& x) {
    const int p = c.size();
    for (int u = k - 1; u >= 0; --u) {
        x(u) = c.points[static_cast<size_t>(idx % p)];
        idx /= p;
    }
}

template <typename Objective>
MlResult exhaustive_min(long long count, int k, const Constellation& c, Objective&& obj) {
    double best_v = std::numeric_limits<double>::infinity();
    long long best_i = -1;
#ifdef _OPENMP
#pragma omp parallel if (count >= 4096 && !omp_in_parallel())
    {
        double loc_v = std::numeric_limits<double>::infinity();
        long long loc_i = -1;
        CVec x(k);
#pragma omp for schedule(static)
        for (long long i = 0; i < count; ++i) {
            fill_candidate(i, k, c, x);
            const double v = obj(x);
            if (v < loc_v || (v == loc_v && i < loc_i)) {
                loc_v = v;
                loc_i = i;
            }
        }
#pragma omp critical
        {
            // min by (value, index): associative and commutative, so the
            // merge order across threads cannot change the winner
            if (loc_v < best_v || (loc_v == best_v && loc_i >= 0 && loc_i < best_i)) {
                best_v = loc_v;
                best_i = loc_i;
            }
        }
    }
#else
    CVec x(k);
    for (long long i = 0; i < count; ++i) {
        fill_candidate(i, k, c, x);
        const double v = obj(x);
        if (v < best_v) {
            best_v = v;
            best_i = i;
        }
    }
#endif
    if (best_i < 0) throw BreakdownError("exhaustive_min: no candidate produced a finite value");
    MlResult res;
    res.x = CVec(k);
    fill_candidate(best_i, k, c, res.x);
    res.value = best_v;
    res.index = best_i;
    return res;
}

long long candidate_count(int k, const Constellation& c, double guard, const char* who) {
    const double total = std::pow(static_cast<double>(c.size()), k);
    if (total > guard)
        throw SearchSpaceTooLarge(std::string(who) + ": " + std::to_string(total) +
                                  " candidates exceed guard " + std::to_string(guard));
    return static_cast<long long>(std::llround(total));
}

} // namespace

MlResult mismatched_ml(const CVec& y, const CsiBelief& belief, double /*sigma2*/,
                       const Constellation& c) {
    const int k = static_cast<int>(belief.H_hat.cols());
    const long long count = candidate_count(k, c, 1e6, "mismatched_ml");
    const CMat& h = belief.H_hat;
    return exhaustive_min(count, k, c,
                          [&](const CVec& x) { return (y - h * x).squaredNorm(); });
}

MlResult robust_ml_exhaustive(const CVec& y, const CsiBelief& belief, double sigma2,
                              const Constellation& c) {
    const int k = static_cast<int>(belief.H_hat.cols());
    return robust_ml_exhaustive_pre(y, make_robust_ml_work(belief), k, sigma2, c);
}

MlResult robust_ml_exhaustive_pre(const CVec& y, const RobustMlWork& work, int k,
                                  double sigma2, const Constellation& c) {
    const int m = static_cast<int>(y.size());
    const long long count = candidate_count(k, c, 1e5, "robust_ml_exhaustive");
    return exhaustive_min(count, k, c, [&](const CVec& x) {
        return robust_ml_objective(x, y, work, sigma2, m);
    });
}

} // namespace mimo
