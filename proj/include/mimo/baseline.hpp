#pragma once

#include <vector>

#include "mimo/channel.hpp"
#include "mimo/linalg.hpp"
#include "mimo/sysmodel.hpp"

namespace mimo {

// Linear estimate treating the channel estimate as exact.
CVec mismatched_mmse(const CVec& y, const CsiBelief& belief, double sigma2);

// Linear estimate absorbing the CSI error row covariance into the noise term.
CVec robust_mmse(const CVec& y, const CsiBelief& belief, double sigma2);

// Precomputed pieces of the robust likelihood that do not depend on the
// candidate symbol vector.
struct RobustMlWork {
    CMat sigma_inv;    // Sigma_h^{-1}
    CVec sigma_inv_h;  // Sigma_h^{-1} h_hat
};

RobustMlWork make_robust_ml_work(const CsiBelief& belief);

// R(x) = (1/sigma2) (x x^H)^T kron I_M + Sigma_h^{-1}, dense assembly.
CMat assemble_r(const CVec& x, const RobustMlWork& work, double sigma2, int m);

// q(x) = (1/sigma2) conj(x) kron y + Sigma_h^{-1} h_hat.
CVec assemble_q(const CVec& x, const CVec& y, const RobustMlWork& work, double sigma2);

// ln det R(x) - q(x)^H R(x)^{-1} q(x); the criterion whose minimizer is the
// exact symbol decision under Gaussian channel uncertainty.
double robust_ml_objective(const CVec& x, const CVec& y, const RobustMlWork& work,
                           double sigma2, int m);

struct MlResult {
    CVec x;              // argmin, exact constellation points
    double value;        // objective at the argmin
    long long index;     // canonical candidate index, user 1 most significant
};

// Exhaustive nearest-lattice search assuming the estimate is the true channel.
// Guard: 4^{QK} <= 1e6.
MlResult mismatched_ml(const CVec& y, const CsiBelief& belief, double sigma2,
                       const Constellation& c);

// Exhaustive minimization of the robust criterion. Guard: 4^{QK} <= 1e5.
MlResult robust_ml_exhaustive(const CVec& y, const CsiBelief& belief, double sigma2,
                              const Constellation& c);

// Shared-precomp variant for slot loops over one belief.
MlResult robust_ml_exhaustive_pre(const CVec& y, const RobustMlWork& work, int k,
                                  double sigma2, const Constellation& c);

} // namespace mimo
