#pragma once

#include <vector>

#include "mimo/linalg.hpp"
#include "mimo/rng.hpp"
#include "mimo/sysmodel.hpp"

namespace mimo {

// Spatial statistics plus per-user temporal correlation of the fading
// process. h = vec(H) is column-major, so entry (k-1)M+m belongs to user k.
struct ChannelStatistics {
    int M = 0;
    int K = 0;
    RMat Rt;       // K x K transmit-side exponential correlation
    RMat Rr;       // M x M receive-side exponential correlation
    CMat Ch;       // Rt kron Rr, covariance of vec(H)
    CMat Ch_chol;  // lower Cholesky factor of Ch, for sampling
    RVec rho;      // temporal correlation per user, |rho_k| < 1 or == 1 (static)

    // diag(rho_k) kron I_M as an MK-vector of per-entry scalings
    RVec lambda_diag() const;
};

RMat make_exponential(int n, double rho);

// Covariance of the stacked channel for separable exponential correlation.
CMat make_covariance(int m, int k, double rho_t, double rho_r);

ChannelStatistics make_channel_statistics(int m, int k, double rho_t, double rho_r,
                                          const RVec& rho_time);

// Fresh draw h ~ CN(0, Ch).
CVec sample_channel(const ChannelStatistics& st, RngStream& rng);

// One aging step: h_n = Lambda h_{n-1} + Lambda_bar w, w ~ CN(0, Ch).
CVec evolve_channel(const CVec& h_prev, const ChannelStatistics& st, RngStream& rng);

// Covariance of the innovation accumulated between block 1 and block n:
// sum_{j=1}^{n-1} Lambda^{j-1} Lambda_bar Ch Lambda_bar Lambda^{j-1}.
CMat accumulated_innovation_cov(const ChannelStatistics& st, int n);

// K x Lp rows of a DFT matrix; unit-power entries, S S^H = Lp I_K.
CMat make_pilots(int k, int lp);

// Y = H S + Z with Z entries CN(0, sigma2).
CMat transmit_pilots(const CMat& h, const CMat& pilots, double sigma2, RngStream& rng);

// y = H x + z for one data slot.
CVec transmit(const CMat& h, const CVec& x, double sigma2, RngStream& rng);

// Sum of the K diagonal M x M blocks of an MK x MK covariance: the covariance
// of the rows of the matrix-shaped estimation error, used wherever only the
// aggregate per-antenna error statistics matter.
CMat row_covariance(const CMat& sigma_h, int m, int k);

// What a detector knows about the channel: point estimate plus error
// covariance in both stacked and row-aggregated form.
struct CsiBelief {
    CVec h_hat;   // MK
    CMat H_hat;   // M x K, unvec of h_hat
    CMat Sigma_h; // MK x MK, Hermitian PSD
    CMat Sigma_H; // M x M row aggregate, recomputed from Sigma_h on construction
};

CsiBelief make_belief(const CVec& h_hat, const CMat& sigma_h, int m, int k);

// Pilot-based linear MMSE estimate extrapolated to block n under aging.
CsiBelief lmmse_estimate(const CMat& y_pilot, const CMat& pilots,
                         const ChannelStatistics& st, double sigma2, int n);

} // namespace mimo
