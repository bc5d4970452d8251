#pragma once

#include <vector>

#include "mimo/channel.hpp"
#include "mimo/linalg.hpp"

namespace mimo {

// Gaussian state of the stacked channel at one block.
struct KalmanBelief {
    CVec h;     // MK
    CMat sigma; // MK x MK, Hermitian PSD
};

// One aging step of mean and covariance.
KalmanBelief kf_predict(const KalmanBelief& post, const ChannelStatistics& st);

// Soft symbol estimate from the predicted channel, the regressor of the
// data-aided measurement model.
CVec data_estimate(const CVec& y, const CsiBelief& prior, double sigma2);

// Error covariance of that estimate; identical for every slot of a block.
CMat data_estimate_cov(const CsiBelief& prior, double sigma2);

// Effective measurement noise of the data-aided model: the symbol error gets
// folded through the stationary channel statistics.
// xi[i,j] = sum_{k,l} sigma_x[k,l] * ch[(k-1)M+i, (l-1)M+j].
CMat xi_matrix(const CMat& sigma_x, const CMat& ch, int m, int k);

// Scalar-measurement-group Kalman sweep over the slots of one block. Each
// slot applies gain sigma Xt^H (c_z + Xt sigma Xt^H)^{-1} with Xt = xhat^T kron I_M.
// Slots whose innovation matrix has an eigenvalue below 1e-12 are skipped and
// counted. Returns the number of skipped slots.
int kf_sequential_update(KalmanBelief& belief, const std::vector<CVec>& xhat,
                         const std::vector<CVec>& y, const CMat& c_z);

struct TrackResult {
    std::vector<CsiBelief> per_block; // index n-1 holds the belief used at block n
    int skipped_slots = 0;
};

// Pilot-initialized data-aided tracking across blocks 2..n_target. Block 1 is
// the pilot LMMSE belief; each later block predicts, estimates its slots'
// symbols from the prediction, and runs the sequential update over the block.
TrackResult track_frame(const CMat& y_pilot, const CMat& pilots,
                        const std::vector<std::vector<CVec>>& y_blocks,
                        const ChannelStatistics& st, double sigma2, int n_target);

} // namespace mimo
