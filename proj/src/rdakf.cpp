#include "mimo/rdakf.hpp"

#include <cmath>
#include <string>

#include "mimo/baseline.hpp"
#include "mimo/errors.hpp"

namespace mimo {

KalmanBelief kf_predict(const KalmanBelief& post, const ChannelStatistics& st) {
    const int dim = st.M * st.K;
    if (post.h.size() != dim) throw DimensionMismatch("kf_predict: state length mismatch");
    const RVec lam = st.lambda_diag();
    RVec lam_bar(dim);
    for (int i = 0; i < dim; ++i) lam_bar(i) = std::sqrt(std::max(0.0, 1.0 - lam(i) * lam(i)));

    KalmanBelief out;
    out.h = lam.cast<cxd>().asDiagonal() * post.h;
    out.sigma = lam.cast<cxd>().asDiagonal() * post.sigma * lam.cast<cxd>().asDiagonal() +
                lam_bar.cast<cxd>().asDiagonal() * st.Ch * lam_bar.cast<cxd>().asDiagonal();
    out.sigma = 0.5 * (out.sigma + out.sigma.adjoint());
    return out;
}

CVec data_estimate(const CVec& y, const CsiBelief& prior, double sigma2) {
    return robust_mmse(y, prior, sigma2);
}

CMat data_estimate_cov(const CsiBelief& prior, double sigma2) {
    const CMat& h = prior.H_hat;
    const int m = static_cast<int>(h.rows());
    const int k = static_cast<int>(h.cols());
    const CMat gram = h * h.adjoint() + prior.Sigma_H + sigma2 * CMat::Identity(m, m);
    CMat sx = CMat::Identity(k, k) - h.adjoint() * hermitian_solve(gram, h);
    return 0.5 * (sx + sx.adjoint());
}

CMat xi_matrix(const CMat& sigma_x, const CMat& ch, int m, int k) {
    if (sigma_x.rows() != k || sigma_x.cols() != k)
        throw DimensionMismatch("xi_matrix: symbol covariance must be K x K");
    if (ch.rows() != m * k || ch.cols() != m * k)
        throw DimensionMismatch("xi_matrix: channel covariance must be MK x MK");
    CMat xi = CMat::Zero(m, m);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) xi += sigma_x(a, b) * ch.block(a * m, b * m, m, m);
    return 0.5 * (xi + xi.adjoint());
}

namespace {

// Xt v for Xt = x^T kron I_M, without forming Xt
CVec apply_xt(const CVec& x, const CVec& v, int m) {
    CVec out = CVec::Zero(m);
    for (int k = 0; k < x.size(); ++k) out += x(k) * v.segment(k * m, m);
    return out;
}

// Xt Sigma as an M x MK block-row combination
CMat apply_xt_mat(const CVec& x, const CMat& sigma, int m) {
    CMat out = CMat::Zero(m, sigma.cols());
    for (int k = 0; k < x.size(); ++k) out += x(k) * sigma.middleRows(k * m, m);
    return out;
}

} // namespace

int kf_sequential_update(KalmanBelief& belief, const std::vector<CVec>& xhat,
                         const std::vector<CVec>& y, const CMat& c_z) {
    if (xhat.size() != y.size())
        throw DimensionMismatch("kf_sequential_update: regressor/observation count mismatch");
    const int m = static_cast<int>(c_z.rows());
    const int dim = static_cast<int>(belief.h.size());
    int skipped = 0;

    for (size_t t = 0; t < y.size(); ++t) {
        const CVec& xt = xhat[t];
        if (xt.size() * m != dim)
            throw DimensionMismatch("kf_sequential_update: regressor length mismatch");
        const CMat g = apply_xt_mat(xt, belief.sigma, m); // Xt Sigma
        CMat innov = c_z;
        for (int k = 0; k < xt.size(); ++k)
            innov += g.middleCols(k * m, m) * std::conj(xt(k)); // + Xt Sigma Xt^H
        innov = 0.5 * (innov + innov.adjoint());

        Eigen::SelfAdjointEigenSolver<CMat> es(innov, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < 1e-12) {
            ++skipped;
            continue;
        }

        const CMat gain = HermitianFactor::compute(innov).solve(g).adjoint(); // Sigma Xt^H innov^{-1}
        belief.h += gain * (y[t] - apply_xt(xt, belief.h, m));
        belief.sigma -= gain * g;
        belief.sigma = 0.5 * (belief.sigma + belief.sigma.adjoint());
    }
    return skipped;
}

TrackResult track_frame(const CMat& y_pilot, const CMat& pilots,
                        const std::vector<std::vector<CVec>>& y_blocks,
                        const ChannelStatistics& st, double sigma2, int n_target) {
    if (n_target < 1) throw IndexError("track_frame: target block must be >= 1");
    if (static_cast<int>(y_blocks.size()) < n_target - 1)
        throw DimensionMismatch("track_frame: need observations for every block up to the target");

    TrackResult res;
    const CsiBelief first = lmmse_estimate(y_pilot, pilots, st, sigma2, 1);
    res.per_block.push_back(first);

    KalmanBelief kb{first.h_hat, first.Sigma_h};
    for (int n = 2; n <= n_target; ++n) {
        kb = kf_predict(kb, st);
        const CsiBelief prior = make_belief(kb.h, kb.sigma, st.M, st.K);

        const auto& obs = y_blocks[static_cast<size_t>(n - 2)];
        std::vector<CVec> xh;
        xh.reserve(obs.size());
        for (const CVec& yt : obs) xh.push_back(data_estimate(yt, prior, sigma2));

        const CMat sx = data_estimate_cov(prior, sigma2);
        const CMat c_z = xi_matrix(sx, st.Ch, st.M, st.K) +
                         sigma2 * CMat::Identity(st.M, st.M);
        res.skipped_slots += kf_sequential_update(kb, xh, obs, c_z);
        res.per_block.push_back(make_belief(kb.h, kb.sigma, st.M, st.K));
    }
    return res;
}

} // namespace mimo
