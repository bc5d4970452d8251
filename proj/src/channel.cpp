#include "mimo/channel.hpp"

#include <cmath>
#include <string>

#include "mimo/errors.hpp"

namespace mimo {

RVec ChannelStatistics::lambda_diag() const {
    RVec d(M * K);
    for (int k = 0; k < K; ++k) d.segment(k * M, M).setConstant(rho(k));
    return d;
}

RMat make_exponential(int n, double rho) {
    if (std::abs(rho) >= 1.0)
        throw InvalidCorrelation("make_exponential: |rho| must be < 1, got " + std::to_string(rho));
    RMat r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
    return r;
}

CMat make_covariance(int m, int k, double rho_t, double rho_r) {
    const RMat rt = make_exponential(k, rho_t);
    const RMat rr = make_exponential(m, rho_r);
    CMat ch(m * k, m * k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
            ch.block(a * m, b * m, m, m) = (rt(a, b) * rr).cast<cxd>();
    return ch;
}

ChannelStatistics make_channel_statistics(int m, int k, double rho_t, double rho_r,
                                          const RVec& rho_time) {
    if (rho_time.size() != k)
        throw DimensionMismatch("make_channel_statistics: need one temporal rho per user");
    for (int i = 0; i < k; ++i)
        if (std::abs(rho_time(i)) > 1.0)
            throw InvalidCorrelation("make_channel_statistics: |rho_k| must be <= 1");
    ChannelStatistics st;
    st.M = m;
    st.K = k;
    st.Rt = make_exponential(k, rho_t);
    st.Rr = make_exponential(m, rho_r);
    st.Ch = make_covariance(m, k, rho_t, rho_r);
    // jitter retry covers rho -> 1 edge cases where roundoff makes Ch
    // numerically semidefinite
    try {
        st.Ch_chol = HermitianFactor::compute(st.Ch).lower();
    } catch (const NotPositiveDefinite&) {
        CMat jittered = st.Ch + 1e-12 * CMat::Identity(m * k, m * k);
        st.Ch_chol = HermitianFactor::compute(jittered).lower();
    }
    st.rho = rho_time;
    return st;
}

CVec sample_channel(const ChannelStatistics& st, RngStream& rng) {
    const int n = st.M * st.K;
    CVec g(n);
    for (int i = 0; i < n; ++i) g(i) = rng.cnormal();
    return st.Ch_chol * g;
}

CVec evolve_channel(const CVec& h_prev, const ChannelStatistics& st, RngStream& rng) {
    const int n = st.M * st.K;
    if (h_prev.size() != n) throw DimensionMismatch("evolve_channel: state length mismatch");
    CVec g(n);
    for (int i = 0; i < n; ++i) g(i) = rng.cnormal();
    const CVec w = st.Ch_chol * g;
    CVec out(n);
    for (int k = 0; k < st.K; ++k) {
        const double r = st.rho(k);
        const double rb = std::sqrt(std::max(0.0, 1.0 - r * r));
        out.segment(k * st.M, st.M) =
            r * h_prev.segment(k * st.M, st.M) + rb * w.segment(k * st.M, st.M);
    }
    return out;
}

CMat accumulated_innovation_cov(const ChannelStatistics& st, int n) {
    if (n < 1) throw IndexError("accumulated_innovation_cov: block index must be >= 1");
    const int dim = st.M * st.K;
    CMat acc = CMat::Zero(dim, dim);
    const RVec lam = st.lambda_diag();
    RVec lam_bar(dim);
    for (int i = 0; i < dim; ++i) lam_bar(i) = std::sqrt(std::max(0.0, 1.0 - lam(i) * lam(i)));
    // Lambda^{j-1} Lambda_bar as one per-entry scale, applied to rows and columns
    RVec scale = lam_bar;
    for (int j = 1; j <= n - 1; ++j) {
        acc += scale.cast<cxd>().asDiagonal() * st.Ch * scale.cast<cxd>().asDiagonal();
        scale = scale.cwiseProduct(lam);
    }
    return acc;
}

CMat make_pilots(int k, int lp) {
    if (lp < k) throw ConfigError("make_pilots: need at least K pilot slots");
    CMat s(k, lp);
    for (int a = 0; a < k; ++a)
        for (int l = 0; l < lp; ++l) {
            const double phase = -2.0 * M_PI * a * l / lp;
            s(a, l) = cxd(std::cos(phase), std::sin(phase));
        }
    return s;
}

CMat transmit_pilots(const CMat& h, const CMat& pilots, double sigma2, RngStream& rng) {
    if (h.cols() != pilots.rows()) throw DimensionMismatch("transmit_pilots: K mismatch");
    CMat y = h * pilots;
    const double sd = std::sqrt(sigma2);
    for (int c = 0; c < y.cols(); ++c)
        for (int r = 0; r < y.rows(); ++r) y(r, c) += sd * rng.cnormal();
    return y;
}

CVec transmit(const CMat& h, const CVec& x, double sigma2, RngStream& rng) {
    if (h.cols() != x.size()) throw DimensionMismatch("transmit: K mismatch");
    CVec y = h * x;
    const double sd = std::sqrt(sigma2);
    for (int r = 0; r < y.size(); ++r) y(r) += sd * rng.cnormal();
    return y;
}

CMat row_covariance(const CMat& sigma_h, int m, int k) {
    if (sigma_h.rows() != m * k || sigma_h.cols() != m * k)
        throw DimensionMismatch("row_covariance: expected MK x MK input");
    CMat out = CMat::Zero(m, m);
    for (int b = 0; b < k; ++b) out += sigma_h.block(b * m, b * m, m, m);
    return out;
}

CsiBelief make_belief(const CVec& h_hat, const CMat& sigma_h, int m, int k) {
    if (h_hat.size() != m * k) throw DimensionMismatch("make_belief: h length mismatch");
    CsiBelief b;
    b.h_hat = h_hat;
    b.H_hat = unvec(h_hat, m, k);
    b.Sigma_h = 0.5 * (sigma_h + sigma_h.adjoint()); // PSD up to roundoff, keep it Hermitian
    b.Sigma_H = row_covariance(b.Sigma_h, m, k);
    return b;
}

CsiBelief lmmse_estimate(const CMat& y_pilot, const CMat& pilots,
                         const ChannelStatistics& st, double sigma2, int n) {
    if (n < 1) throw IndexError("lmmse_estimate: block index must be >= 1");
    const int m = st.M, k = st.K;
    const int dim = m * k;
    const double lp = static_cast<double>(pilots.cols());
    if (y_pilot.rows() != m || y_pilot.cols() != pilots.cols())
        throw DimensionMismatch("lmmse_estimate: observation shape mismatch");

    // matched filter then Wiener smoothing against Lp Ch + sigma2 I
    const CVec r = vec(y_pilot * pilots.adjoint());
    const CMat gram = lp * st.Ch + sigma2 * CMat::Identity(dim, dim);
    const HermitianFactor f = HermitianFactor::compute(gram);
    const CVec h1 = st.Ch * f.solve(r);
    const CMat eye = CMat::Identity(dim, dim);
    CMat sig1 = sigma2 * st.Ch * f.solve(eye);

    if (n == 1) return make_belief(h1, sig1, m, k);

    RVec lam_pow(dim);
    const RVec lam = st.lambda_diag();
    for (int i = 0; i < dim; ++i) lam_pow(i) = std::pow(lam(i), n - 1);
    const CVec hn = lam_pow.cast<cxd>().asDiagonal() * h1;
    CMat sign = lam_pow.cast<cxd>().asDiagonal() * sig1 * lam_pow.cast<cxd>().asDiagonal();
    sign += accumulated_innovation_cov(st, n);
    return make_belief(hn, sign, m, k);
}

} // namespace mimo
