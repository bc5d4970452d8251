#include "mimo/lcradmm.hpp"

#include <cmath>
#include <string>

#include "mimo/baseline.hpp"
#include "mimo/errors.hpp"
#include "mimo/radmm.hpp"

namespace mimo {

LcPrecomp lc_precompute(const CsiBelief& belief, double sigma2, double delta) {
    const int m = static_cast<int>(belief.H_hat.rows());
    const int k = static_cast<int>(belief.H_hat.cols());
    if (!(delta > 0.0)) throw ConfigError("lc_precompute: delta must be positive");
    const CMat cr = belief.Sigma_H + sigma2 * CMat::Identity(m, m);
    const HermitianFactor crf = HermitianFactor::compute(cr);
    CMat ht_cinv = crf.solve(belief.H_hat).adjoint(); // (Cr^{-1} H)^H = H^H Cr^{-1}
    CMat phi = ht_cinv * belief.H_hat + (delta / 2.0) * CMat::Identity(k, k);
    phi = 0.5 * (phi + phi.adjoint());
    return LcPrecomp{HermitianFactor::compute(phi), std::move(ht_cinv), delta};
}

std::vector<double> default_kappa(double delta, int q, double alpha) {
    return default_beta(delta, q, alpha); // same half-margin rule
}

void LcNetParams::validate(int q, double alpha) const {
    const size_t l = static_cast<size_t>(layers);
    if (layers < 1) throw ConfigError("lcradmmnet: need at least one layer");
    if (kappa.size() != l || upsilon.size() != l)
        throw ConfigError("lcradmmnet: per-layer weight counts do not match depth");
    if (!(delta > 0.0)) throw ConfigError("lcradmmnet: delta must be positive");
    for (size_t i = 0; i < l; ++i) {
        if (kappa[i].size() != static_cast<size_t>(q))
            throw ConfigError("lcradmmnet: kappa must carry one value per binary layer");
        for (int b = 0; b < q; ++b) {
            const double denom =
                delta * std::pow(4.0, b) - 2.0 * alpha * alpha * kappa[i][static_cast<size_t>(b)];
            if (!(denom > 0.0))
                throw NonconvexDenominator("lcradmmnet: layer " + std::to_string(i) +
                                           " weight " + std::to_string(b) +
                                           " violates the convexity margin");
        }
    }
}

LcNetParams neutral_lcnet_params(int layers, int q, double alpha, const LcAlgParams& base) {
    LcNetParams p;
    p.layers = layers;
    p.delta = base.delta;
    const std::vector<double> kap =
        base.kappa.empty() ? default_kappa(base.delta, q, alpha) : base.kappa;
    p.kappa.assign(static_cast<size_t>(layers), kap);
    p.upsilon.assign(static_cast<size_t>(layers), 1.0);
    return p;
}

std::vector<CVec> u_update(const CVec& x, const CVec& theta, const std::vector<CVec>& u_prev,
                           double delta, const std::vector<double>& kappa,
                           const Constellation& c) {
    // identical subproblem to the full detector's binary sweep
    return v_update(x, theta, u_prev, delta, kappa, c);
}

namespace {

CVec recombine(const std::vector<CVec>& u, double alpha) {
    CVec acc = CVec::Zero(u[0].size());
    for (size_t b = 0; b < u.size(); ++b) acc += std::pow(2.0, static_cast<double>(b)) * u[b];
    return acc / alpha;
}

} // namespace

CVec lc_x_update_mixed(const LcPrecomp& pre, const CVec& y, const CVec& mix, const CVec& theta) {
    const CVec g0 = pre.ht_cinv * y;
    return pre.phi.solve(g0 - (pre.delta / 2.0) * (theta - mix));
}

CVec lc_x_update(const LcPrecomp& pre, const CVec& y, const std::vector<CVec>& u,
                 const CVec& theta, const Constellation& c) {
    return lc_x_update_mixed(pre, y, recombine(u, c.alpha), theta);
}

CVec lcradmm_detect_pre(const CVec& y, const LcPrecomp& pre, const CsiBelief& belief,
                        double sigma2, const LcAlgParams& params, const Constellation& c,
                        LcDiag* diag) {
    if (params.iters < 1) throw ConfigError("lcradmm: need at least one iteration");
    const int k = static_cast<int>(belief.H_hat.cols());
    const std::vector<double> kap =
        params.kappa.empty() ? default_kappa(params.delta, c.order, c.alpha) : params.kappa;

    CVec x = robust_mmse(y, belief, sigma2);
    std::vector<CVec> u = qam_decompose(slice_to_symbol(x, c), c);
    CVec theta = CVec::Zero(k);

    for (int it = 0; it < params.iters; ++it) {
        u = u_update(x, theta, u, params.delta, kap, c);
        const CVec recomb = recombine(u, c.alpha);
        x = lc_x_update_mixed(pre, y, recomb, theta);
        theta += x - recomb;
        if (diag) diag->consensus.push_back((x - recomb).norm());
    }
    return x;
}

CVec lcradmm_detect(const CVec& y, const CsiBelief& belief, double sigma2,
                    const LcAlgParams& params, const Constellation& c, LcDiag* diag) {
    const LcPrecomp pre = lc_precompute(belief, sigma2, params.delta);
    if (diag) diag->factorizations += 1;
    return lcradmm_detect_pre(y, pre, belief, sigma2, params, c, diag);
}

CVec lcradmmnet_forward_pre(const CVec& y, const LcPrecomp& pre, const CsiBelief& belief,
                            double sigma2, const LcNetParams& params, const Constellation& c,
                            LcDiag* diag) {
    params.validate(c.order, c.alpha);
    const int k = static_cast<int>(belief.H_hat.cols());

    CVec x = robust_mmse(y, belief, sigma2);
    std::vector<CVec> u = qam_decompose(slice_to_symbol(x, c), c);
    CVec theta = CVec::Zero(k);

    for (int layer = 0; layer < params.layers; ++layer) {
        const size_t li = static_cast<size_t>(layer);
        u = u_update(x, theta, u, params.delta, params.kappa[li], c);
        const double rel = params.upsilon[li];
        const CVec mix = rel * recombine(u, c.alpha) + (1.0 - rel) * x;
        x = lc_x_update_mixed(pre, y, mix, theta);
        theta += x - mix;
        if (diag) diag->consensus.push_back((x - mix).norm());
    }
    return x;
}

CVec lcradmmnet_forward(const CVec& y, const CsiBelief& belief, double sigma2,
                        const LcNetParams& params, const Constellation& c, LcDiag* diag) {
    const LcPrecomp pre = lc_precompute(belief, sigma2, params.delta);
    if (diag) diag->factorizations += 1;
    return lcradmmnet_forward_pre(y, pre, belief, sigma2, params, c, diag);
}

} // namespace mimo
