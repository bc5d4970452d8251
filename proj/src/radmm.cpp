#include "mimo/radmm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mimo/errors.hpp"

namespace mimo {

std::vector<double> default_beta(double mu, int q, double alpha) {
    std::vector<double> b(static_cast<size_t>(q));
    for (int i = 0; i < q; ++i) b[static_cast<size_t>(i)] = mu * std::pow(4.0, i) / (4.0 * alpha * alpha);
    return b;
}

void RadmmNetParams::validate(int m, int q, double alpha) const {
    const size_t l = static_cast<size_t>(layers);
    if (layers < 1) throw ConfigError("radmmnet: need at least one layer");
    if (mu.size() != l || beta.size() != l || relax.size() != l)
        throw ConfigError("radmmnet: per-layer weight counts do not match depth");
    if (!eps_spectral && eps.size() != l)
        throw ConfigError("radmmnet: eps must carry one value per layer");
    if (W.rows() != m || W.cols() != m)
        throw ConfigError("radmmnet: W must be M x M");
    for (size_t i = 0; i < l; ++i) {
        if (!(mu[i] > 0.0)) throw ConfigError("radmmnet: mu must stay positive");
        if (beta[i].size() != static_cast<size_t>(q))
            throw ConfigError("radmmnet: beta must carry one value per binary layer");
        for (int b = 0; b < q; ++b) {
            const double denom = mu[i] * std::pow(4.0, b) - 2.0 * alpha * alpha * beta[i][static_cast<size_t>(b)];
            if (!(denom > 0.0))
                throw NonconvexDenominator("radmmnet: layer " + std::to_string(i) +
                                           " weight " + std::to_string(b) +
                                           " violates the convexity margin");
        }
    }
}

RadmmNetParams neutral_radmmnet_params(int layers, int m, int q, double alpha,
                                       const RadmmParams& base) {
    RadmmNetParams p;
    p.layers = layers;
    const std::vector<double> beta =
        base.beta.empty() ? default_beta(base.mu, q, alpha) : base.beta;
    p.mu.assign(static_cast<size_t>(layers), base.mu);
    p.beta.assign(static_cast<size_t>(layers), beta);
    p.relax.assign(static_cast<size_t>(layers), 1.0);
    p.W = RMat::Identity(m, m);
    p.eps_spectral = true;
    return p;
}

std::vector<CVec> v_update(const CVec& x, const CVec& lambda, const std::vector<CVec>& v_prev,
                           double mu, const std::vector<double>& beta, const Constellation& c) {
    const int q = c.order;
    if (static_cast<int>(v_prev.size()) != q)
        throw DimensionMismatch("v_update: expected one binary layer per order bit");
    if (static_cast<int>(beta.size()) != q)
        throw DimensionMismatch("v_update: beta size mismatch");
    const double a = c.alpha;

    std::vector<CVec> v = v_prev;
    CVec acc = CVec::Zero(x.size());
    for (int b = 0; b < q; ++b) acc += std::pow(2.0, b) * v[static_cast<size_t>(b)];

    const CVec base = a * (x + lambda);
    for (int b = 0; b < q; ++b) {
        const double w = std::pow(2.0, b);
        const double denom = mu * w * w - 2.0 * a * a * beta[static_cast<size_t>(b)];
        if (!(denom > 0.0))
            throw NonconvexDenominator("v_update: weight " + std::to_string(b) +
                                       " has margin " + std::to_string(denom));
        const CVec eta = base - (acc - w * v[static_cast<size_t>(b)]);
        CVec fresh = (w * mu / denom) * eta;
        for (int i = 0; i < fresh.size(); ++i)
            fresh(i) = cxd(std::clamp(fresh(i).real(), -1.0, 1.0),
                           std::clamp(fresh(i).imag(), -1.0, 1.0));
        acc += w * (fresh - v[static_cast<size_t>(b)]);
        v[static_cast<size_t>(b)] = std::move(fresh);
    }
    return v;
}

Surrogate mm_surrogate(const CVec& x_prev, const CVec& s_prev, bool s_prev_valid,
                       const CVec& y, const RobustMlWork& work, double sigma2,
                       const RMat& w, int cg_iters, double cg_tol) {
    const int m = static_cast<int>(y.size());
    const CMat r = assemble_r(x_prev, work, sigma2, m);
    const CVec q = assemble_q(x_prev, y, work, sigma2);
    const CVec s0 = s_prev_valid ? s_prev : CVec::Zero(q.size());
    CgResult cg = cg_solve(r, q, s0, cg_iters, cg_tol);

    Surrogate out;
    out.d = block_contract_rows(y * cg.s.adjoint(), w, 1.0 / sigma2);
    out.f = block_contract(cg.s * cg.s.adjoint(), w, 1.0 / sigma2);
    out.s = std::move(cg.s);
    out.cg_iters = cg.iters;
    return out;
}

SurrogateExact mm_surrogate_exact(const CVec& x_prev, const CVec& y, const RobustMlWork& work,
                                  double sigma2, const RMat& w, int m) {
    const CMat r = assemble_r(x_prev, work, sigma2, m);
    const CVec q = assemble_q(x_prev, y, work, sigma2);
    const HermitianFactor f = HermitianFactor::compute(r);
    const CMat rinv = f.inverse();

    SurrogateExact out;
    out.s = f.solve(q);
    out.c = block_contract(rinv, w, 1.0 / sigma2);
    out.d = block_contract_rows(y * out.s.adjoint(), w, 1.0 / sigma2);
    out.f = block_contract(out.s * out.s.adjoint(), w, 1.0 / sigma2);
    return out;
}

namespace {

CVec solve_consensus(const CMat& g, const CVec& rhs) {
    try {
        return hermitian_solve(g, rhs);
    } catch (const NotPositiveDefinite&) {
        // trained contraction weights can push the system off the PD cone;
        // the system stays invertible in practice, so fall back to LU
        return Eigen::PartialPivLU<CMat>(g).solve(rhs);
    }
}

} // namespace

CVec x_update(const CVec& d, const CMat& f, const CMat& c, double mu, const CVec& psi) {
    const auto k = d.size();
    const CMat g = 2.0 * (c + f) + mu * CMat::Identity(k, k);
    return solve_consensus(g, 2.0 * d - mu * psi);
}

CVec x_update(const CVec& d, const CMat& f, double eps, double mu, const CVec& psi) {
    const auto k = d.size();
    const CMat g = 2.0 * f + (eps + mu) * CMat::Identity(k, k);
    return solve_consensus(g, 2.0 * d - mu * psi);
}

namespace {

CVec recombine(const std::vector<CVec>& v, double alpha) {
    CVec acc = CVec::Zero(v[0].size());
    for (size_t b = 0; b < v.size(); ++b) acc += std::pow(2.0, static_cast<double>(b)) * v[b];
    return acc / alpha;
}

// scalar curvature bound for one layer: exact contraction when affordable,
// otherwise trace bound MK lmax(Sigma_h) / sigma2 (lmax passed in)
double layer_eps(const CVec& x, const CVec& y, const RobustMlWork& work, double sigma2,
                 const RMat& w, int m, int mk, double sigma_lmax) {
    if (mk <= 64) {
        const CMat r = assemble_r(x, work, sigma2, m);
        const CMat rinv = HermitianFactor::compute(r).inverse();
        return spectral_upper_bound(block_contract(rinv, w, 1.0 / sigma2));
    }
    return mk * sigma_lmax / sigma2;
}

} // namespace

CVec radmm_detect(const CVec& y, const CsiBelief& belief, double sigma2,
                  const RadmmParams& params, const Constellation& c, RadmmDiag* diag) {
    return radmm_detect_pre(y, belief, make_robust_ml_work(belief), sigma2, params, c, diag);
}

CVec radmm_detect_pre(const CVec& y, const CsiBelief& belief, const RobustMlWork& work,
                      double sigma2, const RadmmParams& params, const Constellation& c,
                      RadmmDiag* diag) {
    const int m = static_cast<int>(y.size());
    const int k = static_cast<int>(belief.H_hat.cols());
    const int mk = m * k;
    const int q = c.order;
    if (params.iters < 1) throw ConfigError("radmm: need at least one iteration");

    const bool exact = params.curvature == RadmmParams::Curvature::Exact ||
                       (params.curvature == RadmmParams::Curvature::Auto && mk <= 64);
    const std::vector<double> beta =
        params.beta.empty() ? default_beta(params.mu, q, c.alpha) : params.beta;
    const int cg_cap = params.cg_max_iters > 0 ? params.cg_max_iters : 2 * mk;
    const RMat w = RMat::Identity(m, m);

    const double sigma_lmax =
        (!exact && mk > 64) ? spectral_upper_bound(belief.Sigma_h) : 0.0;

    CVec x = robust_mmse(y, belief, sigma2);
    std::vector<CVec> v = qam_decompose(slice_to_symbol(x, c), c);
    CVec lambda = CVec::Zero(k);
    CVec s_cache;
    bool s_valid = false;

    for (int it = 0; it < params.iters; ++it) {
        CVec d;
        CMat f_mat, c_mat;
        double eps = 0.0;
        if (exact) {
            SurrogateExact se = mm_surrogate_exact(x, y, work, sigma2, w, m);
            d = std::move(se.d);
            f_mat = std::move(se.f);
            c_mat = std::move(se.c);
        } else {
            const int budget = !s_valid ? cg_cap
                               : (params.cg_warm_iters > 0 ? params.cg_warm_iters : cg_cap);
            Surrogate su = mm_surrogate(x, s_cache, s_valid, y, work, sigma2, w,
                                        budget, params.cg_tol);
            d = std::move(su.d);
            f_mat = std::move(su.f);
            s_cache = std::move(su.s);
            s_valid = true;
            if (diag) diag->cg_iters_total += su.cg_iters;
            eps = layer_eps(x, y, work, sigma2, w, m, mk, sigma_lmax);
        }

        v = v_update(x, lambda, v, params.mu, beta, c);
        const CVec recomb = recombine(v, c.alpha);
        const CVec psi = lambda - recomb;
        x = exact ? x_update(d, f_mat, c_mat, params.mu, psi)
                  : x_update(d, f_mat, eps, params.mu, psi);
        lambda += x - recomb;
        if (diag) diag->consensus.push_back((x - recomb).norm());
    }
    return x;
}

CVec radmmnet_forward(const CVec& y, const CsiBelief& belief, double sigma2,
                      const RadmmNetParams& params, const Constellation& c, RadmmDiag* diag) {
    return radmmnet_forward_pre(y, belief, make_robust_ml_work(belief), sigma2, params, c, diag);
}

CVec radmmnet_forward_pre(const CVec& y, const CsiBelief& belief, const RobustMlWork& work,
                          double sigma2, const RadmmNetParams& params, const Constellation& c,
                          RadmmDiag* diag) {
    const int m = static_cast<int>(y.size());
    const int k = static_cast<int>(belief.H_hat.cols());
    const int mk = m * k;
    params.validate(m, c.order, c.alpha);

    const double sigma_lmax =
        (params.eps_spectral && mk > 64) ? spectral_upper_bound(belief.Sigma_h) : 0.0;

    CVec x = robust_mmse(y, belief, sigma2);
    std::vector<CVec> v = qam_decompose(slice_to_symbol(x, c), c);
    CVec lambda = CVec::Zero(k);
    CVec s_cache;
    bool s_valid = false;

    for (int layer = 0; layer < params.layers; ++layer) {
        const size_t li = static_cast<size_t>(layer);
        const int budget = layer == 0 ? params.cg_first : 1;
        Surrogate su = mm_surrogate(x, s_cache, s_valid, y, work, sigma2, params.W,
                                    budget, 0.0);
        s_cache = std::move(su.s);
        s_valid = true;
        if (diag) diag->cg_iters_total += su.cg_iters;
        const double eps = params.eps_spectral
                               ? layer_eps(x, y, work, sigma2, params.W, m, mk, sigma_lmax)
                               : params.eps[li];

        v = v_update(x, lambda, v, params.mu[li], params.beta[li], c);
        const double rel = params.relax[li];
        CVec mix = rel * recombine(v, c.alpha) + (1.0 - rel) * x;
        const CVec psi = lambda - mix;
        x = x_update(su.d, su.f, eps, params.mu[li], psi);
        lambda += x - mix;
        if (diag) diag->consensus.push_back((x - mix).norm());
    }
    return x;
}

} // namespace mimo
