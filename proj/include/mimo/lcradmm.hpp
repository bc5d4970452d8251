#pragma once

#include <vector>

#include "mimo/channel.hpp"
#include "mimo/linalg.hpp"
#include "mimo/sysmodel.hpp"

namespace mimo {

// Everything the low-complexity detector can reuse across slots that share a
// channel belief: the whitened Gram system is factored exactly once.
struct LcPrecomp {
    HermitianFactor phi; // H^H Cr^{-1} H + (delta/2) I
    CMat ht_cinv;        // H^H Cr^{-1}, maps an observation to its matched filter
    double delta;
};

LcPrecomp lc_precompute(const CsiBelief& belief, double sigma2, double delta);

struct LcAlgParams {
    double delta = 2.0;
    std::vector<double> kappa; // size Q; empty selects the half-margin default
    int iters = 50;
};

struct LcNetParams {
    int layers = 10;
    double delta = 2.0;                     // shared across layers
    std::vector<std::vector<double>> kappa; // per layer, size Q
    std::vector<double> upsilon;            // per-layer over-relaxation, 1 = plain

    void validate(int q, double alpha) const;
};

LcNetParams neutral_lcnet_params(int layers, int q, double alpha, const LcAlgParams& base);

std::vector<double> default_kappa(double delta, int q, double alpha);

// Same box-projected Gauss-Seidel sweep as the full detector, with
// (delta, kappa) in place of (mu, beta).
std::vector<CVec> u_update(const CVec& x, const CVec& theta, const std::vector<CVec>& u_prev,
                           double delta, const std::vector<double>& kappa,
                           const Constellation& c);

// Consensus solve against a given mixing point: x = Phi^{-1}(g0 - (delta/2)(theta - mix)).
CVec lc_x_update_mixed(const LcPrecomp& pre, const CVec& y, const CVec& mix, const CVec& theta);

// Plain form, mixing point taken from the recombined binary layers.
CVec lc_x_update(const LcPrecomp& pre, const CVec& y, const std::vector<CVec>& u,
                 const CVec& theta, const Constellation& c);

struct LcDiag {
    std::vector<double> consensus;
    int factorizations = 0;
};

CVec lcradmm_detect(const CVec& y, const CsiBelief& belief, double sigma2,
                    const LcAlgParams& params, const Constellation& c, LcDiag* diag = nullptr);

CVec lcradmmnet_forward(const CVec& y, const CsiBelief& belief, double sigma2,
                        const LcNetParams& params, const Constellation& c,
                        LcDiag* diag = nullptr);

// Shared-precomp variants for slot loops over one belief.
CVec lcradmm_detect_pre(const CVec& y, const LcPrecomp& pre, const CsiBelief& belief,
                        double sigma2, const LcAlgParams& params, const Constellation& c,
                        LcDiag* diag = nullptr);
CVec lcradmmnet_forward_pre(const CVec& y, const LcPrecomp& pre, const CsiBelief& belief,
                            double sigma2, const LcNetParams& params, const Constellation& c,
                            LcDiag* diag = nullptr);

} // namespace mimo
