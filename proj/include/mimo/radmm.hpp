#pragma once

#include <vector>

#include "mimo/baseline.hpp"
#include "mimo/channel.hpp"
#include "mimo/linalg.hpp"
#include "mimo/sysmodel.hpp"

namespace mimo {

// Splitting weights and schedules for the iterative robust detector.
struct RadmmParams {
    double mu = 2.0;
    std::vector<double> beta; // size Q; empty selects default_beta(mu, ...)
    int iters = 50;
    int cg_max_iters = 0;   // 0 -> 2*MK
    double cg_tol = 1e-8;
    int cg_warm_iters = 0;  // > 0 pins warm-started solves to that many iterations
    // Exact keeps the full curvature matrix of the log-det majorizer;
    // Bound replaces it with a scalar bound. Auto switches on problem size.
    enum class Curvature { Auto, Exact, Bound } curvature = Curvature::Auto;
};

// beta_q at half the convexity limit mu 4^{q-1} / (2 alpha^2)
std::vector<double> default_beta(double mu, int q, double alpha);

// Per-layer weights of the unfolded detector. Neutral values reproduce the
// iterative algorithm exactly, which is also how training is initialized.
struct RadmmNetParams {
    int layers = 10;
    std::vector<double> mu;                // per layer
    std::vector<std::vector<double>> beta; // per layer, size Q each
    std::vector<double> eps;               // per layer curvature bound (Fixed mode)
    std::vector<double> relax;             // per layer over-relaxation, 1 = plain
    RMat W;                                // shared M x M contraction weight
    int cg_first = 15;                     // solver iterations in layer 1; later layers run 1
    bool eps_spectral = false;             // recompute eps per layer from the exact curvature

    void validate(int m, int q, double alpha) const;
};

RadmmNetParams neutral_radmmnet_params(int layers, int m, int q, double alpha,
                                       const RadmmParams& base);

struct RadmmState {
    CVec x;
    std::vector<CVec> v; // Q binary layers
    CVec lambda;
    CVec s_cache;        // last solver iterate, warm start for the next layer
    bool s_valid = false;
};

struct RadmmDiag {
    std::vector<double> consensus; // |x - recombined v| per iteration
    int cg_iters_total = 0;
};

// Gauss-Seidel sweep over the binary layers against the current consensus
// point. Throws NonconvexDenominator when mu 4^{q-1} - 2 alpha^2 beta_q <= 0.
std::vector<CVec> v_update(const CVec& x, const CVec& lambda, const std::vector<CVec>& v_prev,
                           double mu, const std::vector<double>& beta, const Constellation& c);

struct Surrogate {
    CVec d;   // linear term
    CMat f;   // quadratic term of the likelihood minorizer
    CVec s;   // solver iterate for R(x)^{-1} q(x), cached across layers
    int cg_iters = 0;
};

// Tangent bounds of the robust criterion at x_prev, with the inverse applied
// through CG. w reweights the block contractions (identity for the plain
// algorithm).
Surrogate mm_surrogate(const CVec& x_prev, const CVec& s_prev, bool s_prev_valid,
                       const CVec& y, const RobustMlWork& work, double sigma2,
                       const RMat& w, int cg_iters, double cg_tol);

// Same bounds with the inverse taken densely; also returns the exact
// curvature matrix of the log-det majorizer.
struct SurrogateExact {
    CVec d;
    CMat f;
    CMat c;
    CVec s;
};
SurrogateExact mm_surrogate_exact(const CVec& x_prev, const CVec& y, const RobustMlWork& work,
                                  double sigma2, const RMat& w, int m);

// Consensus updates: minimize x^H(C+F)x - 2Re(x^H d) + (mu/2)|x + psi|^2.
CVec x_update(const CVec& d, const CMat& f, const CMat& c, double mu, const CVec& psi);
// Scalar-curvature form: (2F + (eps+mu) I) x = 2d - mu psi.
CVec x_update(const CVec& d, const CMat& f, double eps, double mu, const CVec& psi);

// Iterative robust detector. Returns the relaxed (continuous) decision;
// callers slice it. Initialized from the robust linear estimate.
CVec radmm_detect(const CVec& y, const CsiBelief& belief, double sigma2,
                  const RadmmParams& params, const Constellation& c,
                  RadmmDiag* diag = nullptr);

// Unfolded forward pass with per-layer weights and over-relaxed consensus.
CVec radmmnet_forward(const CVec& y, const CsiBelief& belief, double sigma2,
                      const RadmmNetParams& params, const Constellation& c,
                      RadmmDiag* diag = nullptr);

// Shared-precomp variants for slot loops that reuse one channel belief.
CVec radmm_detect_pre(const CVec& y, const CsiBelief& belief, const RobustMlWork& work,
                      double sigma2, const RadmmParams& params, const Constellation& c,
                      RadmmDiag* diag = nullptr);
CVec radmmnet_forward_pre(const CVec& y, const CsiBelief& belief, const RobustMlWork& work,
                          double sigma2, const RadmmNetParams& params, const Constellation& c,
                          RadmmDiag* diag = nullptr);

} // namespace mimo
