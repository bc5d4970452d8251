#include <doctest.h>

#include <cmath>

#include "mimo/channel.hpp"
#include "mimo/errors.hpp"
#include "mimo/rng.hpp"

using namespace mimo;

namespace {

RVec const_rho(int k, double v) { return RVec::Constant(k, v); }

// dense Kronecker oracle
CMat kron(const RMat& a, const RMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = (a(i, j) * b).cast<cxd>();
    return out;
}

} // namespace

TEST_SUITE("channel") {

TEST_CASE("exponential correlation structure") {
    const RMat r = make_exponential(4, 0.5);
    CHECK(r(0, 0) == 1.0);
    CHECK(r(0, 3) == doctest::Approx(0.125));
    CHECK(r(2, 1) == doctest::Approx(0.5));
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(make_exponential(3, 1.0), InvalidCorrelation);
    CHECK_THROWS_AS(make_exponential(3, -1.2), InvalidCorrelation);
}

TEST_CASE("stacked covariance equals the Kronecker product") {
    const CMat ch = make_covariance(3, 2, 0.3, 0.7);
    const CMat oracle = kron(make_exponential(2, 0.3), make_exponential(3, 0.7));
    CHECK((ch - oracle).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("sample covariance converges to the model covariance") {
    const int m = 2, k = 2, n = 20000;
    const ChannelStatistics st = make_channel_statistics(m, k, 0.3, 0.7, const_rho(k, 0.99));
    RngStream rng(5, RngLane::Channel, 0);
    CMat acc = CMat::Zero(m * k, m * k);
    for (int i = 0; i < n; ++i) {
        const CVec h = sample_channel(st, rng);
        acc += h * h.adjoint();
    }
    acc /= n;
    CHECK((acc - st.Ch).cwiseAbs().maxCoeff() < 0.05 * st.Ch.cwiseAbs().maxCoeff());
}

TEST_CASE("aging keeps the marginal distribution stationary") {
    const int m = 2, k = 2, n = 20000;
    const ChannelStatistics st = make_channel_statistics(m, k, 0.3, 0.7, const_rho(k, 0.9));
    RngStream rng(6, RngLane::Channel, 0);
    CMat acc = CMat::Zero(m * k, m * k);
    CMat cross = CMat::Zero(m * k, m * k);
    for (int i = 0; i < n; ++i) {
        const CVec h1 = sample_channel(st, rng);
        const CVec h2 = evolve_channel(h1, st, rng);
        acc += h2 * h2.adjoint();
        cross += h2 * h1.adjoint();
    }
    acc /= n;
    cross /= n;
    CHECK((acc - st.Ch).cwiseAbs().maxCoeff() < 0.05 * st.Ch.cwiseAbs().maxCoeff());
    // one-step cross covariance is rho * Ch for common per-user rho
    CHECK((cross - 0.9 * st.Ch).cwiseAbs().maxCoeff() < 0.05 * st.Ch.cwiseAbs().maxCoeff());
}

TEST_CASE("accumulated innovation covariance matches the unrolled recursion") {
    const int m = 2, k = 3;
    RVec rho(k);
    rho << 0.99, 0.95, 0.9;
    const ChannelStatistics st = make_channel_statistics(m, k, 0.3, 0.7, rho);
    const int dim = m * k;

    const RVec lam = st.lambda_diag();
    CMat lam_m = CMat::Zero(dim, dim), lam_bar = CMat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        lam_m(i, i) = lam(i);
        lam_bar(i, i) = std::sqrt(1.0 - lam(i) * lam(i));
    }
    for (int n : {1, 2, 4}) {
        CMat oracle = CMat::Zero(dim, dim);
        CMat pow = CMat::Identity(dim, dim);
        for (int j = 1; j <= n - 1; ++j) {
            oracle += pow * lam_bar * st.Ch * lam_bar * pow;
            pow = pow * lam_m;
        }
        CHECK((accumulated_innovation_cov(st, n) - oracle).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(accumulated_innovation_cov(st, 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("static users keep their channel exactly") {
    const int m = 2, k = 2;
    RVec rho(k);
    rho << 1.0, 0.5;
    const ChannelStatistics st = make_channel_statistics(m, k, 0.3, 0.7, rho);
    RngStream rng(7, RngLane::Channel, 0);
    const CVec h1 = sample_channel(st, rng);
    const CVec h2 = evolve_channel(h1, st, rng);
    CHECK((h2.segment(0, m) - h1.segment(0, m)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((h2.segment(m, m) - h1.segment(m, m)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("pilot rows are orthogonal with unit-power entries") {
    for (int k : {2, 4}) {
        for (int lp : {4, 8}) {
            const CMat s = make_pilots(k, lp);
            REQUIRE(s.rows() == k);
            REQUIRE(s.cols() == lp);
            for (int i = 0; i < k; ++i)
                for (int l = 0; l < lp; ++l) CHECK(std::abs(s(i, l)) == doctest::Approx(1.0));
            const CMat gram = s * s.adjoint();
            CHECK((gram - static_cast<double>(lp) * CMat::Identity(k, k)).cwiseAbs().maxCoeff() <
                  1e-10);
        }
    }
    CHECK_THROWS_AS(make_pilots(4, 3), ConfigError);
}

TEST_CASE("row covariance sums the per-user diagonal blocks") {
    RngStream rng(8, RngLane::Channel, 0);
    const int m = 3, k = 2;
    CMat s(m * k, m * k);
    for (int j = 0; j < m * k; ++j)
        for (int i = 0; i < m * k; ++i) s(i, j) = rng.cnormal();
    const CMat sym = s * s.adjoint();
    const CMat got = row_covariance(sym, m, k);
    CMat oracle = CMat::Zero(m, m);
    oracle += sym.block(0, 0, m, m);
    oracle += sym.block(m, m, m, m);
    CHECK((got - oracle).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("belief symmetrizes its covariance and derives the row aggregate") {
    RngStream rng(9, RngLane::Channel, 0);
    const int m = 2, k = 2;
    CMat s(m * k, m * k);
    for (int j = 0; j < m * k; ++j)
        for (int i = 0; i < m * k; ++i) s(i, j) = rng.cnormal();
    CMat cov = s * s.adjoint();
    cov(0, 1) += cxd(0.0, 1e-9); // small asymmetry, as roundoff would leave
    CVec h(m * k);
    for (int i = 0; i < m * k; ++i) h(i) = rng.cnormal();

    const CsiBelief b = make_belief(h, cov, m, k);
    CHECK(hermitian_defect(b.Sigma_h) < 1e-15);
    CHECK((b.Sigma_H - row_covariance(b.Sigma_h, m, k)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b.H_hat - unvec(h, m, k)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pilot estimate recovers the channel without noise") {
    const int m = 3, k = 2, lp = 4;
    const ChannelStatistics st = make_channel_statistics(m, k, 0.3, 0.7, const_rho(k, 0.99));
    const CMat pilots = make_pilots(k, lp);
    RngStream ch(10, RngLane::Channel, 0);
    RngStream pn(10, RngLane::PilotNoise, 0);
    const CVec h = sample_channel(st, ch);
    const CMat y = transmit_pilots(unvec(h, m, k), pilots, 1e-14, pn);
    const CsiBelief b = lmmse_estimate(y, pilots, st, 1e-14, 1);
    CHECK((b.h_hat - h).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(b.Sigma_h.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pilot estimate error matches its covariance in distribution") {
    const int m = 2, k = 2, lp = 2, trials = 4000;
    const double sigma2 = 0.5;
    const ChannelStatistics st = make_channel_statistics(m, k, 0.3, 0.7, const_rho(k, 0.95));

    const CMat pilots = make_pilots(k, lp);
    CMat err_acc = CMat::Zero(m * k, m * k);
    CMat cross_acc = CMat::Zero(m * k, m * k);
    CMat sigma_model;
    for (int t = 0; t < trials; ++t) {
        RngStream ch(21, RngLane::Channel, static_cast<uint64_t>(t));
        RngStream pn(21, RngLane::PilotNoise, static_cast<uint64_t>(t));
        const CVec h = sample_channel(st, ch);
        const CMat y = transmit_pilots(unvec(h, m, k), pilots, sigma2, pn);
        const CsiBelief b = lmmse_estimate(y, pilots, st, sigma2, 1);
        const CVec e = h - b.h_hat;
        err_acc += e * e.adjoint();
        cross_acc += e * b.h_hat.adjoint();
        if (t == 0) sigma_model = b.Sigma_h;
    }
    err_acc /= trials;
    cross_acc /= trials;
    const double scale = sigma_model.cwiseAbs().maxCoeff();
    CHECK((err_acc - sigma_model).cwiseAbs().maxCoeff() < 0.1 * scale);
    // orthogonality of error and estimate is what makes it the MMSE estimate
    CHECK(cross_acc.cwiseAbs().maxCoeff() < 0.1 * scale);
}

TEST_CASE("aged estimate tracks the evolved channel") {
    const int m = 2, k = 2, lp = 2, trials = 4000, block = 3;
    const double sigma2 = 0.2;
    const ChannelStatistics st = make_channel_statistics(m, k, 0.3, 0.7, const_rho(k, 0.9));
    const CMat pilots = make_pilots(k, lp);

    CMat err_acc = CMat::Zero(m * k, m * k);
    CMat sigma_model;
    for (int t = 0; t < trials; ++t) {
        RngStream ch(22, RngLane::Channel, static_cast<uint64_t>(t));
        RngStream pn(22, RngLane::PilotNoise, static_cast<uint64_t>(t));
        CVec h = sample_channel(st, ch);
        const CMat y = transmit_pilots(unvec(h, m, k), pilots, sigma2, pn);
        for (int n = 2; n <= block; ++n) h = evolve_channel(h, st, ch);
        const CsiBelief b = lmmse_estimate(y, pilots, st, sigma2, block);
        const CVec e = h - b.h_hat;
        err_acc += e * e.adjoint();
        if (t == 0) sigma_model = b.Sigma_h;
    }
    err_acc /= trials;
    CHECK((err_acc - sigma_model).cwiseAbs().maxCoeff() <
          0.1 * sigma_model.cwiseAbs().maxCoeff());
}

TEST_CASE("estimate quality degrades with block age") {
    const int m = 2, k = 2, lp = 2;
    const double sigma2 = 0.2;
    const ChannelStatistics st = make_channel_statistics(m, k, 0.3, 0.7, const_rho(k, 0.9));
    const CMat pilots = make_pilots(k, lp);
    RngStream ch(23, RngLane::Channel, 0);
    RngStream pn(23, RngLane::PilotNoise, 0);
    const CVec h = sample_channel(st, ch);
    const CMat y = transmit_pilots(unvec(h, m, k), pilots, sigma2, pn);
    double prev = -1.0;
    for (int n = 1; n <= 4; ++n) {
        const CsiBelief b = lmmse_estimate(y, pilots, st, sigma2, n);
        const double tr = b.Sigma_h.trace().real();
        CHECK(tr > prev);
        prev = tr;
    }
}

} // TEST_SUITE
