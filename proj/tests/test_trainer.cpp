#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>

#include "mimo/errors.hpp"
#include "mimo/trainer.hpp"

using namespace mimo;

namespace {

ScenarioConfig small_scenario() {
    ScenarioConfig sc;
    sc.sys.M = 4;
    sc.sys.K = 2;
    sc.sys.L = 6;
    sc.sys.Lp = 2;
    sc.sys.N = 3;
    sc.mod_order = 1;
    sc.snr_db = 14.0;
    sc.block = 3;
    return sc;
}

std::string temp_path(const char* name) {
    return std::string("/tmp/") + name;
}

} // namespace

TEST_SUITE("trainer") {

TEST_CASE("scenario derives noise power and temporal correlation") {
    ScenarioConfig sc = small_scenario();
    sc.snr_db = 10.0;
    CHECK(sc.sigma2() == doctest::Approx(2.0 / 10.0));
    CHECK(sc.rho_vec().size() == 2);
    CHECK(sc.rho_vec()(0) == doctest::Approx(0.99));
    sc.rho_time = RVec::Constant(2, 0.9);
    CHECK(sc.rho_vec()(1) == doctest::Approx(0.9));
    sc.rho_time = RVec::Constant(3, 0.9); // wrong length
    CHECK_THROWS_AS(sc.rho_vec(), ConfigError);
}

TEST_CASE("dataset generation is deterministic and per-sample pure") {
    const ScenarioConfig sc = small_scenario();
    const Dataset a = generate_dataset(sc, 5, 9);
    const Dataset b = generate_dataset(sc, 5, 9);
    REQUIRE(a.samples.size() == 5);
    for (size_t i = 0; i < 5; ++i) {
        CHECK((a.samples[i].y - b.samples[i].y).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.samples[i].x_true - b.samples[i].x_true).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.samples[i].belief.h_hat - b.samples[i].belief.h_hat).cwiseAbs().maxCoeff() ==
              0.0);
    }
    // a shorter run is a prefix: sample i depends only on (seed, i)
    const Dataset c = generate_dataset(sc, 3, 9);
    for (size_t i = 0; i < 3; ++i)
        CHECK((a.samples[i].y - c.samples[i].y).cwiseAbs().maxCoeff() == 0.0);
    // different seed differs
    const Dataset d = generate_dataset(sc, 3, 10);
    CHECK((a.samples[0].y - d.samples[0].y).cwiseAbs().maxCoeff() > 0.0);

    CHECK_THROWS_AS(generate_dataset(sc, 0, 9), EmptyBatch);
    ScenarioConfig bad = sc;
    bad.block = 9;
    CHECK_THROWS_AS(generate_dataset(bad, 2, 9), IndexError);
}

TEST_CASE("dataset symbols are constellation points and y matches the model scale") {
    const ScenarioConfig sc = small_scenario();
    const Constellation c = make_constellation(sc.mod_order);
    const Dataset ds = generate_dataset(sc, 50, 11);
    CHECK(ds.sigma2 == doctest::Approx(sc.sigma2()));
    for (const TrainSample& s : ds.samples) {
        REQUIRE(s.x_true.size() == 2);
        for (int u = 0; u < 2; ++u) {
            bool on_point = false;
            for (const cxd& p : c.points)
                on_point = on_point || std::abs(s.x_true(u) - p) < 1e-12;
            CHECK(on_point);
        }
        CHECK(s.y.size() == 4);
    }
}

TEST_CASE("mse loss averages squared decision errors") {
    const ScenarioConfig sc = small_scenario();
    const Dataset ds = generate_dataset(sc, 3, 12);
    std::vector<CVec> out;
    for (const TrainSample& s : ds.samples) out.push_back(s.x_true);
    CHECK(mse_loss(out, ds.samples) == 0.0);
    out[0] = ds.samples[0].x_true + CVec::Ones(2);
    CHECK(mse_loss(out, ds.samples) == doctest::Approx(2.0 / 3.0));
    out.pop_back();
    CHECK_THROWS_AS(mse_loss(out, ds.samples), DimensionMismatch);
    CHECK_THROWS_AS(mse_loss({}, {}), EmptyBatch);
}

TEST_CASE("weight files round trip exactly") {
    const ScenarioConfig sc = small_scenario();
    const Constellation c = make_constellation(1);

    TrainResult lc_res;
    lc_res.kind = NetworkKind::Lc;
    lc_res.lc = neutral_lcnet_params(3, 1, c.alpha, LcAlgParams{});
    lc_res.lc.delta = 1.7320508075688772;
    lc_res.lc.kappa[1][0] = 0.123456789012345678;
    lc_res.lc.upsilon[2] = 1.9999999999;
    const std::string lc_path = temp_path("lc_params_test.json");
    save_params(lc_path, lc_res, sc);
    const LoadedParams lc_back = load_params(lc_path);
    CHECK(lc_back.kind == NetworkKind::Lc);
    CHECK(lc_back.M == 4);
    CHECK(lc_back.K == 2);
    CHECK(lc_back.Q == 1);
    CHECK(lc_back.layers == 3);
    CHECK(lc_back.lc.delta == lc_res.lc.delta);
    CHECK(lc_back.lc.kappa[1][0] == lc_res.lc.kappa[1][0]);
    CHECK(lc_back.lc.upsilon[2] == lc_res.lc.upsilon[2]);

    TrainResult r_res;
    r_res.kind = NetworkKind::Radmm;
    r_res.radmm = neutral_radmmnet_params(2, 4, 1, c.alpha, RadmmParams{});
    r_res.radmm.eps_spectral = false;
    r_res.radmm.eps = {3.14159265358979, 2.71828182845905};
    r_res.radmm.mu[1] = 2.2250738585072014;
    r_res.radmm.W(0, 3) = 0.577215664901532;
    r_res.radmm.W(3, 0) = 0.577215664901532;
    const std::string r_path = temp_path("radmm_params_test.json");
    save_params(r_path, r_res, sc);
    const LoadedParams r_back = load_params(r_path);
    CHECK(r_back.kind == NetworkKind::Radmm);
    CHECK(r_back.radmm.mu[1] == r_res.radmm.mu[1]);
    CHECK(r_back.radmm.eps[0] == r_res.radmm.eps[0]);
    CHECK(r_back.radmm.W(0, 3) == r_res.radmm.W(0, 3));
    CHECK(r_back.radmm.beta[1][0] == r_res.radmm.beta[1][0]);

    std::remove(lc_path.c_str());
    std::remove(r_path.c_str());
}

TEST_CASE("weight file errors are reported as configuration problems") {
    CHECK_THROWS_AS(load_params("/tmp/definitely_missing_weights.json"), ConfigError);
    const std::string path = temp_path("broken_params_test.json");
    {
        FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("{ not json", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_params(path), ConfigError);
    {
        FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("{\"network\":\"other\",\"M\":2,\"K\":2,\"Q\":1,\"layers\":1,\"per_layer\":[{}]}", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_params(path), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("training the low-complexity net never ends worse than its start") {
    ScenarioConfig sc = small_scenario();
    TrainConfig cfg;
    cfg.layers = 3;
    cfg.train_size = 24;
    cfg.val_size = 12;
    cfg.batch = 12;
    cfg.phase1_epochs = 3;
    cfg.phase2_epochs = 2;
    cfg.patience = 2;
    cfg.seed = 5;

    const TrainResult res = train(NetworkKind::Lc, sc, cfg);
    CHECK(res.kind == NetworkKind::Lc);
    CHECK(res.best_val <= res.initial_val);
    CHECK(res.epochs_run >= 1);
    CHECK(static_cast<int>(res.val_history.size()) == res.epochs_run);
    CHECK_NOTHROW(res.lc.validate(1, make_constellation(1).alpha));
    // reparameterization keeps every layer inside the convex region
    for (int l = 0; l < 3; ++l) {
        CHECK(res.lc.upsilon[static_cast<size_t>(l)] > 0.0);
        CHECK(res.lc.upsilon[static_cast<size_t>(l)] < 2.0);
    }
}

TEST_CASE("training the full net keeps its weights feasible") {
    ScenarioConfig sc = small_scenario();
    TrainConfig cfg;
    cfg.layers = 2;
    cfg.train_size = 16;
    cfg.val_size = 8;
    cfg.batch = 8;
    cfg.phase1_epochs = 2;
    cfg.phase2_epochs = 1;
    cfg.patience = 2;
    cfg.seed = 6;
    cfg.train_w = true;

    const TrainResult res = train(NetworkKind::Radmm, sc, cfg);
    CHECK(res.kind == NetworkKind::Radmm);
    CHECK(res.best_val <= res.initial_val);
    CHECK_NOTHROW(res.radmm.validate(4, 1, make_constellation(1).alpha));
    CHECK(!res.radmm.eps_spectral);
    for (double e : res.radmm.eps) CHECK(e > 0.0);
    // trained contraction weight stays symmetric
    CHECK((res.radmm.W - res.radmm.W.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("training is reproducible for a fixed seed") {
    ScenarioConfig sc = small_scenario();
    TrainConfig cfg;
    cfg.layers = 2;
    cfg.train_size = 12;
    cfg.val_size = 6;
    cfg.batch = 6;
    cfg.phase1_epochs = 2;
    cfg.phase2_epochs = 1;
    cfg.patience = 2;
    cfg.seed = 7;

    const TrainResult a = train(NetworkKind::Lc, sc, cfg);
    const TrainResult b = train(NetworkKind::Lc, sc, cfg);
    CHECK(a.best_val == b.best_val);
    CHECK(a.initial_val == b.initial_val);
    REQUIRE(a.val_history.size() == b.val_history.size());
    for (size_t i = 0; i < a.val_history.size(); ++i)
        CHECK(a.val_history[i] == b.val_history[i]);
    CHECK(a.lc.delta == b.lc.delta);
}

} // TEST_SUITE
