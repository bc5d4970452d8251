#pragma once

#include <string>
#include <vector>

#include "mimo/channel.hpp"
#include "mimo/lcradmm.hpp"
#include "mimo/radmm.hpp"
#include "mimo/sysmodel.hpp"

namespace mimo {

// Everything that fixes the statistics of one detection problem instance.
struct ScenarioConfig {
    SystemConfig sys;
    double rho_t = 0.3;
    double rho_r = 0.7;
    RVec rho_time;   // per user; empty means 0.99 everywhere
    int mod_order = 1; // Q
    double snr_db = 15.0;
    int block = 5;   // where detection happens

    double sigma2() const;
    RVec rho_vec() const;
};

struct TrainSample {
    CVec y;
    CsiBelief belief;
    CVec x_true;
};

struct Dataset {
    std::vector<TrainSample> samples;
    double sigma2 = 0.0;
};

// Independent pilot-estimated frames of the scenario; sample i is a pure
// function of (seed, i).
Dataset generate_dataset(const ScenarioConfig& sc, int count, uint64_t seed);

// Mean over the batch of squared decision-error norms.
double mse_loss(const std::vector<CVec>& outputs, const std::vector<TrainSample>& batch);

enum class NetworkKind { Radmm, Lc };

struct TrainConfig {
    int layers = 10;
    int train_size = 2000;
    int val_size = 500;
    int batch = 200;
    double phase1_step = 0.01;
    double phase2_step = 0.001;
    int phase1_epochs = 60;
    int phase2_epochs = 40;
    int patience = 5;
    double spsa_c = 0.1; // simultaneous-perturbation half-width in raw space
    uint64_t seed = 1;
    bool train_w = false; // full detector only
    int cg_first = 15;
};

struct TrainResult {
    NetworkKind kind = NetworkKind::Lc;
    RadmmNetParams radmm;
    LcNetParams lc;
    std::vector<double> val_history;
    double initial_val = 0.0;
    double best_val = 0.0;
    int epochs_run = 0;
};

// Gradient-free training: simultaneous-perturbation estimates fed through
// Adam moments, two step-size phases, early stopping on the validation batch.
// The best validation iterate (the untouched initialization included) wins.
TrainResult train(NetworkKind kind, const ScenarioConfig& sc, const TrainConfig& cfg);

// Trained-weight files. Doubles survive a round trip exactly.
void save_params(const std::string& path, const TrainResult& result, const ScenarioConfig& sc);

struct LoadedParams {
    NetworkKind kind = NetworkKind::Lc;
    int M = 0, K = 0, Q = 0, layers = 0;
    RadmmNetParams radmm;
    LcNetParams lc;
};

LoadedParams load_params(const std::string& path);

} // namespace mimo
