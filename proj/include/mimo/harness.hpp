#pragma once

#include <string>
#include <vector>

#include "mimo/config.hpp"

namespace mimo {

struct ResultRecord {
    std::string detector; // empty on channel-quality rows
    double snr_db = 0.0;
    int block = 0;
    std::string csi;
    long long trials = 0;
    long long symbols = 0;
    long long errors = 0;
    double ser = 0.0;
    bool has_ser = false;
    double nmse = 0.0;
    bool has_nmse = false;
    double wall_s = 0.0;
    uint64_t seed = 0;
};

// Symbol-error-rate sweep. Frames are simulated per trial index from counter
// streams, so records do not depend on the thread count; every detector of a
// cell sees the same frames. Trials stop per detector once min_symbol_errors
// is reached, capped at max_trials.
std::vector<ResultRecord> run_ser_experiment(const ExperimentConfig& cfg);

// Plain sequential loop with identical semantics, kept as the reference the
// parallel driver is checked against.
std::vector<ResultRecord> run_ser_experiment_serial(const ExperimentConfig& cfg);

// Channel estimation quality sweep: mean over max_trials frames of
// |H_hat - H|_F^2 / |H|_F^2 at each (snr, block) cell.
std::vector<ResultRecord> run_nmse_experiment(const ExperimentConfig& cfg);
std::vector<ResultRecord> run_nmse_experiment_serial(const ExperimentConfig& cfg);

// header: detector,snr_db,block,csi,trials,symbols,errors,ser,nmse,wall_s,seed
std::string to_csv(const std::vector<ResultRecord>& recs);
void write_csv(const std::string& path, const std::vector<ResultRecord>& recs);

} // namespace mimo
