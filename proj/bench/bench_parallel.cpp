#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "mimo/config.hpp"
#include "mimo/harness.hpp"

// Times the OpenMP sweep driver against the sequential reference on a fixed
// workload and checks that both emit the same csv. Usage:
//   bench_parallel [trials] [threads]

namespace {

double time_run(const mimo::ExperimentConfig& cfg, bool serial, std::string* csv) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto recs =
        serial ? mimo::run_ser_experiment_serial(cfg) : mimo::run_ser_experiment(cfg);
    const auto t1 = std::chrono::steady_clock::now();
    *csv = mimo::to_csv(recs);
    return std::chrono::duration<double>(t1 - t0).count();
}

} // namespace

int main(int argc, char** argv) {
    const long long trials = argc > 1 ? std::atoll(argv[1]) : 300;
    const int threads = argc > 2 ? std::atoi(argv[2]) : 4;

    mimo::ExperimentConfig cfg;
    cfg.scenario.sys.M = 8;
    cfg.scenario.sys.K = 4;
    cfg.scenario.rho_time = mimo::RVec::Constant(4, 0.99);
    cfg.scenario.mod_order = 1;
    cfg.snr_db = {15.0};
    cfg.blocks = {5};
    cfg.max_trials = trials;
    cfg.min_symbol_errors = 1000000000; // fixed workload: always run every trial
    cfg.timing = false;
    for (const char* kind : {"robust_mmse", "lcradmm", "radmmnet"}) {
        mimo::DetectorSpec d;
        d.kind = kind;
        d.label = kind;
        if (std::string(kind) == "lcradmm") d.iters = 30;
        cfg.detectors.push_back(d);
    }

    std::string serial_csv, par_csv;
    cfg.threads = 1;
    const double t_serial = time_run(cfg, true, &serial_csv);
    cfg.threads = threads;
    const double t_par = time_run(cfg, false, &par_csv);

    std::printf("workload: %lld trials, %zu detectors, M=%d K=%d\n", trials,
                cfg.detectors.size(), cfg.scenario.sys.M, cfg.scenario.sys.K);
    std::printf("%-22s %8.3f s  %10.1f trials/s\n", "serial reference", t_serial,
                trials / t_serial);
    std::printf("%-14s (x%d)   %8.3f s  %10.1f trials/s\n", "openmp driver", threads, t_par,
                trials / t_par);
    std::printf("speedup: %.2fx\n", t_serial / t_par);
    const bool same = serial_csv == par_csv;
    std::printf("outputs identical: %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
}
