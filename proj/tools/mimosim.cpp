#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "mimo/config.hpp"
#include "mimo/errors.hpp"
#include "mimo/harness.hpp"
#include "mimo/trainer.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    long long seed = -1;
    int threads = 0;
    bool no_timing = false;
    bool serial = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_config) {
    auto* cfg = cmd->add_option("-c,--config", o.config, "experiment description (toml)");
    if (needs_config) cfg->required();
    cmd->add_option("-o,--out", o.out, "write csv here instead of stdout");
    cmd->add_option("--seed", o.seed, "override the master seed");
    cmd->add_option("--threads", o.threads, "override the worker count");
    cmd->add_flag("--no-timing", o.no_timing, "zero the wall_s column for reproducible files");
    cmd->add_flag("--serial", o.serial, "use the sequential reference driver");
}

mimo::ExperimentConfig load_experiment(const CommonOpts& o) {
    mimo::ExperimentConfig cfg = mimo::experiment_from_toml(mimo::parse_toml_file(o.config));
    if (o.seed >= 0) cfg.master_seed = static_cast<uint64_t>(o.seed);
    if (o.threads > 0) cfg.threads = o.threads;
    if (o.no_timing) cfg.timing = false;
    return cfg;
}

void emit(const CommonOpts& o, const std::vector<mimo::ResultRecord>& recs) {
    if (o.out.empty()) {
        std::fputs(mimo::to_csv(recs).c_str(), stdout);
    } else {
        mimo::write_csv(o.out, recs);
        std::fprintf(stderr, "wrote %zu rows to %s\n", recs.size(), o.out.c_str());
    }
}

int run_simulate(const CommonOpts& o) {
    const mimo::ExperimentConfig cfg = load_experiment(o);
    emit(o, o.serial ? mimo::run_ser_experiment_serial(cfg) : mimo::run_ser_experiment(cfg));
    return 0;
}

int run_nmse(const CommonOpts& o) {
    mimo::ExperimentConfig cfg = load_experiment(o);
    cfg.detectors.clear(); // quality sweep needs no detectors
    emit(o, o.serial ? mimo::run_nmse_experiment_serial(cfg) : mimo::run_nmse_experiment(cfg));
    return 0;
}

int run_train(const CommonOpts& o) {
    mimo::TrainJob job = mimo::train_job_from_toml(mimo::parse_toml_file(o.config));
    if (o.seed >= 0) job.train.seed = static_cast<uint64_t>(o.seed);
    const std::string out = o.out.empty() ? "weights.json" : o.out;

    const mimo::TrainResult res = mimo::train(job.kind, job.scenario, job.train);
    mimo::save_params(out, res, job.scenario);
    std::fprintf(stderr, "validation mse %.6g -> %.6g over %d epochs, weights in %s\n",
                 res.initial_val, res.best_val, res.epochs_run, out.c_str());
    return 0;
}

// tiny end-to-end run checking that parallel and serial sweeps agree byte for byte
int run_selftest() {
    mimo::ExperimentConfig cfg;
    cfg.scenario.sys.M = 4;
    cfg.scenario.sys.K = 2;
    cfg.scenario.sys.L = 4;
    cfg.scenario.sys.Lp = 2;
    cfg.scenario.sys.N = 2;
    cfg.scenario.rho_time = mimo::RVec::Constant(2, 0.99);
    cfg.scenario.mod_order = 1;
    cfg.snr_db = {6.0, 12.0};
    cfg.blocks = {2};
    cfg.max_trials = 200;
    cfg.timing = false;
    for (const char* kind : {"mismatched_mmse", "robust_mmse", "radmm", "lcradmm"}) {
        mimo::DetectorSpec d;
        d.kind = kind;
        d.label = kind;
        cfg.detectors.push_back(d);
    }

    cfg.threads = 1;
    const std::string serial = mimo::to_csv(mimo::run_ser_experiment_serial(cfg));
    cfg.threads = 4;
    const std::string parallel = mimo::to_csv(mimo::run_ser_experiment(cfg));
    std::fputs(serial.c_str(), stdout);
    if (serial != parallel) {
        std::fprintf(stderr, "selftest FAILED: drivers disagree\n");
        return 1;
    }
    std::fprintf(stderr, "selftest ok\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"monte-carlo driver for robust mimo detection under imperfect csi"};
    app.require_subcommand(1);

    CommonOpts sim_o, nmse_o, train_o;
    CLI::App* sim = app.add_subcommand("simulate", "symbol error rate sweep");
    add_common(sim, sim_o, true);
    CLI::App* nmse = app.add_subcommand("nmse", "channel estimate quality sweep");
    add_common(nmse, nmse_o, true);
    CLI::App* train = app.add_subcommand("train", "fit unfolded detector weights");
    train->add_option("-c,--config", train_o.config, "train job description (toml)")->required();
    train->add_option("-o,--out", train_o.out, "weights file to write (default weights.json)");
    train->add_option("--seed", train_o.seed, "override the training seed");
    CLI::App* self = app.add_subcommand("selftest", "quick determinism check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_simulate(sim_o);
        if (nmse->parsed()) return run_nmse(nmse_o);
        if (train->parsed()) return run_train(train_o);
        if (self->parsed()) return run_selftest();
    } catch (const mimo::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
