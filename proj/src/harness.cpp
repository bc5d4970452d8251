#include "mimo/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mimo/baseline.hpp"
#include "mimo/errors.hpp"
#include "mimo/lcradmm.hpp"
#include "mimo/radmm.hpp"
#include "mimo/rdakf.hpp"
#include "mimo/rng.hpp"

namespace mimo {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// one Monte-Carlo realization: full frame of channels, pilots, and data
struct Frame {
    std::vector<CVec> h;                       // block n at index n-1
    CMat y_pilot;
    std::vector<std::vector<CVec>> x;          // data per block/slot
    std::vector<std::vector<std::vector<int>>> xi; // true point indices
    std::vector<std::vector<CVec>> y;
};

struct CellContext {
    const ExperimentConfig* cfg = nullptr;
    ChannelStatistics st;
    Constellation c;
    CMat pilots;
    double sigma2 = 0.0;
    int block = 0;
    int slots = 0; // data slots at the detection block
};

int data_slots(const SystemConfig& s, int block) {
    return block == 1 ? s.L - s.Lp : s.L;
}

Frame make_frame(const CellContext& ctx, uint64_t trial) {
    const SystemConfig& s = ctx.cfg->scenario.sys;
    const uint64_t seed = ctx.cfg->master_seed;
    RngStream ch(seed, RngLane::Channel, trial);
    RngStream pn(seed, RngLane::PilotNoise, trial);
    RngStream sym(seed, RngLane::DataSymbols, trial);
    RngStream dn(seed, RngLane::DataNoise, trial);

    Frame f;
    f.h.resize(static_cast<size_t>(s.N + 1));
    f.h[0] = sample_channel(ctx.st, ch);
    f.y_pilot = transmit_pilots(unvec(f.h[0], s.M, s.K), ctx.pilots, ctx.sigma2, pn);
    for (int n = 2; n <= s.N + 1; ++n)
        f.h[static_cast<size_t>(n - 1)] = evolve_channel(f.h[static_cast<size_t>(n - 2)], ctx.st, ch);

    // the full frame is always generated in a fixed order so that a trial
    // index names the same realization in every experiment sharing the seed
    f.x.resize(f.h.size());
    f.xi.resize(f.h.size());
    f.y.resize(f.h.size());
    const uint32_t mask = static_cast<uint32_t>(ctx.c.size() - 1);
    for (int n = 1; n <= s.N + 1; ++n) {
        const size_t bi = static_cast<size_t>(n - 1);
        const int slots = data_slots(s, n);
        const CMat hmat = unvec(f.h[bi], s.M, s.K);
        f.x[bi].reserve(static_cast<size_t>(slots));
        f.xi[bi].reserve(static_cast<size_t>(slots));
        f.y[bi].reserve(static_cast<size_t>(slots));
        for (int t = 0; t < slots; ++t) {
            std::vector<int> idx(static_cast<size_t>(s.K));
            CVec x(s.K);
            for (int k = 0; k < s.K; ++k) {
                idx[static_cast<size_t>(k)] = static_cast<int>(sym.next_u32() & mask);
                x(k) = ctx.c.points[static_cast<size_t>(idx[static_cast<size_t>(k)])];
            }
            f.y[bi].push_back(transmit(hmat, x, ctx.sigma2, dn));
            f.x[bi].push_back(std::move(x));
            f.xi[bi].push_back(std::move(idx));
        }
    }
    return f;
}

CsiBelief build_belief(const CellContext& ctx, const Frame& f) {
    const SystemConfig& s = ctx.cfg->scenario.sys;
    const std::string& method = ctx.cfg->csi_method;
    if (method == "perfect") {
        // tiny jitter keeps the error covariance invertible for the robust kinds
        const CMat eps = 1e-12 * CMat::Identity(s.M * s.K, s.M * s.K);
        return make_belief(f.h[static_cast<size_t>(ctx.block - 1)], eps, s.M, s.K);
    }
    if (method == "rdakf") {
        std::vector<std::vector<CVec>> obs;
        for (int n = 2; n <= ctx.block; ++n) obs.push_back(f.y[static_cast<size_t>(n - 1)]);
        TrackResult tr = track_frame(f.y_pilot, ctx.pilots, obs, ctx.st, ctx.sigma2, ctx.block);
        return std::move(tr.per_block.back());
    }
    return lmmse_estimate(f.y_pilot, ctx.pilots, ctx.st, ctx.sigma2, ctx.block);
}

struct PreparedDetector {
    DetectorSpec spec;
    RadmmParams alg;
    RadmmNetParams net;
    LcAlgParams lc;
    LcNetParams lc_net;

    const std::string& csv_label() const { return spec.label.empty() ? spec.kind : spec.label; }
    bool needs_work() const {
        return spec.kind == "robust_ml" || spec.kind == "radmm" || spec.kind == "radmmnet";
    }
};

std::vector<PreparedDetector> prepare_detectors(const ExperimentConfig& cfg,
                                                const Constellation& c) {
    const int m = cfg.scenario.sys.M;
    const int k = cfg.scenario.sys.K;
    std::vector<PreparedDetector> out;
    for (const DetectorSpec& spec : cfg.detectors) {
        PreparedDetector p;
        p.spec = spec;
        if (spec.kind == "radmm") {
            p.alg.iters = spec.iters > 0 ? spec.iters : 50;
        } else if (spec.kind == "lcradmm") {
            p.lc.iters = spec.iters > 0 ? spec.iters : 50;
        } else if (spec.kind == "radmmnet") {
            if (!spec.params_file.empty()) {
                const LoadedParams lp = load_params(spec.params_file);
                if (lp.kind != NetworkKind::Radmm)
                    throw ConfigError(spec.params_file + ": network kind mismatch");
                if (lp.M != m || lp.K != k || lp.Q != c.order)
                    throw ConfigError(spec.params_file + ": dimensions do not match the scenario");
                p.net = lp.radmm;
            } else {
                p.net = neutral_radmmnet_params(spec.iters > 0 ? spec.iters : 10, m, c.order,
                                                c.alpha, RadmmParams{});
            }
            p.net.validate(m, c.order, c.alpha);
        } else if (spec.kind == "lcradmmnet") {
            if (!spec.params_file.empty()) {
                const LoadedParams lp = load_params(spec.params_file);
                if (lp.kind != NetworkKind::Lc)
                    throw ConfigError(spec.params_file + ": network kind mismatch");
                if (lp.M != m || lp.K != k || lp.Q != c.order)
                    throw ConfigError(spec.params_file + ": dimensions do not match the scenario");
                p.lc_net = lp.lc;
            } else {
                p.lc_net = neutral_lcnet_params(spec.iters > 0 ? spec.iters : 10, c.order,
                                                c.alpha, LcAlgParams{});
            }
            p.lc_net.validate(c.order, c.alpha);
        } else if (spec.kind == "robust_ml") {
            const double space = std::pow(4.0, c.order * k);
            if (space > 1e5)
                throw ConfigError("robust_ml: search space too large for this scenario");
        } else if (spec.kind == "mismatched_ml") {
            const double space = std::pow(4.0, c.order * k);
            if (space > 1e6)
                throw ConfigError("mismatched_ml: search space too large for this scenario");
        }
        out.push_back(std::move(p));
    }
    return out;
}

long long detect_block_errors(const PreparedDetector& det, const CellContext& ctx,
                              const Frame& f, const CsiBelief& belief,
                              const RobustMlWork* work) {
    const size_t bi = static_cast<size_t>(ctx.block - 1);
    const int k = ctx.cfg->scenario.sys.K;
    long long errors = 0;

    const LcPrecomp* lcpre = nullptr;
    LcPrecomp lcpre_store = [&]() -> LcPrecomp {
        if (det.spec.kind == "lcradmm")
            return lc_precompute(belief, ctx.sigma2, det.lc.delta);
        if (det.spec.kind == "lcradmmnet")
            return lc_precompute(belief, ctx.sigma2, det.lc_net.delta);
        // placeholder, never used for the other kinds
        return LcPrecomp{HermitianFactor::compute(CMat::Identity(1, 1)), CMat(), 0.0};
    }();
    if (det.spec.kind == "lcradmm" || det.spec.kind == "lcradmmnet") lcpre = &lcpre_store;

    for (size_t t = 0; t < f.y[bi].size(); ++t) {
        const CVec& y = f.y[bi][t];
        std::vector<int> decided;
        const std::string& kind = det.spec.kind;
        if (kind == "mismatched_mmse") {
            decided = nearest_indices(mismatched_mmse(y, belief, ctx.sigma2), ctx.c);
        } else if (kind == "robust_mmse") {
            decided = nearest_indices(robust_mmse(y, belief, ctx.sigma2), ctx.c);
        } else if (kind == "mismatched_ml") {
            decided = nearest_indices(mismatched_ml(y, belief, ctx.sigma2, ctx.c).x, ctx.c);
        } else if (kind == "robust_ml") {
            decided = nearest_indices(
                robust_ml_exhaustive_pre(y, *work, k, ctx.sigma2, ctx.c).x, ctx.c);
        } else if (kind == "radmm") {
            decided = nearest_indices(
                slice_to_symbol(radmm_detect_pre(y, belief, *work, ctx.sigma2, det.alg, ctx.c),
                                ctx.c),
                ctx.c);
        } else if (kind == "radmmnet") {
            decided = nearest_indices(
                slice_to_symbol(
                    radmmnet_forward_pre(y, belief, *work, ctx.sigma2, det.net, ctx.c), ctx.c),
                ctx.c);
        } else if (kind == "lcradmm") {
            decided = nearest_indices(
                slice_to_symbol(
                    lcradmm_detect_pre(y, *lcpre, belief, ctx.sigma2, det.lc, ctx.c), ctx.c),
                ctx.c);
        } else {
            decided = nearest_indices(
                slice_to_symbol(
                    lcradmmnet_forward_pre(y, *lcpre, belief, ctx.sigma2, det.lc_net, ctx.c),
                    ctx.c),
                ctx.c);
        }
        const std::vector<int>& truth = f.xi[bi][t];
        for (int u = 0; u < k; ++u)
            if (decided[static_cast<size_t>(u)] != truth[static_cast<size_t>(u)]) ++errors;
    }
    return errors;
}

void process_trial_ser(const CellContext& ctx, const std::vector<PreparedDetector>& dets,
                       const std::vector<int>& active, uint64_t trial,
                       long long* err_out, double* sec_out) {
    const Frame f = make_frame(ctx, trial);
    const CsiBelief belief = build_belief(ctx, f);

    bool need_work = false;
    for (int d : active) need_work = need_work || dets[static_cast<size_t>(d)].needs_work();
    RobustMlWork work;
    if (need_work) work = make_robust_ml_work(belief);

    for (int d : active) {
        const double t0 = now_seconds();
        err_out[d] = detect_block_errors(dets[static_cast<size_t>(d)], ctx, f, belief,
                                         need_work ? &work : nullptr);
        sec_out[d] = now_seconds() - t0;
    }
}

CellContext make_cell(const ExperimentConfig& cfg, double snr_db, int block,
                      const ChannelStatistics& st, const Constellation& c, const CMat& pilots) {
    CellContext ctx;
    ctx.cfg = &cfg;
    ctx.st = st;
    ctx.c = c;
    ctx.pilots = pilots;
    ctx.sigma2 = cfg.scenario.sys.K / std::pow(10.0, snr_db / 10.0);
    ctx.block = block;
    ctx.slots = data_slots(cfg.scenario.sys, block);
    return ctx;
}

std::vector<ResultRecord> init_cell_records(const ExperimentConfig& cfg, double snr_db, int block,
                                            const std::vector<PreparedDetector>& dets) {
    std::vector<ResultRecord> recs(dets.size());
    for (size_t d = 0; d < dets.size(); ++d) {
        recs[d].detector = dets[d].csv_label();
        recs[d].snr_db = snr_db;
        recs[d].block = block;
        recs[d].csi = cfg.csi_method;
        recs[d].has_ser = true;
        recs[d].seed = cfg.master_seed;
    }
    return recs;
}

void finalize_cell_records(std::vector<ResultRecord>& recs, bool timing) {
    for (ResultRecord& r : recs) {
        r.ser = r.symbols > 0 ? static_cast<double>(r.errors) / static_cast<double>(r.symbols)
                              : 0.0;
        if (!timing) r.wall_s = 0.0;
    }
}

void run_cell_ser_chunked(const CellContext& ctx, const std::vector<PreparedDetector>& dets,
                          std::vector<ResultRecord>& recs) {
    const ExperimentConfig& cfg = *ctx.cfg;
    const int ndet = static_cast<int>(dets.size());
    const long long sym_per_trial = static_cast<long long>(ctx.slots) * cfg.scenario.sys.K;
    std::vector<char> done(static_cast<size_t>(ndet), 0);
    long long consumed = 0;
    constexpr long long kChunk = 256; // fixed so results cannot depend on threads

    while (consumed < cfg.max_trials) {
        std::vector<int> active;
        for (int d = 0; d < ndet; ++d)
            if (!done[static_cast<size_t>(d)]) active.push_back(d);
        if (active.empty()) break;

        const long long n = std::min<long long>(kChunk, cfg.max_trials - consumed);
        std::vector<long long> errs(static_cast<size_t>(n * ndet), 0);
        std::vector<double> secs(static_cast<size_t>(n * ndet), 0.0);

        std::exception_ptr fail = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(cfg.threads) if (cfg.threads > 1)
#endif
        for (long long t = 0; t < n; ++t) {
            try {
                process_trial_ser(ctx, dets, active, static_cast<uint64_t>(consumed + t),
                                  &errs[static_cast<size_t>(t * ndet)],
                                  &secs[static_cast<size_t>(t * ndet)]);
            } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                if (!fail) fail = std::current_exception();
            }
        }
        if (fail) std::rethrow_exception(fail);

        // sequential fold in trial order reproduces the serial stopping rule
        for (long long t = 0; t < n; ++t) {
            for (int d : active) {
                if (done[static_cast<size_t>(d)]) continue;
                ResultRecord& r = recs[static_cast<size_t>(d)];
                r.trials += 1;
                r.symbols += sym_per_trial;
                r.errors += errs[static_cast<size_t>(t * ndet + d)];
                r.wall_s += secs[static_cast<size_t>(t * ndet + d)];
                if (r.errors >= cfg.min_symbol_errors) done[static_cast<size_t>(d)] = 1;
            }
        }
        consumed += n;
        bool all_done = true;
        for (char f : done) all_done = all_done && f;
        if (all_done) break;
    }
}

void run_cell_ser_serial(const CellContext& ctx, const std::vector<PreparedDetector>& dets,
                         std::vector<ResultRecord>& recs) {
    const ExperimentConfig& cfg = *ctx.cfg;
    const int ndet = static_cast<int>(dets.size());
    const long long sym_per_trial = static_cast<long long>(ctx.slots) * cfg.scenario.sys.K;
    std::vector<char> done(static_cast<size_t>(ndet), 0);
    std::vector<long long> errs(static_cast<size_t>(ndet), 0);
    std::vector<double> secs(static_cast<size_t>(ndet), 0.0);

    for (long long trial = 0; trial < cfg.max_trials; ++trial) {
        std::vector<int> active;
        for (int d = 0; d < ndet; ++d)
            if (!done[static_cast<size_t>(d)]) active.push_back(d);
        if (active.empty()) break;

        std::fill(errs.begin(), errs.end(), 0);
        std::fill(secs.begin(), secs.end(), 0.0);
        process_trial_ser(ctx, dets, active, static_cast<uint64_t>(trial), errs.data(),
                          secs.data());
        for (int d : active) {
            ResultRecord& r = recs[static_cast<size_t>(d)];
            r.trials += 1;
            r.symbols += sym_per_trial;
            r.errors += errs[static_cast<size_t>(d)];
            r.wall_s += secs[static_cast<size_t>(d)];
            if (r.errors >= cfg.min_symbol_errors) done[static_cast<size_t>(d)] = 1;
        }
    }
}

std::vector<ResultRecord> run_ser_impl(const ExperimentConfig& cfg, bool parallel) {
    cfg.validate();
    if (cfg.detectors.empty()) throw ConfigError("simulate: no detectors configured");
    for (int b : cfg.blocks)
        if (data_slots(cfg.scenario.sys, b) < 1)
            throw ConfigError("simulate: block " + std::to_string(b) + " has no data slots");

    const ChannelStatistics st =
        make_channel_statistics(cfg.scenario.sys.M, cfg.scenario.sys.K, cfg.scenario.rho_t,
                                cfg.scenario.rho_r, cfg.scenario.rho_vec());
    const Constellation c = make_constellation(cfg.scenario.mod_order);
    const CMat pilots = make_pilots(cfg.scenario.sys.K, cfg.scenario.sys.Lp);
    const std::vector<PreparedDetector> dets = prepare_detectors(cfg, c);

    std::vector<ResultRecord> out;
    for (double snr : cfg.snr_db) {
        for (int block : cfg.blocks) {
            const CellContext ctx = make_cell(cfg, snr, block, st, c, pilots);
            std::vector<ResultRecord> recs = init_cell_records(cfg, snr, block, dets);
            if (parallel)
                run_cell_ser_chunked(ctx, dets, recs);
            else
                run_cell_ser_serial(ctx, dets, recs);
            finalize_cell_records(recs, cfg.timing);
            out.insert(out.end(), recs.begin(), recs.end());
        }
    }
    return out;
}

std::vector<ResultRecord> run_nmse_impl(const ExperimentConfig& cfg, bool parallel) {
    cfg.validate();
    const ChannelStatistics st =
        make_channel_statistics(cfg.scenario.sys.M, cfg.scenario.sys.K, cfg.scenario.rho_t,
                                cfg.scenario.rho_r, cfg.scenario.rho_vec());
    const Constellation c = make_constellation(cfg.scenario.mod_order);
    const CMat pilots = make_pilots(cfg.scenario.sys.K, cfg.scenario.sys.Lp);

    std::vector<ResultRecord> out;
    for (double snr : cfg.snr_db) {
        for (int block : cfg.blocks) {
            const CellContext ctx = make_cell(cfg, snr, block, st, c, pilots);
            const long long n = cfg.max_trials;
            std::vector<double> ratio(static_cast<size_t>(n), 0.0);
            std::vector<double> secs(static_cast<size_t>(n), 0.0);

            std::exception_ptr fail = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(cfg.threads) if (parallel && cfg.threads > 1)
#endif
            for (long long t = 0; t < n; ++t) {
                try {
                    const Frame f = make_frame(ctx, static_cast<uint64_t>(t));
                    const double t0 = now_seconds();
                    const CsiBelief belief = build_belief(ctx, f);
                    secs[static_cast<size_t>(t)] = now_seconds() - t0;
                    const CMat h_true = unvec(f.h[static_cast<size_t>(block - 1)],
                                              cfg.scenario.sys.M, cfg.scenario.sys.K);
                    ratio[static_cast<size_t>(t)] =
                        (belief.H_hat - h_true).squaredNorm() / h_true.squaredNorm();
                } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                    if (!fail) fail = std::current_exception();
                }
            }
            if (fail) std::rethrow_exception(fail);

            ResultRecord r;
            r.snr_db = snr;
            r.block = block;
            r.csi = cfg.csi_method;
            r.trials = n;
            r.seed = cfg.master_seed;
            r.has_nmse = true;
            double acc = 0.0, wall = 0.0;
            for (long long t = 0; t < n; ++t) {
                acc += ratio[static_cast<size_t>(t)];
                wall += secs[static_cast<size_t>(t)];
            }
            r.nmse = acc / static_cast<double>(n);
            r.wall_s = cfg.timing ? wall : 0.0;
            out.push_back(std::move(r));
        }
    }
    return out;
}

void append_g6(std::string& s, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    s += buf;
}

} // namespace

std::vector<ResultRecord> run_ser_experiment(const ExperimentConfig& cfg) {
    return run_ser_impl(cfg, true);
}

std::vector<ResultRecord> run_ser_experiment_serial(const ExperimentConfig& cfg) {
    return run_ser_impl(cfg, false);
}

std::vector<ResultRecord> run_nmse_experiment(const ExperimentConfig& cfg) {
    return run_nmse_impl(cfg, true);
}

std::vector<ResultRecord> run_nmse_experiment_serial(const ExperimentConfig& cfg) {
    return run_nmse_impl(cfg, false);
}

std::string to_csv(const std::vector<ResultRecord>& recs) {
    std::string s = "detector,snr_db,block,csi,trials,symbols,errors,ser,nmse,wall_s,seed\n";
    for (const ResultRecord& r : recs) {
        s += r.detector;
        s += ',';
        append_g6(s, r.snr_db);
        s += ',';
        s += std::to_string(r.block);
        s += ',';
        s += r.csi;
        s += ',';
        s += std::to_string(r.trials);
        s += ',';
        s += std::to_string(r.symbols);
        s += ',';
        s += std::to_string(r.errors);
        s += ',';
        if (r.has_ser) append_g6(s, r.ser);
        s += ',';
        if (r.has_nmse) append_g6(s, r.nmse);
        s += ',';
        append_g6(s, r.wall_s);
        s += ',';
        s += std::to_string(r.seed);
        s += '\n';
    }
    return s;
}

void write_csv(const std::string& path, const std::vector<ResultRecord>& recs) {
    std::ofstream out(path);
    if (!out) throw ConfigError("write_csv: cannot write " + path);
    out << to_csv(recs);
}

} // namespace mimo
