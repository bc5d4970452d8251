#include "mimo/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "mimo/baseline.hpp"
#include "mimo/errors.hpp"
#include "mimo/rng.hpp"

namespace mimo {

double ScenarioConfig::sigma2() const {
    return sys.K / std::pow(10.0, snr_db / 10.0);
}

RVec ScenarioConfig::rho_vec() const {
    if (rho_time.size() == sys.K) return rho_time;
    if (rho_time.size() != 0)
        throw ConfigError("scenario: rho_time must have one entry per user");
    return RVec::Constant(sys.K, 0.99);
}

Dataset generate_dataset(const ScenarioConfig& sc, int count, uint64_t seed) {
    if (count < 1) throw EmptyBatch("generate_dataset: count must be >= 1");
    sc.sys.validate();
    if (sc.block < 1 || sc.block > sc.sys.N + 1)
        throw IndexError("generate_dataset: block outside the frame");

    const ChannelStatistics st =
        make_channel_statistics(sc.sys.M, sc.sys.K, sc.rho_t, sc.rho_r, sc.rho_vec());
    const Constellation c = make_constellation(sc.mod_order);
    const CMat pilots = make_pilots(sc.sys.K, sc.sys.Lp);
    const double s2 = sc.sigma2();

    Dataset ds;
    ds.sigma2 = s2;
    ds.samples.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        RngStream ch(seed, RngLane::Channel, static_cast<uint64_t>(i));
        RngStream pn(seed, RngLane::PilotNoise, static_cast<uint64_t>(i));
        RngStream sym(seed, RngLane::DataSymbols, static_cast<uint64_t>(i));
        RngStream dn(seed, RngLane::DataNoise, static_cast<uint64_t>(i));

        CVec h = sample_channel(st, ch);
        const CMat yp = transmit_pilots(unvec(h, st.M, st.K), pilots, s2, pn);
        for (int n = 2; n <= sc.block; ++n) h = evolve_channel(h, st, ch);

        TrainSample smp;
        smp.belief = lmmse_estimate(yp, pilots, st, s2, sc.block);
        smp.x_true = CVec(st.K);
        for (int k = 0; k < st.K; ++k)
            smp.x_true(k) = c.points[sym.next_u32() & static_cast<uint32_t>(c.size() - 1)];
        smp.y = transmit(unvec(h, st.M, st.K), smp.x_true, s2, dn);
        ds.samples.push_back(std::move(smp));
    }
    return ds;
}

double mse_loss(const std::vector<CVec>& outputs, const std::vector<TrainSample>& batch) {
    if (batch.empty()) throw EmptyBatch("mse_loss: empty batch");
    if (outputs.size() != batch.size())
        throw DimensionMismatch("mse_loss: output/target count mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < batch.size(); ++i)
        acc += (outputs[i] - batch[i].x_true).squaredNorm();
    return acc / static_cast<double>(batch.size());
}

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double softplus_inv(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// raw parameter layout, full detector:
//   per layer [mu, beta_0..Q-1, eps, relax], then M*M W entries when trained
// low-complexity detector:
//   [delta], then per layer [kappa_0..Q-1, upsilon]
int radmm_dim(int layers, int q, int m, bool train_w) {
    return layers * (q + 3) + (train_w ? m * m : 0);
}
int lc_dim(int layers, int q) { return 1 + layers * (q + 1); }

RadmmNetParams unpack_radmm(const std::vector<double>& th, int layers, int m, int q,
                            double alpha, bool train_w, int cg_first) {
    RadmmNetParams p;
    p.layers = layers;
    p.cg_first = cg_first;
    p.eps_spectral = false;
    p.mu.resize(static_cast<size_t>(layers));
    p.beta.resize(static_cast<size_t>(layers));
    p.eps.resize(static_cast<size_t>(layers));
    p.relax.resize(static_cast<size_t>(layers));
    size_t at = 0;
    for (int l = 0; l < layers; ++l) {
        const size_t li = static_cast<size_t>(l);
        const double mu = softplus(th[at++]);
        p.mu[li] = mu;
        p.beta[li].resize(static_cast<size_t>(q));
        for (int b = 0; b < q; ++b) {
            // keep the binary subproblem strictly convex for any raw value
            const double limit = mu * std::pow(4.0, b) / (2.0 * alpha * alpha);
            p.beta[li][static_cast<size_t>(b)] = limit * sigmoid(th[at++]);
        }
        p.eps[li] = softplus(th[at++]);
        p.relax[li] = 2.0 * sigmoid(th[at++]);
    }
    if (train_w) {
        RMat a(m, m);
        for (int r = 0; r < m; ++r)
            for (int cidx = 0; cidx < m; ++cidx) a(r, cidx) = th[at++];
        p.W = RMat::Identity(m, m) + 0.5 * (a + a.transpose());
    } else {
        p.W = RMat::Identity(m, m);
    }
    return p;
}

LcNetParams unpack_lc(const std::vector<double>& th, int layers, int q, double alpha) {
    LcNetParams p;
    p.layers = layers;
    size_t at = 0;
    p.delta = softplus(th[at++]);
    p.kappa.resize(static_cast<size_t>(layers));
    p.upsilon.resize(static_cast<size_t>(layers));
    for (int l = 0; l < layers; ++l) {
        const size_t li = static_cast<size_t>(l);
        p.kappa[li].resize(static_cast<size_t>(q));
        for (int b = 0; b < q; ++b) {
            const double limit = p.delta * std::pow(4.0, b) / (2.0 * alpha * alpha);
            p.kappa[li][static_cast<size_t>(b)] = limit * sigmoid(th[at++]);
        }
        p.upsilon[li] = 2.0 * sigmoid(th[at++]);
    }
    return p;
}

// curvature-bound starting point: average over a few probe instances of the
// exact contraction's top eigenvalue at the linear-estimate initialization
double probe_eps(const Dataset& ds, int m, double alpha) {
    (void)alpha;
    const int probes = std::min<int>(16, static_cast<int>(ds.samples.size()));
    double acc = 0.0;
    for (int i = 0; i < probes; ++i) {
        const TrainSample& s = ds.samples[static_cast<size_t>(i)];
        const RobustMlWork work = make_robust_ml_work(s.belief);
        const CVec x0 = robust_mmse(s.y, s.belief, ds.sigma2);
        const CMat r = assemble_r(x0, work, ds.sigma2, m);
        const CMat rinv = HermitianFactor::compute(r).inverse();
        acc += spectral_upper_bound(block_contract(rinv, RMat::Identity(m, m), 1.0 / ds.sigma2));
    }
    return acc / probes;
}

std::vector<double> init_theta(NetworkKind kind, const TrainConfig& cfg, const Dataset& train_ds,
                               int m, int q, double alpha) {
    if (kind == NetworkKind::Radmm) {
        std::vector<double> th(static_cast<size_t>(radmm_dim(cfg.layers, q, m, cfg.train_w)), 0.0);
        const double raw_eps = softplus_inv(std::max(1e-6, probe_eps(train_ds, m, alpha)));
        size_t at = 0;
        for (int l = 0; l < cfg.layers; ++l) {
            th[at++] = softplus_inv(2.0); // mu
            at += static_cast<size_t>(q); // beta raws stay 0 = half margin
            th[at++] = raw_eps;
            th[at++] = 0.0; // relax = 1
        }
        return th;
    }
    std::vector<double> th(static_cast<size_t>(lc_dim(cfg.layers, q)), 0.0);
    th[0] = softplus_inv(2.0); // delta
    return th;
}

struct Evaluator {
    NetworkKind kind;
    const TrainConfig* cfg;
    const Constellation* c;
    int m = 0;
    double sigma2 = 0.0;

    double operator()(const std::vector<double>& th, const std::vector<TrainSample>& samples,
                      const std::vector<int>* subset) const {
        const size_t n = subset ? subset->size() : samples.size();
        if (n == 0) throw EmptyBatch("train: empty evaluation batch");
        double acc = 0.0;
        if (kind == NetworkKind::Radmm) {
            const RadmmNetParams p =
                unpack_radmm(th, cfg->layers, m, c->order, c->alpha, cfg->train_w, cfg->cg_first);
            for (size_t i = 0; i < n; ++i) {
                const TrainSample& s = samples[static_cast<size_t>(subset ? (*subset)[i] : static_cast<int>(i))];
                acc += (radmmnet_forward(s.y, s.belief, sigma2, p, *c) - s.x_true).squaredNorm();
            }
        } else {
            const LcNetParams p = unpack_lc(th, cfg->layers, c->order, c->alpha);
            for (size_t i = 0; i < n; ++i) {
                const TrainSample& s = samples[static_cast<size_t>(subset ? (*subset)[i] : static_cast<int>(i))];
                acc += (lcradmmnet_forward(s.y, s.belief, sigma2, p, *c) - s.x_true).squaredNorm();
            }
        }
        const double loss = acc / static_cast<double>(n);
        if (!std::isfinite(loss)) throw DivergenceDetected("train: non-finite loss");
        return loss;
    }
};

} // namespace

TrainResult train(NetworkKind kind, const ScenarioConfig& sc, const TrainConfig& cfg) {
    if (cfg.train_size < 1 || cfg.val_size < 1) throw EmptyBatch("train: empty dataset requested");
    const Dataset train_ds = generate_dataset(sc, cfg.train_size, cfg.seed);
    const Dataset val_ds = generate_dataset(sc, cfg.val_size, cfg.seed + 1000003ull);
    const Constellation c = make_constellation(sc.mod_order);

    Evaluator eval{kind, &cfg, &c, sc.sys.M, train_ds.sigma2};
    std::vector<double> theta = init_theta(kind, cfg, train_ds, sc.sys.M, sc.mod_order, c.alpha);
    const size_t dim = theta.size();

    TrainResult res;
    res.kind = kind;
    res.initial_val = eval(theta, val_ds.samples, nullptr);
    res.best_val = res.initial_val;
    std::vector<double> best_theta = theta;

    RngStream rng(cfg.seed, RngLane::Trainer, 0);
    std::vector<double> adam_m(dim, 0.0), adam_v(dim, 0.0);
    long long t = 0;
    const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;

    std::vector<int> order(static_cast<size_t>(cfg.train_size));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> th_plus(dim), th_minus(dim), delta(dim);

    const double steps[2] = {cfg.phase1_step, cfg.phase2_step};
    const int caps[2] = {cfg.phase1_epochs, cfg.phase2_epochs};
    for (int phase = 0; phase < 2; ++phase) {
        theta = best_theta;
        int stale = 0;
        for (int epoch = 0; epoch < caps[phase]; ++epoch) {
            for (size_t i = order.size(); i > 1; --i) {
                const size_t j = rng.next_u32() % i;
                std::swap(order[i - 1], order[j]);
            }
            for (int start = 0; start < cfg.train_size; start += cfg.batch) {
                const int stop = std::min(cfg.train_size, start + cfg.batch);
                std::vector<int> idx(order.begin() + start, order.begin() + stop);

                for (size_t d = 0; d < dim; ++d) {
                    delta[d] = (rng.next_u32() & 1u) ? 1.0 : -1.0;
                    th_plus[d] = theta[d] + cfg.spsa_c * delta[d];
                    th_minus[d] = theta[d] - cfg.spsa_c * delta[d];
                }
                const double lp = eval(th_plus, train_ds.samples, &idx);
                const double lm = eval(th_minus, train_ds.samples, &idx);
                const double scale = (lp - lm) / (2.0 * cfg.spsa_c);

                ++t;
                const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
                const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
                for (size_t d = 0; d < dim; ++d) {
                    const double g = scale * delta[d];
                    adam_m[d] = b1 * adam_m[d] + (1.0 - b1) * g;
                    adam_v[d] = b2 * adam_v[d] + (1.0 - b2) * g * g;
                    theta[d] -= steps[phase] * (adam_m[d] / bc1) /
                                (std::sqrt(adam_v[d] / bc2) + adam_eps);
                }
            }
            const double val = eval(theta, val_ds.samples, nullptr);
            res.val_history.push_back(val);
            ++res.epochs_run;
            if (val < res.best_val - 1e-12) {
                res.best_val = val;
                best_theta = theta;
                stale = 0;
            } else {
                ++stale;
            }
            if (stale >= cfg.patience) break;
        }
    }

    if (kind == NetworkKind::Radmm)
        res.radmm = unpack_radmm(best_theta, cfg.layers, sc.sys.M, sc.mod_order, c.alpha,
                                 cfg.train_w, cfg.cg_first);
    else
        res.lc = unpack_lc(best_theta, cfg.layers, sc.mod_order, c.alpha);
    return res;
}

void save_params(const std::string& path, const TrainResult& result, const ScenarioConfig& sc) {
    nlohmann::json j;
    j["M"] = sc.sys.M;
    j["K"] = sc.sys.K;
    j["Q"] = sc.mod_order;
    if (result.kind == NetworkKind::Radmm) {
        const RadmmNetParams& p = result.radmm;
        j["network"] = "radmmnet";
        j["layers"] = p.layers;
        std::vector<double> w;
        w.reserve(static_cast<size_t>(p.W.size()));
        for (int r = 0; r < p.W.rows(); ++r)
            for (int cidx = 0; cidx < p.W.cols(); ++cidx) w.push_back(p.W(r, cidx));
        j["shared"]["W"] = w;
        for (int l = 0; l < p.layers; ++l) {
            const size_t li = static_cast<size_t>(l);
            nlohmann::json layer;
            layer["mu"] = p.mu[li];
            layer["beta"] = p.beta[li];
            layer["eps"] = p.eps[li];
            layer["relax"] = p.relax[li];
            j["per_layer"].push_back(layer);
        }
    } else {
        const LcNetParams& p = result.lc;
        j["network"] = "lcradmmnet";
        j["layers"] = p.layers;
        j["shared"]["delta"] = p.delta;
        for (int l = 0; l < p.layers; ++l) {
            const size_t li = static_cast<size_t>(l);
            nlohmann::json layer;
            layer["kappa"] = p.kappa[li];
            layer["relax"] = p.upsilon[li];
            j["per_layer"].push_back(layer);
        }
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("save_params: cannot write " + path);
    out << j.dump(2) << "\n";
}

LoadedParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_params: cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("load_params: " + std::string(e.what()));
    }

    LoadedParams lp;
    try {
        lp.M = j.at("M").get<int>();
        lp.K = j.at("K").get<int>();
        lp.Q = j.at("Q").get<int>();
        lp.layers = j.at("layers").get<int>();
        const std::string net = j.at("network").get<std::string>();
        const auto& layers = j.at("per_layer");
        if (static_cast<int>(layers.size()) != lp.layers)
            throw ConfigError("load_params: per_layer count does not match layers");
        if (net == "radmmnet") {
            lp.kind = NetworkKind::Radmm;
            RadmmNetParams& p = lp.radmm;
            p.layers = lp.layers;
            p.eps_spectral = false;
            const auto w = j.at("shared").at("W").get<std::vector<double>>();
            if (static_cast<int>(w.size()) != lp.M * lp.M)
                throw ConfigError("load_params: W size does not match M");
            p.W = RMat(lp.M, lp.M);
            for (int r = 0; r < lp.M; ++r)
                for (int cidx = 0; cidx < lp.M; ++cidx)
                    p.W(r, cidx) = w[static_cast<size_t>(r * lp.M + cidx)];
            for (const auto& layer : layers) {
                p.mu.push_back(layer.at("mu").get<double>());
                p.beta.push_back(layer.at("beta").get<std::vector<double>>());
                p.eps.push_back(layer.at("eps").get<double>());
                p.relax.push_back(layer.at("relax").get<double>());
            }
        } else if (net == "lcradmmnet") {
            lp.kind = NetworkKind::Lc;
            LcNetParams& p = lp.lc;
            p.layers = lp.layers;
            p.delta = j.at("shared").at("delta").get<double>();
            for (const auto& layer : layers) {
                p.kappa.push_back(layer.at("kappa").get<std::vector<double>>());
                p.upsilon.push_back(layer.at("relax").get<double>());
            }
        } else {
            throw ConfigError("load_params: unknown network '" + net + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("load_params: " + std::string(e.what()));
    }
    return lp;
}

} // namespace mimo
