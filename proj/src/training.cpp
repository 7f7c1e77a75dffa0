#include "rbmcal/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rbmcal/evaluation.hpp"
#include "rbmcal/io_util.hpp"

namespace rbmcal {

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::cd: return "cd";
        case TrainMode::gibbs: return "gibbs";
        case TrainMode::annealer_calibrated: return "annealer_calibrated";
    }
    return "unknown";
}

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "cd") return TrainMode::cd;
    if (s == "gibbs") return TrainMode::gibbs;
    if (s == "annealer_calibrated" || s == "annealer") return TrainMode::annealer_calibrated;
    throw std::invalid_argument("unknown train mode: " + s);
}

void TrainConfig::validate(int n_data) const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (eta_theta <= 0.0 || eta_beta <= 0.0)
        throw std::invalid_argument("TrainConfig: learning rates must be positive");
    if (cd_k < 1) throw std::invalid_argument("TrainConfig: cd_k must be >= 1");
    if (beta_updates_per_epoch < 1)
        throw std::invalid_argument("TrainConfig: beta_updates_per_epoch must be >= 1");
    if (unified_update_epochs < 0 || unified_update_epochs > epochs)
        throw std::invalid_argument("TrainConfig: unified_update_epochs must lie in [0, epochs]");
    if (beta_inner_iters < 1 || beta_cd_gibbs_steps < 1)
        throw std::invalid_argument("TrainConfig: estimation iteration counts must be >= 1");
    if (annealer_samples_per_epoch == 0)
        throw std::invalid_argument("TrainConfig: annealer_samples_per_epoch must be >= 1");
    if (batch_policy == BatchPolicy::minibatch &&
        (minibatch_size < 1 || minibatch_size > n_data))
        throw std::invalid_argument("TrainConfig: minibatch_size must lie in [1, n_data]");
    if (gibbs_schedule.n_chains < 1 || gibbs_schedule.thinning < 1)
        throw std::invalid_argument("TrainConfig: gibbs schedule counts must be >= 1");
}

std::string train_record_csv(const TrainRecord& record) {
    std::string out = "epoch,kl_data,recon_error,w_norm,b_norm,c_norm\n";
    for (const auto& r : record.rows) {
        out += std::to_string(r.epoch) + "," + fmt_double(r.kl_data) + "," +
               fmt_double(r.recon_error) + "," + fmt_double(r.w_norm) + "," +
               fmt_double(r.b_norm) + "," + fmt_double(r.c_norm) + "\n";
    }
    return out;
}

void save_train_record(const TrainRecord& record, const std::string& path) {
    write_text_file(path, train_record_csv(record));
}

Gradient rbm_gradient(const RbmParams& params, const std::vector<Bits>& data,
                      const SampleSet& negative) {
    if (data.empty()) throw std::invalid_argument("rbm_gradient: empty data");
    if (negative.total_count == 0) throw std::invalid_argument("rbm_gradient: empty negative phase");
    if (negative.n_visible != params.n_visible || negative.n_hidden != params.n_hidden)
        throw std::invalid_argument("rbm_gradient: negative-phase shape mismatch");
    const int n = params.n_visible;
    const int m = params.n_hidden;

    Gradient g;
    g.w.assign(std::size_t(n) * std::size_t(m), 0.0);
    g.b.assign(std::size_t(n), 0.0);
    g.c.assign(std::size_t(m), 0.0);

    for (const auto& v : data) {
        if (int(v.size()) != n) throw std::invalid_argument("rbm_gradient: data width mismatch");
        auto ph = hidden_given_visible(params, v);
        for (int i = 0; i < n; ++i) {
            if (!v[std::size_t(i)]) continue;
            g.b[std::size_t(i)] += 1.0;
            for (int j = 0; j < m; ++j)
                g.w[std::size_t(i) * std::size_t(m) + std::size_t(j)] += ph[std::size_t(j)];
        }
        for (int j = 0; j < m; ++j) g.c[std::size_t(j)] += ph[std::size_t(j)];
    }
    const double nd = double(data.size());
    for (auto& x : g.w) x /= nd;
    for (auto& x : g.b) x /= nd;
    for (auto& x : g.c) x /= nd;

    Moments neg = sample_moments(negative);
    for (std::size_t k = 0; k < g.w.size(); ++k) g.w[k] -= neg.vh[k];
    for (std::size_t k = 0; k < g.b.size(); ++k) g.b[k] -= neg.v[k];
    for (std::size_t k = 0; k < g.c.size(); ++k) g.c[k] -= neg.h[k];
    return g;
}

namespace {

RbmParams init_params(int n_visible, int n_hidden, double w_sigma, std::uint64_t seed) {
    RbmParams p = RbmParams::zeros(n_visible, n_hidden);
    Rng rng(derive_seed(seed, 0x696e6974ULL));
    for (auto& x : p.w) x = rng.normal(0.0, w_sigma);
    return p;
}

double l2_norm(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x * x;
    return std::sqrt(s);
}

// Deterministic mean-field one-step reconstruction error.
double reconstruction_error(const RbmParams& params, const std::vector<Bits>& data) {
    double err = 0.0;
    for (const auto& v : data) {
        auto ph = hidden_given_visible(params, v);
        for (int i = 0; i < params.n_visible; ++i) {
            double a = params.b[std::size_t(i)];
            for (int j = 0; j < params.n_hidden; ++j)
                a += params.weight(i, j) * ph[std::size_t(j)];
            double d = double(v[std::size_t(i)]) - logistic(a);
            err += d * d;
        }
    }
    return err / (double(data.size()) * double(params.n_visible));
}

std::vector<Bits> pick_minibatch(const std::vector<Bits>& data, int size, Rng& rng) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    // Fisher-Yates with our own engine for cross-platform determinism.
    for (std::size_t k = order.size(); k > 1; --k)
        std::swap(order[k - 1], order[std::size_t(rng.below(k))]);
    std::vector<Bits> batch;
    batch.reserve(std::size_t(size));
    for (int k = 0; k < size; ++k) batch.push_back(data[order[std::size_t(k)]]);
    return batch;
}

}  // namespace

TrainResult train(const std::vector<Bits>& data, int n_hidden, const TrainConfig& config,
                  TrainMode mode, const NoiseModel* noise, const EpochCallback& on_epoch) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    config.validate(int(data.size()));
    const int n_visible = int(data.front().size());
    for (const auto& v : data)
        if (int(v.size()) != n_visible)
            throw std::invalid_argument("train: ragged data rows");
    if (mode == TrainMode::annealer_calibrated) {
        if (noise == nullptr)
            throw std::invalid_argument("train: annealer_calibrated mode requires a NoiseModel");
        noise->validate(n_visible, n_hidden);
    }

    TrainResult result;
    result.params = init_params(n_visible, n_hidden, config.init_w_sigma, config.seed);
    BetaSet beta = BetaSet::identity(config.variant, n_visible, n_hidden);

    const bool kl_evaluable = n_visible <= kDefaultEnumerationCapBits;
    EmpiricalDistribution q_data = empirical_visible(data);

    Rng batch_rng(derive_seed(config.seed, 0x6261746368ULL));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();

        std::vector<Bits> batch =
            (config.batch_policy == BatchPolicy::full_batch)
                ? data
                : pick_minibatch(data, config.minibatch_size, batch_rng);

        SampleSet negative;
        switch (mode) {
            case TrainMode::cd:
                negative = cd_negative_phase(result.params, batch, config.cd_k,
                                             derive_seed(config.seed, 0x6e6567ULL,
                                                         std::uint64_t(epoch)));
                break;
            case TrainMode::gibbs:
                negative = gibbs_sample(result.params, config.annealer_samples_per_epoch,
                                        config.gibbs_schedule,
                                        derive_seed(config.seed, 0x6e6567ULL, std::uint64_t(epoch)),
                                        config.threads);
                break;
            case TrainMode::annealer_calibrated: {
                RbmParams programmed = compensate(result.params, beta);
                negative = noisy_annealer_sample(
                    programmed, *noise, config.annealer_samples_per_epoch,
                    derive_seed(config.seed, 0x6e6567ULL, std::uint64_t(epoch)),
                    config.annealer_fidelity, config.gibbs_schedule, kDefaultEnumerationCapBits,
                    config.threads);
                EstimateOptions opts;
                opts.eta_beta = config.eta_beta;
                opts.inner_iters = config.beta_inner_iters;
                opts.cd_gibbs_steps = config.beta_cd_gibbs_steps;
                opts.unified_update = epoch <= config.unified_update_epochs;
                for (int u = 0; u < config.beta_updates_per_epoch; ++u)
                    beta = estimate_beta_step(result.params, negative, beta, opts,
                                              derive_seed(config.seed, 0x62657461ULL,
                                                          std::uint64_t(epoch) * 131 +
                                                              std::uint64_t(u)));
                break;
            }
        }

        Gradient g = rbm_gradient(result.params, batch, negative);
        for (std::size_t k = 0; k < result.params.w.size(); ++k)
            result.params.w[k] += config.eta_theta * (g.w[k] - config.weight_decay * result.params.w[k]);
        for (std::size_t k = 0; k < result.params.b.size(); ++k)
            result.params.b[k] += config.eta_theta * (g.b[k] - config.weight_decay * result.params.b[k]);
        for (std::size_t k = 0; k < result.params.c.size(); ++k)
            result.params.c[k] += config.eta_theta * (g.c[k] - config.weight_decay * result.params.c[k]);

        EpochRecord row;
        row.epoch = epoch;
        row.kl_data = kl_evaluable ? kl_visible(q_data, result.params)
                                   : std::numeric_limits<double>::quiet_NaN();
        row.recon_error = reconstruction_error(result.params, data);
        row.w_norm = l2_norm(result.params.w);
        row.b_norm = l2_norm(result.params.b);
        row.c_norm = l2_norm(result.params.c);
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.record.rows.push_back(row);

        if (mode == TrainMode::annealer_calibrated)
            result.beta_trace.entries.push_back({epoch, beta});
        if (on_epoch) on_epoch(epoch, result.params, beta);
    }
    return result;
}

}  // namespace rbmcal
