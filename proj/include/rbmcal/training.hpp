#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rbmcal/calibration.hpp"
#include "rbmcal/rbm.hpp"
#include "rbmcal/sampling.hpp"

namespace rbmcal {

enum class TrainMode { cd, gibbs, annealer_calibrated };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

enum class BatchPolicy { full_batch, minibatch };

struct TrainConfig {
    int epochs = 1500;
    double eta_theta = 0.05;
    double eta_beta = 0.01;
    BatchPolicy batch_policy = BatchPolicy::full_batch;
    int minibatch_size = 0;          // used when batch_policy == minibatch
    int cd_k = 1;
    int beta_updates_per_epoch = 5;
    int unified_update_epochs = 500;  // collapsed single-scalar rule up to this epoch
    BetaVariant variant = BetaVariant::one_parameter;
    int beta_inner_iters = 3;
    int beta_cd_gibbs_steps = 2;
    std::uint64_t annealer_samples_per_epoch = 1000;
    SamplerFidelity annealer_fidelity = SamplerFidelity::exact;
    GibbsSchedule gibbs_schedule;     // negative-phase schedule for gibbs mode
    double weight_decay = 0.0;
    double init_w_sigma = 0.1;        // theta init: w ~ N(0, sigma), biases 0
    std::uint64_t seed = 0;
    int threads = 1;

    void validate(int n_data) const;
};

struct EpochRecord {
    int epoch = 0;          // 1-based
    double kl_data = 0.0;   // NaN when the model is over the enumeration cap
    double recon_error = 0.0;
    double w_norm = 0.0;
    double b_norm = 0.0;
    double c_norm = 0.0;
    double wall_seconds = 0.0;  // in-memory only; not part of emitted CSV
};

struct TrainRecord {
    std::vector<EpochRecord> rows;
};

// CSV columns: epoch,kl_data,recon_error,w_norm,b_norm,c_norm
std::string train_record_csv(const TrainRecord& record);
void save_train_record(const TrainRecord& record, const std::string& path);

struct Gradient {
    std::vector<double> w, b, c;
};

// Likelihood-ascent direction (pre-learning-rate): data-phase hidden
// statistics use exact conditional probabilities; the negative phase uses the
// raw sample moments.
Gradient rbm_gradient(const RbmParams& params, const std::vector<Bits>& data,
                      const SampleSet& negative);

struct TrainResult {
    RbmParams params;
    TrainRecord record;
    BetaTrace beta_trace;  // empty unless annealer_calibrated
};

// Optional per-epoch hook (checkpointing); called after the epoch update.
using EpochCallback =
    std::function<void(int epoch, const RbmParams& params, const BetaSet& beta)>;

TrainResult train(const std::vector<Bits>& data, int n_hidden, const TrainConfig& config,
                  TrainMode mode, const NoiseModel* noise = nullptr,
                  const EpochCallback& on_epoch = EpochCallback());

}  // namespace rbmcal
