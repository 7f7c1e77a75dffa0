#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbmcal/calibration.hpp"
#include "rbmcal/datasets.hpp"
#include "rbmcal/evaluation.hpp"
#include "rbmcal/sampling.hpp"
#include "rbmcal/training.hpp"

namespace rbmcal {

struct DatasetSpec {
    enum class Kind { bars_and_stripes, file, coarse_grained_images };
    Kind kind = Kind::bars_and_stripes;
    int rows = 3;
    int cols = 4;
    std::string path;
    int target_bits = 12;
    double threshold = 0.5;
};

std::vector<Bits> load_dataset(const DatasetSpec& spec);

struct ExperimentConfig {
    int n_visible = 12;
    int n_hidden = 6;
    DatasetSpec dataset;
    NoiseSpec noise;
    double noise_sigma = 0.5;  // common sigma applied to bias (and gaussian w) draws
    int noise_pool = 1;        // >1 pools samples over several NoiseModel draws
    TrainConfig train;
    std::vector<double> sigma_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<BetaVariant> variants{BetaVariant::one_parameter, BetaVariant::three_parameter,
                                      BetaVariant::one_and_all_bias};
    int repetitions = 10;
    std::string out_dir = "out";
    std::uint64_t master_seed = 1;
    int threads = 1;
    int gibbs_chains_raw = 0;  // 0 = one chain per worker thread
    // Noise-sweep schedule: pre-training and per-cell calibration.
    int pretrain_epochs = 300;
    int pretrain_cd_k = 1;
    double pretrain_eta = 0.1;
    int calib_rounds = 300;
    std::uint64_t calib_batch = 10000;
    double calib_eta = 0.08;
    int calib_warmup_rounds = 50;
    std::uint64_t eval_samples = 1000000;

    void validate() const;
};

// Flat "key = value" config file; '#' starts a comment. Unknown keys error.
ExperimentConfig load_config_file(const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value);
// Canonical serialization of the effective config (sorted keys).
std::string config_canonical(const ExperimentConfig& cfg);
std::string config_digest(const ExperimentConfig& cfg);

// Online estimation schedule against the simulated annealer: fresh batches
// each round; the first warmup_rounds apply the collapsed single-scalar rule
// (fast, well-conditioned) before the per-variant refinement takes over.
struct CalibrationSchedule {
    int rounds = 300;
    std::uint64_t batch = 10000;
    double eta_beta = 0.08;
    int inner_iters = 3;
    int cd_gibbs_steps = 2;
    int warmup_rounds = 50;
};

BetaSet calibrate_against_annealer(const RbmParams& params, const NoiseModel& noise,
                                   BetaVariant variant, const CalibrationSchedule& schedule,
                                   std::uint64_t seed, int noise_pool = 1,
                                   const NoiseSpec* pool_spec = nullptr);

struct SweepCell {
    double sigma = 0.0;
    std::string variant;  // "baseline" or a BetaVariant name
    int rep = 0;
    std::uint64_t seed = 0;
    double kl = 0.0;
};

struct SweepSummaryRow {
    double sigma = 0.0;
    std::string variant;
    int n_reps = 0;
    double kl_mean = 0.0;
    double kl_std = 0.0;
};

struct NoiseSweepResult {
    RbmParams pretrained;
    std::vector<SweepCell> cells;
    std::vector<SweepSummaryRow> summary;
};

// Pre-trains an RBM by CD, then for every sigma x variant x repetition builds
// a NoiseModel, calibrates online, draws calibrated samples and records the
// joint KL to the clean model; baseline cells sample the clean model directly.
NoiseSweepResult run_noise_sweep(const ExperimentConfig& cfg, bool write_outputs = true);

struct TrainingComparisonResult {
    std::vector<std::string> scheme_names;  // cd, gibbs, one_parameter, ...
    std::vector<TrainResult> runs;
    std::vector<double> min_kl;
    std::vector<int> min_kl_epoch;
};

// Five matched-seed training runs: cd, gibbs, and the calibrated annealer
// under each variant, against one shared NoiseModel draw.
TrainingComparisonResult run_training_comparison(const ExperimentConfig& cfg,
                                                 bool write_outputs = true);

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rbmcal
