#include "rbmcal/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "rbmcal/io_util.hpp"
#include "json.hpp"

namespace rbmcal {

namespace {

constexpr std::uint64_t kStreamPretrain = 0x7072657472ULL;
constexpr std::uint64_t kStreamNoise = 0x6e6f697365ULL;
constexpr std::uint64_t kStreamTrain = 0x747261696eULL;
constexpr std::uint64_t kStreamCell = 0x63656c6cULL;

std::string dataset_kind_name(DatasetSpec::Kind kind) {
    switch (kind) {
        case DatasetSpec::Kind::bars_and_stripes: return "bars_and_stripes";
        case DatasetSpec::Kind::file: return "file";
        case DatasetSpec::Kind::coarse_grained_images: return "coarse_grained_images";
    }
    return "unknown";
}

DatasetSpec::Kind dataset_kind_from_string(const std::string& s) {
    if (s == "bars_and_stripes") return DatasetSpec::Kind::bars_and_stripes;
    if (s == "file") return DatasetSpec::Kind::file;
    if (s == "coarse_grained_images") return DatasetSpec::Kind::coarse_grained_images;
    throw std::invalid_argument("unknown dataset kind: " + s);
}

int to_int(const std::string& v, const std::string& key) {
    try {
        return std::stoi(v);
    } catch (...) {
        throw std::invalid_argument("config: bad integer for " + key + ": " + v);
    }
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
    try {
        return std::stoull(v);
    } catch (...) {
        throw std::invalid_argument("config: bad integer for " + key + ": " + v);
    }
}

double to_double(const std::string& v, const std::string& key) {
    try {
        return std::stod(v);
    } catch (...) {
        throw std::invalid_argument("config: bad number for " + key + ": " + v);
    }
}

std::vector<std::string> split_csv(const std::string& v) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : v) {
        if (ch == ',') {
            parts.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur += ch;
        }
    }
    if (!cur.empty() || !parts.empty()) parts.push_back(cur);
    return parts;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / double(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / double(xs.size() - 1));
}

SampleSet merge_sample_sets(const std::vector<SampleSet>& sets, SourceTag tag,
                            std::uint64_t seed) {
    std::map<std::uint64_t, std::uint64_t> acc;
    std::uint64_t total = 0;
    for (const auto& s : sets) {
        for (const auto& [idx, cnt] : s.counts) acc[idx] += cnt;
        total += s.total_count;
    }
    SampleSet out;
    out.n_visible = sets.front().n_visible;
    out.n_hidden = sets.front().n_hidden;
    out.source = tag;
    out.seed = seed;
    out.counts.assign(acc.begin(), acc.end());
    out.total_count = total;
    return out;
}

// Draws n_samples from the simulated annealer, optionally pooled over several
// NoiseModel realizations (equal shares, deterministic merge).
SampleSet annealer_batch(const RbmParams& programmed, const std::vector<NoiseModel>& models,
                         std::uint64_t n_samples, std::uint64_t seed) {
    if (models.size() == 1)
        return noisy_annealer_sample(programmed, models[0], n_samples, seed);
    std::vector<SampleSet> parts;
    parts.reserve(models.size());
    const std::uint64_t pool = models.size();
    for (std::uint64_t k = 0; k < pool; ++k) {
        std::uint64_t share = n_samples / pool + (k < n_samples % pool ? 1 : 0);
        if (share == 0) continue;
        parts.push_back(
            noisy_annealer_sample(programmed, models[std::size_t(k)], share, derive_seed(seed, k)));
    }
    return merge_sample_sets(parts, SourceTag::noisy_annealer, seed);
}

}  // namespace

std::vector<Bits> load_dataset(const DatasetSpec& spec) {
    switch (spec.kind) {
        case DatasetSpec::Kind::bars_and_stripes:
            return generate_bars_and_stripes(spec.rows, spec.cols);
        case DatasetSpec::Kind::file: return ingest_binary_vectors(spec.path);
        case DatasetSpec::Kind::coarse_grained_images:
            return coarse_grain_images(spec.path, spec.target_bits, spec.threshold);
    }
    throw std::invalid_argument("unknown dataset kind");
}

void ExperimentConfig::validate() const {
    if (n_visible < 1 || n_hidden < 1)
        throw std::invalid_argument("config: unit counts must be positive");
    if (sigma_grid.empty()) throw std::invalid_argument("config: sigma_grid must be non-empty");
    if (variants.empty()) throw std::invalid_argument("config: variants must be non-empty");
    if (repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    if (noise_pool < 1) throw std::invalid_argument("config: noise_pool must be >= 1");
    if (calib_rounds < 1 || calib_batch == 0 || calib_eta <= 0.0 || calib_warmup_rounds < 0)
        throw std::invalid_argument("config: calibration schedule must be positive");
    if (eval_samples == 0) throw std::invalid_argument("config: eval_samples must be >= 1");
    if (pretrain_epochs < 1 || pretrain_cd_k < 1 || pretrain_eta <= 0.0)
        throw std::invalid_argument("config: pretraining schedule must be positive");
    if (noise_sigma < 0.0) throw std::invalid_argument("config: noise_sigma must be >= 0");
}

void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "n_visible") cfg.n_visible = to_int(value, key);
    else if (key == "n_hidden") cfg.n_hidden = to_int(value, key);
    else if (key == "dataset_kind") cfg.dataset.kind = dataset_kind_from_string(value);
    else if (key == "dataset_rows") cfg.dataset.rows = to_int(value, key);
    else if (key == "dataset_cols") cfg.dataset.cols = to_int(value, key);
    else if (key == "dataset_path") cfg.dataset.path = value;
    else if (key == "dataset_target_bits") cfg.dataset.target_bits = to_int(value, key);
    else if (key == "dataset_threshold") cfg.dataset.threshold = to_double(value, key);
    else if (key == "noise_w_mode")
        cfg.noise.w_mode = (value == "gaussian") ? NoiseKind::gaussian : NoiseKind::constant;
    else if (key == "noise_w_mean") cfg.noise.w_mean = to_double(value, key);
    else if (key == "noise_b_mean") cfg.noise.b_mean = to_double(value, key);
    else if (key == "noise_c_mean") cfg.noise.c_mean = to_double(value, key);
    else if (key == "noise_sigma") cfg.noise_sigma = to_double(value, key);
    else if (key == "noise_pool") cfg.noise_pool = to_int(value, key);
    else if (key == "epochs") cfg.train.epochs = to_int(value, key);
    else if (key == "eta_theta") cfg.train.eta_theta = to_double(value, key);
    else if (key == "eta_beta") cfg.train.eta_beta = to_double(value, key);
    else if (key == "batch_policy")
        cfg.train.batch_policy =
            (value == "minibatch") ? BatchPolicy::minibatch : BatchPolicy::full_batch;
    else if (key == "minibatch_size") cfg.train.minibatch_size = to_int(value, key);
    else if (key == "cd_k") cfg.train.cd_k = to_int(value, key);
    else if (key == "beta_updates_per_epoch") cfg.train.beta_updates_per_epoch = to_int(value, key);
    else if (key == "unified_update_epochs") cfg.train.unified_update_epochs = to_int(value, key);
    else if (key == "variant") cfg.train.variant = beta_variant_from_string(value);
    else if (key == "beta_inner_iters") cfg.train.beta_inner_iters = to_int(value, key);
    else if (key == "beta_cd_gibbs_steps") cfg.train.beta_cd_gibbs_steps = to_int(value, key);
    else if (key == "annealer_samples_per_epoch")
        cfg.train.annealer_samples_per_epoch = to_u64(value, key);
    else if (key == "annealer_fidelity")
        cfg.train.annealer_fidelity =
            (value == "gibbs") ? SamplerFidelity::gibbs : SamplerFidelity::exact;
    else if (key == "gibbs_burn_in") cfg.train.gibbs_schedule.burn_in = to_u64(value, key);
    else if (key == "gibbs_thinning") cfg.train.gibbs_schedule.thinning = to_u64(value, key);
    else if (key == "gibbs_chains") cfg.gibbs_chains_raw = to_int(value, key);
    else if (key == "weight_decay") cfg.train.weight_decay = to_double(value, key);
    else if (key == "init_w_sigma") cfg.train.init_w_sigma = to_double(value, key);
    else if (key == "master_seed") cfg.master_seed = to_u64(value, key);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "threads") cfg.threads = to_int(value, key);
    else if (key == "repetitions") cfg.repetitions = to_int(value, key);
    else if (key == "sigma_grid") {
        cfg.sigma_grid.clear();
        for (const auto& part : split_csv(value)) cfg.sigma_grid.push_back(to_double(part, key));
    } else if (key == "variants") {
        cfg.variants.clear();
        for (const auto& part : split_csv(value))
            cfg.variants.push_back(beta_variant_from_string(part));
    } else if (key == "pretrain_epochs") cfg.pretrain_epochs = to_int(value, key);
    else if (key == "pretrain_cd_k") cfg.pretrain_cd_k = to_int(value, key);
    else if (key == "pretrain_eta") cfg.pretrain_eta = to_double(value, key);
    else if (key == "calib_rounds") cfg.calib_rounds = to_int(value, key);
    else if (key == "calib_warmup_rounds") cfg.calib_warmup_rounds = to_int(value, key);
    else if (key == "calib_batch") cfg.calib_batch = to_u64(value, key);
    else if (key == "calib_eta") cfg.calib_eta = to_double(value, key);
    else if (key == "eval_samples") cfg.eval_samples = to_u64(value, key);
    else
        throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig load_config_file(const std::string& path) {
    ExperimentConfig cfg;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + " line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

std::string config_canonical(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv;
    auto add = [&](const std::string& k, const std::string& v) { kv.emplace_back(k, v); };
    add("annealer_fidelity",
        cfg.train.annealer_fidelity == SamplerFidelity::exact ? "exact" : "gibbs");
    add("annealer_samples_per_epoch", std::to_string(cfg.train.annealer_samples_per_epoch));
    add("batch_policy",
        cfg.train.batch_policy == BatchPolicy::full_batch ? "full_batch" : "minibatch");
    add("beta_cd_gibbs_steps", std::to_string(cfg.train.beta_cd_gibbs_steps));
    add("beta_inner_iters", std::to_string(cfg.train.beta_inner_iters));
    add("beta_updates_per_epoch", std::to_string(cfg.train.beta_updates_per_epoch));
    add("calib_batch", std::to_string(cfg.calib_batch));
    add("calib_eta", fmt_double(cfg.calib_eta));
    add("calib_rounds", std::to_string(cfg.calib_rounds));
    add("calib_warmup_rounds", std::to_string(cfg.calib_warmup_rounds));
    add("cd_k", std::to_string(cfg.train.cd_k));
    add("dataset_cols", std::to_string(cfg.dataset.cols));
    add("dataset_kind", dataset_kind_name(cfg.dataset.kind));
    add("dataset_path", cfg.dataset.path);
    add("dataset_rows", std::to_string(cfg.dataset.rows));
    add("dataset_target_bits", std::to_string(cfg.dataset.target_bits));
    add("dataset_threshold", fmt_double(cfg.dataset.threshold));
    add("epochs", std::to_string(cfg.train.epochs));
    add("eta_beta", fmt_double(cfg.train.eta_beta));
    add("eta_theta", fmt_double(cfg.train.eta_theta));
    add("eval_samples", std::to_string(cfg.eval_samples));
    add("gibbs_burn_in", std::to_string(cfg.train.gibbs_schedule.burn_in));
    add("gibbs_chains", std::to_string(cfg.gibbs_chains_raw));
    add("gibbs_thinning", std::to_string(cfg.train.gibbs_schedule.thinning));
    add("init_w_sigma", fmt_double(cfg.train.init_w_sigma));
    add("master_seed", std::to_string(cfg.master_seed));
    add("minibatch_size", std::to_string(cfg.train.minibatch_size));
    add("n_hidden", std::to_string(cfg.n_hidden));
    add("n_visible", std::to_string(cfg.n_visible));
    add("noise_b_mean", fmt_double(cfg.noise.b_mean));
    add("noise_c_mean", fmt_double(cfg.noise.c_mean));
    add("noise_pool", std::to_string(cfg.noise_pool));
    add("noise_sigma", fmt_double(cfg.noise_sigma));
    add("noise_w_mean", fmt_double(cfg.noise.w_mean));
    add("noise_w_mode", cfg.noise.w_mode == NoiseKind::constant ? "constant" : "gaussian");
    add("out_dir", cfg.out_dir);
    add("pretrain_cd_k", std::to_string(cfg.pretrain_cd_k));
    add("pretrain_epochs", std::to_string(cfg.pretrain_epochs));
    add("pretrain_eta", fmt_double(cfg.pretrain_eta));
    add("repetitions", std::to_string(cfg.repetitions));
    {
        std::vector<std::string> parts;
        for (double s : cfg.sigma_grid) parts.push_back(fmt_double(s));
        add("sigma_grid", join(parts, ","));
    }
    add("threads", std::to_string(cfg.threads));
    add("unified_update_epochs", std::to_string(cfg.train.unified_update_epochs));
    add("variant", to_string(cfg.train.variant));
    {
        std::vector<std::string> parts;
        for (auto v : cfg.variants) parts.push_back(to_string(v));
        add("variants", join(parts, ","));
    }
    add("weight_decay", fmt_double(cfg.train.weight_decay));
    std::sort(kv.begin(), kv.end());
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::string config_digest(const ExperimentConfig& cfg) {
    std::string canon = config_canonical(cfg);
    return hex64(fnv1a(canon.data(), canon.size()));
}

BetaSet calibrate_against_annealer(const RbmParams& params, const NoiseModel& noise,
                                   BetaVariant variant, const CalibrationSchedule& schedule,
                                   std::uint64_t seed, int noise_pool,
                                   const NoiseSpec* pool_spec) {
    std::vector<NoiseModel> models;
    if (noise_pool > 1) {
        if (pool_spec == nullptr)
            throw std::invalid_argument("calibrate_against_annealer: pooling needs a NoiseSpec");
        for (int k = 0; k < noise_pool; ++k) {
            NoiseSpec spec = *pool_spec;
            spec.seed = derive_seed(pool_spec->seed, 0x706f6f6cULL, std::uint64_t(k));
            models.push_back(make_noise_model(spec, params.n_visible, params.n_hidden));
        }
    } else {
        models.push_back(noise);
    }

    auto frozen = frozen_components(params, variant);
    if (!frozen.empty())
        std::cerr << "note: calibration components with identically-zero gradient: "
                  << join(frozen, ", ") << "\n";

    BetaSet beta = BetaSet::identity(variant, params.n_visible, params.n_hidden);
    EstimateOptions opts;
    opts.eta_beta = schedule.eta_beta;
    opts.inner_iters = schedule.inner_iters;
    opts.cd_gibbs_steps = schedule.cd_gibbs_steps;
    for (int r = 0; r < schedule.rounds; ++r) {
        opts.unified_update = r < schedule.warmup_rounds;
        RbmParams programmed = compensate(params, beta);
        SampleSet s = annealer_batch(programmed, models, schedule.batch,
                                     derive_seed(seed, 0x726f756e64ULL, std::uint64_t(r)));
        beta = estimate_beta_step(params, s, beta, opts,
                                  derive_seed(seed, 0x73746570ULL, std::uint64_t(r)));
    }
    return beta;
}

namespace {

RbmParams pretrain_by_cd(const ExperimentConfig& cfg, const std::vector<Bits>& data) {
    TrainConfig tc;
    tc.epochs = cfg.pretrain_epochs;
    tc.eta_theta = cfg.pretrain_eta;
    tc.cd_k = cfg.pretrain_cd_k;
    tc.init_w_sigma = cfg.train.init_w_sigma;
    tc.unified_update_epochs = 0;
    tc.seed = derive_seed(cfg.master_seed, kStreamPretrain);
    tc.threads = 1;
    return train(data, cfg.n_hidden, tc, TrainMode::cd).params;
}

}  // namespace

NoiseSweepResult run_noise_sweep(const ExperimentConfig& cfg, bool write_outputs) {
    cfg.validate();
    const std::string digest = config_digest(cfg);
    auto data = load_dataset(cfg.dataset);
    if (data.empty()) throw std::invalid_argument("run_noise_sweep: empty dataset");
    if (int(data.front().size()) != cfg.n_visible)
        throw std::invalid_argument("run_noise_sweep: dataset width != n_visible");

    NoiseSweepResult result;
    result.pretrained = pretrain_by_cd(cfg, data);
    const ExactDistribution clean = exact_distribution(result.pretrained);

    // Cell plan: baseline repetitions first, then sigma x variant x rep.
    struct Plan {
        double sigma;
        int variant_idx;  // -1 = baseline
        int rep;
    };
    std::vector<Plan> plan;
    for (int rep = 0; rep < cfg.repetitions; ++rep) plan.push_back({0.0, -1, rep});
    for (double sigma : cfg.sigma_grid)
        for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi)
            for (int rep = 0; rep < cfg.repetitions; ++rep)
                plan.push_back({sigma, int(vi), rep});

    result.cells.resize(plan.size());
    parallel_for(plan.size(), cfg.threads, [&](std::size_t ci) {
        const Plan& pl = plan[ci];
        const std::uint64_t cell_seed = derive_seed(cfg.master_seed, kStreamCell, ci);
        SweepCell cell;
        cell.sigma = pl.sigma;
        cell.rep = pl.rep;
        cell.seed = cell_seed;
        if (pl.variant_idx < 0) {
            cell.variant = "baseline";
            SampleSet s = exact_sample(clean, cfg.eval_samples, derive_seed(cell_seed, 3));
            cell.kl = kl_joint(empirical_from_samples(s), clean);
        } else {
            BetaVariant variant = cfg.variants[std::size_t(pl.variant_idx)];
            cell.variant = to_string(variant);
            NoiseSpec spec = cfg.noise;
            spec.b_sigma = pl.sigma;
            spec.c_sigma = pl.sigma;
            spec.w_sigma = (spec.w_mode == NoiseKind::gaussian) ? pl.sigma : 0.0;
            spec.seed = derive_seed(cell_seed, 1);
            NoiseModel noise = make_noise_model(spec, cfg.n_visible, cfg.n_hidden);
            CalibrationSchedule schedule;
            schedule.rounds = cfg.calib_rounds;
            schedule.batch = cfg.calib_batch;
            schedule.eta_beta = cfg.calib_eta;
            schedule.inner_iters = cfg.train.beta_inner_iters;
            schedule.cd_gibbs_steps = cfg.train.beta_cd_gibbs_steps;
            schedule.warmup_rounds = cfg.calib_warmup_rounds;
            BetaSet beta = calibrate_against_annealer(result.pretrained, noise, variant, schedule,
                                                      derive_seed(cell_seed, 2), cfg.noise_pool,
                                                      &spec);
            std::vector<NoiseModel> models;
            if (cfg.noise_pool > 1) {
                for (int k = 0; k < cfg.noise_pool; ++k) {
                    NoiseSpec ps = spec;
                    ps.seed = derive_seed(spec.seed, 0x706f6f6cULL, std::uint64_t(k));
                    models.push_back(make_noise_model(ps, cfg.n_visible, cfg.n_hidden));
                }
            } else {
                models.push_back(noise);
            }
            SampleSet s = annealer_batch(compensate(result.pretrained, beta), models,
                                         cfg.eval_samples, derive_seed(cell_seed, 3));
            cell.kl = kl_joint(empirical_from_samples(s), clean);
        }
        result.cells[ci] = cell;
    });

    // Mean +- std per (sigma, variant); baseline first.
    auto summarize = [&](const std::string& variant, double sigma) {
        std::vector<double> kls;
        for (const auto& cell : result.cells)
            if (cell.variant == variant && cell.sigma == sigma) kls.push_back(cell.kl);
        SweepSummaryRow row;
        row.sigma = sigma;
        row.variant = variant;
        row.n_reps = int(kls.size());
        row.kl_mean = mean_of(kls);
        row.kl_std = sample_std(kls);
        return row;
    };
    result.summary.push_back(summarize("baseline", 0.0));
    for (double sigma : cfg.sigma_grid)
        for (auto v : cfg.variants) result.summary.push_back(summarize(to_string(v), sigma));

    if (write_outputs) {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.out_dir);
        std::string cells_csv = "sigma,variant,rep,seed,config_digest,kl\n";
        for (const auto& cell : result.cells)
            cells_csv += fmt_double(cell.sigma) + "," + cell.variant + "," +
                         std::to_string(cell.rep) + "," + std::to_string(cell.seed) + "," +
                         digest + "," + fmt_double(cell.kl) + "\n";
        write_text_file(cfg.out_dir + "/noise_sweep_cells.csv", cells_csv);

        std::string summary_csv = "sigma,variant,n_reps,kl_mean,kl_std,config_digest\n";
        for (const auto& row : result.summary)
            summary_csv += fmt_double(row.sigma) + "," + row.variant + "," +
                           std::to_string(row.n_reps) + "," + fmt_double(row.kl_mean) + "," +
                           fmt_double(row.kl_std) + "," + digest + "\n";
        write_text_file(cfg.out_dir + "/noise_sweep.csv", summary_csv);
        save_params(result.pretrained, cfg.out_dir + "/pretrained_params.json");
        write_manifest(cfg, "sweep-noise",
                       {"noise_sweep.csv", "noise_sweep_cells.csv", "pretrained_params.json"});
    }
    return result;
}

TrainingComparisonResult run_training_comparison(const ExperimentConfig& cfg, bool write_outputs) {
    cfg.validate();
    const std::string digest = config_digest(cfg);
    auto data = load_dataset(cfg.dataset);
    if (data.empty()) throw std::invalid_argument("run_training_comparison: empty dataset");
    if (int(data.front().size()) != cfg.n_visible)
        throw std::invalid_argument("run_training_comparison: dataset width != n_visible");

    NoiseSpec spec = cfg.noise;
    spec.b_sigma = cfg.noise_sigma;
    spec.c_sigma = cfg.noise_sigma;
    spec.w_sigma = (spec.w_mode == NoiseKind::gaussian) ? cfg.noise_sigma : 0.0;
    spec.seed = derive_seed(cfg.master_seed, kStreamNoise);
    NoiseModel noise = make_noise_model(spec, cfg.n_visible, cfg.n_hidden);

    TrainingComparisonResult result;
    result.scheme_names.push_back("cd");
    result.scheme_names.push_back("gibbs");
    for (auto v : cfg.variants) result.scheme_names.push_back(to_string(v));
    result.runs.resize(result.scheme_names.size());

    TrainConfig base = cfg.train;
    base.seed = derive_seed(cfg.master_seed, kStreamTrain);  // matched across schemes
    base.threads = 1;  // runs are the parallel axis
    base.gibbs_schedule.n_chains =
        cfg.gibbs_chains_raw > 0 ? cfg.gibbs_chains_raw : std::max(1, cfg.threads);

    parallel_for(result.scheme_names.size(), cfg.threads, [&](std::size_t ri) {
        TrainConfig tc = base;
        if (ri == 0) {
            result.runs[ri] = train(data, cfg.n_hidden, tc, TrainMode::cd);
        } else if (ri == 1) {
            result.runs[ri] = train(data, cfg.n_hidden, tc, TrainMode::gibbs);
        } else {
            tc.variant = cfg.variants[ri - 2];
            result.runs[ri] =
                train(data, cfg.n_hidden, tc, TrainMode::annealer_calibrated, &noise);
        }
    });

    for (const auto& run : result.runs) {
        double best = std::numeric_limits<double>::infinity();
        int best_epoch = 0;
        for (const auto& row : run.record.rows) {
            if (row.kl_data < best) {
                best = row.kl_data;
                best_epoch = row.epoch;
            }
        }
        result.min_kl.push_back(best);
        result.min_kl_epoch.push_back(best_epoch);
    }

    if (write_outputs) {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.out_dir);
        std::vector<std::string> outputs;
        for (std::size_t ri = 0; ri < result.runs.size(); ++ri) {
            const std::string& name = result.scheme_names[ri];
            save_train_record(result.runs[ri].record, cfg.out_dir + "/train_record_" + name + ".csv");
            save_params(result.runs[ri].params, cfg.out_dir + "/params_" + name + ".json");
            outputs.push_back("train_record_" + name + ".csv");
            outputs.push_back("params_" + name + ".json");
            if (!result.runs[ri].beta_trace.entries.empty()) {
                save_beta_trace(result.runs[ri].beta_trace,
                                cfg.out_dir + "/beta_trace_" + name + ".csv");
                outputs.push_back("beta_trace_" + name + ".csv");
            }
        }
        std::string summary = "scheme,min_kl,min_kl_epoch,seed,config_digest\n";
        for (std::size_t ri = 0; ri < result.runs.size(); ++ri)
            summary += result.scheme_names[ri] + "," + fmt_double(result.min_kl[ri]) + "," +
                       std::to_string(result.min_kl_epoch[ri]) + "," +
                       std::to_string(base.seed) + "," + digest + "\n";
        write_text_file(cfg.out_dir + "/training_comparison.csv", summary);
        outputs.push_back("training_comparison.csv");
        write_manifest(cfg, "train --compare", outputs);
    }
    return result;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["config_digest"] = config_digest(cfg);
    j["master_seed"] = cfg.master_seed;
    j["outputs"] = outputs;
    write_text_file(cfg.out_dir + "/manifest.json", j.dump(2) + "\n");
}

}  // namespace rbmcal
