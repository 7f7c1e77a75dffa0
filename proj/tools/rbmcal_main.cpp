// Experiment CLI: train / sweep-noise / sample / evaluate / gen-data.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rbmcal/experiments.hpp"
#include "rbmcal/io_util.hpp"

namespace fs = std::filesystem;
using namespace rbmcal;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
};

ExperimentConfig effective_config(const GlobalFlags& flags) {
    ExperimentConfig cfg;
    if (!flags.config_path.empty()) cfg = load_config_file(flags.config_path);
    if (flags.seed) cfg.master_seed = *flags.seed;
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.threads) cfg.threads = *flags.threads;
    cfg.validate();
    return cfg;
}

void add_global_flags(CLI::App* cmd, GlobalFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config file (key = value lines)");
    cmd->add_option("--seed", flags.seed, "master seed override");
    cmd->add_option("--out", flags.out_dir, "output directory override");
    cmd->add_option("--threads", flags.threads, "worker thread count override");
}

TrainConfig resolved_train_config(const ExperimentConfig& cfg) {
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.master_seed, 0x747261696eULL);
    tc.threads = cfg.threads;
    tc.gibbs_schedule.n_chains =
        cfg.gibbs_chains_raw > 0 ? cfg.gibbs_chains_raw : std::max(1, cfg.threads);
    return tc;
}

int cmd_gen_data(const ExperimentConfig& cfg) {
    auto data = load_dataset(cfg.dataset);
    fs::create_directories(cfg.out_dir);
    const std::string path = cfg.out_dir + "/dataset.txt";
    write_binary_vectors(data, path);
    write_manifest(cfg, "gen-data", {"dataset.txt"});
    std::cout << "wrote " << data.size() << " vectors to " << path << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& mode_name, bool compare,
              int checkpoint_interval) {
    if (compare) {
        auto result = run_training_comparison(cfg);
        for (std::size_t ri = 0; ri < result.scheme_names.size(); ++ri)
            std::cout << result.scheme_names[ri] << ": min KL " << fmt_double(result.min_kl[ri])
                      << " at epoch " << result.min_kl_epoch[ri] << "\n";
        return 0;
    }
    auto data = load_dataset(cfg.dataset);
    TrainMode mode = train_mode_from_string(mode_name);
    TrainConfig tc = resolved_train_config(cfg);
    fs::create_directories(cfg.out_dir);

    std::optional<NoiseModel> noise;
    if (mode == TrainMode::annealer_calibrated) {
        NoiseSpec spec = cfg.noise;
        spec.b_sigma = cfg.noise_sigma;
        spec.c_sigma = cfg.noise_sigma;
        spec.w_sigma = (spec.w_mode == NoiseKind::gaussian) ? cfg.noise_sigma : 0.0;
        spec.seed = derive_seed(cfg.master_seed, 0x6e6f697365ULL);
        noise = make_noise_model(spec, cfg.n_visible, cfg.n_hidden);
    }

    EpochCallback on_epoch;
    if (checkpoint_interval > 0) {
        on_epoch = [&cfg, checkpoint_interval, mode](int epoch, const RbmParams& params,
                                                     const BetaSet& beta) {
            if (epoch % checkpoint_interval != 0) return;
            const std::string stem = cfg.out_dir + "/checkpoint_" + std::to_string(epoch);
            save_params(params, stem + "_params.json");
            if (mode == TrainMode::annealer_calibrated) save_beta(beta, stem + "_beta.json");
        };
    }

    auto result = train(data, cfg.n_hidden, tc, mode, noise ? &*noise : nullptr, on_epoch);
    const std::string name = to_string(mode);
    save_train_record(result.record, cfg.out_dir + "/train_record_" + name + ".csv");
    save_params(result.params, cfg.out_dir + "/params_" + name + ".json");
    std::vector<std::string> outputs{"train_record_" + name + ".csv", "params_" + name + ".json"};
    if (!result.beta_trace.entries.empty()) {
        save_beta_trace(result.beta_trace, cfg.out_dir + "/beta_trace_" + name + ".csv");
        save_beta(result.beta_trace.entries.back().beta, cfg.out_dir + "/beta_" + name + ".json");
        outputs.push_back("beta_trace_" + name + ".csv");
        outputs.push_back("beta_" + name + ".json");
    }
    write_manifest(cfg, "train --mode " + name, outputs);

    double wall = 0.0, best = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    for (const auto& row : result.record.rows) {
        wall += row.wall_seconds;
        if (row.kl_data < best) {
            best = row.kl_data;
            best_epoch = row.epoch;
        }
    }
    std::cout << name << ": " << result.record.rows.size() << " epochs in " << fmt_double(wall)
              << " s, min KL " << fmt_double(best) << " at epoch " << best_epoch << "\n";
    return 0;
}

int cmd_sweep_noise(const ExperimentConfig& cfg) {
    auto result = run_noise_sweep(cfg);
    for (const auto& row : result.summary)
        std::cout << "sigma=" << fmt_double(row.sigma) << " " << row.variant << ": KL "
                  << fmt_double(row.kl_mean) << " +- " << fmt_double(row.kl_std) << " (n="
                  << row.n_reps << ")\n";
    return 0;
}

int cmd_sample(const ExperimentConfig& cfg, const std::string& params_path,
               const std::string& beta_path, std::uint64_t n_samples, bool with_noise,
               const std::string& fidelity) {
    RbmParams params = load_params(params_path);
    fs::create_directories(cfg.out_dir);
    RbmParams programmed = params;
    if (!beta_path.empty()) programmed = compensate(params, load_beta(beta_path));

    SampleSet s;
    const std::uint64_t seed = derive_seed(cfg.master_seed, 0x73616d706cULL);
    if (with_noise) {
        NoiseSpec spec = cfg.noise;
        spec.b_sigma = cfg.noise_sigma;
        spec.c_sigma = cfg.noise_sigma;
        spec.w_sigma = (spec.w_mode == NoiseKind::gaussian) ? cfg.noise_sigma : 0.0;
        spec.seed = derive_seed(cfg.master_seed, 0x6e6f697365ULL);
        NoiseModel noise = make_noise_model(spec, params.n_visible, params.n_hidden);
        s = noisy_annealer_sample(programmed, noise, n_samples, seed,
                                  fidelity == "gibbs" ? SamplerFidelity::gibbs
                                                      : SamplerFidelity::exact,
                                  cfg.train.gibbs_schedule, kDefaultEnumerationCapBits,
                                  cfg.threads);
    } else if (fidelity == "gibbs") {
        GibbsSchedule schedule = cfg.train.gibbs_schedule;
        schedule.n_chains =
            cfg.gibbs_chains_raw > 0 ? cfg.gibbs_chains_raw : std::max(1, cfg.threads);
        s = gibbs_sample(programmed, n_samples, schedule, seed, cfg.threads);
    } else {
        s = exact_sample(exact_distribution(programmed), n_samples, seed);
    }
    const std::string path = cfg.out_dir + "/samples.txt";
    save_samples(s, path);
    write_manifest(cfg, "sample", {"samples.txt"});
    std::cout << "wrote " << s.total_count << " samples to " << path << "\n";
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& params_path,
                 const std::vector<std::string>& sample_paths, int bins) {
    RbmParams params = load_params(params_path);
    fs::create_directories(cfg.out_dir);

    std::vector<SampleSet> sets;
    std::vector<std::string> tags;
    for (const auto& path : sample_paths) {
        sets.push_back(load_samples(path));
        tags.push_back(to_string(sets.back().source));
    }
    auto clean = exact_distribution(params);

    std::vector<MetricRecord> metrics;
    for (std::size_t k = 0; k < sets.size(); ++k) {
        MetricRecord rec;
        rec.metric = "kl_joint";
        rec.value = kl_joint(empirical_from_samples(sets[k]), clean);
        rec.n_samples = sets[k].total_count;
        rec.seed = sets[k].seed;
        rec.variant = tags[k];
        metrics.push_back(rec);
    }
    write_text_file(cfg.out_dir + "/metrics.json", metrics_json(metrics));

    std::vector<const SampleSet*> set_ptrs;
    for (const auto& s : sets) set_ptrs.push_back(&s);
    std::vector<std::vector<EnergyHistogram>> hists;
    if (sets.size() > 1) {
        hists = energy_histograms_shared(params, set_ptrs);
    } else {
        hists.push_back(energy_histograms(params, sets.front(), bins));
    }
    write_text_file(cfg.out_dir + "/histograms.csv", histograms_csv(hists, tags));
    write_manifest(cfg, "evaluate", {"metrics.json", "histograms.csv"});
    for (const auto& rec : metrics)
        std::cout << rec.metric << " (" << rec.variant << ", n=" << rec.n_samples
                  << "): " << fmt_double(rec.value) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RBM training with simulated-annealer sampling and online calibration"};
    app.require_subcommand(1);

    GlobalFlags flags;

    auto* train_cmd = app.add_subcommand("train", "train an RBM (or compare all schemes)");
    add_global_flags(train_cmd, flags);
    std::string mode_name = "cd";
    bool compare = false;
    int checkpoint_interval = 0;
    train_cmd->add_option("--mode", mode_name, "cd | gibbs | annealer_calibrated");
    train_cmd->add_flag("--compare", compare, "run cd, gibbs and all calibrated variants");
    train_cmd->add_option("--checkpoint-interval", checkpoint_interval,
                          "write params/beta checkpoints every N epochs (0 = off)");

    auto* sweep_cmd = app.add_subcommand("sweep-noise", "KL vs noise-strength study");
    add_global_flags(sweep_cmd, flags);

    auto* sample_cmd = app.add_subcommand("sample", "draw samples from a saved model");
    add_global_flags(sample_cmd, flags);
    std::string params_path, beta_path, fidelity = "exact";
    std::uint64_t n_samples = 100000;
    bool with_noise = false;
    sample_cmd->add_option("--params", params_path, "RbmParams JSON file")->required();
    sample_cmd->add_option("--beta", beta_path, "BetaSet JSON; samples through compensation");
    sample_cmd->add_option("--n", n_samples, "number of samples");
    sample_cmd->add_flag("--with-noise", with_noise, "sample through the simulated annealer");
    sample_cmd->add_option("--fidelity", fidelity, "exact | gibbs");

    auto* eval_cmd = app.add_subcommand("evaluate", "KL and energy histograms for sample files");
    add_global_flags(eval_cmd, flags);
    std::string eval_params;
    std::vector<std::string> eval_samples;
    int bins = 32;
    eval_cmd->add_option("--params", eval_params, "RbmParams JSON file")->required();
    eval_cmd->add_option("--samples", eval_samples, "sample file(s)")->required();
    eval_cmd->add_option("--bins", bins, "bin count for single-set histograms");

    auto* gen_cmd = app.add_subcommand("gen-data", "generate or convert a dataset");
    add_global_flags(gen_cmd, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = effective_config(flags);
        if (app.got_subcommand(train_cmd))
            return cmd_train(cfg, mode_name, compare, checkpoint_interval);
        if (app.got_subcommand(sweep_cmd)) return cmd_sweep_noise(cfg);
        if (app.got_subcommand(sample_cmd))
            return cmd_sample(cfg, params_path, beta_path, n_samples, with_noise, fidelity);
        if (app.got_subcommand(eval_cmd)) return cmd_evaluate(cfg, eval_params, eval_samples, bins);
        if (app.got_subcommand(gen_cmd)) return cmd_gen_data(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
