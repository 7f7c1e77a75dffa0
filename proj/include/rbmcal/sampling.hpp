#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbmcal/rbm.hpp"
#include "rbmcal/rng.hpp"

namespace rbmcal {

enum class SourceTag { gibbs, cd, exact, noisy_annealer };

std::string to_string(SourceTag tag);
SourceTag source_tag_from_string(const std::string& s);

// Multiset of configurations stored as (config index, count) pairs sorted by
// index. Models are capped at 64 total units by this representation.
struct SampleSet {
    int n_visible = 0;
    int n_hidden = 0;
    SourceTag source = SourceTag::exact;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> counts;
    std::uint64_t total_count = 0;

    void validate() const;
};

// Deterministic accumulator: indices are aggregated and sorted at finalize,
// so the result does not depend on insertion order.
class SampleAccumulator {
  public:
    SampleAccumulator(int n_visible, int n_hidden, SourceTag source, std::uint64_t seed);
    void add(std::uint64_t config_index, std::uint64_t count = 1);
    void add(const Configuration& cfg) { add(config_index(cfg)); }
    SampleSet finalize();

  private:
    SampleSet set_;
    std::vector<std::uint64_t> raw_;
};

// Ground-truth per-term error multipliers applied by the simulated annealer.
struct NoiseModel {
    std::vector<double> beta_err_w;  // row-major [n][m]
    std::vector<double> beta_err_b;  // [n]
    std::vector<double> beta_err_c;  // [m]

    TermScaling as_scaling() const { return TermScaling{beta_err_w, beta_err_b, beta_err_c}; }
    static NoiseModel identity(int n_visible, int n_hidden);
    void validate(int n_visible, int n_hidden) const;  // strictly positive, finite
};

enum class NoiseKind { constant, gaussian };

// Defaults follow the simulated hardware study: weights 6.8, visible biases
// N(7.0, sigma), hidden biases N(4.5, sigma).
struct NoiseSpec {
    NoiseKind w_mode = NoiseKind::constant;
    double w_mean = 6.8;
    double w_sigma = 0.0;
    double b_mean = 7.0;
    double b_sigma = 0.0;
    double c_mean = 4.5;
    double c_sigma = 0.0;
    std::uint64_t seed = 0;
};

// Deterministic given spec.seed; gaussian draws are redrawn until positive.
NoiseModel make_noise_model(const NoiseSpec& spec, int n_visible, int n_hidden);

// One block update: h ~ P(.|v), then v ~ P(.|h_new).
Configuration block_gibbs_step(const RbmParams& params, const Configuration& cfg, Rng& rng);

struct GibbsSchedule {
    std::uint64_t burn_in = 1000;
    std::uint64_t thinning = 10;
    int n_chains = 1;
};

// Pools n_samples across chains (uniform random inits, seed-derived streams);
// chain k keeps its share after burn_in, one sample every `thinning` steps.
SampleSet gibbs_sample(const RbmParams& params, std::uint64_t n_samples,
                       const GibbsSchedule& schedule, std::uint64_t seed, int threads = 1);

// For each data row: h ~ P(.|v), then k alternations of (v ~ P(.|h), h ~ P(.|v)).
SampleSet cd_negative_phase(const RbmParams& params, const std::vector<Bits>& data, int k,
                            std::uint64_t seed);

// i.i.d. inverse-CDF draws from an enumerated table.
SampleSet exact_sample(const ExactDistribution& dist, std::uint64_t n_samples, std::uint64_t seed);

enum class SamplerFidelity { exact, gibbs };

// Samples from the Boltzmann distribution of scaled(params, noise): the
// simulated annealer. Exact fidelity removes MCMC error and is the default
// for calibration experiments.
SampleSet noisy_annealer_sample(const RbmParams& params, const NoiseModel& noise,
                                std::uint64_t n_samples, std::uint64_t seed,
                                SamplerFidelity fidelity = SamplerFidelity::exact,
                                const GibbsSchedule& schedule = GibbsSchedule{},
                                int cap_bits = kDefaultEnumerationCapBits, int threads = 1);

// Text format: header "n_visible n_hidden source_tag seed", then one line per
// sample, visible bits then hidden bits separated by a space.
void save_samples(const SampleSet& s, const std::string& path);
SampleSet load_samples(const std::string& path);

// Empirical bit means and pair moments of a sample set.
Moments sample_moments(const SampleSet& s);

}  // namespace rbmcal
