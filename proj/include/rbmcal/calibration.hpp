#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbmcal/rbm.hpp"
#include "rbmcal/sampling.hpp"

namespace rbmcal {

enum class BetaVariant { one_parameter, three_parameter, one_and_all_bias };

std::string to_string(BetaVariant v);
BetaVariant beta_variant_from_string(const std::string& s);

// Calibration parameters. Components are stored flat, per variant:
//   one_parameter:     [beta_eff]
//   three_parameter:   [beta_vh, beta_v, beta_h]
//   one_and_all_bias:  [beta_vh, beta_v0..beta_v{n-1}, beta_h0..beta_h{m-1}]
// Every component must stay strictly positive (compensation divides by them).
struct BetaSet {
    BetaVariant variant = BetaVariant::one_parameter;
    int n_visible = 0;  // used by one_and_all_bias
    int n_hidden = 0;
    std::vector<double> values;

    static BetaSet identity(BetaVariant variant, int n_visible = 0, int n_hidden = 0);

    std::size_t component_count() const { return values.size(); }
    std::vector<std::string> component_names() const;
    void validate() const;
};

// Componentwise product; both operands must share variant and shape.
BetaSet compose(const BetaSet& a, const BetaSet& b);

// Expansion of a BetaSet to full per-term multipliers.
TermScaling expand(const BetaSet& beta, int n_visible, int n_hidden);

// Divides each parameter by its expanded multiplier.
RbmParams compensate(const RbmParams& params, const BetaSet& beta_est);

// Averages of the energy terms of `params` under a distribution:
//   w_term = <sum_ij w_ij v_i h_j>, b_term = <sum_i b_i v_i>, c_term = <sum_j c_j h_j>,
//   bias_v[i] = <b_i v_i>, bias_h[j] = <c_j h_j>.
// Note <E> = -(w_term + b_term + c_term).
struct TermAverages {
    double w_term = 0.0;
    double b_term = 0.0;
    double c_term = 0.0;
    std::vector<double> bias_v;
    std::vector<double> bias_h;
};

TermAverages sample_term_averages(const RbmParams& params, const SampleSet& s);
TermAverages term_averages_from_moments(const RbmParams& params, const Moments& m);

// Likelihood-ascent delta (pre-learning-rate) for the variant, from the
// sample-side and model-side term averages. The one_parameter delta equals the
// sum of the three three_parameter deltas.
std::vector<double> beta_gradient(BetaVariant variant, const TermAverages& sample_avg,
                                  const TermAverages& model_avg);

// The collapsed single-scalar rule used during the unified warm-up schedule.
double collapsed_beta_gradient(const TermAverages& sample_avg, const TermAverages& model_avg);

struct EstimateOptions {
    double eta_beta = 0.01;
    int inner_iters = 3;       // estimation loop repetitions per call
    int cd_gibbs_steps = 2;    // sample evolutions approximating the model average
    bool unified_update = false;   // apply the collapsed scalar delta to every component
    bool exact_model_average = false;  // oracle mode: exact enumeration instead of evolution
    int cap_bits = kDefaultEnumerationCapBits;
};

// One online estimation call: starting from the identity residual, inner_iters
// times evolve the annealer samples under the residual-scaled params, take a
// gradient step, and finally compose the residual into beta_est.
// `params` are the clean model parameters the annealer was compensated for.
BetaSet estimate_beta_step(const RbmParams& params, const SampleSet& annealer_samples,
                           const BetaSet& beta_est, const EstimateOptions& opts,
                           std::uint64_t seed);

// Component names whose gradient is identically zero for these params
// (e.g. beta_v2 when b_2 == 0); such components never move and are reported.
std::vector<std::string> frozen_components(const RbmParams& params, BetaVariant variant);

struct BetaTrace {
    struct Entry {
        int epoch = 0;
        BetaSet beta;
    };
    std::vector<Entry> entries;
};

// CSV with header: epoch, variant, then one column per component.
std::string beta_trace_csv(const BetaTrace& trace);
void save_beta_trace(const BetaTrace& trace, const std::string& path);

std::string beta_to_json(const BetaSet& beta);
BetaSet beta_from_json(const std::string& text);
void save_beta(const BetaSet& beta, const std::string& path);
BetaSet load_beta(const std::string& path);

}  // namespace rbmcal
