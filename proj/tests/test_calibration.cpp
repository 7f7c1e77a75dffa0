#include <cmath>
#include <map>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "rbmcal/calibration.hpp"
#include "rbmcal/evaluation.hpp"

using namespace rbmcal;

namespace {

BetaSet make_beta(BetaVariant variant, std::vector<double> values, int n = 0, int m = 0) {
    BetaSet beta = BetaSet::identity(variant, n, m);
    beta.values = std::move(values);
    return beta;
}

std::map<std::uint64_t, std::uint64_t> counts_map(const SampleSet& s) {
    std::map<std::uint64_t, std::uint64_t> out;
    for (const auto& [idx, cnt] : s.counts) out[idx] = cnt;
    return out;
}

// One calibration pass: fresh annealer batches against a fixed noise model.
BetaSet run_calibration(const RbmParams& p, const NoiseModel& noise, BetaVariant variant,
                        int rounds, std::uint64_t batch, double eta, std::uint64_t seed) {
    BetaSet beta = BetaSet::identity(variant, p.n_visible, p.n_hidden);
    EstimateOptions opts;
    opts.eta_beta = eta;
    for (int r = 0; r < rounds; ++r) {
        auto s = noisy_annealer_sample(compensate(p, beta), noise, batch,
                                       derive_seed(seed, 1, std::uint64_t(r)));
        beta = estimate_beta_step(p, s, beta, opts, derive_seed(seed, 2, std::uint64_t(r)));
    }
    return beta;
}

}  // namespace

TEST_CASE("expand: identity, per-block fill, pattern nesting") {
    auto ones = expand(BetaSet::identity(BetaVariant::one_parameter), 3, 2);
    for (double x : ones.w) CHECK(x == 1.0);
    for (double x : ones.b) CHECK(x == 1.0);
    for (double x : ones.c) CHECK(x == 1.0);

    auto three = expand(make_beta(BetaVariant::three_parameter, {2.0, 3.0, 4.0}), 2, 2);
    for (double x : three.w) CHECK(x == 2.0);
    for (double x : three.b) CHECK(x == 3.0);
    for (double x : three.c) CHECK(x == 4.0);

    auto nested =
        expand(make_beta(BetaVariant::one_and_all_bias, {2.0, 3.0, 3.0, 4.0, 4.0}, 2, 2), 2, 2);
    CHECK(nested.w == three.w);
    CHECK(nested.b == three.b);
    CHECK(nested.c == three.c);
}

TEST_CASE("compensate: identity beta is a no-op; scaled after compensate recovers params") {
    auto p = oracle::random_params(3, 2, 61);
    auto q = compensate(p, BetaSet::identity(BetaVariant::three_parameter));
    CHECK(q.w == p.w);

    auto beta = make_beta(BetaVariant::one_and_all_bias, {1.7, 0.8, 1.2, 2.5, 0.6, 1.1}, 3, 2);
    auto comp = compensate(p, beta);
    auto back = scaled(comp, expand(beta, 3, 2));
    for (std::size_t k = 0; k < p.w.size(); ++k) CHECK(std::abs(back.w[k] - p.w[k]) < 1e-12);
    for (std::size_t k = 0; k < p.b.size(); ++k) CHECK(std::abs(back.b[k] - p.b[k]) < 1e-12);
    for (std::size_t k = 0; k < p.c.size(); ++k) CHECK(std::abs(back.c[k] - p.c[k]) < 1e-12);
}

TEST_CASE("compensate rejects non-positive components") {
    auto p = oracle::random_params(2, 2, 3);
    auto beta = make_beta(BetaVariant::one_parameter, {0.0});
    CHECK_THROWS_AS(compensate(p, beta), std::invalid_argument);
}

TEST_CASE("compensation fixed point: true beta makes the annealer sample the clean model") {
    auto p = oracle::random_params(4, 3, 91);
    NoiseModel noise = NoiseModel::identity(4, 3);
    for (auto& x : noise.beta_err_w) x = 2.0;
    for (auto& x : noise.beta_err_b) x = 2.0;
    for (auto& x : noise.beta_err_c) x = 2.0;
    auto beta_true = make_beta(BetaVariant::one_parameter, {2.0});

    auto clean = exact_distribution(p);
    auto through = exact_distribution(scaled(compensate(p, beta_true), noise.as_scaling()));
    for (std::size_t k = 0; k < clean.probabilities.size(); ++k)
        CHECK(through.probabilities[k] == doctest::Approx(clean.probabilities[k]).epsilon(1e-12));

    // sampled route: KL of compensated-noisy samples vs the direct-sampler floor
    auto comp_samples = noisy_annealer_sample(compensate(p, beta_true), noise, 1000000, 17);
    double kl_comp = kl_joint(empirical_from_samples(comp_samples), clean);
    auto direct = exact_sample(clean, 1000000, 18);
    double kl_floor = kl_joint(empirical_from_samples(direct), clean);
    CHECK(kl_comp < 2.0 * kl_floor);
    CHECK(kl_comp >= 0.0);
}

TEST_CASE("sample_term_averages: single all-zero sample and exhaustive uniform multiset") {
    auto p = oracle::random_params(3, 2, 21);
    SampleSet zero;
    zero.n_visible = 3;
    zero.n_hidden = 2;
    zero.counts = {{0, 1}};
    zero.total_count = 1;
    auto avg = sample_term_averages(p, zero);
    CHECK(avg.w_term == 0.0);
    CHECK(avg.b_term == 0.0);
    CHECK(avg.c_term == 0.0);

    // exhaustive uniform multiset over all configurations, zero params
    auto pz = RbmParams::zeros(3, 2);
    SampleSet uniform;
    uniform.n_visible = 3;
    uniform.n_hidden = 2;
    for (std::uint64_t idx = 0; idx < 32; ++idx) uniform.counts.emplace_back(idx, 1);
    uniform.total_count = 32;
    auto zavg = sample_term_averages(pz, uniform);
    CHECK(zavg.w_term == 0.0);
    CHECK(zavg.b_term == 0.0);
    CHECK(zavg.c_term == 0.0);

    SampleSet empty;
    empty.n_visible = 3;
    empty.n_hidden = 2;
    CHECK_THROWS_AS(sample_term_averages(p, empty), std::invalid_argument);
}

TEST_CASE("sample_term_averages: large exact batches match exact expectations within 3 sigma") {
    auto p = oracle::random_params(3, 2, 23);
    auto dist = exact_distribution(p);
    const std::uint64_t n = 1000000;
    auto s = exact_sample(dist, n, 29);
    auto avg = sample_term_averages(p, s);
    auto exact = term_averages_from_moments(p, model_expectations(p));

    // per-sample variance of each term statistic, for the 3-sigma band
    double var_w = 0.0, var_b = 0.0, var_c = 0.0;
    for (const auto& [idx, cnt] : s.counts) {
        auto cfg = config_from_index(idx, 3, 2);
        double tw = 0.0, tb = 0.0, tc = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (!cfg.v[std::size_t(i)]) continue;
            tb += p.b[std::size_t(i)];
            for (int j = 0; j < 2; ++j)
                if (cfg.h[std::size_t(j)]) tw += p.weight(i, j);
        }
        for (int j = 0; j < 2; ++j)
            if (cfg.h[std::size_t(j)]) tc += p.c[std::size_t(j)];
        var_w += double(cnt) * (tw - avg.w_term) * (tw - avg.w_term);
        var_b += double(cnt) * (tb - avg.b_term) * (tb - avg.b_term);
        var_c += double(cnt) * (tc - avg.c_term) * (tc - avg.c_term);
    }
    var_w /= double(n);
    var_b /= double(n);
    var_c /= double(n);
    CHECK(std::abs(avg.w_term - exact.w_term) < 3.0 * std::sqrt(var_w / double(n)) + 1e-12);
    CHECK(std::abs(avg.b_term - exact.b_term) < 3.0 * std::sqrt(var_b / double(n)) + 1e-12);
    CHECK(std::abs(avg.c_term - exact.c_term) < 3.0 * std::sqrt(var_c / double(n)) + 1e-12);
}

TEST_CASE("beta_gradient: identical bundles give zero delta for every variant") {
    auto p = oracle::random_params(3, 2, 51);
    auto avg = term_averages_from_moments(p, model_expectations(p));
    for (auto variant : {BetaVariant::one_parameter, BetaVariant::three_parameter,
                         BetaVariant::one_and_all_bias}) {
        auto g = beta_gradient(variant, avg, avg);
        for (double x : g) CHECK(x == 0.0);
    }
}

TEST_CASE("beta_gradient: one_parameter sign follows likelihood ascent") {
    // <E>_S = -3 vs <E>_model = -5: samples hotter than the model, so the
    // ascent direction on the scaled likelihood lowers beta; magnitude 2.
    TermAverages s;
    s.w_term = 1.0;
    s.b_term = 1.0;
    s.c_term = 1.0;  // <E>_S = -3
    TermAverages m;
    m.w_term = 2.0;
    m.b_term = 2.0;
    m.c_term = 1.0;  // <E>_model = -5
    auto g = beta_gradient(BetaVariant::one_parameter, s, m);
    CHECK(g.size() == 1);
    CHECK(g[0] == doctest::Approx(-2.0));
}

TEST_CASE("beta_gradient matches finite differences of the scaled log-likelihood") {
    // 3x2 models; empirical distribution from a differently-scaled model so
    // the gradient is far from zero.
    for (std::uint64_t trial = 0; trial < 4; ++trial) {
        auto p = oracle::random_params(3, 2, 600 + trial);
        NoiseModel mild = NoiseModel::identity(3, 2);
        for (auto& x : mild.beta_err_w) x = 1.4;
        for (auto& x : mild.beta_err_b) x = 0.8;
        for (auto& x : mild.beta_err_c) x = 1.2;
        auto s = noisy_annealer_sample(p, mild, 20000, 700 + trial);
        auto q = counts_map(s);
        auto avg_s = sample_term_averages(p, s);

        auto check_variant = [&](const BetaSet& beta) {
            auto scaling = expand(beta, 3, 2);
            auto avg_m =
                term_averages_from_moments(p, model_expectations(scaled(p, scaling)));
            auto g = beta_gradient(beta.variant, avg_s, avg_m);
            const double step = 1e-5;
            for (std::size_t k = 0; k < beta.values.size(); ++k) {
                BetaSet up = beta, dn = beta;
                up.values[k] += step;
                dn.values[k] -= step;
                double lu = oracle::joint_loglik_scaled(p, expand(up, 3, 2), q, s.total_count);
                double ld = oracle::joint_loglik_scaled(p, expand(dn, 3, 2), q, s.total_count);
                double fd = (lu - ld) / (2.0 * step);
                CHECK(std::abs(g[k] - fd) <= 1e-3 * std::max({std::abs(fd), std::abs(g[k]), 1e-7}));
            }
        };
        check_variant(make_beta(BetaVariant::one_parameter, {1.3}));
        check_variant(make_beta(BetaVariant::three_parameter, {1.2, 0.7, 1.5}));
        check_variant(
            make_beta(BetaVariant::one_and_all_bias, {1.2, 0.7, 1.5, 0.9, 1.1, 0.8}, 3, 2));
    }
}

TEST_CASE("estimate_beta_step: perfect prior calibration drifts by noise only") {
    auto p = oracle::random_params(4, 3, 81);
    auto dist = exact_distribution(p);
    EstimateOptions opts;
    // average residual drift over 50 fresh batches, each from the clean model
    double sum = 0.0, sumsq = 0.0;
    const int batches = 50;
    const std::uint64_t batch_size = 5000;
    for (int k = 0; k < batches; ++k) {
        auto s = exact_sample(dist, batch_size, derive_seed(7, 1, std::uint64_t(k)));
        auto beta = estimate_beta_step(p, s, BetaSet::identity(BetaVariant::one_parameter), opts,
                                       derive_seed(7, 2, std::uint64_t(k)));
        sum += beta.values[0] - 1.0;
        sumsq += (beta.values[0] - 1.0) * (beta.values[0] - 1.0);
    }
    double mean = sum / batches;
    double sd = std::sqrt((sumsq / batches - mean * mean) / batches);
    CHECK(std::abs(mean) < 3.0 * sd + 1e-9);
}

TEST_CASE("estimate_beta_step: empty sample set rejected") {
    auto p = oracle::random_params(3, 2, 4);
    SampleSet empty;
    empty.n_visible = 3;
    empty.n_hidden = 2;
    CHECK_THROWS_AS(estimate_beta_step(p, empty, BetaSet::identity(BetaVariant::one_parameter),
                                       EstimateOptions{}, 1),
                    std::invalid_argument);
}

TEST_CASE("calibration recovers uniform truth beta = 2 (one_parameter)") {
    auto p = oracle::random_params(8, 4, 2024, 0.8, 1.0);
    NoiseModel noise = NoiseModel::identity(8, 4);
    for (auto& x : noise.beta_err_w) x = 2.0;
    for (auto& x : noise.beta_err_b) x = 2.0;
    for (auto& x : noise.beta_err_c) x = 2.0;
    auto beta = run_calibration(p, noise, BetaVariant::one_parameter, 120, 20000, 0.08, 1001);
    CHECK(beta.values[0] > 1.9);
    CHECK(beta.values[0] < 2.1);
}

TEST_CASE("calibration recovers the hardware-strength three_parameter truth within 5%") {
    auto p = oracle::random_params(8, 4, 2024, 0.8, 1.0);
    NoiseModel noise = NoiseModel::identity(8, 4);
    for (auto& x : noise.beta_err_w) x = 6.8;
    for (auto& x : noise.beta_err_b) x = 7.0;
    for (auto& x : noise.beta_err_c) x = 4.5;
    auto beta = run_calibration(p, noise, BetaVariant::three_parameter, 130, 20000, 0.08, 1002);
    CHECK(std::abs(beta.values[0] - 6.8) < 0.05 * 6.8);
    CHECK(std::abs(beta.values[1] - 7.0) < 0.05 * 7.0);
    CHECK(std::abs(beta.values[2] - 4.5) < 0.05 * 4.5);
}

TEST_CASE("pattern nesting: three_parameter under uniform truth converges to equal components") {
    auto p = oracle::random_params(8, 4, 2024, 0.8, 1.0);
    NoiseModel noise = NoiseModel::identity(8, 4);
    for (auto& x : noise.beta_err_w) x = 1.6;
    for (auto& x : noise.beta_err_b) x = 1.6;
    for (auto& x : noise.beta_err_c) x = 1.6;
    auto beta = run_calibration(p, noise, BetaVariant::three_parameter, 100, 20000, 0.08, 1003);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b)
            CHECK(std::abs(beta.values[a] - beta.values[b]) <
                  0.05 * std::max(beta.values[a], beta.values[b]));
}

TEST_CASE("composition correctness: compensate by a product equals sequential compensation") {
    auto p = oracle::random_params(3, 2, 71);
    auto a = make_beta(BetaVariant::three_parameter, {1.5, 0.7, 2.0});
    auto b = make_beta(BetaVariant::three_parameter, {0.9, 1.8, 1.1});
    auto lhs = compensate(p, compose(a, b));
    auto rhs = compensate(compensate(p, a), b);
    for (std::size_t k = 0; k < p.w.size(); ++k) CHECK(std::abs(lhs.w[k] - rhs.w[k]) < 1e-12);
    for (std::size_t k = 0; k < p.b.size(); ++k) CHECK(std::abs(lhs.b[k] - rhs.b[k]) < 1e-12);
    for (std::size_t k = 0; k < p.c.size(); ++k) CHECK(std::abs(lhs.c[k] - rhs.c[k]) < 1e-12);
}

TEST_CASE("frozen components reported for zero bias terms") {
    auto p = oracle::random_params(3, 2, 56);
    p.b[1] = 0.0;
    p.c[0] = 0.0;
    auto frozen = frozen_components(p, BetaVariant::one_and_all_bias);
    REQUIRE(frozen.size() == 2);
    CHECK(frozen[0] == "beta_v1");
    CHECK(frozen[1] == "beta_h0");
    CHECK(frozen_components(p, BetaVariant::three_parameter).empty());
}

TEST_CASE("beta trace CSV layout") {
    BetaTrace trace;
    trace.entries.push_back({1, make_beta(BetaVariant::one_and_all_bias,
                                          {1.0, 2.0, 3.0, 4.0, 5.0}, 2, 2)});
    auto csv = beta_trace_csv(trace);
    CHECK(csv.find("epoch,variant,beta_vh,beta_v0,beta_v1,beta_h0,beta_h1") == 0);
    CHECK(csv.find("1,one_and_all_bias,1,2,3,4,5") != std::string::npos);
}

TEST_CASE("beta JSON round-trip") {
    auto beta = make_beta(BetaVariant::one_and_all_bias, {1.5, 0.25, 2.0, 0.125, 8.0}, 2, 2);
    auto back = beta_from_json(beta_to_json(beta));
    CHECK(back.variant == beta.variant);
    CHECK(back.values == beta.values);
}
