#include "rbmcal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rbmcal/io_util.hpp"
#include "json.hpp"

namespace rbmcal {

namespace {

// Keeps gradient steps from driving a component non-positive.
constexpr double kBetaFloor = 1e-6;

void check_shape_for_variant(const BetaSet& beta) {
    switch (beta.variant) {
        case BetaVariant::one_parameter:
            if (beta.values.size() != 1)
                throw std::invalid_argument("BetaSet: one_parameter holds exactly 1 component");
            break;
        case BetaVariant::three_parameter:
            if (beta.values.size() != 3)
                throw std::invalid_argument("BetaSet: three_parameter holds exactly 3 components");
            break;
        case BetaVariant::one_and_all_bias:
            if (beta.n_visible <= 0 || beta.n_hidden <= 0)
                throw std::invalid_argument("BetaSet: one_and_all_bias needs unit counts");
            if (beta.values.size() != 1 + std::size_t(beta.n_visible) + std::size_t(beta.n_hidden))
                throw std::invalid_argument("BetaSet: one_and_all_bias has 1+n+m components");
            break;
    }
}

}  // namespace

std::string to_string(BetaVariant v) {
    switch (v) {
        case BetaVariant::one_parameter: return "one_parameter";
        case BetaVariant::three_parameter: return "three_parameter";
        case BetaVariant::one_and_all_bias: return "one_and_all_bias";
    }
    return "unknown";
}

BetaVariant beta_variant_from_string(const std::string& s) {
    if (s == "one_parameter") return BetaVariant::one_parameter;
    if (s == "three_parameter") return BetaVariant::three_parameter;
    if (s == "one_and_all_bias") return BetaVariant::one_and_all_bias;
    throw std::invalid_argument("unknown calibration variant: " + s);
}

BetaSet BetaSet::identity(BetaVariant variant, int n_visible, int n_hidden) {
    BetaSet beta;
    beta.variant = variant;
    beta.n_visible = n_visible;
    beta.n_hidden = n_hidden;
    switch (variant) {
        case BetaVariant::one_parameter: beta.values.assign(1, 1.0); break;
        case BetaVariant::three_parameter: beta.values.assign(3, 1.0); break;
        case BetaVariant::one_and_all_bias:
            if (n_visible <= 0 || n_hidden <= 0)
                throw std::invalid_argument("BetaSet: one_and_all_bias needs unit counts");
            beta.values.assign(1 + std::size_t(n_visible) + std::size_t(n_hidden), 1.0);
            break;
    }
    return beta;
}

std::vector<std::string> BetaSet::component_names() const {
    switch (variant) {
        case BetaVariant::one_parameter: return {"beta_eff"};
        case BetaVariant::three_parameter: return {"beta_vh", "beta_v", "beta_h"};
        case BetaVariant::one_and_all_bias: {
            std::vector<std::string> names{"beta_vh"};
            for (int i = 0; i < n_visible; ++i) names.push_back("beta_v" + std::to_string(i));
            for (int j = 0; j < n_hidden; ++j) names.push_back("beta_h" + std::to_string(j));
            return names;
        }
    }
    return {};
}

void BetaSet::validate() const {
    check_shape_for_variant(*this);
    for (double x : values)
        if (!(std::isfinite(x) && x > 0.0))
            throw std::invalid_argument("BetaSet: components must be strictly positive and finite");
}

BetaSet compose(const BetaSet& a, const BetaSet& b) {
    if (a.variant != b.variant || a.values.size() != b.values.size())
        throw std::invalid_argument("compose: BetaSet variant/shape mismatch");
    BetaSet out = a;
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] *= b.values[k];
    return out;
}

TermScaling expand(const BetaSet& beta, int n_visible, int n_hidden) {
    if (n_visible <= 0 || n_hidden <= 0)
        throw std::invalid_argument("expand: unit counts must be positive");
    check_shape_for_variant(beta);
    TermScaling s = TermScaling::ones(n_visible, n_hidden);
    switch (beta.variant) {
        case BetaVariant::one_parameter: {
            double v = beta.values[0];
            std::fill(s.w.begin(), s.w.end(), v);
            std::fill(s.b.begin(), s.b.end(), v);
            std::fill(s.c.begin(), s.c.end(), v);
            break;
        }
        case BetaVariant::three_parameter: {
            std::fill(s.w.begin(), s.w.end(), beta.values[0]);
            std::fill(s.b.begin(), s.b.end(), beta.values[1]);
            std::fill(s.c.begin(), s.c.end(), beta.values[2]);
            break;
        }
        case BetaVariant::one_and_all_bias: {
            if (beta.n_visible != n_visible || beta.n_hidden != n_hidden)
                throw std::invalid_argument("expand: one_and_all_bias shape mismatch");
            std::fill(s.w.begin(), s.w.end(), beta.values[0]);
            for (int i = 0; i < n_visible; ++i) s.b[std::size_t(i)] = beta.values[1 + std::size_t(i)];
            for (int j = 0; j < n_hidden; ++j)
                s.c[std::size_t(j)] = beta.values[1 + std::size_t(n_visible) + std::size_t(j)];
            break;
        }
    }
    return s;
}

RbmParams compensate(const RbmParams& params, const BetaSet& beta_est) {
    beta_est.validate();
    TermScaling s = expand(beta_est, params.n_visible, params.n_hidden);
    RbmParams out = params;
    for (std::size_t k = 0; k < out.w.size(); ++k) out.w[k] /= s.w[k];
    for (std::size_t k = 0; k < out.b.size(); ++k) out.b[k] /= s.b[k];
    for (std::size_t k = 0; k < out.c.size(); ++k) out.c[k] /= s.c[k];
    return out;
}

TermAverages sample_term_averages(const RbmParams& params, const SampleSet& s) {
    if (s.total_count == 0)
        throw std::invalid_argument("sample_term_averages: empty sample set");
    if (s.n_visible != params.n_visible || s.n_hidden != params.n_hidden)
        throw std::invalid_argument("sample_term_averages: sample/params shape mismatch");
    const int n = params.n_visible;
    const int m = params.n_hidden;
    TermAverages avg;
    avg.bias_v.assign(std::size_t(n), 0.0);
    avg.bias_h.assign(std::size_t(m), 0.0);
    for (const auto& [idx, cnt] : s.counts) {
        const double wgt = double(cnt);
        for (int i = 0; i < n; ++i) {
            if (!((idx >> i) & 1)) continue;
            avg.bias_v[std::size_t(i)] += wgt * params.b[std::size_t(i)];
            double row = 0.0;
            for (int j = 0; j < m; ++j)
                if ((idx >> (n + j)) & 1) row += params.weight(i, j);
            avg.w_term += wgt * row;
        }
        for (int j = 0; j < m; ++j)
            if ((idx >> (n + j)) & 1) avg.bias_h[std::size_t(j)] += wgt * params.c[std::size_t(j)];
    }
    const double total = double(s.total_count);
    avg.w_term /= total;
    for (auto& x : avg.bias_v) x /= total;
    for (auto& x : avg.bias_h) x /= total;
    for (double x : avg.bias_v) avg.b_term += x;
    for (double x : avg.bias_h) avg.c_term += x;
    return avg;
}

TermAverages term_averages_from_moments(const RbmParams& params, const Moments& m) {
    const int n = params.n_visible;
    const int mm = params.n_hidden;
    if (m.vh.size() != params.w.size() || m.v.size() != params.b.size() ||
        m.h.size() != params.c.size())
        throw std::invalid_argument("term_averages_from_moments: shape mismatch");
    TermAverages avg;
    avg.bias_v.resize(std::size_t(n));
    avg.bias_h.resize(std::size_t(mm));
    for (std::size_t k = 0; k < params.w.size(); ++k) avg.w_term += params.w[k] * m.vh[k];
    for (int i = 0; i < n; ++i) {
        avg.bias_v[std::size_t(i)] = params.b[std::size_t(i)] * m.v[std::size_t(i)];
        avg.b_term += avg.bias_v[std::size_t(i)];
    }
    for (int j = 0; j < mm; ++j) {
        avg.bias_h[std::size_t(j)] = params.c[std::size_t(j)] * m.h[std::size_t(j)];
        avg.c_term += avg.bias_h[std::size_t(j)];
    }
    return avg;
}

std::vector<double> beta_gradient(BetaVariant variant, const TermAverages& sample_avg,
                                  const TermAverages& model_avg) {
    if (sample_avg.bias_v.size() != model_avg.bias_v.size() ||
        sample_avg.bias_h.size() != model_avg.bias_h.size())
        throw std::invalid_argument("beta_gradient: term-average bundles have mismatched shapes");
    switch (variant) {
        case BetaVariant::one_parameter:
            return {collapsed_beta_gradient(sample_avg, model_avg)};
        case BetaVariant::three_parameter:
            return {sample_avg.w_term - model_avg.w_term, sample_avg.b_term - model_avg.b_term,
                    sample_avg.c_term - model_avg.c_term};
        case BetaVariant::one_and_all_bias: {
            std::vector<double> g;
            g.reserve(1 + sample_avg.bias_v.size() + sample_avg.bias_h.size());
            g.push_back(sample_avg.w_term - model_avg.w_term);
            for (std::size_t i = 0; i < sample_avg.bias_v.size(); ++i)
                g.push_back(sample_avg.bias_v[i] - model_avg.bias_v[i]);
            for (std::size_t j = 0; j < sample_avg.bias_h.size(); ++j)
                g.push_back(sample_avg.bias_h[j] - model_avg.bias_h[j]);
            return g;
        }
    }
    throw std::invalid_argument("beta_gradient: unknown variant");
}

double collapsed_beta_gradient(const TermAverages& sample_avg, const TermAverages& model_avg) {
    // <-E>_S - <-E>_model: the uniform-multiplier likelihood ascent direction.
    return (sample_avg.w_term + sample_avg.b_term + sample_avg.c_term) -
           (model_avg.w_term + model_avg.b_term + model_avg.c_term);
}

namespace {

// Block-Gibbs evolution on packed configuration indices; hot path of the
// online estimator, so no per-step allocation.
SampleSet evolve_samples(const RbmParams& params, const SampleSet& s, int steps, Rng& rng) {
    const int n = params.n_visible;
    const int m = params.n_hidden;
    std::vector<double> act(std::size_t(std::max(n, m)));
    SampleAccumulator acc(s.n_visible, s.n_hidden, s.source, s.seed);
    for (const auto& [idx0, cnt] : s.counts) {
        for (std::uint64_t k = 0; k < cnt; ++k) {
            std::uint64_t vmask = idx0 & ((std::uint64_t(1) << n) - 1);
            std::uint64_t hmask = idx0 >> n;
            for (int t = 0; t < steps; ++t) {
                for (int j = 0; j < m; ++j) act[std::size_t(j)] = params.c[std::size_t(j)];
                for (int i = 0; i < n; ++i) {
                    if (!((vmask >> i) & 1)) continue;
                    const double* row = params.w.data() + std::size_t(i) * std::size_t(m);
                    for (int j = 0; j < m; ++j) act[std::size_t(j)] += row[j];
                }
                hmask = 0;
                for (int j = 0; j < m; ++j)
                    if (rng.bernoulli(logistic(act[std::size_t(j)])))
                        hmask |= (std::uint64_t(1) << j);
                vmask = 0;
                for (int i = 0; i < n; ++i) {
                    double a = params.b[std::size_t(i)];
                    const double* row = params.w.data() + std::size_t(i) * std::size_t(m);
                    for (int j = 0; j < m; ++j)
                        if ((hmask >> j) & 1) a += row[j];
                    if (rng.bernoulli(logistic(a))) vmask |= (std::uint64_t(1) << i);
                }
            }
            acc.add(vmask | (hmask << n));
        }
    }
    return acc.finalize();
}

}  // namespace

BetaSet estimate_beta_step(const RbmParams& params, const SampleSet& annealer_samples,
                           const BetaSet& beta_est, const EstimateOptions& opts,
                           std::uint64_t seed) {
    params.validate();
    beta_est.validate();
    if (annealer_samples.total_count == 0)
        throw std::invalid_argument("estimate_beta_step: empty sample set");
    if (annealer_samples.n_visible != params.n_visible ||
        annealer_samples.n_hidden != params.n_hidden)
        throw std::invalid_argument("estimate_beta_step: sample/params shape mismatch");
    if (opts.inner_iters < 1)
        throw std::invalid_argument("estimate_beta_step: inner_iters must be >= 1");
    if (opts.cd_gibbs_steps < 1)
        throw std::invalid_argument("estimate_beta_step: cd_gibbs_steps must be >= 1");

    const TermAverages avg_s = sample_term_averages(params, annealer_samples);
    BetaSet residual = BetaSet::identity(beta_est.variant, beta_est.n_visible, beta_est.n_hidden);
    Rng rng(derive_seed(seed, 0x657374626574ULL));

    for (int it = 0; it < opts.inner_iters; ++it) {
        RbmParams model = scaled(params, expand(residual, params.n_visible, params.n_hidden));
        TermAverages avg_model;
        if (opts.exact_model_average) {
            avg_model = term_averages_from_moments(params, model_expectations(model, opts.cap_bits));
        } else {
            SampleSet evolved = evolve_samples(model, annealer_samples, opts.cd_gibbs_steps, rng);
            avg_model = sample_term_averages(params, evolved);
        }
        if (opts.unified_update) {
            double g = collapsed_beta_gradient(avg_s, avg_model);
            for (auto& x : residual.values) x = std::max(kBetaFloor, x + opts.eta_beta * g);
        } else {
            auto g = beta_gradient(beta_est.variant, avg_s, avg_model);
            for (std::size_t k = 0; k < residual.values.size(); ++k)
                residual.values[k] = std::max(kBetaFloor, residual.values[k] + opts.eta_beta * g[k]);
        }
    }
    return compose(residual, beta_est);
}

std::vector<std::string> frozen_components(const RbmParams& params, BetaVariant variant) {
    std::vector<std::string> out;
    auto all_zero = [](const std::vector<double>& xs) {
        return std::all_of(xs.begin(), xs.end(), [](double x) { return x == 0.0; });
    };
    switch (variant) {
        case BetaVariant::one_parameter:
            if (all_zero(params.w) && all_zero(params.b) && all_zero(params.c))
                out.push_back("beta_eff");
            break;
        case BetaVariant::three_parameter:
            if (all_zero(params.w)) out.push_back("beta_vh");
            if (all_zero(params.b)) out.push_back("beta_v");
            if (all_zero(params.c)) out.push_back("beta_h");
            break;
        case BetaVariant::one_and_all_bias:
            if (all_zero(params.w)) out.push_back("beta_vh");
            for (int i = 0; i < params.n_visible; ++i)
                if (params.b[std::size_t(i)] == 0.0) out.push_back("beta_v" + std::to_string(i));
            for (int j = 0; j < params.n_hidden; ++j)
                if (params.c[std::size_t(j)] == 0.0) out.push_back("beta_h" + std::to_string(j));
            break;
    }
    return out;
}

std::string beta_trace_csv(const BetaTrace& trace) {
    std::string out = "epoch,variant";
    if (!trace.entries.empty())
        for (const auto& name : trace.entries.front().beta.component_names()) out += "," + name;
    out += "\n";
    for (const auto& entry : trace.entries) {
        out += std::to_string(entry.epoch) + "," + to_string(entry.beta.variant);
        for (double x : entry.beta.values) out += "," + fmt_double(x);
        out += "\n";
    }
    return out;
}

void save_beta_trace(const BetaTrace& trace, const std::string& path) {
    write_text_file(path, beta_trace_csv(trace));
}

std::string beta_to_json(const BetaSet& beta) {
    nlohmann::ordered_json j;
    j["variant"] = to_string(beta.variant);
    j["n_visible"] = beta.n_visible;
    j["n_hidden"] = beta.n_hidden;
    j["values"] = beta.values;
    return j.dump(2) + "\n";
}

BetaSet beta_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    BetaSet beta;
    beta.variant = beta_variant_from_string(j.at("variant").get<std::string>());
    beta.n_visible = j.at("n_visible").get<int>();
    beta.n_hidden = j.at("n_hidden").get<int>();
    beta.values = j.at("values").get<std::vector<double>>();
    beta.validate();
    return beta;
}

void save_beta(const BetaSet& beta, const std::string& path) {
    write_text_file(path, beta_to_json(beta));
}

BetaSet load_beta(const std::string& path) { return beta_from_json(read_text_file(path)); }

}  // namespace rbmcal
