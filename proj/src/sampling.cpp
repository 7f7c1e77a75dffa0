#include "rbmcal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rbmcal/io_util.hpp"

namespace rbmcal {

std::string to_string(SourceTag tag) {
    switch (tag) {
        case SourceTag::gibbs: return "gibbs";
        case SourceTag::cd: return "cd";
        case SourceTag::exact: return "exact";
        case SourceTag::noisy_annealer: return "noisy_annealer";
    }
    return "unknown";
}

SourceTag source_tag_from_string(const std::string& s) {
    if (s == "gibbs") return SourceTag::gibbs;
    if (s == "cd") return SourceTag::cd;
    if (s == "exact") return SourceTag::exact;
    if (s == "noisy_annealer") return SourceTag::noisy_annealer;
    throw std::invalid_argument("unknown source tag: " + s);
}

void SampleSet::validate() const {
    if (n_visible <= 0 || n_hidden <= 0)
        throw std::invalid_argument("SampleSet: unit counts must be positive");
    if (n_visible + n_hidden > 64)
        throw std::invalid_argument("SampleSet: index encoding supports at most 64 total units");
    std::uint64_t sum = 0;
    const std::uint64_t limit =
        (n_visible + n_hidden == 64) ? ~std::uint64_t(0)
                                     : (std::uint64_t(1) << (n_visible + n_hidden)) - 1;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k].first > limit)
            throw std::invalid_argument("SampleSet: configuration index out of range");
        if (k > 0 && counts[k - 1].first >= counts[k].first)
            throw std::invalid_argument("SampleSet: counts must be sorted by unique index");
        sum += counts[k].second;
    }
    if (sum != total_count)
        throw std::invalid_argument("SampleSet: total_count does not match sum of counts");
}

SampleAccumulator::SampleAccumulator(int n_visible, int n_hidden, SourceTag source,
                                     std::uint64_t seed) {
    if (n_visible <= 0 || n_hidden <= 0)
        throw std::invalid_argument("SampleAccumulator: unit counts must be positive");
    if (n_visible + n_hidden > 64)
        throw std::invalid_argument("SampleAccumulator: at most 64 total units supported");
    set_.n_visible = n_visible;
    set_.n_hidden = n_hidden;
    set_.source = source;
    set_.seed = seed;
}

void SampleAccumulator::add(std::uint64_t config_index, std::uint64_t count) {
    for (std::uint64_t k = 0; k < count; ++k) raw_.push_back(config_index);
}

SampleSet SampleAccumulator::finalize() {
    std::sort(raw_.begin(), raw_.end());
    set_.counts.clear();
    for (std::uint64_t idx : raw_) {
        if (!set_.counts.empty() && set_.counts.back().first == idx)
            ++set_.counts.back().second;
        else
            set_.counts.emplace_back(idx, 1);
    }
    set_.total_count = raw_.size();
    raw_.clear();
    return set_;
}

NoiseModel NoiseModel::identity(int n_visible, int n_hidden) {
    NoiseModel nm;
    nm.beta_err_w.assign(std::size_t(n_visible) * std::size_t(n_hidden), 1.0);
    nm.beta_err_b.assign(std::size_t(n_visible), 1.0);
    nm.beta_err_c.assign(std::size_t(n_hidden), 1.0);
    return nm;
}

void NoiseModel::validate(int n_visible, int n_hidden) const {
    if (beta_err_w.size() != std::size_t(n_visible) * std::size_t(n_hidden) ||
        beta_err_b.size() != std::size_t(n_visible) || beta_err_c.size() != std::size_t(n_hidden))
        throw std::invalid_argument("NoiseModel: shape mismatch");
    auto ok = [](const std::vector<double>& xs) {
        return std::all_of(xs.begin(), xs.end(),
                           [](double x) { return std::isfinite(x) && x > 0.0; });
    };
    if (!ok(beta_err_w) || !ok(beta_err_b) || !ok(beta_err_c))
        throw std::invalid_argument("NoiseModel: multipliers must be strictly positive and finite");
}

namespace {

double positive_draw(Rng& rng, double mean, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
    if (sigma == 0.0) {
        if (mean <= 0.0) throw std::invalid_argument("NoiseSpec: constant multiplier must be > 0");
        return mean;
    }
    for (;;) {
        double x = rng.normal(mean, sigma);
        if (x > 0.0) return x;
    }
}

}  // namespace

NoiseModel make_noise_model(const NoiseSpec& spec, int n_visible, int n_hidden) {
    Rng rng(derive_seed(spec.seed, 0x6e6f697365ULL));
    NoiseModel nm;
    nm.beta_err_w.resize(std::size_t(n_visible) * std::size_t(n_hidden));
    nm.beta_err_b.resize(std::size_t(n_visible));
    nm.beta_err_c.resize(std::size_t(n_hidden));
    if (spec.w_mode == NoiseKind::constant) {
        if (spec.w_mean <= 0.0)
            throw std::invalid_argument("NoiseSpec: constant w multiplier must be > 0");
        std::fill(nm.beta_err_w.begin(), nm.beta_err_w.end(), spec.w_mean);
    } else {
        for (auto& x : nm.beta_err_w) x = positive_draw(rng, spec.w_mean, spec.w_sigma);
    }
    for (auto& x : nm.beta_err_b) x = positive_draw(rng, spec.b_mean, spec.b_sigma);
    for (auto& x : nm.beta_err_c) x = positive_draw(rng, spec.c_mean, spec.c_sigma);
    nm.validate(n_visible, n_hidden);
    return nm;
}

Configuration block_gibbs_step(const RbmParams& params, const Configuration& cfg, Rng& rng) {
    Configuration next = cfg;
    auto ph = hidden_given_visible(params, next.v);
    for (std::size_t j = 0; j < ph.size(); ++j) next.h[j] = rng.bernoulli(ph[j]) ? 1 : 0;
    auto pv = visible_given_hidden(params, next.h);
    for (std::size_t i = 0; i < pv.size(); ++i) next.v[i] = rng.bernoulli(pv[i]) ? 1 : 0;
    return next;
}

SampleSet gibbs_sample(const RbmParams& params, std::uint64_t n_samples,
                       const GibbsSchedule& schedule, std::uint64_t seed, int threads) {
    params.validate();
    if (n_samples == 0) throw std::invalid_argument("gibbs_sample: n_samples must be positive");
    if (schedule.thinning == 0) throw std::invalid_argument("gibbs_sample: thinning must be >= 1");
    if (schedule.n_chains <= 0) throw std::invalid_argument("gibbs_sample: n_chains must be >= 1");

    const std::uint64_t chains = std::uint64_t(schedule.n_chains);
    std::vector<std::vector<std::uint64_t>> per_chain(static_cast<std::size_t>(chains));

    parallel_for(std::size_t(chains), threads, [&](std::size_t k) {
        std::uint64_t kept = n_samples / chains + (std::uint64_t(k) < n_samples % chains ? 1 : 0);
        auto& out = per_chain[k];
        out.reserve(std::size_t(kept));
        Rng rng(derive_seed(seed, 0x636861696eULL, std::uint64_t(k)));
        Configuration cfg;
        cfg.v.resize(std::size_t(params.n_visible));
        cfg.h.resize(std::size_t(params.n_hidden));
        for (auto& bit : cfg.v) bit = rng.bernoulli(0.5) ? 1 : 0;
        for (auto& bit : cfg.h) bit = rng.bernoulli(0.5) ? 1 : 0;
        for (std::uint64_t t = 0; t < schedule.burn_in; ++t) cfg = block_gibbs_step(params, cfg, rng);
        for (std::uint64_t s = 0; s < kept; ++s) {
            for (std::uint64_t t = 0; t < schedule.thinning; ++t)
                cfg = block_gibbs_step(params, cfg, rng);
            out.push_back(config_index(cfg));
        }
    });

    SampleAccumulator acc(params.n_visible, params.n_hidden, SourceTag::gibbs, seed);
    for (const auto& chain : per_chain)
        for (std::uint64_t idx : chain) acc.add(idx);
    return acc.finalize();
}

SampleSet cd_negative_phase(const RbmParams& params, const std::vector<Bits>& data, int k,
                            std::uint64_t seed) {
    params.validate();
    if (k < 1) throw std::invalid_argument("cd_negative_phase: k must be >= 1");
    SampleAccumulator acc(params.n_visible, params.n_hidden, SourceTag::cd, seed);
    Rng rng(derive_seed(seed, 0x6364ULL));
    Configuration cfg;
    cfg.h.resize(std::size_t(params.n_hidden));
    for (const auto& row : data) {
        cfg.v = row;
        auto ph = hidden_given_visible(params, cfg.v);
        for (std::size_t j = 0; j < ph.size(); ++j) cfg.h[j] = rng.bernoulli(ph[j]) ? 1 : 0;
        for (int t = 0; t < k; ++t) {
            auto pv = visible_given_hidden(params, cfg.h);
            for (std::size_t i = 0; i < pv.size(); ++i) cfg.v[i] = rng.bernoulli(pv[i]) ? 1 : 0;
            ph = hidden_given_visible(params, cfg.v);
            for (std::size_t j = 0; j < ph.size(); ++j) cfg.h[j] = rng.bernoulli(ph[j]) ? 1 : 0;
        }
        acc.add(config_index(cfg));
    }
    return acc.finalize();
}

SampleSet exact_sample(const ExactDistribution& dist, std::uint64_t n_samples, std::uint64_t seed) {
    if (dist.probabilities.empty()) throw std::invalid_argument("exact_sample: empty distribution");
    std::vector<double> cdf(dist.probabilities.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < dist.probabilities.size(); ++k) {
        acc += dist.probabilities[k];
        cdf[k] = acc;
    }
    cdf.back() = 1.0;

    SampleAccumulator out(dist.n_visible, dist.n_hidden, SourceTag::exact, seed);
    Rng rng(derive_seed(seed, 0x6578616374ULL));
    for (std::uint64_t s = 0; s < n_samples; ++s) {
        double u = rng.uniform01();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t idx = std::size_t(it - cdf.begin());
        if (idx >= cdf.size()) idx = cdf.size() - 1;
        out.add(std::uint64_t(idx));
    }
    return out.finalize();
}

SampleSet noisy_annealer_sample(const RbmParams& params, const NoiseModel& noise,
                                std::uint64_t n_samples, std::uint64_t seed,
                                SamplerFidelity fidelity, const GibbsSchedule& schedule,
                                int cap_bits, int threads) {
    params.validate();
    noise.validate(params.n_visible, params.n_hidden);
    RbmParams distorted = scaled(params, noise.as_scaling());
    SampleSet s;
    if (fidelity == SamplerFidelity::exact) {
        s = exact_sample(exact_distribution(distorted, cap_bits), n_samples, seed);
    } else {
        s = gibbs_sample(distorted, n_samples, schedule, seed, threads);
    }
    s.source = SourceTag::noisy_annealer;
    return s;
}

void save_samples(const SampleSet& s, const std::string& path) {
    s.validate();
    std::ostringstream out;
    out << s.n_visible << ' ' << s.n_hidden << ' ' << to_string(s.source) << ' ' << s.seed << '\n';
    for (const auto& [idx, cnt] : s.counts) {
        std::string line;
        line.reserve(std::size_t(s.n_visible + s.n_hidden) + 2);
        for (int i = 0; i < s.n_visible; ++i) line += char('0' + ((idx >> i) & 1));
        line += ' ';
        for (int j = 0; j < s.n_hidden; ++j) line += char('0' + ((idx >> (s.n_visible + j)) & 1));
        line += '\n';
        for (std::uint64_t k = 0; k < cnt; ++k) out << line;
    }
    write_text_file(path, out.str());
}

SampleSet load_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sample file: " + path);
    int n = 0, m = 0;
    std::string tag;
    std::uint64_t seed = 0;
    if (!(in >> n >> m >> tag >> seed))
        throw std::runtime_error("sample file: malformed header in " + path);
    SampleAccumulator acc(n, m, source_tag_from_string(tag), seed);
    std::string vpart, hpart;
    std::size_t line_no = 1;
    while (in >> vpart >> hpart) {
        ++line_no;
        if (int(vpart.size()) != n || int(hpart.size()) != m)
            throw std::runtime_error("sample file line " + std::to_string(line_no) +
                                     ": wrong bit-vector lengths");
        std::uint64_t idx = 0;
        for (int i = 0; i < n; ++i) {
            if (vpart[std::size_t(i)] != '0' && vpart[std::size_t(i)] != '1')
                throw std::runtime_error("sample file line " + std::to_string(line_no) +
                                         ": non-binary character");
            if (vpart[std::size_t(i)] == '1') idx |= (std::uint64_t(1) << i);
        }
        for (int j = 0; j < m; ++j) {
            if (hpart[std::size_t(j)] != '0' && hpart[std::size_t(j)] != '1')
                throw std::runtime_error("sample file line " + std::to_string(line_no) +
                                         ": non-binary character");
            if (hpart[std::size_t(j)] == '1') idx |= (std::uint64_t(1) << (n + j));
        }
        acc.add(idx);
    }
    return acc.finalize();
}

Moments sample_moments(const SampleSet& s) {
    if (s.total_count == 0) throw std::invalid_argument("sample_moments: empty sample set");
    const int n = s.n_visible;
    const int m = s.n_hidden;
    Moments mom;
    mom.vh.assign(std::size_t(n) * std::size_t(m), 0.0);
    mom.v.assign(std::size_t(n), 0.0);
    mom.h.assign(std::size_t(m), 0.0);
    for (const auto& [idx, cnt] : s.counts) {
        double wgt = double(cnt);
        for (int j = 0; j < m; ++j) {
            if (!((idx >> (n + j)) & 1)) continue;
            mom.h[std::size_t(j)] += wgt;
            for (int i = 0; i < n; ++i)
                if ((idx >> i) & 1) mom.vh[std::size_t(i) * std::size_t(m) + std::size_t(j)] += wgt;
        }
        for (int i = 0; i < n; ++i)
            if ((idx >> i) & 1) mom.v[std::size_t(i)] += wgt;
    }
    const double total = double(s.total_count);
    for (auto& x : mom.vh) x /= total;
    for (auto& x : mom.v) x /= total;
    for (auto& x : mom.h) x /= total;
    return mom;
}

}  // namespace rbmcal
