#include "rbmcal/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "rbmcal/io_util.hpp"
#include "json.hpp"

namespace rbmcal {

namespace {

void check_bits(const Bits& bits, int expected, const char* name) {
    if (int(bits.size()) != expected)
        throw std::invalid_argument(std::string(name) + " has length " +
                                    std::to_string(bits.size()) + ", expected " +
                                    std::to_string(expected));
    for (auto bit : bits)
        if (bit > 1) throw std::invalid_argument(std::string(name) + " entries must be 0 or 1");
}

void check_cap(int n_visible, int n_hidden, int cap_bits, const char* op) {
    int total = n_visible + n_hidden;
    if (total > cap_bits)
        throw std::domain_error(std::string(op) + ": model has " + std::to_string(total) +
                                " total units, above the enumeration cap of " +
                                std::to_string(cap_bits) + " bits");
}

}  // namespace

RbmParams RbmParams::zeros(int n_visible, int n_hidden) {
    if (n_visible <= 0 || n_hidden <= 0)
        throw std::invalid_argument("RbmParams: unit counts must be positive");
    RbmParams p;
    p.n_visible = n_visible;
    p.n_hidden = n_hidden;
    p.w.assign(std::size_t(n_visible) * std::size_t(n_hidden), 0.0);
    p.b.assign(std::size_t(n_visible), 0.0);
    p.c.assign(std::size_t(n_hidden), 0.0);
    return p;
}

void RbmParams::validate() const {
    if (n_visible <= 0 || n_hidden <= 0)
        throw std::invalid_argument("RbmParams: unit counts must be positive");
    if (w.size() != std::size_t(n_visible) * std::size_t(n_hidden) ||
        b.size() != std::size_t(n_visible) || c.size() != std::size_t(n_hidden))
        throw std::invalid_argument("RbmParams: parameter shapes inconsistent with unit counts");
    auto finite = [](const std::vector<double>& xs) {
        return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(w) || !finite(b) || !finite(c))
        throw std::invalid_argument("RbmParams: parameters must be finite");
}

TermScaling TermScaling::ones(int n_visible, int n_hidden) {
    TermScaling s;
    s.w.assign(std::size_t(n_visible) * std::size_t(n_hidden), 1.0);
    s.b.assign(std::size_t(n_visible), 1.0);
    s.c.assign(std::size_t(n_hidden), 1.0);
    return s;
}

std::uint64_t config_index_vh(const Bits& v, const Bits& h) {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i]) idx |= (std::uint64_t(1) << i);
    for (std::size_t j = 0; j < h.size(); ++j)
        if (h[j]) idx |= (std::uint64_t(1) << (v.size() + j));
    return idx;
}

std::uint64_t config_index(const Configuration& cfg) { return config_index_vh(cfg.v, cfg.h); }

std::uint64_t visible_index(const Bits& v) {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i]) idx |= (std::uint64_t(1) << i);
    return idx;
}

Configuration config_from_index(std::uint64_t index, int n_visible, int n_hidden) {
    Configuration cfg;
    cfg.v.resize(std::size_t(n_visible));
    cfg.h.resize(std::size_t(n_hidden));
    for (int i = 0; i < n_visible; ++i) cfg.v[std::size_t(i)] = (index >> i) & 1;
    for (int j = 0; j < n_hidden; ++j) cfg.h[std::size_t(j)] = (index >> (n_visible + j)) & 1;
    return cfg;
}

double energy(const RbmParams& params, const Configuration& cfg) {
    check_bits(cfg.v, params.n_visible, "v");
    check_bits(cfg.h, params.n_hidden, "h");
    double e = 0.0;
    for (int i = 0; i < params.n_visible; ++i) {
        if (!cfg.v[std::size_t(i)]) continue;
        double row = params.b[std::size_t(i)];
        for (int j = 0; j < params.n_hidden; ++j)
            if (cfg.h[std::size_t(j)]) row += params.weight(i, j);
        e -= row;
    }
    for (int j = 0; j < params.n_hidden; ++j)
        if (cfg.h[std::size_t(j)]) e -= params.c[std::size_t(j)];
    return e;
}

RbmParams scaled(const RbmParams& params, const TermScaling& s) {
    if (s.w.size() != params.w.size() || s.b.size() != params.b.size() ||
        s.c.size() != params.c.size())
        throw std::invalid_argument("scaled: multiplier shapes do not match params");
    RbmParams out = params;
    for (std::size_t k = 0; k < out.w.size(); ++k) out.w[k] *= s.w[k];
    for (std::size_t k = 0; k < out.b.size(); ++k) out.b[k] *= s.b[k];
    for (std::size_t k = 0; k < out.c.size(); ++k) out.c[k] *= s.c[k];
    return out;
}

double logistic(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::vector<double> hidden_given_visible(const RbmParams& params, const Bits& v) {
    check_bits(v, params.n_visible, "v");
    std::vector<double> p(static_cast<std::size_t>(params.n_hidden));
    for (int j = 0; j < params.n_hidden; ++j) {
        double a = params.c[std::size_t(j)];
        for (int i = 0; i < params.n_visible; ++i)
            if (v[std::size_t(i)]) a += params.weight(i, j);
        p[std::size_t(j)] = logistic(a);
    }
    return p;
}

std::vector<double> visible_given_hidden(const RbmParams& params, const Bits& h) {
    check_bits(h, params.n_hidden, "h");
    std::vector<double> p(static_cast<std::size_t>(params.n_visible));
    for (int i = 0; i < params.n_visible; ++i) {
        double a = params.b[std::size_t(i)];
        for (int j = 0; j < params.n_hidden; ++j)
            if (h[std::size_t(j)]) a += params.weight(i, j);
        p[std::size_t(i)] = logistic(a);
    }
    return p;
}

ExactDistribution exact_distribution(const RbmParams& params, int cap_bits) {
    params.validate();
    check_cap(params.n_visible, params.n_hidden, cap_bits, "exact_distribution");
    const int n = params.n_visible;
    const int m = params.n_hidden;
    const std::uint64_t nv = std::uint64_t(1) << n;
    const std::uint64_t nh = std::uint64_t(1) << m;

    ExactDistribution dist;
    dist.n_visible = n;
    dist.n_hidden = m;
    dist.params_digest = params_digest(params);
    dist.log_probabilities.resize(std::size_t(nv * nh));

    // neg-energy of (v, h) = b.v + sum_{j in h} (c_j + sum_i w_ij v_i)
    std::vector<double> act(static_cast<std::size_t>(m));
    for (std::uint64_t vm = 0; vm < nv; ++vm) {
        double bv = 0.0;
        for (int j = 0; j < m; ++j) act[std::size_t(j)] = params.c[std::size_t(j)];
        for (int i = 0; i < n; ++i) {
            if (!((vm >> i) & 1)) continue;
            bv += params.b[std::size_t(i)];
            for (int j = 0; j < m; ++j) act[std::size_t(j)] += params.weight(i, j);
        }
        for (std::uint64_t hm = 0; hm < nh; ++hm) {
            double neg_e = bv;
            for (int j = 0; j < m; ++j)
                if ((hm >> j) & 1) neg_e += act[std::size_t(j)];
            dist.log_probabilities[std::size_t(vm | (hm << n))] = neg_e;
        }
    }

    double max_v = *std::max_element(dist.log_probabilities.begin(), dist.log_probabilities.end());
    double sum = 0.0;
    for (double x : dist.log_probabilities) sum += std::exp(x - max_v);
    dist.log_z = max_v + std::log(sum);

    dist.probabilities.resize(dist.log_probabilities.size());
    for (std::size_t k = 0; k < dist.log_probabilities.size(); ++k) {
        dist.log_probabilities[k] -= dist.log_z;
        dist.probabilities[k] = std::exp(dist.log_probabilities[k]);
    }
    return dist;
}

namespace {

// b.v + sum_j softplus(c_j + sum_i w_ij v_i) for the visible mask.
double visible_free_energy(const RbmParams& params, std::uint64_t vm) {
    double f = 0.0;
    std::vector<double> act(static_cast<std::size_t>(params.n_hidden));
    for (int j = 0; j < params.n_hidden; ++j) act[std::size_t(j)] = params.c[std::size_t(j)];
    for (int i = 0; i < params.n_visible; ++i) {
        if (!((vm >> i) & 1)) continue;
        f += params.b[std::size_t(i)];
        for (int j = 0; j < params.n_hidden; ++j) act[std::size_t(j)] += params.weight(i, j);
    }
    for (int j = 0; j < params.n_hidden; ++j) f += softplus(act[std::size_t(j)]);
    return f;
}

}  // namespace

double log_partition(const RbmParams& params, int cap_bits) {
    params.validate();
    if (params.n_visible > cap_bits)
        throw std::domain_error("log_partition: 2^" + std::to_string(params.n_visible) +
                                " visible states exceed the enumeration cap of " +
                                std::to_string(cap_bits) + " bits");
    const std::uint64_t nv = std::uint64_t(1) << params.n_visible;
    std::vector<double> f(static_cast<std::size_t>(nv));
    for (std::uint64_t vm = 0; vm < nv; ++vm) f[std::size_t(vm)] = visible_free_energy(params, vm);
    double max_v = *std::max_element(f.begin(), f.end());
    double sum = 0.0;
    for (double x : f) sum += std::exp(x - max_v);
    return max_v + std::log(sum);
}

double visible_log_prob(const RbmParams& params, const Bits& v, double log_z) {
    check_bits(v, params.n_visible, "v");
    return visible_free_energy(params, visible_index(v)) - log_z;
}

double visible_log_prob(const RbmParams& params, const Bits& v, int cap_bits) {
    return visible_log_prob(params, v, log_partition(params, cap_bits));
}

Moments model_expectations(const RbmParams& params, int cap_bits) {
    params.validate();
    check_cap(params.n_visible, params.n_hidden, cap_bits, "model_expectations");
    const int n = params.n_visible;
    const int m = params.n_hidden;
    const std::uint64_t nv = std::uint64_t(1) << n;

    // Marginalize hidden units analytically: p(v) from free energies, then
    // <h_j | v> = logistic(activation). One pass for log Z, one to accumulate.
    std::vector<double> f(static_cast<std::size_t>(nv));
    for (std::uint64_t vm = 0; vm < nv; ++vm) f[std::size_t(vm)] = visible_free_energy(params, vm);
    double max_v = *std::max_element(f.begin(), f.end());
    double sum = 0.0;
    for (double x : f) sum += std::exp(x - max_v);
    const double log_z = max_v + std::log(sum);

    Moments mom;
    mom.vh.assign(std::size_t(n) * std::size_t(m), 0.0);
    mom.v.assign(std::size_t(n), 0.0);
    mom.h.assign(std::size_t(m), 0.0);

    std::vector<double> act(static_cast<std::size_t>(m));
    for (std::uint64_t vm = 0; vm < nv; ++vm) {
        double pv = std::exp(f[std::size_t(vm)] - log_z);
        for (int j = 0; j < m; ++j) act[std::size_t(j)] = params.c[std::size_t(j)];
        for (int i = 0; i < n; ++i) {
            if (!((vm >> i) & 1)) continue;
            for (int j = 0; j < m; ++j) act[std::size_t(j)] += params.weight(i, j);
        }
        for (int j = 0; j < m; ++j) {
            double ph = logistic(act[std::size_t(j)]);
            mom.h[std::size_t(j)] += pv * ph;
            for (int i = 0; i < n; ++i)
                if ((vm >> i) & 1) mom.vh[std::size_t(i) * std::size_t(m) + std::size_t(j)] += pv * ph;
        }
        for (int i = 0; i < n; ++i)
            if ((vm >> i) & 1) mom.v[std::size_t(i)] += pv;
    }
    return mom;
}

std::string params_digest(const RbmParams& params) {
    std::uint64_t h = fnv1a(&params.n_visible, sizeof(params.n_visible));
    h = fnv1a(&params.n_hidden, sizeof(params.n_hidden), h);
    h = fnv1a(params.w.data(), params.w.size() * sizeof(double), h);
    h = fnv1a(params.b.data(), params.b.size() * sizeof(double), h);
    h = fnv1a(params.c.data(), params.c.size() * sizeof(double), h);
    return hex64(h);
}

std::string params_to_json(const RbmParams& params) {
    nlohmann::ordered_json j;
    j["n_visible"] = params.n_visible;
    j["n_hidden"] = params.n_hidden;
    j["w"] = params.w;
    j["b"] = params.b;
    j["c"] = params.c;
    return j.dump(2) + "\n";
}

RbmParams params_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    RbmParams p;
    p.n_visible = j.at("n_visible").get<int>();
    p.n_hidden = j.at("n_hidden").get<int>();
    p.w = j.at("w").get<std::vector<double>>();
    p.b = j.at("b").get<std::vector<double>>();
    p.c = j.at("c").get<std::vector<double>>();
    p.validate();
    return p;
}

void save_params(const RbmParams& params, const std::string& path) {
    write_text_file(path, params_to_json(params));
}

RbmParams load_params(const std::string& path) { return params_from_json(read_text_file(path)); }

}  // namespace rbmcal
