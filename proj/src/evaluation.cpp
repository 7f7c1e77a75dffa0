#include "rbmcal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "rbmcal/io_util.hpp"
#include "json.hpp"

namespace rbmcal {

void EmpiricalDistribution::validate() const {
    if (n_bits <= 0 || n_bits > 64)
        throw std::invalid_argument("EmpiricalDistribution: n_bits must be in [1, 64]");
    const std::uint64_t limit =
        (n_bits == 64) ? ~std::uint64_t(0) : (std::uint64_t(1) << n_bits) - 1;
    std::uint64_t sum = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k].first > limit)
            throw std::invalid_argument("EmpiricalDistribution: index out of range");
        if (k > 0 && counts[k - 1].first >= counts[k].first)
            throw std::invalid_argument("EmpiricalDistribution: counts must be sorted and unique");
        sum += counts[k].second;
    }
    if (sum != total)
        throw std::invalid_argument("EmpiricalDistribution: total does not match counts");
}

EmpiricalDistribution empirical_from_samples(const SampleSet& s) {
    EmpiricalDistribution q;
    q.n_bits = s.n_visible + s.n_hidden;
    q.counts = s.counts;
    q.total = s.total_count;
    return q;
}

EmpiricalDistribution empirical_visible(const std::vector<Bits>& data) {
    if (data.empty()) throw std::invalid_argument("empirical_visible: empty dataset");
    std::map<std::uint64_t, std::uint64_t> acc;
    for (const auto& v : data) ++acc[visible_index(v)];
    EmpiricalDistribution q;
    q.n_bits = int(data.front().size());
    q.counts.assign(acc.begin(), acc.end());
    q.total = data.size();
    return q;
}

double kl_joint(const EmpiricalDistribution& q, const ExactDistribution& p) {
    if (q.n_bits != p.n_visible + p.n_hidden)
        throw std::invalid_argument("kl_joint: dimension mismatch");
    if (q.total == 0) throw std::invalid_argument("kl_joint: empty distribution");
    double kl = 0.0;
    const double total = double(q.total);
    for (const auto& [idx, cnt] : q.counts) {
        double qp = double(cnt) / total;
        kl += qp * (std::log(qp) - p.log_probabilities[std::size_t(idx)]);
    }
    return kl;
}

double kl_visible(const EmpiricalDistribution& q_data, const RbmParams& params, int cap_bits) {
    if (q_data.n_bits != params.n_visible)
        throw std::invalid_argument("kl_visible: dimension mismatch");
    if (q_data.total == 0) throw std::invalid_argument("kl_visible: empty distribution");
    const double log_z = log_partition(params, cap_bits);
    double kl = 0.0;
    const double total = double(q_data.total);
    for (const auto& [idx, cnt] : q_data.counts) {
        double qp = double(cnt) / total;
        Bits v = config_from_index(idx, params.n_visible, 0).v;
        kl += qp * (std::log(qp) - visible_log_prob(params, v, log_z));
    }
    return kl;
}

std::string to_string(EnergyTerm term) {
    switch (term) {
        case EnergyTerm::total: return "e_total";
        case EnergyTerm::vh: return "e_vh";
        case EnergyTerm::v: return "e_v";
        case EnergyTerm::h: return "e_h";
    }
    return "unknown";
}

TermEnergies term_energies(const RbmParams& params, const SampleSet& s) {
    if (s.total_count == 0) throw std::invalid_argument("term_energies: empty sample set");
    if (s.n_visible != params.n_visible || s.n_hidden != params.n_hidden)
        throw std::invalid_argument("term_energies: shape mismatch");
    const int n = params.n_visible;
    const int m = params.n_hidden;
    TermEnergies te;
    te.total = s.total_count;
    te.e_vh.reserve(s.counts.size());
    for (const auto& [idx, cnt] : s.counts) {
        double evh = 0.0, ev = 0.0, eh = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!((idx >> i) & 1)) continue;
            ev -= params.b[std::size_t(i)];
            for (int j = 0; j < m; ++j)
                if ((idx >> (n + j)) & 1) evh -= params.weight(i, j);
        }
        for (int j = 0; j < m; ++j)
            if ((idx >> (n + j)) & 1) eh -= params.c[std::size_t(j)];
        te.e_vh.push_back(evh);
        te.e_v.push_back(ev);
        te.e_h.push_back(eh);
        te.e_total.push_back(evh + ev + eh);
        te.weights.push_back(cnt);
    }
    return te;
}

namespace {

std::vector<double> uniform_edges(double lo, double hi, int bins) {
    if (!(hi > lo)) return {lo - 0.5, lo + 0.5};  // degenerate range: one unit-width bin
    std::vector<double> edges(std::size_t(bins) + 1);
    for (int k = 0; k <= bins; ++k)
        edges[std::size_t(k)] = lo + (hi - lo) * double(k) / double(bins);
    edges.back() = hi;
    return edges;
}

EnergyHistogram fill_histogram(EnergyTerm term, const std::vector<double>& edges,
                               const std::vector<double>& values,
                               const std::vector<std::uint64_t>& weights) {
    EnergyHistogram hist;
    hist.term = term;
    hist.edges = edges;
    hist.counts.assign(edges.size() - 1, 0);
    const double lo = edges.front();
    const double hi = edges.back();
    const std::size_t nb = hist.counts.size();
    for (std::size_t k = 0; k < values.size(); ++k) {
        double x = values[k];
        std::size_t bin;
        if (x <= lo)
            bin = 0;
        else if (x >= hi)
            bin = nb - 1;
        else {
            bin = std::size_t(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()) - 1;
            if (bin >= nb) bin = nb - 1;
        }
        hist.counts[bin] += weights[k];
    }
    return hist;
}

// Weighted quantile over (value, weight) pairs: smallest value whose
// cumulative weight reaches q * total.
double weighted_quantile(std::vector<std::pair<double, std::uint64_t>> items, double q,
                         std::uint64_t total) {
    std::sort(items.begin(), items.end());
    const double target = q * double(total);
    double cum = 0.0;
    for (const auto& [value, wgt] : items) {
        cum += double(wgt);
        if (cum >= target) return value;
    }
    return items.back().first;
}

const std::vector<double>& values_for(const TermEnergies& te, EnergyTerm term) {
    switch (term) {
        case EnergyTerm::total: return te.e_total;
        case EnergyTerm::vh: return te.e_vh;
        case EnergyTerm::v: return te.e_v;
        case EnergyTerm::h: return te.e_h;
    }
    throw std::invalid_argument("unknown energy term");
}

constexpr EnergyTerm kAllTerms[] = {EnergyTerm::total, EnergyTerm::vh, EnergyTerm::v,
                                    EnergyTerm::h};

}  // namespace

std::vector<EnergyHistogram> energy_histograms(const RbmParams& params, const SampleSet& s,
                                               int bins) {
    if (bins < 1) throw std::invalid_argument("energy_histograms: bins must be >= 1");
    TermEnergies te = term_energies(params, s);
    std::vector<EnergyHistogram> out;
    for (EnergyTerm term : kAllTerms) {
        const auto& vals = values_for(te, term);
        double lo = *std::min_element(vals.begin(), vals.end());
        double hi = *std::max_element(vals.begin(), vals.end());
        out.push_back(fill_histogram(term, uniform_edges(lo, hi, bins), vals, te.weights));
    }
    return out;
}

std::vector<std::vector<EnergyHistogram>> energy_histograms_shared(
    const RbmParams& params, const std::vector<const SampleSet*>& sets) {
    if (sets.empty()) throw std::invalid_argument("energy_histograms_shared: no sample sets");
    std::vector<TermEnergies> energies;
    energies.reserve(sets.size());
    for (const auto* s : sets) energies.push_back(term_energies(params, *s));

    std::vector<std::vector<EnergyHistogram>> out(sets.size());
    for (EnergyTerm term : kAllTerms) {
        // Pool values across sets for shared Freedman-Diaconis edges.
        std::vector<std::pair<double, std::uint64_t>> pooled;
        std::uint64_t total = 0;
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (const auto& te : energies) {
            const auto& vals = values_for(te, term);
            for (std::size_t k = 0; k < vals.size(); ++k) {
                pooled.emplace_back(vals[k], te.weights[k]);
                if (first || vals[k] < lo) lo = vals[k];
                if (first || vals[k] > hi) hi = vals[k];
                first = false;
            }
            total += te.total;
        }
        double iqr = weighted_quantile(pooled, 0.75, total) - weighted_quantile(pooled, 0.25, total);
        int bins = 1;
        if (hi > lo) {
            double width = 2.0 * iqr * std::pow(double(total), -1.0 / 3.0);
            if (width <= 0.0) width = (hi - lo) / 32.0;
            bins = std::clamp(int(std::ceil((hi - lo) / width)), 1, 512);
        }
        auto edges = uniform_edges(lo, hi, bins);
        for (std::size_t si = 0; si < sets.size(); ++si)
            out[si].push_back(
                fill_histogram(term, edges, values_for(energies[si], term), energies[si].weights));
    }
    return out;
}

std::string histograms_csv(const std::vector<std::vector<EnergyHistogram>>& per_set,
                           const std::vector<std::string>& source_tags) {
    if (per_set.size() != source_tags.size())
        throw std::invalid_argument("histograms_csv: one source tag per histogram list");
    std::string out = "edge_low,edge_high,count,term,source_tag\n";
    for (std::size_t si = 0; si < per_set.size(); ++si) {
        for (const auto& hist : per_set[si]) {
            for (std::size_t k = 0; k < hist.counts.size(); ++k) {
                out += fmt_double(hist.edges[k]) + "," + fmt_double(hist.edges[k + 1]) + "," +
                       std::to_string(hist.counts[k]) + "," + to_string(hist.term) + "," +
                       source_tags[si] + "\n";
            }
        }
    }
    return out;
}

std::string metrics_json(const std::vector<MetricRecord>& records) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["metric"] = r.metric;
        j["value"] = r.value;
        j["n_samples"] = r.n_samples;
        j["seed"] = r.seed;
        j["variant"] = r.variant;
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

}  // namespace rbmcal
