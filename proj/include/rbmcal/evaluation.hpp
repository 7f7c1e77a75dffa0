#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbmcal/rbm.hpp"
#include "rbmcal/sampling.hpp"

namespace rbmcal {

// Counts over configuration indices (joint (v,h) space, or visible-only for
// data distributions).
struct EmpiricalDistribution {
    int n_bits = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> counts;  // sorted by index
    std::uint64_t total = 0;

    void validate() const;
};

EmpiricalDistribution empirical_from_samples(const SampleSet& s);
EmpiricalDistribution empirical_visible(const std::vector<Bits>& data);

// D(q || p) over the joint space; zero-count configurations contribute 0.
double kl_joint(const EmpiricalDistribution& q, const ExactDistribution& p);

// D(Q_D || P(v)) over the visible space, using the exact log partition.
double kl_visible(const EmpiricalDistribution& q_data, const RbmParams& params,
                  int cap_bits = kDefaultEnumerationCapBits);

enum class EnergyTerm { total, vh, v, h };
std::string to_string(EnergyTerm term);

struct EnergyHistogram {
    EnergyTerm term = EnergyTerm::total;
    std::vector<double> edges;         // length counts.size() + 1
    std::vector<std::uint64_t> counts;
};

// Per-sample values of the three energy terms (E = e_vh + e_v + e_h),
// weighted by sample multiplicity; one entry per distinct configuration.
struct TermEnergies {
    std::vector<double> e_vh, e_v, e_h, e_total;
    std::vector<std::uint64_t> weights;
    std::uint64_t total = 0;
};
TermEnergies term_energies(const RbmParams& params, const SampleSet& s);

// Four fixed-bin-count histograms (total, vh, v, h) over each term's own range.
std::vector<EnergyHistogram> energy_histograms(const RbmParams& params, const SampleSet& s,
                                               int bins);

// Shared-edge histograms for overlayable comparison: Freedman-Diaconis widths
// on the pooled data, one histogram list per input set, same edges per term.
std::vector<std::vector<EnergyHistogram>> energy_histograms_shared(
    const RbmParams& params, const std::vector<const SampleSet*>& sets);

// CSV: edge_low, edge_high, count, term, source_tag.
std::string histograms_csv(const std::vector<std::vector<EnergyHistogram>>& per_set,
                           const std::vector<std::string>& source_tags);

// One JSON metric record {metric, value, n_samples, seed, variant}.
struct MetricRecord {
    std::string metric;
    double value = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
    std::string variant;
};
std::string metrics_json(const std::vector<MetricRecord>& records);

}  // namespace rbmcal
