#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rbmcal {

using Bits = std::vector<std::uint8_t>;  // entries in {0, 1}

// Exact enumeration refuses models above this many total units by default
// (2^24 states keeps oracle runtimes in seconds).
inline constexpr int kDefaultEnumerationCapBits = 24;

// Bipartite energy model: E(v,h) = -sum_ij w_ij v_i h_j - sum_i b_i v_i - sum_j c_j h_j.
// Immutable value object; every operation below is a pure function.
struct RbmParams {
    int n_visible = 0;
    int n_hidden = 0;
    std::vector<double> w;  // row-major [n_visible][n_hidden]
    std::vector<double> b;  // [n_visible]
    std::vector<double> c;  // [n_hidden]

    double weight(int i, int j) const { return w[std::size_t(i) * std::size_t(n_hidden) + std::size_t(j)]; }
    double& weight(int i, int j) { return w[std::size_t(i) * std::size_t(n_hidden) + std::size_t(j)]; }

    static RbmParams zeros(int n_visible, int n_hidden);

    // Dimension consistency and finiteness of all entries.
    void validate() const;
};

// One joint state of the binary units.
struct Configuration {
    Bits v, h;
};

// Per-term multipliers, same shape as RbmParams. Shared by the calibration
// parameter expansion and the simulated hardware error model.
struct TermScaling {
    std::vector<double> w;  // row-major [n_visible][n_hidden]
    std::vector<double> b;  // [n_visible]
    std::vector<double> c;  // [n_hidden]

    static TermScaling ones(int n_visible, int n_hidden);
};

// Enumerated probability table over all 2^(n+m) configurations.
// log_probabilities is the authoritative table (never underflows);
// probabilities holds exp() of it and sums to 1.
struct ExactDistribution {
    int n_visible = 0;
    int n_hidden = 0;
    std::string params_digest;
    std::vector<double> probabilities;
    std::vector<double> log_probabilities;
    double log_z = 0.0;

    std::size_t size() const { return probabilities.size(); }
};

// Exact first and second-order expectations under the model distribution.
struct Moments {
    std::vector<double> vh;  // <v_i h_j>, row-major [n][m]
    std::vector<double> v;   // <v_i>
    std::vector<double> h;   // <h_j>
};

// Configuration encoding used for every table and sample index:
//   index = sum_i v_i 2^i + sum_j h_j 2^(n+j)   (visible bits little-endian first)
std::uint64_t config_index(const Configuration& cfg);
std::uint64_t config_index_vh(const Bits& v, const Bits& h);
Configuration config_from_index(std::uint64_t index, int n_visible, int n_hidden);
std::uint64_t visible_index(const Bits& v);

double energy(const RbmParams& params, const Configuration& cfg);

// New params with w'_ij = s.w_ij * w_ij, b'_i = s.b_i * b_i, c'_j = s.c_j * c_j.
RbmParams scaled(const RbmParams& params, const TermScaling& s);

// P(h_j = 1 | v) for all j; factorized, entries in (0,1).
std::vector<double> hidden_given_visible(const RbmParams& params, const Bits& v);
// P(v_i = 1 | h) for all i.
std::vector<double> visible_given_hidden(const RbmParams& params, const Bits& h);

ExactDistribution exact_distribution(const RbmParams& params,
                                     int cap_bits = kDefaultEnumerationCapBits);

// log Z via log-sum-exp over the visible-layer free energies (needs 2^n_visible).
double log_partition(const RbmParams& params, int cap_bits = kDefaultEnumerationCapBits);

// log P(v) = b.v + sum_j softplus(c_j + sum_i w_ij v_i) - log_z
double visible_log_prob(const RbmParams& params, const Bits& v, double log_z);
double visible_log_prob(const RbmParams& params, const Bits& v,
                        int cap_bits = kDefaultEnumerationCapBits);

Moments model_expectations(const RbmParams& params, int cap_bits = kDefaultEnumerationCapBits);

std::string params_digest(const RbmParams& params);

// Numerically stable primitives.
double logistic(double x);
double softplus(double x);

// Flat JSON object {n_visible, n_hidden, w (row-major), b, c}; doubles
// round-trip bit-exactly.
std::string params_to_json(const RbmParams& params);
RbmParams params_from_json(const std::string& text);
void save_params(const RbmParams& params, const std::string& path);
RbmParams load_params(const std::string& path);

}  // namespace rbmcal
