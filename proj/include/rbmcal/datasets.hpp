#pragma once

#include <string>
#include <vector>

#include "rbmcal/rbm.hpp"

namespace rbmcal {

// All 2^rows + 2^cols - 2 distinct bar/stripe patterns, row-major flattened,
// deterministic order (bar masks first, then new stripe masks).
std::vector<Bits> generate_bars_and_stripes(int rows, int cols);

// File of '0'/'1' lines, uniform length; reports line numbers on bad input.
// An empty file yields an empty dataset (with a warning on stderr).
std::vector<Bits> ingest_binary_vectors(const std::string& path);

void write_binary_vectors(const std::vector<Bits>& data, const std::string& path);

// One image per line as whitespace-separated intensities (normalized by 255
// when any value exceeds 1). Each line is average-pooled into target_bits
// near-equal contiguous buckets and thresholded.
std::vector<Bits> coarse_grain_images(const std::string& path, int target_bits,
                                      double threshold = 0.5);

}  // namespace rbmcal
