#include "rbmcal/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rbmcal/io_util.hpp"

namespace rbmcal {

std::vector<Bits> generate_bars_and_stripes(int rows, int cols) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("generate_bars_and_stripes: rows and cols must be >= 1");
    std::vector<Bits> patterns;
    std::set<Bits> seen;
    auto emit = [&](const Bits& p) {
        if (seen.insert(p).second) patterns.push_back(p);
    };
    // bars: each row constant
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << rows); ++mask) {
        Bits p(std::size_t(rows) * std::size_t(cols));
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                p[std::size_t(r) * std::size_t(cols) + std::size_t(c)] =
                    std::uint8_t((mask >> r) & 1);
        emit(p);
    }
    // stripes: each column constant
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << cols); ++mask) {
        Bits p(std::size_t(rows) * std::size_t(cols));
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                p[std::size_t(r) * std::size_t(cols) + std::size_t(c)] =
                    std::uint8_t((mask >> c) & 1);
        emit(p);
    }
    return patterns;
}

std::vector<Bits> ingest_binary_vectors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::vector<Bits> data;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Bits v;
        v.reserve(line.size());
        for (char ch : line) {
            if (ch != '0' && ch != '1')
                throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                         ": non-binary character '" + std::string(1, ch) + "'");
            v.push_back(ch == '1' ? 1 : 0);
        }
        if (data.empty())
            width = v.size();
        else if (v.size() != width)
            throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                     ": ragged line (expected " + std::to_string(width) +
                                     " bits, got " + std::to_string(v.size()) + ")");
        data.push_back(std::move(v));
    }
    if (data.empty())
        std::cerr << "warning: dataset file " << path << " is empty\n";
    return data;
}

void write_binary_vectors(const std::vector<Bits>& data, const std::string& path) {
    std::string out;
    for (const auto& v : data) {
        for (auto bit : v) out += char('0' + bit);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<Bits> coarse_grain_images(const std::string& path, int target_bits, double threshold) {
    if (target_bits < 1)
        throw std::invalid_argument("coarse_grain_images: target_bits must be >= 1");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open image file: " + path);
    std::vector<Bits> data;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::vector<double> pixels;
        double x;
        while (ss >> x) pixels.push_back(x);
        if (pixels.empty()) continue;
        if (int(pixels.size()) < target_bits)
            throw std::runtime_error(path + " line " + std::to_string(line_no) + ": only " +
                                     std::to_string(pixels.size()) + " pixels, need at least " +
                                     std::to_string(target_bits));
        double max_v = 0.0;
        for (double p : pixels) max_v = std::max(max_v, p);
        const double scale = max_v > 1.0 ? 1.0 / 255.0 : 1.0;
        Bits v(static_cast<std::size_t>(target_bits));
        const std::size_t len = pixels.size();
        for (int k = 0; k < target_bits; ++k) {
            std::size_t lo = std::size_t(k) * len / std::size_t(target_bits);
            std::size_t hi = std::size_t(k + 1) * len / std::size_t(target_bits);
            double mean = 0.0;
            for (std::size_t t = lo; t < hi; ++t) mean += pixels[t] * scale;
            mean /= double(hi - lo);
            v[std::size_t(k)] = mean > threshold ? 1 : 0;
        }
        data.push_back(std::move(v));
    }
    if (data.empty())
        std::cerr << "warning: image file " << path << " yielded no rows\n";
    return data;
}

}  // namespace rbmcal
