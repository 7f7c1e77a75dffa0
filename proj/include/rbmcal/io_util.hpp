#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rbmcal {

// Shortest round-trip decimal rendering of a double (std::to_chars).
// Used everywhere a double lands in a CSV so reruns are byte-identical.
std::string fmt_double(double x);

// FNV-1a over raw bytes, rendered as 16 hex chars.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Runs fn(i) for i in [0, n). Each index must only touch its own output slot;
// results are then independent of thread count and scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

std::string join(const std::vector<std::string>& parts, const std::string& sep);

}  // namespace rbmcal
