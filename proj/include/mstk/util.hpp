#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mstk {

/// Solver breakdowns and other numerical failures (CLI exit code 3, as
/// opposed to bad input data, exit code 2).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// splitmix64: derive independent, well-mixed substream seeds from one master seed.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    uint64_t s = master ^ (0x517cc1b727220a95ULL * (index + 1));
    return splitmix64(s);
}

uint64_t fnv1a64(const std::string& s);
std::string to_hex(uint64_t v);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index must be
// independent; with jobs <= 1 runs inline.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

std::vector<std::string> split_csv_line(const std::string& line);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mstk
