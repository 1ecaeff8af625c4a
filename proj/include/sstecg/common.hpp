#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sstecg {

using Signal = std::vector<double>;

// Error taxonomy used across the library. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidArgument : Error {
    using Error::Error;
};
// Unreadable/malformed/truncated input files.
struct DataError : Error {
    using Error::Error;
};
// Parsed data violates a hard consistency check (e.g. dataset beat counts).
struct IntegrityError : Error {
    using Error::Error;
};
// Iterative solver hit its iteration budget before reaching tolerance.
struct ConvergenceError : Error {
    using Error::Error;
};

inline double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / static_cast<double>(x.size() - 1);
}

// Median of a copy; even-length inputs average the two middle elements.
inline double median(std::span<const double> x) {
    if (x.empty()) throw InvalidArgument("median of empty range");
    std::vector<double> tmp(x.begin(), x.end());
    const size_t mid = tmp.size() / 2;
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(mid), tmp.end());
    double hi = tmp[mid];
    if (tmp.size() % 2 == 1) return hi;
    double lo = *std::max_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

// Fractional part of a phase in cycles, mapped to (-0.5, 0.5].
inline double wrap_to_half_cycle(double cycles) {
    double f = cycles - std::floor(cycles);  // [0, 1)
    if (f > 0.5) f -= 1.0;
    return f;
}

// Distance between two phases on the unit circle, in cycles (<= 0.5).
inline double circular_distance_cycles(double a, double b) {
    return std::abs(wrap_to_half_cycle(a - b));
}

// FNV-1a, used for config fingerprints in reports.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace sstecg
