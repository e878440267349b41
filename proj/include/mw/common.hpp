#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace mw {

using cxd = std::complex<double>;

// Quadrature convention used throughout:
//   a = (q + i p)/2,  q = a + a^dag,  p = i(a^dag - a)
//   [q, p] = 2i,  vacuum Var(q) = Var(p) = 1.
// dB mapping: r = ln(10) * s_dB / 20 (signed); s_dB > 0 squeezes q,
// s_dB < 0 squeezes p; squeezed-quadrature variance is 10^(-|s_dB|/10).
inline constexpr double kVacuumQuadratureVariance = 1.0;

inline double squeezing_db_to_r(double s_db) { return std::log(10.0) * s_db / 20.0; }
inline double squeezing_r_to_db(double r) { return 20.0 * r / std::log(10.0); }

// Deterministic per-task RNG stream derivation (splitmix64).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream_index) {
    return splitmix64(root ^ splitmix64(stream_index + 1));
}

// FNV-1a 64-bit, used for manifest/content fingerprints.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v);

// Worker count: MODEWITNESS_THREADS env var, else hardware concurrency.
int worker_count();

// Deterministic parallel map over [0, n): results must be written to
// per-index slots by fn; reduction order is then the caller's choice.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Fixed-format float printing so outputs are bit-identical across runs.
std::string format_double(double v);

}  // namespace mw
