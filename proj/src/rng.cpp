#include "stgt/rng.hpp"

#include <cmath>
#include <numbers>

#include "stgt/errors.hpp"

namespace stgt {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer
uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

RngState::RngState(uint64_t seed) : seed_(seed), key_(mix64(seed + kGolden)) {}

RngState RngState::fork(std::string_view label) const {
    return RngState(seed_, mix64(key_ ^ fnv1a64(label)));
}

RngState RngState::fork(uint64_t lane) const {
    return RngState(seed_, mix64(key_ ^ mix64(lane + kGolden)));
}

uint64_t RngState::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

uint64_t RngState::uniform_u64(uint64_t n) {
    if (n == 0) throw ConfigError("uniform_u64: n must be > 0");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return r % n;
}

double RngState::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::uniform(double lo, double hi) {
    return lo + uniform() * (hi - lo);
}

double RngState::normal(double mean, double sd) {
    double u1 = 1.0 - uniform(); // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
}

bool RngState::bernoulli(double p) {
    return uniform() < p;
}

Matrix glorot_init(RngState& rng, int rows, int cols) {
    if (rows < 1 || cols < 1) throw ConfigError("glorot_init: rows and cols must be >= 1");
    double limit = std::sqrt(6.0 / (rows + cols));
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-limit, limit);
    return m;
}

} // namespace stgt
