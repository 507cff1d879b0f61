#pragma once

#include <cstdint>
#include <string_view>

#include "stgt/matrix.hpp"

namespace stgt {

/// Counter-based deterministic random stream. Each draw hashes
/// (key, counter), so the sequence depends only on the seed, never on
/// platform or call-site interleaving. `fork` derives an independent
/// stream from a label; forked streams are stable regardless of how many
/// draws the parent has made.
class RngState {
public:
    explicit RngState(uint64_t seed);

    RngState fork(std::string_view label) const;
    RngState fork(uint64_t lane) const;

    uint64_t next_u64();
    uint64_t uniform_u64(uint64_t n); // unbiased draw from [0, n)
    double uniform();                 // [0, 1), 53-bit resolution
    double uniform(double lo, double hi);
    double normal(double mean, double sd);
    bool bernoulli(double p);

    uint64_t seed() const { return seed_; }

private:
    RngState(uint64_t seed, uint64_t key) : seed_(seed), key_(key) {}
    uint64_t seed_;
    uint64_t key_;
    uint64_t counter_ = 0;
};

/// Uniform init on [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].
Matrix glorot_init(RngState& rng, int rows, int cols);

/// FNV-1a over bytes; used for stream labels and config hashing.
uint64_t fnv1a64(std::string_view s);

} // namespace stgt
