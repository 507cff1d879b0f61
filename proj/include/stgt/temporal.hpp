#pragma once

#include <vector>

#include "stgt/matrix.hpp"
#include "stgt/rng.hpp"

namespace stgt {

/// Learnable map applied to the sinusoidal time basis before injection.
struct TemporalEncoder {
    int dim = 0;
    double time_scale = 3600.0; // divisor applied to raw timestamps
    bool standard_sinusoid = false;
    Matrix T_linear; // dim x dim
    Matrix T_bias;   // 1 x dim
};

/// Glorot-initialized projection, zero bias.
TemporalEncoder make_temporal_encoder(int dim, double time_scale, bool standard_sinusoid,
                                      RngState& rng);

/// Sinusoidal basis: index k holds sin(t / 10000^{k/d}) for even k and
/// cos(t / 10000^{k/d}) for odd k. With standard_sinusoid, odd indices use
/// exponent (k-1)/d instead — the conventional transformer pairing.
std::vector<double> base_encoding(double t, int d, bool standard_sinusoid = false);

/// One row of base_encoding(timestamp / time_scale) per node.
Matrix base_matrix(const std::vector<double>& timestamps, int d, double time_scale,
                   bool standard_sinusoid);

/// T_linear applied to the scaled time basis, plus T_bias.
std::vector<double> temporal_encode(const TemporalEncoder& enc, double t);

/// h0 + TE(t) row by row.
Matrix inject(const Matrix& h0, const TemporalEncoder& enc,
              const std::vector<double>& timestamps);

} // namespace stgt
