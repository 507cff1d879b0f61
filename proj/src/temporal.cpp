#include "stgt/temporal.hpp"

#include <cmath>

#include "stgt/errors.hpp"

namespace stgt {

TemporalEncoder make_temporal_encoder(int dim, double time_scale, bool standard_sinusoid,
                                      RngState& rng) {
    if (dim < 1) throw ConfigError("temporal dim must be positive");
    if (!(time_scale > 0.0)) throw ConfigError("temporal time_scale must be positive");
    TemporalEncoder enc;
    enc.dim = dim;
    enc.time_scale = time_scale;
    enc.standard_sinusoid = standard_sinusoid;
    enc.T_linear = glorot_init(rng, dim, dim);
    enc.T_bias = Matrix(1, dim);
    return enc;
}

std::vector<double> base_encoding(double t, int d, bool standard_sinusoid) {
    if (d < 1) throw ConfigError("base encoding needs d >= 1");
    std::vector<double> out(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
        // Odd indices keep the exponent k/d; the standard variant pairs each
        // cos with its preceding sin frequency via (k-1)/d.
        int exp_index = (standard_sinusoid && k % 2 == 1) ? k - 1 : k;
        double angle = t / std::pow(10000.0, static_cast<double>(exp_index) / d);
        out[static_cast<size_t>(k)] = (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
    return out;
}

Matrix base_matrix(const std::vector<double>& timestamps, int d, double time_scale,
                   bool standard_sinusoid) {
    if (!(time_scale > 0.0)) throw ConfigError("temporal time_scale must be positive");
    Matrix base(static_cast<int>(timestamps.size()), d);
    for (size_t i = 0; i < timestamps.size(); ++i) {
        auto row = base_encoding(timestamps[i] / time_scale, d, standard_sinusoid);
        for (int k = 0; k < d; ++k) base.at(static_cast<int>(i), k) = row[static_cast<size_t>(k)];
    }
    return base;
}

std::vector<double> temporal_encode(const TemporalEncoder& enc, double t) {
    Matrix base = Matrix::row_vector(base_encoding(t / enc.time_scale, enc.dim,
                                                   enc.standard_sinusoid));
    Matrix out = add(matmul(base, enc.T_linear), enc.T_bias);
    return {out.data.begin(), out.data.end()};
}

Matrix inject(const Matrix& h0, const TemporalEncoder& enc,
              const std::vector<double>& timestamps) {
    if (h0.cols != enc.dim) {
        throw ConfigError("temporal injection width mismatch: embeddings have " +
                          std::to_string(h0.cols) + " columns, encoder dim is " +
                          std::to_string(enc.dim));
    }
    if (static_cast<size_t>(h0.rows) != timestamps.size()) {
        throw ConfigError("temporal injection needs one timestamp per node");
    }
    Matrix base = base_matrix(timestamps, enc.dim, enc.time_scale, enc.standard_sinusoid);
    Matrix te = add_row_broadcast(matmul(base, enc.T_linear), enc.T_bias);
    return add(h0, te);
}

} // namespace stgt
