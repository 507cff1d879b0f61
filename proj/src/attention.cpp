#include "stgt/attention.hpp"

#include <cmath>

#include "stgt/errors.hpp"

namespace stgt {

TransformerParams make_transformer(int width, int heads, int ffn_mult, RngState& rng) {
    if (heads < 1) throw ConfigError("attention needs at least one head");
    if (width < 1 || width % heads != 0) {
        throw ConfigError("attention heads (" + std::to_string(heads) +
                          ") must divide the fused width (" + std::to_string(width) + ")");
    }
    if (ffn_mult < 1) throw ConfigError("ffn multiplier must be positive");
    const int d_k = width / heads;
    const int f = ffn_mult * width;

    TransformerParams params;
    for (int s = 0; s < heads; ++s) {
        HeadParams hp;
        hp.wq = glorot_init(rng, width, d_k);
        hp.wk = glorot_init(rng, width, d_k);
        hp.wv = glorot_init(rng, width, d_k);
        params.head.push_back(std::move(hp));
    }
    params.wo = glorot_init(rng, heads * d_k, width);
    params.ffn_w1 = glorot_init(rng, width, f);
    params.ffn_b1 = Matrix(1, f);
    params.ffn_w2 = glorot_init(rng, f, width);
    params.ffn_b2 = Matrix(1, width);
    params.norm1_gain = Matrix(1, width, 1.0);
    params.norm1_bias = Matrix(1, width);
    params.norm2_gain = Matrix(1, width, 1.0);
    params.norm2_bias = Matrix(1, width);
    return params;
}

QkvProjection project_qkv(const Matrix& h, const HeadParams& head) {
    return {matmul(h, head.wq), matmul(h, head.wk), matmul(h, head.wv)};
}

Matrix attention_head(const Matrix& q, const Matrix& k, const Matrix& v, SumMode mode) {
    if (!q.same_shape(k) || q.rows != v.rows) {
        throw ConfigError("attention inputs must agree on node count and key width");
    }
    if (q.cols < 1) throw ConfigError("attention key width must be at least 1");
    const int n = q.rows;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.cols));

    Matrix out(n, v.cols);
    std::vector<double> weight(static_cast<size_t>(n));
    ExactSum acc;
    for (int i = 0; i < n; ++i) {
        // Scores for query i against every key, streamed into one buffer.
        double max_score = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            double dot = 0.0;
            for (int c = 0; c < q.cols; ++c) dot += q.at(i, c) * k.at(j, c);
            double s = dot * inv_sqrt_dk;
            weight[static_cast<size_t>(j)] = s;
            if (s > max_score) max_score = s;
        }
        double denom;
        if (mode == SumMode::exact) {
            acc.reset();
            for (int j = 0; j < n; ++j) {
                weight[static_cast<size_t>(j)] = std::exp(weight[static_cast<size_t>(j)] - max_score);
                acc.add(weight[static_cast<size_t>(j)]);
            }
            denom = acc.value();
        } else {
            denom = 0.0;
            for (int j = 0; j < n; ++j) {
                weight[static_cast<size_t>(j)] = std::exp(weight[static_cast<size_t>(j)] - max_score);
                denom += weight[static_cast<size_t>(j)];
            }
        }
        for (int j = 0; j < n; ++j) weight[static_cast<size_t>(j)] /= denom;

        for (int c = 0; c < v.cols; ++c) {
            if (mode == SumMode::exact) {
                acc.reset();
                for (int j = 0; j < n; ++j) acc.add(weight[static_cast<size_t>(j)] * v.at(j, c));
                out.at(i, c) = acc.value();
            } else {
                double total = 0.0;
                for (int j = 0; j < n; ++j) total += weight[static_cast<size_t>(j)] * v.at(j, c);
                out.at(i, c) = total;
            }
        }
    }
    return out;
}

Matrix attention_matrix(const Matrix& q, const Matrix& k, SumMode mode) {
    if (!q.same_shape(k)) throw ConfigError("attention inputs must share one shape");
    if (q.cols < 1) throw ConfigError("attention key width must be at least 1");
    Matrix scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(q.cols)));
    return softmax_rows(scores, mode);
}

Matrix multi_head(const Matrix& h, const TransformerParams& params, SumMode mode) {
    if (params.head.empty()) throw ConfigError("transformer has no heads");
    const int width = params.width();
    if (h.cols != width) {
        throw ConfigError("transformer width mismatch: input has " + std::to_string(h.cols) +
                          " columns, parameters expect " + std::to_string(width));
    }

    std::vector<Matrix> head_out;
    head_out.reserve(params.head.size());
    for (const auto& hp : params.head) {
        QkvProjection qkv = project_qkv(h, hp);
        head_out.push_back(attention_head(qkv.q, qkv.k, qkv.v, mode));
    }
    std::vector<const Matrix*> parts;
    for (const auto& m : head_out) parts.push_back(&m);
    Matrix attn = matmul(concat_cols(parts), params.wo);

    Matrix out = layer_norm_rows(add(h, attn), params.norm1_gain, params.norm1_bias,
                                 kLayerNormEps);
    Matrix hidden = map_tanh(add_row_broadcast(matmul(out, params.ffn_w1), params.ffn_b1));
    Matrix ffn = add_row_broadcast(matmul(hidden, params.ffn_w2), params.ffn_b2);
    return layer_norm_rows(add(out, ffn), params.norm2_gain, params.norm2_bias, kLayerNormEps);
}

} // namespace stgt
