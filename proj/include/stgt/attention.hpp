#pragma once

#include <vector>

#include "stgt/matrix.hpp"
#include "stgt/rng.hpp"

namespace stgt {

inline constexpr double kLayerNormEps = 1e-5;

struct HeadParams {
    Matrix wq, wk, wv; // D x d_k each
};

struct TransformerParams {
    std::vector<HeadParams> head; // S entries
    Matrix wo;                    // (S * d_k) x D
    Matrix ffn_w1;                // D x f
    Matrix ffn_b1;                // 1 x f
    Matrix ffn_w2;                // f x D
    Matrix ffn_b2;                // 1 x D
    Matrix norm1_gain, norm1_bias; // 1 x D
    Matrix norm2_gain, norm2_bias; // 1 x D

    int heads() const { return static_cast<int>(head.size()); }
    int width() const { return wo.cols; }
    int head_dim() const { return head.empty() ? 0 : head.front().wq.cols; }
};

/// Heads must divide the width; FFN hidden size is ffn_mult * width.
TransformerParams make_transformer(int width, int heads, int ffn_mult, RngState& rng);

struct QkvProjection {
    Matrix q, k, v; // N x d_k
};
QkvProjection project_qkv(const Matrix& h, const HeadParams& head);

/// softmax(Q K^T / sqrt(d_k)) V, streamed one query row at a time; the
/// N x N attention matrix is never materialized.
Matrix attention_head(const Matrix& q, const Matrix& k, const Matrix& v,
                      SumMode mode = SumMode::exact);

/// Dense row-stochastic attention matrix, for inspection and tests only
/// (O(N^2) memory).
Matrix attention_matrix(const Matrix& q, const Matrix& k, SumMode mode = SumMode::exact);

/// Multi-head attention + output projection, then two post-norm residual
/// stages: layer_norm(H + attn) and layer_norm(out + FFN(out)).
Matrix multi_head(const Matrix& h, const TransformerParams& params,
                  SumMode mode = SumMode::exact);

} // namespace stgt
