#pragma once

#include <string>
#include <vector>

#include "stgt/matrix.hpp"
#include "stgt/rng.hpp"

namespace stgt {

enum class AggrKind { mean, sum };
AggrKind parse_aggr(const std::string& name);
std::string aggr_name(AggrKind aggr);

struct EmbeddingParams {
    Matrix W1; // s x d
};

/// One message-passing layer: per-relation projections of the concatenated
/// [neighbor-aggregate || difference-aggregate], plus the relation-scoring
/// parameters shared across relations within the layer.
struct GnnLayerParams {
    std::vector<Matrix> W_self_diff; // per relation, 2d x d
    Matrix q;                        // 1 x d
    Matrix W2;                       // d x d
    Matrix b;                        // 1 x d
};

GnnLayerParams make_gnn_layer(int relations, int dim, RngState& rng);

/// h0 = tanh(X * W1). Never touches adjacency.
Matrix initial_embed(const Matrix& x, const Matrix& w1);

/// Row i of the result is the AGGR (mean or sum) of h's rows over adj[i];
/// empty neighborhoods give zero rows. The shared kernel behind both the
/// module-level aggregates and the gradient tape's neighbor op.
Matrix aggregate_rows(const Matrix& h, const std::vector<std::vector<int>>& adj, AggrKind aggr,
                      SumMode mode = SumMode::exact);

/// Pre-projection aggregates over one relation's neighborhoods:
/// neighbor_i = AGGR over j of h_j, difference_i = AGGR over j of (h_i - h_j).
/// Empty neighborhoods produce zero rows in both.
struct Aggregates {
    Matrix neighbor;   // N x d
    Matrix difference; // N x d
};
Aggregates neighbor_aggregates(const Matrix& h, const std::vector<std::vector<int>>& adj,
                               AggrKind aggr, SumMode mode = SumMode::exact);

/// tanh([neighbor || difference] * W_self_diff) for one relation.
Matrix intra_relation(const Matrix& h, const std::vector<std::vector<int>>& adj,
                      const Matrix& w_self_diff, AggrKind aggr,
                      SumMode mode = SumMode::exact);

struct RelationFusion {
    Matrix fused;               // N x d
    std::vector<double> scores; // per-relation w_r, pre-softmax
    std::vector<double> alpha;  // softmax(scores)
};

/// Scores each relation embedding by the graph-averaged q . tanh(h W2 + b),
/// softmax-normalizes across relations, and blends the embeddings.
RelationFusion relation_attention(const std::vector<Matrix>& per_relation, const Matrix& q,
                                  const Matrix& w2, const Matrix& b,
                                  SumMode mode = SumMode::exact);

/// Column-wise concatenation of the L layer outputs, in layer order.
Matrix fuse_layers(const std::vector<Matrix>& per_layer);

} // namespace stgt
